"""Links, chains built from them, and balancedness checks.

A (k, ell, r)-link is a directed k-graph on template vertices 1..r+ell
whose last ell vertices span no edge.  Chains arise by walking windows of
width r+ell along a vertex ordering, stepping r positions at a time, and
stamping an order-preserving copy of the link into every window.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceededError, InternalInvariantError, ParameterError
from .hypercore import Digraph, Edge, Hypergraph


@dataclass(frozen=True)
class Link:
    """Directed k-graph on 1..r+ell; the last ell vertices are independent."""

    k: int
    ell: int
    r: int
    edges: frozenset[Edge]

    def __post_init__(self):
        if self.k < 2:
            raise ParameterError(f"need k >= 2, got {self.k}")
        if self.ell < 0 or self.r < 1:
            raise ParameterError(f"need ell >= 0 and r >= 1, got {self.ell}, {self.r}")
        if self.r + self.ell < self.k:
            raise ParameterError(
                f"need r + ell >= k, got {self.r}+{self.ell} < {self.k}"
            )
        canon = frozenset(tuple(e) for e in self.edges)
        object.__setattr__(self, "edges", canon)
        if not canon:
            raise ParameterError("link needs at least one edge")
        order = self.r + self.ell
        tail = set(range(self.r + 1, order + 1))
        for e in canon:
            if len(e) != self.k or len(set(e)) != self.k:
                raise ParameterError(f"link edge {e} is not a {self.k}-tuple")
            if min(e) < 1 or max(e) > order:
                raise ParameterError(f"link edge {e} leaves template 1..{order}")
            if set(e) <= tail:
                raise ParameterError(
                    f"link edge {e} lies inside the last {self.ell} vertices"
                )

    @property
    def order(self) -> int:
        return self.r + self.ell

    def edge_count(self) -> int:
        return len(self.edges)

    def density(self) -> Fraction:
        """Edges contributed per vertex of any chain: e(L)/r."""
        return Fraction(len(self.edges), self.r)


def make_link(k: int, ell: int, r: int, edges: Iterable[Iterable[int]]) -> Link:
    return Link(k, ell, r, frozenset(tuple(e) for e in edges))


def ell_cycle_link(k: int, ell: int) -> Link:
    """Single edge (1..k) with overlap ell; chains are Hamilton ell-cycles."""
    if not 0 <= ell < k:
        raise ParameterError(f"need 0 <= ell < k, got ell={ell}, k={k}")
    return Link(k, ell, k - ell, frozenset({tuple(range(1, k + 1))}))


def matching_link(k: int) -> Link:
    """Overlap-free single edge; chains are perfect matchings."""
    return ell_cycle_link(k, 0)


def power_link(k: int, t: int) -> Link:
    """All k-sets through vertex 1 in a window of t; chains are t-th powers."""
    if t < k:
        raise ParameterError(f"need t >= k, got t={t}, k={k}")
    edges = frozenset(
        (1,) + rest for rest in itertools.combinations(range(2, t + 1), k - 1)
    )
    return Link(k, t - 1, 1, edges)


BUILTIN_LINKS = ("ell_cycle", "matching", "power")


def builtin_link(name: str, *params: int) -> Link:
    if name == "ell_cycle":
        return ell_cycle_link(*params)
    if name == "matching":
        return matching_link(*params)
    if name == "power":
        return power_link(*params)
    raise ParameterError(f"unknown builtin link {name!r}; know {BUILTIN_LINKS}")


def parse_link_spec(spec: str) -> Link:
    """Builtin link from a compact string, e.g. 'ell_cycle:3,1' or 'matching:2'."""
    name, sep, rest = spec.strip().partition(":")
    if not sep or not rest:
        raise ParameterError(f"link spec {spec!r} is not of the form name:args")
    try:
        params = tuple(int(x) for x in rest.split(","))
    except ValueError:
        raise ParameterError(f"link spec {spec!r} has non-integer parameters")
    return builtin_link(name, *params)


# ---------------------------------------------------------------------------
# chains


def _window_edges(
    L: Link, ordering: Sequence[int], window_starts: Iterable[int], wrap: bool
) -> list[Edge]:
    n = len(ordering)
    out: list[Edge] = []
    for base in window_starts:
        for tmpl in L.edges:
            if wrap:
                out.append(tuple(ordering[(base + t - 1) % n] for t in tmpl))
            else:
                out.append(tuple(ordering[base + t - 1] for t in tmpl))
    return out


def _check_ordering(ordering: Sequence[int]) -> tuple[int, ...]:
    ordering = tuple(ordering)
    if len(set(ordering)) != len(ordering):
        raise ParameterError("ordering repeats a vertex")
    if ordering and min(ordering) < 1:
        raise ParameterError("vertices must be >= 1")
    return ordering


@dataclass(frozen=True)
class ClosedChain:
    """Closed L-chain: cyclic ordering plus the derived edge set."""

    link: Link
    n: int
    ordering: tuple[int, ...]
    edges: frozenset[Edge]

    def digraph(self) -> Digraph:
        return Digraph(max(self.ordering), self.edges)


@dataclass(frozen=True)
class OpenChain:
    """Open L-chain from its first ell vertices to its last ell."""

    link: Link
    n: int
    ordering: tuple[int, ...]
    edges: frozenset[Edge]

    @property
    def start(self) -> tuple[int, ...]:
        return self.ordering[: self.link.ell]

    @property
    def end(self) -> tuple[int, ...]:
        return self.ordering[self.n - self.link.ell :]

    def digraph(self) -> Digraph:
        return Digraph(max(self.ordering), self.edges)


def closed_chain_window_starts(L: Link, n: int) -> range:
    if n % L.r != 0 or n < 2 * L.order:
        raise ParameterError(
            f"closed chain needs r | n and n >= {2 * L.order}, got n={n}"
        )
    return range(0, n, L.r)


def open_chain_window_starts(L: Link, n: int) -> range:
    if n % L.r != L.ell % L.r or n < L.order:
        raise ParameterError(
            f"open chain needs n = ell (mod r) and n >= {L.order}, got n={n}"
        )
    return range(0, n - L.order + 1, L.r)


def build_closed_chain(L: Link, ordering: Sequence[int]) -> ClosedChain:
    """Stamp L into every cyclic window of the ordering.

    Windows can never produce colliding copies when n >= 2(r+ell); the edge
    count n*e(L)/r is asserted, not assumed.
    """
    ordering = _check_ordering(ordering)
    n = len(ordering)
    starts = closed_chain_window_starts(L, n)
    edges = _window_edges(L, ordering, starts, wrap=True)
    expected = n * len(L.edges) // L.r
    edge_set = frozenset(edges)
    if len(edge_set) != expected:
        raise InternalInvariantError(
            f"window copies collided: {len(edge_set)} != {expected}"
        )
    return ClosedChain(L, n, ordering, edge_set)


def build_open_chain(L: Link, ordering: Sequence[int]) -> OpenChain:
    ordering = _check_ordering(ordering)
    n = len(ordering)
    starts = open_chain_window_starts(L, n)
    edges = _window_edges(L, ordering, starts, wrap=False)
    expected = ((n - L.ell) // L.r) * len(L.edges)
    edge_set = frozenset(edges)
    if len(edge_set) != expected:
        raise InternalInvariantError(
            f"window copies collided: {len(edge_set)} != {expected}"
        )
    return OpenChain(L, n, ordering, edge_set)


def validate_closed_chain(L: Link, D: Digraph, ordering: Sequence[int]) -> bool:
    """True iff every cyclic window carries an order-preserving L-copy in D."""
    ordering = _check_ordering(ordering)
    n = len(ordering)
    starts = closed_chain_window_starts(L, n)
    if ordering and max(ordering) > D.n:
        raise ParameterError("ordering leaves the host vertex range")
    return all(e in D.edges for e in _window_edges(L, ordering, starts, wrap=True))


def validate_open_chain(
    L: Link,
    D: Digraph,
    ordering: Sequence[int],
    start: Sequence[int] | None = None,
    end: Sequence[int] | None = None,
) -> bool:
    """True iff every window carries an L-copy in D and endpoints match."""
    ordering = _check_ordering(ordering)
    n = len(ordering)
    starts = open_chain_window_starts(L, n)
    if ordering and max(ordering) > D.n:
        raise ParameterError("ordering leaves the host vertex range")
    if L.ell > 0:
        if start is not None and tuple(start) != ordering[: L.ell]:
            return False
        if end is not None and tuple(end) != ordering[n - L.ell :]:
            return False
    return all(e in D.edges for e in _window_edges(L, ordering, starts, wrap=False))


# ---------------------------------------------------------------------------
# balancedness


@dataclass(frozen=True)
class BalanceWitness:
    """An edge subset violating (B1) or (B2)."""

    condition: str
    edges: tuple[Edge, ...]
    v: int
    e: int


@dataclass(frozen=True)
class BalanceReport:
    ok: bool
    d: Fraction
    lam: Fraction
    n: int
    chain_edges: int
    subsets_checked: int
    witness: BalanceWitness | None


def check_balanced(
    L: Link, n: int, d, lam, max_edges: int | None = None
) -> BalanceReport:
    """Exhaustively test (d, lam)-balancedness of the closed L-chain on [n].

    For every nonempty edge subset I with support size v: (B1) |I| <= d*v,
    and (B2) |I| <= d*v - lam whenever v <= n / (2 * v(L)).  All 2^e(C) - 1
    subsets are enumerated (vectorized); e(C) above the budget is an error.
    Arithmetic is exact: the rational inequalities are scaled to integers.
    """
    d = Fraction(d)
    lam = Fraction(lam)
    chain = build_closed_chain(L, range(1, n + 1))
    edge_list = sorted(chain.edges)
    e_total = len(edge_list)
    cap = max_edges if max_edges is not None else 24
    if e_total > cap:
        raise BudgetExceededError(
            f"chain has {e_total} edges, budget allows {cap}"
        )

    # per-vertex bitmasks over edge indices
    masks = {}
    for i, edge in enumerate(edge_list):
        for v in edge:
            masks[v] = masks.get(v, 0) | (1 << i)
    mask_list = np.array(sorted(masks.values()), dtype=np.uint64)

    # B1: e <= d*v  <=>  q1*e - p1*v <= 0
    p1, q1 = d.numerator, d.denominator
    # B2: e <= d*v - lam  <=>  q2*e - a2*v + b2 <= 0 with common denominator
    q2 = lcm(d.denominator, lam.denominator)
    a2 = d.numerator * (q2 // d.denominator)
    b2 = lam.numerator * (q2 // lam.denominator)
    # B2 applies when 2 * v(L) * v <= n
    vl2 = 2 * L.order

    total = 1 << e_total
    chunk = 1 << 20
    for lo in range(1, total, chunk):
        hi = min(lo + chunk, total)
        S = np.arange(lo, hi, dtype=np.uint64)
        e_cnt = np.bitwise_count(S).astype(np.int64)
        v_cnt = np.zeros(len(S), dtype=np.int64)
        for m in mask_list:
            v_cnt += (S & m) != 0
        bad1 = q1 * e_cnt - p1 * v_cnt > 0
        bad2 = (vl2 * v_cnt <= n) & (q2 * e_cnt - a2 * v_cnt + b2 > 0)
        bad = bad1 | bad2
        if bad.any():
            idx = int(np.flatnonzero(bad)[0])
            subset = int(S[idx])
            edges = tuple(
                edge_list[i] for i in range(e_total) if subset >> i & 1
            )
            cond = "B1" if bool(bad1[idx]) else "B2"
            witness = BalanceWitness(
                cond, edges, int(v_cnt[idx]), int(e_cnt[idx])
            )
            return BalanceReport(False, d, lam, n, e_total, lo + idx, witness)
    return BalanceReport(True, d, lam, n, e_total, total - 1, None)


def one_density(F: Hypergraph) -> Fraction:
    """d_1(F) = e(F) / (v(F) - 1), with v(F) the declared vertex count."""
    if F.n < 2:
        raise ParameterError(f"need at least 2 vertices, got {F.n}")
    return Fraction(len(F.edges), F.n - 1)


def is_strictly_one_balanced(
    F: Hypergraph, budget: int = 1 << 20
) -> tuple[bool, tuple[Edge, ...] | None]:
    """True iff every proper subgraph with an edge has smaller 1-density.

    Proper subgraphs are enumerated as edge subsets restricted to their
    supports: that restriction maximizes 1-density for a given edge set,
    and the full edge set on a strictly smaller support is itself proper.
    """
    d_full = one_density(F)
    edge_list = F.sorted_edges()
    e_total = len(edge_list)
    if 1 << e_total > budget:
        raise BudgetExceededError(f"2^{e_total} subsets exceed budget {budget}")
    for bits in range(1, 1 << e_total):
        subset = [edge_list[i] for i in range(e_total) if bits >> i & 1]
        support = {v for e in subset for v in e}
        if len(subset) == e_total and len(support) == F.n:
            continue  # the whole graph, not proper
        if Fraction(len(subset), len(support) - 1) >= d_full:
            return False, tuple(subset)
    return True, None


def f_copy_hypergraph(G: Hypergraph, F: Hypergraph, budget: int = 10**7) -> Hypergraph:
    """v(F)-graph on V(G): an edge per vertex set carrying a copy of F.

    Copies are injective homomorphisms; images are deduplicated by vertex
    set, so each witness set appears once.  ``budget`` caps backtracking
    node expansions.
    """
    if F.k != G.k:
        raise ParameterError(f"uniformity mismatch: F has k={F.k}, G has k={G.k}")
    m = F.n
    if m > G.n:
        return Hypergraph(G.n, m, frozenset())
    # map most-constrained template vertices first
    tmpl_edges = F.sorted_edges()
    load = {v: 0 for v in F.vertices}
    for e in tmpl_edges:
        for v in e:
            load[v] += 1
    order = sorted(F.vertices, key=lambda v: (-load[v], v))
    position = {v: i for i, v in enumerate(order)}
    # edges checkable once their last-placed template vertex is mapped
    checks_at: list[list[Edge]] = [[] for _ in range(m)]
    for e in tmpl_edges:
        checks_at[max(position[v] for v in e)].append(e)

    found: set[Edge] = set()
    assignment: dict[int, int] = {}
    used: set[int] = set()
    nodes = 0

    def extend(depth: int):
        nonlocal nodes
        if depth == m:
            found.add(tuple(sorted(used)))
            return
        tv = order[depth]
        for cand in range(1, G.n + 1):
            if cand in used:
                continue
            nodes += 1
            if nodes > budget:
                raise BudgetExceededError(
                    f"copy search exceeded {budget} node expansions"
                )
            assignment[tv] = cand
            used.add(cand)
            if all(
                tuple(sorted(assignment[v] for v in e)) in G.edges
                for e in checks_at[depth]
            ):
                extend(depth + 1)
            used.discard(cand)
            del assignment[tv]

    extend(0)
    return Hypergraph(G.n, m, frozenset(found))
