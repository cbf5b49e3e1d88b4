"""Hamilton chain search, connectedness, property graphs, and frameworks.

The search engine fills a vertex ordering left to right and checks each
link copy as soon as its last position is placed, so dead branches are cut
at the earliest window that fails.  Budgets make every answer three-valued:
found, none (search space exhausted), or UNKNOWN (budget hit first).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Iterable, Sequence

from .errors import BudgetExceededError, InternalInvariantError, ParameterError
from .hypercore import (
    Digraph,
    Edge,
    Hypergraph,
    degree_min,
    induced_digraph,
    induced_hypergraph,
    l_shadow,
    orient_all,
    tight_components,
)
from .linkchain import (
    Link,
    _window_edges,
    closed_chain_window_starts,
    ell_cycle_link,
    open_chain_window_starts,
)
from .randomness import count_perfect_matchings


class _UnknownType:
    """Tri-state marker: a budget ran out before the answer was decided."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "UNKNOWN"

    def __bool__(self) -> bool:
        raise TypeError("UNKNOWN is not a boolean; test with `is UNKNOWN`")


UNKNOWN = _UnknownType()


# ---------------------------------------------------------------------------
# chain search


@dataclass(frozen=True)
class SearchResult:
    """Outcome of a Hamilton-chain search.

    status is 'found', 'none', or 'unknown' (budget exhausted); ``count``
    is the number of distinct chains when counting was requested and
    completed, with chains identified by their undirected edge sets.
    """

    status: str
    ordering: tuple[int, ...] | None
    count: int | None
    nodes: int

    @property
    def found(self) -> bool:
        return self.status == "found"


_CHECKS_CACHE: dict[tuple, list[list[tuple[int, ...]]]] = {}


def _window_checks(L: Link, n: int, closed: bool) -> list[list[tuple[int, ...]]]:
    """For each 0-based position p, link-copy index tuples completed at p."""
    key = (L, n, closed)
    cached = _CHECKS_CACHE.get(key)
    if cached is not None:
        return cached
    starts = (
        closed_chain_window_starts(L, n) if closed else open_chain_window_starts(L, n)
    )
    checks_at: list[list[tuple[int, ...]]] = [[] for _ in range(n)]
    for base in starts:
        for tmpl in sorted(L.edges):
            if closed:
                idxs = tuple((base + t - 1) % n for t in tmpl)
            else:
                idxs = tuple(base + t - 1 for t in tmpl)
            checks_at[max(idxs)].append(idxs)
    _CHECKS_CACHE[key] = checks_at
    return checks_at


class _BudgetHit(Exception):
    pass


def find_hamilton_chain(
    D: Digraph,
    L: Link,
    closed: bool = True,
    start: Sequence[int] | None = None,
    end: Sequence[int] | None = None,
    budget: int = 10**6,
    count: bool = False,
) -> SearchResult:
    """Search for a spanning (closed or open) L-chain of D by backtracking.

    Candidates are tried in ascending vertex order, so the returned ordering
    is deterministic.  For closed chains, vertex 1 is restricted to the
    first window: every closed chain has a window-aligned rotation of that
    form, so existence and deduplicated counts are unaffected.  ``count``
    explores the full tree and counts distinct undirected edge sets.
    """
    n = D.n
    try:
        checks_at = _window_checks(L, n, closed)
    except ParameterError:
        # no chain of this shape exists on n vertices
        return SearchResult("none", None, 0 if count else None, 0)

    ell = L.ell
    forced: dict[int, int] = {}
    if closed and (start is not None or end is not None):
        raise ParameterError("closed chains take no endpoints")
    if not closed and ell > 0:
        if start is not None and end is not None and set(start) & set(end):
            raise ParameterError("endpoints must be disjoint")
        for tup, positions in ((start, range(ell)), (end, range(n - ell, n))):
            if tup is None:
                continue
            tup = tuple(tup)
            if len(tup) != ell or len(set(tup)) != ell:
                raise ParameterError(f"endpoint {tup} is not an ell-tuple")
            if min(tup) < 1 or max(tup) > n:
                raise ParameterError(f"endpoint {tup} leaves vertex range")
            for pos, v in zip(positions, tup):
                if forced.get(pos, v) != v:
                    # disjoint endpoints forced onto a shared position: n < 2*ell
                    return SearchResult("none", None, 0 if count else None, 0)
                forced[pos] = v

    edges_set = D.edges
    order = [0] * n
    used = [False] * (n + 1)
    for pos, v in forced.items():
        order[pos] = v
        used[v] = True
    nodes = 0
    solutions: set[frozenset] | None = set() if count else None
    hit: list[tuple[int, ...]] = []

    def rec(p: int) -> bool:
        nonlocal nodes
        if p == n:
            if count:
                starts = (
                    closed_chain_window_starts(L, n)
                    if closed
                    else open_chain_window_starts(L, n)
                )
                key = frozenset(
                    tuple(sorted(e))
                    for e in _window_edges(L, order, starts, wrap=closed)
                )
                solutions.add(key)
                return False
            hit.append(tuple(order))
            return True
        if closed and p >= L.r and not used[1]:
            return False  # vertex 1 must sit in the first window
        if p in forced:
            # endpoint vertices are preplaced; only the window checks run here
            nodes += 1
            if nodes > budget:
                raise _BudgetHit
            for idxs in checks_at[p]:
                e = tuple(order[i] for i in idxs)
                if e not in edges_set:
                    return False
            return rec(p + 1)
        for v in range(1, n + 1):
            if used[v]:
                continue
            nodes += 1
            if nodes > budget:
                raise _BudgetHit
            order[p] = v
            used[v] = True
            ok = True
            for idxs in checks_at[p]:
                e = tuple(order[i] for i in idxs)
                if e not in edges_set:
                    ok = False
                    break
            if ok and rec(p + 1):
                return True
            used[v] = False
        return False

    try:
        found = rec(0)
    except _BudgetHit:
        return SearchResult("unknown", None, None, nodes)
    if count:
        return SearchResult(
            "found" if solutions else "none",
            None,
            len(solutions),
            nodes,
        )
    if found:
        return SearchResult("found", hit[0], None, nodes)
    return SearchResult("none", None, None, nodes)


# ---------------------------------------------------------------------------
# Hamilton connectedness


def hamilton_tuples(D: Digraph, ell: int) -> list[Edge]:
    """The ell-edges of D, sorted; the endpoint alphabet for chains."""
    return sorted(D.edges_of_length(ell))


def is_hamilton_L_connected(D: Digraph, L: Link, budget: int = 10**6):
    """True iff D is Hamilton L-connected; may return UNKNOWN on budgets.

    For ell >= 1: the ell-edges of D must contain two disjoint tuples, and
    every ordered pair of disjoint ell-edges must be joined by an open
    Hamilton L-chain.  For ell = 0 the condition degenerates to: a spanning
    open L-chain exists.
    """
    ell = L.ell
    if ell == 0:
        res = find_hamilton_chain(D, L, closed=False, budget=budget)
        if res.status == "unknown":
            return UNKNOWN
        return res.found
    tuples = hamilton_tuples(D, ell)
    pairs = [
        (X, Y)
        for X in tuples
        for Y in tuples
        if not set(X) & set(Y)
    ]
    if not pairs:
        return False
    saw_unknown = False
    for X, Y in pairs:
        res = find_hamilton_chain(
            D, L, closed=False, start=X, end=Y, budget=budget
        )
        if res.status == "none":
            return False
        if res.status == "unknown":
            saw_unknown = True
    return UNKNOWN if saw_unknown else True


def is_strongly_hamilton_l_connected(G: Hypergraph, ell: int, budget: int = 10**6):
    """Hamilton ell-paths between all disjoint ordered ell-shadow pairs.

    Reduces to Hamilton L-connectedness of the all-orientations digraph of
    G together with its ell-shadow, for the single-edge link with overlap
    ell.  Zero minimum ell-degree short-circuits to False.
    """
    if not 1 <= ell < G.k:
        raise ParameterError(f"need 1 <= ell < k, got ell={ell}, k={G.k}")
    if degree_min(G, ell) == 0:
        return False
    H = orient_all(G)
    S = orient_all(l_shadow(G, ell))
    D = Digraph(G.n, H.edges | S.edges)
    return is_hamilton_L_connected(D, ell_cycle_link(G.k, ell), budget=budget)


# ---------------------------------------------------------------------------
# property graphs


@dataclass(frozen=True)
class Predicate:
    """Named property of an induced subgraph (receives relabeled copies)."""

    pid: str
    fn: Callable


def predicate_hamilton_connected(L: Link, budget: int = 10**6) -> Predicate:
    return Predicate(
        f"hamilton_connected({L.k},{L.ell},{L.r})",
        lambda sub: is_hamilton_L_connected(sub, L, budget=budget),
    )


def predicate_strongly_hamilton_connected(ell: int, budget: int = 10**6) -> Predicate:
    return Predicate(
        f"strongly_hamilton_connected(ell={ell})",
        lambda sub: is_strongly_hamilton_l_connected(sub, ell, budget=budget),
    )


def predicate_has_perfect_matching(budget: int = 10**6) -> Predicate:
    return Predicate(
        "has_perfect_matching",
        lambda sub: count_perfect_matchings(sub, budget=budget) > 0,
    )


def predicate_min_degree(d: int, delta) -> Predicate:
    delta = Fraction(delta)

    def fn(sub: Hypergraph):
        return degree_min(sub, d) >= delta * comb(sub.n - d, sub.k - d)

    return Predicate(f"min_degree(d={d},delta={delta})", fn)


@dataclass(frozen=True)
class PropertyGraph:
    """s-sets of a base graph whose induced subgraphs satisfy a predicate.

    In exhaustive mode ``edges`` is the full s-graph.  In sampled mode only
    the empirical edge fraction and degree probes are recorded, and a
    desk-scale flag is implied by mode != 'exhaustive'.
    """

    n: int
    s: int
    predicate_id: str
    mode: str
    edges: frozenset[Edge] | None
    checked: int
    unknown_sets: int
    edge_fraction: float
    degree_probes: tuple[tuple[Edge, float], ...] | None

    def graph(self) -> Hypergraph:
        if self.edges is None:
            raise ParameterError("sampled property graph has no explicit edges")
        return Hypergraph(self.n, self.s, self.edges)


def _induced(base, S: Iterable[int]):
    if isinstance(base, Hypergraph):
        return induced_hypergraph(base, S)
    return induced_digraph(base, S)


def property_graph(
    base,
    predicate: Predicate,
    s: int,
    mode: str = "exhaustive",
    samples: int = 1000,
    stream=None,
    budget: int = 200_000,
    degree_probe_q: int = 1,
    degree_probe_count: int = 5,
) -> PropertyGraph:
    """Build PG(base, P, s) exhaustively, or estimate it by sampling.

    Sampled mode estimates the edge fraction from uniform s-sets and probes
    the q-degree lower tail: for a few random q-sets, the fraction of their
    random s-supersets that satisfy the predicate.
    """
    n = base.n
    if not 0 < s <= n:
        raise ParameterError(f"need 1 <= s <= n, got s={s}, n={n}")
    if mode == "exhaustive":
        total = comb(n, s)
        if total > budget:
            raise BudgetExceededError(
                f"binom({n},{s}) = {total} exceeds budget {budget}"
            )
        edges = []
        unknown = 0
        for S in itertools.combinations(range(1, n + 1), s):
            res = predicate.fn(_induced(base, S))
            if res is UNKNOWN:
                unknown += 1
            elif res:
                edges.append(S)
        return PropertyGraph(
            n,
            s,
            predicate.pid,
            mode,
            frozenset(edges),
            total,
            unknown,
            len(edges) / total if total else 0.0,
            None,
        )
    if mode == "sampled":
        if stream is None:
            raise ParameterError("sampled mode needs a stream")
        hits = 0
        unknown = 0
        for _ in range(samples):
            S = stream.sample(range(1, n + 1), s)
            res = predicate.fn(_induced(base, S))
            if res is UNKNOWN:
                unknown += 1
            elif res:
                hits += 1
        probes = []
        if 0 < degree_probe_q < s:
            per_probe = max(1, samples // max(degree_probe_count, 1))
            for _ in range(degree_probe_count):
                Q = tuple(sorted(stream.sample(range(1, n + 1), degree_probe_q)))
                rest = [v for v in range(1, n + 1) if v not in Q]
                phits = 0
                for _ in range(per_probe):
                    S = sorted(Q + tuple(stream.sample(rest, s - degree_probe_q)))
                    res = predicate.fn(_induced(base, S))
                    if res is not UNKNOWN and res:
                        phits += 1
                probes.append((Q, phits / per_probe))
        return PropertyGraph(
            n,
            s,
            predicate.pid,
            mode,
            None,
            samples,
            unknown,
            hits / samples if samples else 0.0,
            tuple(probes),
        )
    raise ParameterError(f"unknown mode {mode!r}")


def property_graph_min_degree(P: PropertyGraph, q: int) -> tuple[int, Fraction]:
    """(delta_q, delta_q / binom(n-q, s-q)) for an exhaustive property graph."""
    if P.edges is None:
        raise ParameterError("min degree needs an exhaustive property graph")
    if not 1 <= q < P.s:
        raise ParameterError(f"need 1 <= q < s, got q={q}, s={P.s}")
    G = P.graph()
    delta = degree_min(G, q) if G.edges else 0
    denom = comb(P.n - q, P.s - q)
    return delta, Fraction(delta, denom)


# ---------------------------------------------------------------------------
# fractional matchings (exact simplex)


@dataclass(frozen=True)
class FractionalMatching:
    """LP outcome: ok iff the maximum fractional matching has size n/k.

    ``weights`` always holds a maximizer.  When ok is false, ``certificate``
    is an exact dual solution y >= 0 with sum_{v in e} y_v >= 1 per edge and
    sum_v y_v = optimum < n/k, certifying infeasibility.
    """

    ok: bool
    optimum: Fraction
    target: Fraction
    weights: dict[Edge, Fraction]
    certificate: dict[int, Fraction]


def has_perfect_fractional_matching(G: Hypergraph) -> FractionalMatching:
    """Exact test for edge weights >= 0 with vertex loads <= 1 and total n/k.

    Any nonnegative weighting has total at most n/k, so the test maximizes
    the total with a rational simplex (Bland's rule, hence terminating) and
    compares the optimum with n/k exactly.
    """
    edges = G.sorted_edges()
    m, n = len(edges), G.n
    target = Fraction(n, G.k)
    if n == 0:
        return FractionalMatching(True, Fraction(0), target, {}, {})
    # max sum x_e  s.t.  sum_{e ni v} x_e <= 1, x >= 0
    width = m + n + 1
    rows: list[list[Fraction]] = []
    for v in range(1, n + 1):
        row = [Fraction(0)] * width
        for j, e in enumerate(edges):
            if v in e:
                row[j] = Fraction(1)
        row[m + v - 1] = Fraction(1)
        row[-1] = Fraction(1)
        rows.append(row)
    cost = [Fraction(1)] * m + [Fraction(0)] * n + [Fraction(0)]
    basis = [m + i for i in range(n)]

    while True:
        enter = next((j for j in range(m + n) if cost[j] > 0), None)
        if enter is None:
            break
        best_ratio = None
        leave = None
        for i in range(n):
            a = rows[i][enter]
            if a > 0:
                ratio = rows[i][-1] / a
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[i] < basis[leave])
                ):
                    best_ratio = ratio
                    leave = i
        if leave is None:  # pragma: no cover - the LP is bounded by n/k
            raise InternalInvariantError("unbounded matching LP")
        piv = rows[leave][enter]
        rows[leave] = [x / piv for x in rows[leave]]
        for i in range(n):
            if i != leave and rows[i][enter] != 0:
                f = rows[i][enter]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[leave])]
        f = cost[enter]
        cost = [x - f * y for x, y in zip(cost, rows[leave])]
        basis[leave] = enter

    optimum = -cost[-1]
    weights = {e: Fraction(0) for e in edges}
    for i, b in enumerate(basis):
        if b < m:
            weights[edges[b]] = rows[i][-1]
    certificate = {v: -cost[m + v - 1] for v in range(1, n + 1)}

    # exact self-checks: primal feasibility and strong duality
    for v in range(1, n + 1):
        load = sum(weights[e] for e in edges if v in e)
        if load > 1:
            raise InternalInvariantError(f"vertex {v} overloaded: {load}")
    if sum(weights.values()) != optimum:
        raise InternalInvariantError("primal value mismatch")
    if sum(certificate.values()) != optimum:
        raise InternalInvariantError("strong duality violated")
    for e in edges:
        if sum(certificate[v] for v in e) < 1:
            raise InternalInvariantError(f"dual constraint violated at {e}")

    return FractionalMatching(optimum == target, optimum, target, weights, certificate)


# ---------------------------------------------------------------------------
# aperiodicity


@dataclass(frozen=True)
class AperiodicityReport:
    aperiodic: bool
    witness_order: int | None
    witness_walk: tuple[int, ...] | None


def is_aperiodic(G: Hypergraph, budget: int = 10**6) -> AperiodicityReport:
    """Closed tight walk of order = 1 (mod k)?

    States are ordered (k-1)-tuples inside edges; stepping appends a vertex
    completing an edge.  The product with walk-length residues mod k is
    decomposed into strongly connected components: the graph is aperiodic
    iff some state sits in one component at two consecutive residues.  The
    witness walk is recovered by BFS and has order = 1 (mod k).
    """
    k = G.k
    if k < 2:
        raise ParameterError("aperiodicity needs k >= 2")
    if not G.edges:
        return AperiodicityReport(False, None, None)
    edge_sets = {frozenset(e) for e in G.edges}
    ext: dict[frozenset, list[int]] = {}
    for e in edge_sets:
        for sub in itertools.combinations(sorted(e), k - 1):
            fs = frozenset(sub)
            (w,) = e - fs
            ext.setdefault(fs, []).append(w)
    for fs in ext:
        ext[fs] = sorted(set(ext[fs]))
    states = sorted(
        tup for fs in ext for tup in itertools.permutations(sorted(fs))
    )
    if len(states) * k > budget:
        raise BudgetExceededError(
            f"{len(states)} states x {k} residues exceed budget {budget}"
        )
    nodes = [(st, res) for st in states for res in range(k)]

    def succ(node):
        st, res = node
        nres = (res + 1) % k
        for w in ext[frozenset(st)]:
            yield (st[1:] + (w,), nres)

    # iterative Tarjan
    order_idx: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    comp: dict = {}
    counter = 0
    comp_count = 0
    for root in nodes:
        if root in order_idx:
            continue
        work = [(root, iter(succ(root)))]
        order_idx[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in order_idx:
                    order_idx[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(succ(nxt))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], order_idx[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == order_idx[node]:
                while True:
                    x = stack.pop()
                    on_stack.discard(x)
                    comp[x] = comp_count
                    if x == node:
                        break
                comp_count += 1

    hit_state = next(
        (st for st in states if comp[(st, 0)] == comp[(st, 1)]), None
    )
    if hit_state is None:
        return AperiodicityReport(False, None, None)

    # BFS for the witness walk from (σ,0) to (σ,1)
    src, dst = (hit_state, 0), (hit_state, 1)
    parent: dict = {src: None}
    frontier = [src]
    while dst not in parent:
        nxt_frontier = []
        for node in frontier:
            for nxt in succ(node):
                if nxt not in parent:
                    parent[nxt] = node
                    nxt_frontier.append(nxt)
        frontier = nxt_frontier
        if not frontier:  # pragma: no cover - same SCC guarantees a path
            raise InternalInvariantError("SCC claimed a path that BFS cannot find")
    walk: list[int] = []
    node = dst
    while parent[node] is not None:
        walk.append(node[0][-1])
        node = parent[node]
    walk.reverse()
    return AperiodicityReport(True, len(walk), tuple(walk))


# ---------------------------------------------------------------------------
# frameworks


def default_selector(G: Hypergraph) -> frozenset[Edge]:
    """Largest tight component carrying a spanning fractional matching.

    Ties break toward the lexicographically smallest edge set; when no
    component carries one, the largest tight component is returned, and an
    edgeless graph selects the empty set.
    """
    parts = tight_components(G)
    if not parts.blocks:
        return frozenset()
    qualified = [
        b
        for b in parts.blocks
        if has_perfect_fractional_matching(Hypergraph(G.n, G.k, b)).ok
    ]
    pool = qualified if qualified else list(parts.blocks)
    pool.sort(key=lambda b: (-len(b), sorted(b)))
    return pool[0]


def is_tightly_connected(G: Hypergraph) -> bool:
    """One tight component spanning the whole edge set (and at least one edge)."""
    return len(tight_components(G)) == 1


def check_consistency_pair(
    G: Hypergraph,
    selector: Callable[[Hypergraph], frozenset[Edge]] | None = None,
) -> tuple[bool, tuple[int, int] | None]:
    """Selector consistency across vertex-deleted subgraphs.

    For every pair u != v, the union of the selected subgraphs of G - u and
    G - v must be tightly connected.  Returns (ok, witness pair).
    """
    if selector is None:
        selector = default_selector

    def selected_edges(u: int) -> frozenset[Edge]:
        keep = [v for v in G.vertices if v != u]
        sub = induced_hypergraph(G, keep)
        chosen = selector(sub)
        back = {i + 1: v for i, v in enumerate(keep)}
        return frozenset(tuple(sorted(back[x] for x in e)) for e in chosen)

    cache = {u: selected_edges(u) for u in G.vertices}
    for u, v in itertools.combinations(G.vertices, 2):
        union = cache[u] | cache[v]
        if not union or len(tight_components(Hypergraph(G.n, G.k, union))) != 1:
            return False, (u, v)
    return True, None


@dataclass(frozen=True)
class FrameworkReport:
    """Tight component, fractional matching, and aperiodicity checks."""

    f1_tight_component: bool
    f2_fractional_matching: bool
    f3_aperiodic: bool
    fractional: FractionalMatching
    aperiodicity: AperiodicityReport

    @property
    def all_hold(self) -> bool:
        return (
            self.f1_tight_component
            and self.f2_fractional_matching
            and self.f3_aperiodic
        )


def framework_report(G: Hypergraph, budget: int = 10**6) -> FrameworkReport:
    fm = has_perfect_fractional_matching(G)
    ap = is_aperiodic(G, budget=budget)
    return FrameworkReport(
        is_tightly_connected(G), fm.ok, ap.aperiodic, fm, ap
    )
