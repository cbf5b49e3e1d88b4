"""Hypergraph and directed hypergraph types plus structural operations.

Vertices are dense integers 1..n.  Undirected edges are stored as sorted
tuples, directed edges as tuples of distinct vertices, so everything is
hashable and serialization is canonical.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

from .errors import BudgetExceededError, GraphParseError, ParameterError

Edge = tuple[int, ...]


def _as_sorted_edge(vertices: Iterable[int]) -> Edge:
    edge = tuple(sorted(vertices))
    if len(set(edge)) != len(edge):
        raise ParameterError(f"edge {edge} repeats a vertex")
    return edge


@dataclass(frozen=True)
class Hypergraph:
    """A k-uniform hypergraph on vertex set {1..n}.

    k = 1 is permitted so that 1-shadows are representable; the objects of
    interest all have k >= 2.
    """

    n: int
    k: int
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 0:
            raise ParameterError(f"n must be >= 0, got {self.n}")
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")
        canon = frozenset(_as_sorted_edge(e) for e in self.edges)
        object.__setattr__(self, "edges", canon)
        for e in canon:
            if len(e) != self.k:
                raise ParameterError(f"edge {e} is not {self.k}-uniform")
            if e[0] < 1 or e[-1] > self.n:
                raise ParameterError(f"edge {e} leaves vertex range 1..{self.n}")

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def support(self) -> frozenset[int]:
        return frozenset(v for e in self.edges for v in e)


@dataclass(frozen=True)
class Digraph:
    """A directed hypergraph on {1..n}: edges are tuples of distinct vertices.

    Mixed uniformities are allowed; a (k, ell)-digraph is one whose edge
    lengths lie in {k, ell}.
    """

    n: int
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 0:
            raise ParameterError(f"n must be >= 0, got {self.n}")
        canon = frozenset(tuple(e) for e in self.edges)
        object.__setattr__(self, "edges", canon)
        for e in canon:
            if len(e) == 0:
                raise ParameterError("empty directed edge")
            if len(set(e)) != len(e):
                raise ParameterError(f"directed edge {e} repeats a vertex")
            if min(e) < 1 or max(e) > self.n:
                raise ParameterError(f"edge {e} leaves vertex range 1..{self.n}")

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def uniformities(self) -> frozenset[int]:
        return frozenset(len(e) for e in self.edges)

    def edges_of_length(self, k: int) -> frozenset[Edge]:
        return frozenset(e for e in self.edges if len(e) == k)

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges, key=lambda e: (len(e), e))


@dataclass(frozen=True)
class EdgePartition:
    """Disjoint edge blocks of a source graph, with their vertex supports."""

    blocks: tuple[frozenset[Edge], ...]
    vertex_sets: tuple[frozenset[int], ...]

    def __post_init__(self):
        if len(self.blocks) != len(self.vertex_sets):
            raise ParameterError("blocks and vertex_sets lengths differ")
        seen: set[Edge] = set()
        for block in self.blocks:
            if not block:
                raise ParameterError("empty block in edge partition")
            if seen & block:
                raise ParameterError("blocks are not disjoint")
            seen |= block

    def __len__(self) -> int:
        return len(self.blocks)


class _UnionFind:
    def __init__(self, items: Iterable):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


# ---------------------------------------------------------------------------
# degrees and shadows


def degree_map(G: Hypergraph, d: int) -> dict[Edge, int]:
    """Map each d-subset with positive degree to its edge count."""
    if not 1 <= d < G.k:
        raise ParameterError(f"need 1 <= d < k, got d={d}, k={G.k}")
    counts: dict[Edge, int] = {}
    for e in G.edges:
        for sub in itertools.combinations(e, d):
            counts[sub] = counts.get(sub, 0) + 1
    return counts

def degree_min(G: Hypergraph, d: int) -> int:
    """Minimum d-degree: least number of edges over all d-subsets of V.

    d-subsets absent from the degree map have degree 0, so the minimum is 0
    whenever some d-subset lies in no edge.
    """
    counts = degree_map(G, d)
    if len(counts) < comb(G.n, d):
        return 0
    return min(counts.values())


def vertex_degrees(G: Hypergraph) -> list[int]:
    """Degree of every vertex 1..n, including zeros."""
    counts: dict[int, int] = {}
    for e in G.edges:
        for v in e:
            counts[v] = counts.get(v, 0) + 1
    return [counts.get(v, 0) for v in G.vertices]


def shadow2(G: Hypergraph) -> Hypergraph:
    """The 2-shadow: all pairs covered by an edge."""
    return l_shadow(G, 2)


def l_shadow(G: Hypergraph, ell: int) -> Hypergraph:
    """The ell-shadow: all ell-sets contained in an edge."""
    if not 1 <= ell < G.k:
        raise ParameterError(f"need 1 <= ell < k, got ell={ell}, k={G.k}")
    shadow = frozenset(
        sub for e in G.edges for sub in itertools.combinations(e, ell)
    )
    return Hypergraph(G.n, ell, shadow)


# ---------------------------------------------------------------------------
# components


def line_graph(G: Hypergraph) -> Hypergraph:
    """2-graph on edge indices; i ~ j iff the edges share k-1 vertices.

    Vertex i (1-based) stands for the i-th edge of ``G.sorted_edges()``.
    """
    edges = G.sorted_edges()
    index = {e: i + 1 for i, e in enumerate(edges)}
    adjacency: set[Edge] = set()
    by_sub: dict[Edge, list[Edge]] = {}
    for e in edges:
        for sub in itertools.combinations(e, G.k - 1):
            by_sub.setdefault(sub, []).append(e)
    for group in by_sub.values():
        for e, f in itertools.combinations(group, 2):
            adjacency.add(_as_sorted_edge((index[e], index[f])))
    return Hypergraph(len(edges), 2, adjacency)


def tight_components(G: Hypergraph) -> EdgePartition:
    """Edge blocks connected through consecutive (k-1)-overlaps."""
    if not G.edges:
        return EdgePartition((), ())
    uf = _UnionFind(G.edges)
    by_sub: dict[Edge, Edge] = {}
    for e in G.edges:
        for sub in itertools.combinations(e, G.k - 1):
            if sub in by_sub:
                uf.union(by_sub[sub], e)
            else:
                by_sub[sub] = e
    groups: dict[Edge, set[Edge]] = {}
    for e in G.edges:
        groups.setdefault(uf.find(e), set()).add(e)
    blocks = sorted(groups.values(), key=lambda b: min(b))
    return EdgePartition(
        tuple(frozenset(b) for b in blocks),
        tuple(frozenset(v for e in b for v in e) for b in blocks),
    )


def components2(G: Hypergraph | Digraph) -> EdgePartition:
    """Blocks of edges lying in a common component of the 2-shadow.

    Only components of the 2-shadow that contain an edge count, so an
    edgeless graph has zero components.  Directed edges are grouped by
    their underlying vertex sets; orientation is ignored.
    """
    supports = [frozenset(e) for e in sorted(G.edges, key=lambda e: (len(e), e))]
    edges = sorted(G.edges, key=lambda e: (len(e), e))
    touched = sorted({v for s in supports for v in s})
    if not touched:
        return EdgePartition((), ())
    uf = _UnionFind(touched)
    for s in supports:
        first = min(s)
        for v in s:
            uf.union(first, v)
    # a component counts only if some edge spans >= 2 of its vertices
    has_pair: set[int] = {uf.find(min(s)) for s in supports if len(s) >= 2}
    groups: dict[int, set[Edge]] = {}
    for e, s in zip(edges, supports):
        root = uf.find(min(s))
        if root in has_pair:
            groups.setdefault(root, set()).add(e)
    blocks = sorted(groups.values(), key=lambda b: min(b))
    return EdgePartition(
        tuple(frozenset(b) for b in blocks),
        tuple(frozenset(v for e in b for v in e) for b in blocks),
    )


def clique_graph(G: Hypergraph, t: int) -> Hypergraph:
    """t-graph of t-sets whose induced subgraph is complete."""
    if t < G.k:
        raise ParameterError(f"need t >= k, got t={t}, k={G.k}")
    cliques = frozenset(
        X
        for X in itertools.combinations(G.vertices, t)
        if all(sub in G.edges for sub in itertools.combinations(X, G.k))
    )
    return Hypergraph(G.n, t, cliques)


# ---------------------------------------------------------------------------
# density and degree-sequence conditions


def _edge_fits(e: Edge, parts: Sequence[frozenset[int]]) -> bool:
    # system-of-distinct-representatives check: some ordering of e puts its
    # i-th vertex inside parts[i]
    for perm in itertools.permutations(e):
        if all(v in X for v, X in zip(perm, parts)):
            return True
    return False


def count_crossing_edges(G: Hypergraph, parts: Sequence[Iterable[int]]) -> int:
    """e_G(X_1..X_k): edges writable as (v_1..v_k) with v_i in X_i."""
    if len(parts) != G.k:
        raise ParameterError(f"need {G.k} vertex sets, got {len(parts)}")
    sets = [frozenset(X) for X in parts]
    return sum(1 for e in G.edges if _edge_fits(e, sets))


@dataclass(frozen=True)
class DensityWitness:
    """A violating tuple of vertex sets for the uniform-density check."""

    parts: tuple[tuple[int, ...], ...]
    crossing_edges: int
    required: Fraction


def is_uniformly_dense(
    G: Hypergraph,
    eps,
    d,
    mode: str = "exhaustive",
    samples: int = 1000,
    stream=None,
    budget: int = 42,
) -> tuple[bool, DensityWitness | None]:
    """Check e_G(X_1..X_k) >= d|X_1|...|X_k| - eps*n over k-tuples of subsets.

    The slack term is eps*n verbatim.  Exhaustive mode iterates all subset
    tuples and requires k*n <= budget; sampled mode draws ``samples`` random
    tuples from ``stream``.  Returns (ok, witness) with a violating tuple on
    failure.
    """
    eps = Fraction(eps)
    d = Fraction(d)
    slack = eps * G.n

    def violated(parts: tuple[frozenset[int], ...]) -> DensityWitness | None:
        sizes = 1
        for X in parts:
            sizes *= len(X)
        required = d * sizes - slack
        crossing = count_crossing_edges(G, parts)
        if crossing < required:
            return DensityWitness(
                tuple(tuple(sorted(X)) for X in parts), crossing, required
            )
        return None

    if mode == "exhaustive":
        if G.k * G.n > budget:
            raise BudgetExceededError(
                f"exhaustive density check needs k*n <= {budget}, got {G.k * G.n}"
            )
        all_subsets = [
            frozenset(S)
            for size in range(G.n + 1)
            for S in itertools.combinations(G.vertices, size)
        ]
        for parts in itertools.product(all_subsets, repeat=G.k):
            w = violated(parts)
            if w is not None:
                return False, w
        return True, None
    if mode == "sampled":
        if stream is None:
            raise ParameterError("sampled mode needs a stream")
        for _ in range(samples):
            parts = tuple(
                frozenset(v for v in G.vertices if stream.bernoulli(0.5))
                for _ in range(G.k)
            )
            w = violated(parts)
            if w is not None:
                return False, w
        return True, None
    raise ParameterError(f"unknown mode {mode!r}")


def check_degree_sequence(G: Hypergraph, t: int, mu) -> tuple[bool, int | None]:
    """Sorted-degree condition d_i > (t-2)n/t + i + mu*n for all i <= n/t.

    Returns (ok, first failing index) with 1-based i.  Exact rational
    comparison.
    """
    if G.k != 2:
        raise ParameterError("degree-sequence condition is for 2-graphs")
    if t < 2:
        raise ParameterError(f"need t >= 2, got {t}")
    mu = Fraction(mu)
    degrees = sorted(vertex_degrees(G))
    n = G.n
    for i in range(1, n // t + 1):
        bound = Fraction((t - 2) * n, t) + i + mu * n
        if not degrees[i - 1] > bound:
            return False, i
    return True, None


# ---------------------------------------------------------------------------
# orientations and builders


def orient_all(G: Hypergraph) -> Digraph:
    """All orderings of every edge, as a directed hypergraph."""
    tuples = frozenset(
        perm for e in G.edges for perm in itertools.permutations(e)
    )
    return Digraph(G.n, tuples)


def complete_hypergraph(n: int, k: int) -> Hypergraph:
    return Hypergraph(n, k, frozenset(itertools.combinations(range(1, n + 1), k)))


def complete_kl_digraph(n: int, k: int, ell: int) -> Digraph:
    """All k-tuples plus all ell-tuples of distinct vertices."""
    edges = set(itertools.permutations(range(1, n + 1), k))
    if ell > 0:
        edges |= set(itertools.permutations(range(1, n + 1), ell))
    return Digraph(n, frozenset(edges))


def digraph_union(*graphs: Digraph) -> Digraph:
    n = max(g.n for g in graphs)
    edges = frozenset(e for g in graphs for e in g.edges)
    return Digraph(n, edges)


def induced_hypergraph(G: Hypergraph, S: Iterable[int]) -> Hypergraph:
    """Induced subgraph on S, relabeled to 1..|S| via ascending order of S."""
    vs = sorted(set(S))
    if vs and (vs[0] < 1 or vs[-1] > G.n):
        raise ParameterError("S leaves vertex range")
    relabel = {v: i + 1 for i, v in enumerate(vs)}
    keep = frozenset(
        tuple(relabel[v] for v in e) for e in G.edges if all(v in relabel for v in e)
    )
    return Hypergraph(len(vs), G.k, keep)


def induced_digraph(D: Digraph, S: Iterable[int]) -> Digraph:
    """Induced subdigraph on S, relabeled to 1..|S| via ascending order of S."""
    vs = sorted(set(S))
    if vs and (vs[0] < 1 or vs[-1] > D.n):
        raise ParameterError("S leaves vertex range")
    relabel = {v: i + 1 for i, v in enumerate(vs)}
    keep = frozenset(
        tuple(relabel[v] for v in e) for e in D.edges if all(v in relabel for v in e)
    )
    return Digraph(len(vs), keep)


# ---------------------------------------------------------------------------
# text format


def parse_graph(text: str) -> Hypergraph | Digraph:
    """Parse the text format (header ``U <k> <n>`` or ``D <n>``).

    ``#`` starts a comment; vertices are 1-based.  Malformed lines,
    out-of-range vertices and duplicate edges raise GraphParseError with the
    line number.
    """
    header: tuple | None = None
    edges: list[Edge] = []
    seen: set[Edge] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            fields = line.split()
            if fields[0] == "U":
                if len(fields) != 3:
                    raise GraphParseError("expected 'U <k> <n>'", lineno)
                try:
                    k, n = int(fields[1]), int(fields[2])
                except ValueError:
                    raise GraphParseError("non-integer header field", lineno)
                if k < 1 or n < 0:
                    raise GraphParseError(f"bad header values k={k} n={n}", lineno)
                header = ("U", k, n)
            elif fields[0] == "D":
                if len(fields) != 2:
                    raise GraphParseError("expected 'D <n>'", lineno)
                try:
                    n = int(fields[1])
                except ValueError:
                    raise GraphParseError("non-integer header field", lineno)
                if n < 0:
                    raise GraphParseError(f"bad header value n={n}", lineno)
                header = ("D", n)
            else:
                raise GraphParseError(f"unknown header {fields[0]!r}", lineno)
            continue
        if header[0] == "U":
            _, k, n = header
            try:
                vs = [int(f) for f in line.split()]
            except ValueError:
                raise GraphParseError("non-integer vertex", lineno)
            if len(vs) != k:
                raise GraphParseError(f"expected {k} vertices, got {len(vs)}", lineno)
            if len(set(vs)) != len(vs):
                raise GraphParseError("repeated vertex in edge", lineno)
            if min(vs) < 1 or max(vs) > n:
                raise GraphParseError(f"vertex out of range 1..{n}", lineno)
            e = tuple(sorted(vs))
            if e in seen:
                raise GraphParseError(f"duplicate edge {e}", lineno)
            seen.add(e)
            edges.append(e)
        else:
            _, n = header
            if ":" not in line:
                raise GraphParseError("expected '<len>: v1 v2 ...'", lineno)
            head, _, tail = line.partition(":")
            try:
                length = int(head.strip())
                vs = [int(f) for f in tail.split()]
            except ValueError:
                raise GraphParseError("non-integer field", lineno)
            if length != len(vs):
                raise GraphParseError(
                    f"declared length {length}, got {len(vs)} vertices", lineno
                )
            if length < 1:
                raise GraphParseError("empty directed edge", lineno)
            if len(set(vs)) != len(vs):
                raise GraphParseError("repeated vertex in edge", lineno)
            if min(vs) < 1 or max(vs) > n:
                raise GraphParseError(f"vertex out of range 1..{n}", lineno)
            e = tuple(vs)
            if e in seen:
                raise GraphParseError(f"duplicate edge {e}", lineno)
            seen.add(e)
            edges.append(e)
    if header is None:
        raise GraphParseError("empty input: no header line")
    if header[0] == "U":
        return Hypergraph(header[2], header[1], frozenset(edges))
    return Digraph(header[1], frozenset(edges))


def serialize_graph(G: Hypergraph | Digraph) -> str:
    """Canonical text form; parse_graph round-trips it exactly."""
    lines: list[str] = []
    if isinstance(G, Hypergraph):
        lines.append(f"U {G.k} {G.n}")
        for e in G.sorted_edges():
            lines.append(" ".join(str(v) for v in e))
    else:
        lines.append(f"D {G.n}")
        for e in G.sorted_edges():
            lines.append(f"{len(e)}: " + " ".join(str(v) for v in e))
    return "\n".join(lines) + "\n"
