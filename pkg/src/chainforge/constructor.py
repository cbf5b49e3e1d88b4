"""Randomized construction of spanning closed chains: partition, cover, connect.

The build follows three phases on a host digraph D with link L:

1. partition: split V(D) into V1, V2, draw an s2-set V0 uniformly from the
   connectedness property graph restricted to V1, and split the remainders
   into parts, retrying until three degree-margin conditions hold.
2. cover: draw a uniform perfect matching of the partite property graph on
   the V1 parts and realize an open chain inside every matched set and
   inside V0, covering V1.
3. connect: treat consecutive chain endpoints as tokens, draw a uniform
   perfect matching of the token-augmented partite property graph over the
   V2 parts, and realize the matched connector chains, closing the cycle.

Every run validates the assembled closed chain against the host before
returning.  Property predicates are memoized per vertex set in a
PredicateCache, which callers may share across runs on the same host.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterable

from .errors import (
    BudgetExceededError,
    ConstructionInfeasibleError,
    InternalInvariantError,
    ParameterError,
)
from .hypercore import Digraph, Edge, Hypergraph, induced_digraph
from .linkchain import (
    Link,
    OpenChain,
    build_closed_chain,
    build_open_chain,
    ClosedChain,
    make_link,
    validate_closed_chain,
)
from .hamilton import (
    UNKNOWN,
    find_hamilton_chain,
    hamilton_tuples,
    is_hamilton_L_connected,
)
from .randomness import GENERATOR_ID, SeededStream, UniformMatchingSampler


@dataclass(frozen=True)
class ConstructionPlan:
    """Arithmetic of the build: n = 2m(s1 - ell) + m', s2 = s1 + m'."""

    n: int
    ell: int
    r: int
    s1: int
    s2: int
    m: int
    m_prime: int
    v1_size: int
    v2_size: int


def plan_parameters(n: int, s1: int, ell: int, r: int) -> ConstructionPlan:
    """Solve the size equations and check the divisibility preconditions."""
    if r < 1 or ell < 0:
        raise ParameterError(f"need r >= 1 and ell >= 0, got r={r}, ell={ell}")
    if n % r != 0:
        raise ParameterError(f"closed chains need r | n, got n={n}, r={r}")
    if s1 <= 2 * ell:
        raise ParameterError(f"need s1 > 2*ell, got s1={s1}, ell={ell}")
    if s1 % r != ell % r:
        raise ParameterError(f"need s1 = ell (mod r), got s1={s1}")
    if s1 < r + ell:
        raise ParameterError(f"need s1 >= r + ell = {r + ell}, got {s1}")
    span = 2 * (s1 - ell)
    if n < span:
        raise ParameterError(f"need n >= 2(s1 - ell) = {span}, got n={n}")
    m, m_prime = divmod(n, span)
    s2 = s1 + m_prime
    v1_size = s1 * (m - 1) + s2
    v2_size = (s1 - 2 * ell) * m
    if m < 1 or not 0 <= m_prime < span:
        raise InternalInvariantError("size equation solved incorrectly")
    if s2 % r != ell % r:
        raise InternalInvariantError("s2 residue drifted")
    if v1_size + v2_size != n:
        raise InternalInvariantError("V1/V2 sizes do not add up")
    return ConstructionPlan(n, ell, r, s1, s2, m, m_prime, v1_size, v2_size)


class PredicateCache:
    """Memoized Hamilton L-connectedness over vertex subsets of one host."""

    def __init__(self, D: Digraph, L: Link, budget: int = 10**6):
        self.D = D
        self.L = L
        self.budget = budget
        self.table: dict[frozenset, bool] = {}
        self.evals = 0

    def ham_conn(self, S: Iterable[int]) -> bool:
        key = frozenset(S)
        hit = self.table.get(key)
        if hit is None:
            sub = induced_digraph(self.D, key)
            res = is_hamilton_L_connected(sub, self.L, budget=self.budget)
            if res is UNKNOWN:
                raise BudgetExceededError(
                    f"connectedness undecided within budget on {sorted(key)}"
                )
            self.table[key] = hit = res
            self.evals += 1
        return hit


@dataclass(frozen=True)
class PartitionWitness:
    """A partition passing the three degree-margin conditions.

    margins are minimum (exact) or pooled (sampled) degree ratios; the
    matching thresholds are 1 - 1/(3*s2) for D1 and 1 - 1/(3*s1) for D2/D3.
    """

    v1: tuple[int, ...]
    v2: tuple[int, ...]
    v0: tuple[int, ...]
    v1_parts: tuple[tuple[int, ...], ...]
    v2_parts: tuple[tuple[int, ...], ...]
    margins: dict[str, float]
    thresholds: dict[str, float]
    exact: dict[str, bool]
    attempts: int


def _d1_ratio(
    V1, s2, cache, stream, margin_samples, exhaustive_budget
) -> tuple[float, bool]:
    total = comb(len(V1), s2)
    if total <= exhaustive_budget:
        deg = {v: 0 for v in V1}
        for S in itertools.combinations(V1, s2):
            if cache.ham_conn(S):
                for v in S:
                    deg[v] += 1
        denom = comb(len(V1) - 1, s2 - 1)
        return min(deg.values()) / denom, True
    hits = 0
    for _ in range(margin_samples):
        v = stream.choice(V1)
        rest = [u for u in V1 if u != v]
        S = tuple(sorted([v] + stream.sample(rest, s2 - 1)))
        hits += 1 if cache.ham_conn(S) else 0
    return hits / margin_samples, False


def _d2_ratio(
    parts, cache, stream, margin_samples, exhaustive_budget
) -> tuple[float, bool]:
    size = len(parts[0])
    if size == 0:
        return 1.0, True  # m = 1: no partite vertices, condition is vacuous
    total = size ** len(parts)
    denom = size ** (len(parts) - 1)
    if total <= exhaustive_budget:
        deg = {v: 0 for p in parts for v in p}
        for combo in itertools.product(*parts):
            if cache.ham_conn(combo):
                for v in combo:
                    deg[v] += 1
        return min(deg.values()) / denom, True
    hits = 0
    for _ in range(margin_samples):
        combo = [stream.choice(p) for p in parts]
        hits += 1 if cache.ham_conn(tuple(combo)) else 0
    return hits / margin_samples, False


def _d3_ratio(
    V1, v2_parts, ell, cache, stream, margin_samples, exhaustive_budget
) -> tuple[float, bool]:
    t = len(v2_parts)
    m = len(v2_parts[0])
    denom = m ** (t - 1)
    total = comb(len(V1), 2 * ell) * m * t * denom
    if total <= exhaustive_budget:
        worst = 1.0
        for J in itertools.combinations(V1, 2 * ell):
            for i, part in enumerate(v2_parts):
                others = [p for j, p in enumerate(v2_parts) if j != i]
                for v in part:
                    cnt = 0
                    for combo in itertools.product(*others):
                        S = tuple(sorted(J + (v,) + combo))
                        cnt += 1 if cache.ham_conn(S) else 0
                    worst = min(worst, cnt / denom)
        return worst, True
    hits = 0
    for _ in range(margin_samples):
        J = tuple(sorted(stream.sample(V1, 2 * ell)))
        i = stream.randbelow(t)
        combo = tuple(
            stream.choice(p) for j, p in enumerate(v2_parts) if j != i
        )
        v = stream.choice(v2_parts[i])
        S = tuple(sorted(J + (v,) + combo))
        hits += 1 if cache.ham_conn(S) else 0
    return hits / margin_samples, False


def partition_vertices(
    D: Digraph,
    L: Link,
    plan: ConstructionPlan,
    stream: SeededStream,
    cache: PredicateCache,
    retries: int = 20,
    margin_samples: int = 12,
    exhaustive_budget: int = 128,
    v0_attempts: int = 64,
) -> PartitionWitness:
    """Random partitions until (D1)-(D3) hold; V0 uniform over its edges.

    V0 is drawn by rejection from uniform s2-subsets of V1, which is exactly
    uniform over the property-graph edges inside V1.  Failure after all
    retries raises with the best margins seen.
    """
    th = {
        "D1": 1.0 - 1.0 / (3 * plan.s2),
        "D2": 1.0 - 1.0 / (3 * plan.s1),
        "D3": 1.0 - 1.0 / (3 * plan.s1),
    }
    best: dict[str, float] = {"D1": -1.0, "D2": -1.0, "D3": -1.0}
    for attempt in range(1, retries + 1):
        perm = stream.shuffle(list(range(1, plan.n + 1)))
        V1 = tuple(sorted(perm[: plan.v1_size]))
        V2 = tuple(sorted(perm[plan.v1_size :]))
        r1, e1 = _d1_ratio(
            V1, plan.s2, cache, stream, margin_samples, exhaustive_budget
        )
        best["D1"] = max(best["D1"], r1)
        if r1 < th["D1"]:
            continue
        v0 = None
        for _ in range(v0_attempts):
            S = tuple(sorted(stream.sample(V1, plan.s2)))
            if cache.ham_conn(S):
                v0 = S
                break
        if v0 is None:
            continue
        rest = [v for v in V1 if v not in set(v0)]
        stream.shuffle(rest)
        w = plan.m - 1
        v1_parts = tuple(
            tuple(sorted(rest[i * w : (i + 1) * w])) for i in range(plan.s1)
        )
        v2list = list(V2)
        stream.shuffle(v2list)
        v2_parts = tuple(
            tuple(sorted(v2list[i * plan.m : (i + 1) * plan.m]))
            for i in range(plan.s1 - 2 * plan.ell)
        )
        r2, e2 = _d2_ratio(v1_parts, cache, stream, margin_samples, exhaustive_budget)
        best["D2"] = max(best["D2"], r2)
        if r2 < th["D2"]:
            continue
        r3, e3 = _d3_ratio(
            V1, v2_parts, plan.ell, cache, stream, margin_samples, exhaustive_budget
        )
        best["D3"] = max(best["D3"], r3)
        if r3 < th["D3"]:
            continue
        return PartitionWitness(
            V1,
            V2,
            v0,
            v1_parts,
            v2_parts,
            {"D1": r1, "D2": r2, "D3": r3},
            th,
            {"D1": e1, "D2": e2, "D3": e3},
            attempt,
        )
    raise ConstructionInfeasibleError(
        f"no partition met the degree margins in {retries} attempts", best
    )


# ---------------------------------------------------------------------------
# cover and connect


def _realize_chain(
    D: Digraph,
    L: Link,
    S: Iterable[int],
    budget: int,
    start: tuple[int, ...] | None = None,
    end: tuple[int, ...] | None = None,
) -> OpenChain:
    """Open Hamilton chain inside the induced subgraph on S.

    With no endpoints given, the lexicographically least disjoint pair of
    ell-edges is used; the search itself returns the lexicographically
    least ordering.  The predicate promised a chain, so a 'none' outcome is
    an internal inconsistency, not an input error.
    """
    vs = sorted(S)
    sub = induced_digraph(D, vs)
    fwd = {v: i + 1 for i, v in enumerate(vs)}
    back = {i + 1: v for i, v in enumerate(vs)}
    if L.ell == 0 or start is not None:
        pairs = [
            (
                None if start is None else tuple(fwd[v] for v in start),
                None if end is None else tuple(fwd[v] for v in end),
            )
        ]
    else:
        tuples = hamilton_tuples(sub, L.ell)
        pairs = [
            (X, Y) for X in tuples for Y in tuples if not set(X) & set(Y)
        ][:1]
        if not pairs:
            raise InternalInvariantError(
                f"no disjoint endpoint pair inside {vs}"
            )
    X, Y = pairs[0]
    res = find_hamilton_chain(sub, L, closed=False, start=X, end=Y, budget=budget)
    if res.status == "unknown":
        raise BudgetExceededError(f"chain search budget exhausted inside {vs}")
    if res.status == "none":
        raise InternalInvariantError(
            f"predicate/search inconsistency: no chain inside {vs}"
        )
    return build_open_chain(L, tuple(back[x] for x in res.ordering))


@dataclass(frozen=True)
class CoverResult:
    """Chains covering V1: the V0 chain first, then the matched chains."""

    matching: tuple[tuple[int, ...], ...]
    chains: tuple[OpenChain, ...]


def cover_phase(
    D: Digraph,
    L: Link,
    plan: ConstructionPlan,
    witness: PartitionWitness,
    stream: SeededStream,
    cache: PredicateCache,
    search_budget: int = 10**6,
    candidates_budget: int = 200_000,
) -> CoverResult:
    """Uniform matching of the V1-partite property graph, realized as chains."""
    matching: tuple[tuple[int, ...], ...] = ()
    if plan.m > 1:
        parts = witness.v1_parts
        total = (plan.m - 1) ** plan.s1
        if total > candidates_budget:
            raise BudgetExceededError(
                f"{total} partite candidates exceed budget {candidates_budget}"
            )
        flat = sorted(v for p in parts for v in p)
        fwd = {v: i + 1 for i, v in enumerate(flat)}
        back = {i + 1: v for i, v in enumerate(flat)}
        parts_rel = [tuple(fwd[v] for v in p) for p in parts]
        candidates = set()
        for combo in itertools.product(*parts):
            if cache.ham_conn(combo):
                candidates.add(tuple(sorted(fwd[v] for v in combo)))
        try:
            sampler = UniformMatchingSampler(
                Hypergraph(len(flat), plan.s1, frozenset(candidates)),
                partite=parts_rel,
            )
        except ParameterError as exc:
            raise ConstructionInfeasibleError(
                f"cover matching does not exist: {exc}", witness.margins
            )
        drawn = sampler.draw(stream)
        matching = tuple(
            sorted(tuple(sorted(back[x] for x in e)) for e in drawn)
        )
    chains = [_realize_chain(D, L, witness.v0, search_budget)]
    for e in matching:
        chains.append(_realize_chain(D, L, e, search_budget))
    return CoverResult(matching, tuple(chains))


@dataclass(frozen=True)
class ConnectResult:
    ordering: tuple[int, ...]
    chain_order: tuple[int, ...]
    connect_matching: tuple[tuple[int, tuple[int, ...]], ...]
    connectors: tuple[OpenChain, ...]


def connect_phase(
    D: Digraph,
    L: Link,
    plan: ConstructionPlan,
    witness: PartitionWitness,
    cover: CoverResult,
    stream: SeededStream,
    cache: PredicateCache,
    search_budget: int = 10**6,
    candidates_budget: int = 200_000,
) -> ConnectResult:
    """Match tokens T_i = end(R_i) + start(R_i+1) to V2 parts and realize."""
    m, ell = plan.m, plan.ell
    order = stream.shuffle(list(range(m)))
    R = [cover.chains[i] for i in order]
    tokens = []
    for i in range(m):
        plus = R[i].end
        minus = R[(i + 1) % m].start
        if set(plus) & set(minus):
            raise InternalInvariantError("consecutive chain endpoints overlap")
        tokens.append((plus, minus))

    v2_parts = witness.v2_parts
    t = len(v2_parts)
    total = (plan.m**t) * m
    if total > candidates_budget:
        raise BudgetExceededError(
            f"{total} connector candidates exceed budget {candidates_budget}"
        )
    flat = sorted(v for p in v2_parts for v in p)
    fwd = {v: i + 1 for i, v in enumerate(flat)}
    back = {i + 1: v for i, v in enumerate(flat)}
    token_ids = [len(flat) + i + 1 for i in range(m)]
    parts_rel = [tuple(fwd[v] for v in p) for p in v2_parts] + [tuple(token_ids)]
    candidates = set()
    for combo in itertools.product(*v2_parts):
        for i in range(m):
            plus, minus = tokens[i]
            S = set(combo) | set(plus) | set(minus)
            if cache.ham_conn(S):
                candidates.add(
                    tuple(sorted([fwd[v] for v in combo] + [token_ids[i]]))
                )
    try:
        sampler = UniformMatchingSampler(
            Hypergraph(len(flat) + m, t + 1, frozenset(candidates)),
            partite=parts_rel,
        )
    except ParameterError as exc:
        raise ConstructionInfeasibleError(
            f"connector matching does not exist: {exc}", witness.margins
        )
    drawn = sampler.draw(stream)

    connectors: list[OpenChain | None] = [None] * m
    assignments = []
    for e in sorted(drawn):
        toks = [x for x in e if x > len(flat)]
        if len(toks) != 1:
            raise InternalInvariantError("matched edge lacks a unique token")
        i = toks[0] - len(flat) - 1
        verts = tuple(sorted(back[x] for x in e if x <= len(flat)))
        plus, minus = tokens[i]
        S = set(verts) | set(plus) | set(minus)
        connectors[i] = _realize_chain(
            D, L, S, search_budget, start=plus, end=minus
        )
        assignments.append((i, verts))

    ordering: list[int] = []
    for i in range(m):
        ordering.extend(R[i].ordering)
        mid = connectors[i].ordering[ell : len(connectors[i].ordering) - ell]
        ordering.extend(mid)
    return ConnectResult(
        tuple(ordering), tuple(order), tuple(sorted(assignments)), tuple(connectors)
    )


# ---------------------------------------------------------------------------
# the full build


@dataclass(frozen=True)
class ConstructionResult:
    plan: ConstructionPlan
    witness: PartitionWitness
    link: Link
    chain: ClosedChain
    cover_matching: tuple[tuple[int, ...], ...]
    connect_matching: tuple[tuple[int, tuple[int, ...]], ...]
    chain_order: tuple[int, ...]
    desk_scale_deviation: bool
    generator: str


def construct_chain(
    D: Digraph,
    L: Link,
    s1: int,
    stream: SeededStream,
    retries: int = 20,
    cache: PredicateCache | None = None,
    search_budget: int = 10**6,
    margin_samples: int = 12,
    exhaustive_budget: int = 128,
    candidates_budget: int = 200_000,
) -> ConstructionResult:
    """Build a spanning closed L-chain of D; validated before returning.

    The desk-scale flag is set when s1 < 5 (r + ell) or when any margin was
    sampled rather than enumerated.
    """
    plan = plan_parameters(D.n, s1, L.ell, L.r)
    if cache is None:
        cache = PredicateCache(D, L, search_budget)
    witness = partition_vertices(
        D,
        L,
        plan,
        stream,
        cache,
        retries=retries,
        margin_samples=margin_samples,
        exhaustive_budget=exhaustive_budget,
    )
    cover = cover_phase(
        D, L, plan, witness, stream, cache,
        search_budget=search_budget, candidates_budget=candidates_budget,
    )
    conn = connect_phase(
        D, L, plan, witness, cover, stream, cache,
        search_budget=search_budget, candidates_budget=candidates_budget,
    )
    if sorted(conn.ordering) != list(range(1, plan.n + 1)):
        raise InternalInvariantError("assembled ordering is not spanning")
    chain = build_closed_chain(L, conn.ordering)
    if not validate_closed_chain(L, D, conn.ordering):
        raise InternalInvariantError("assembled chain leaves the host")
    desk = s1 < 5 * (L.r + L.ell) or not all(witness.exact.values())
    return ConstructionResult(
        plan,
        witness,
        L,
        chain,
        cover.matching,
        conn.connect_matching,
        conn.chain_order,
        desk,
        GENERATOR_ID,
    )


class ConstructionSampler:
    """Adapter: repeated construct_chain runs as a chain-edge-set sampler."""

    def __init__(self, D: Digraph, L: Link, s1: int, **kwargs):
        self.D = D
        self.L = L
        self.s1 = s1
        self.n = D.n
        self.kwargs = dict(kwargs)
        self.kwargs.setdefault("cache", PredicateCache(D, L))
        self.name = f"construct(n={D.n},k={L.k},ell={L.ell},r={L.r},s1={s1})"

    def ground_contains(self, el) -> bool:
        return tuple(el) in self.D.edges

    def draw(self, stream: SeededStream) -> frozenset[Edge]:
        return construct_chain(self.D, self.L, self.s1, stream, **self.kwargs).chain.edges


# ---------------------------------------------------------------------------
# replayable records


def construction_record(result: ConstructionResult) -> dict:
    """JSON-ready dict: enough to replay and re-validate with no randomness."""
    L = result.link
    return {
        "link": {
            "k": L.k,
            "ell": L.ell,
            "r": L.r,
            "edges": sorted(list(e) for e in L.edges),
        },
        "plan": {
            "n": result.plan.n,
            "ell": result.plan.ell,
            "r": result.plan.r,
            "s1": result.plan.s1,
            "s2": result.plan.s2,
            "m": result.plan.m,
            "m_prime": result.plan.m_prime,
        },
        "witness": {
            "v1": list(result.witness.v1),
            "v2": list(result.witness.v2),
            "v0": list(result.witness.v0),
            "v1_parts": [list(p) for p in result.witness.v1_parts],
            "v2_parts": [list(p) for p in result.witness.v2_parts],
            "margins": result.witness.margins,
            "thresholds": result.witness.thresholds,
            "exact": result.witness.exact,
            "attempts": result.witness.attempts,
        },
        "cover_matching": [list(e) for e in result.cover_matching],
        "connect_matching": [
            {"token": i, "vertices": list(vs)} for i, vs in result.connect_matching
        ],
        "chain_order": list(result.chain_order),
        "ordering": list(result.chain.ordering),
        "desk_scale_deviation": result.desk_scale_deviation,
        "generator": result.generator,
    }


def replay_construction(D: Digraph, record: dict) -> tuple[bool, list[str]]:
    """Re-validate a stored construction against a host, deterministically."""
    problems: list[str] = []
    try:
        L = make_link(
            record["link"]["k"],
            record["link"]["ell"],
            record["link"]["r"],
            [tuple(e) for e in record["link"]["edges"]],
        )
        ordering = tuple(record["ordering"])
        w = record["witness"]
    except (KeyError, TypeError, ParameterError) as exc:
        return False, [f"malformed record: {exc}"]
    if sorted(ordering) != list(range(1, D.n + 1)):
        problems.append("ordering is not a permutation of 1..n")
    v1, v2, v0 = set(w["v1"]), set(w["v2"]), set(w["v0"])
    if v1 | v2 != set(range(1, D.n + 1)) or v1 & v2:
        problems.append("V1/V2 is not a partition of the vertex set")
    if not v0 <= v1:
        problems.append("V0 is not inside V1")
    flat1 = [v for p in w["v1_parts"] for v in p]
    if sorted(flat1) != sorted(v1 - v0) or len(flat1) != len(set(flat1)):
        problems.append("V1 parts do not partition V1 minus V0")
    flat2 = [v for p in w["v2_parts"] for v in p]
    if sorted(flat2) != sorted(v2) or len(flat2) != len(set(flat2)):
        problems.append("V2 parts do not partition V2")
    for e in record["cover_matching"]:
        if not set(e) <= v1 - v0:
            problems.append(f"cover edge {e} leaves V1 minus V0")
    if not problems:
        try:
            if not validate_closed_chain(L, D, ordering):
                problems.append("chain does not validate against the host")
        except (ParameterError, InternalInvariantError) as exc:
            problems.append(str(exc))
    return not problems, problems
