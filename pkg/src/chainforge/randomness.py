"""Seeded randomness, exact-uniform samplers, and statistical estimators.

All randomness flows through SeededStream so that a (seed, stream_id) pair
reproduces the identical draw sequence on every platform.  Samplers are
exactly uniform over their support: matchings via count-and-descend over a
vertex-ordering DP, Hamilton cycles via shuffled orderings with canonical
deduplication.  No MCMC, no rejection against unknown totals.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, comb, floor, log, sqrt
from typing import Iterable, Sequence

from .errors import BudgetExceededError, ParameterError
from .hypercore import Digraph, Edge, Hypergraph, components2

GENERATOR_ID = "mt19937-forge/1"

_Z95 = 1.959963984540054


class SeededStream:
    """Deterministic random stream keyed by (seed, stream_id).

    Every draw reduces to MT19937 ``getrandbits`` on a generator seeded
    with the integer (seed << 64) | stream_id, so sequences are stable
    across platforms and Python versions.  The helpers reimplement
    shuffling and sampling on top of ``getrandbits`` directly to keep the
    draw sequence pinned down by this module alone.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0 or stream_id >= 1 << 64:
            raise ParameterError(
                f"need seed >= 0 and 0 <= stream_id < 2^64, got {seed}, {stream_id}"
            )
        self.seed = seed
        self.stream_id = stream_id
        self._rng = random.Random((seed << 64) | stream_id)

    def __repr__(self):
        return f"SeededStream(seed={self.seed}, stream_id={self.stream_id})"

    def getrandbits(self, bits: int) -> int:
        return self._rng.getrandbits(bits)

    def rand(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return self._rng.getrandbits(53) * 2.0**-53

    def randbelow(self, m: int) -> int:
        """Uniform integer in [0, m) by rejection on getrandbits."""
        if m <= 0:
            raise ParameterError(f"randbelow needs m > 0, got {m}")
        bits = m.bit_length()
        while True:
            x = self._rng.getrandbits(bits)
            if x < m:
                return x

    def randint(self, a: int, b: int) -> int:
        """Uniform integer in [a, b] inclusive."""
        if b < a:
            raise ParameterError(f"empty range [{a}, {b}]")
        return a + self.randbelow(b - a + 1)

    def bernoulli(self, p: float) -> bool:
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"need 0 <= p <= 1, got {p}")
        return self.rand() < p

    def shuffle(self, items: list) -> list:
        """In-place Fisher-Yates; also returns the list."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def sample(self, items: Sequence, m: int) -> list:
        """m distinct items, order-insensitive uniform (partial Fisher-Yates)."""
        if m < 0 or m > len(items):
            raise ParameterError(f"cannot sample {m} of {len(items)}")
        pool = list(items)
        for i in range(m):
            j = self.randint(i, len(pool) - 1)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:m]

    def choice(self, items: Sequence):
        if not items:
            raise ParameterError("choice on empty sequence")
        return items[self.randbelow(len(items))]


def wilson_interval(
    successes: int, trials: int, z: float = _Z95
) -> tuple[float, float]:
    """Wilson score interval; (0, 1) when there are no trials."""
    if trials < 0 or successes < 0 or successes > trials:
        raise ParameterError(f"bad counts {successes}/{trials}")
    if trials == 0:
        return 0.0, 1.0
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = phat + z2 / (2 * trials)
    half = z * sqrt(phat * (1.0 - phat) / trials + z2 / (4 * trials * trials))
    return max(0.0, (center - half) / denom), min(1.0, (center + half) / denom)


# ---------------------------------------------------------------------------
# sparsification and binomial tuple sets


def sparsify(G, p: float, stream: SeededStream):
    """Keep each edge independently with probability p (seeded, sorted order)."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"need 0 <= p <= 1, got {p}")
    kept = frozenset(e for e in G.sorted_edges() if stream.bernoulli(p))
    if isinstance(G, Hypergraph):
        return Hypergraph(G.n, G.k, kept)
    return Digraph(G.n, kept)


def _unrank_tuple(idx: int, n: int, k: int) -> Edge:
    # mixed-radix digits over pool sizes n, n-1, ..., n-k+1
    digits = []
    for j in range(k - 1, -1, -1):
        base = n - j
        digits.append(idx % base)
        idx //= base
    digits.reverse()
    pool = list(range(1, n + 1))
    return tuple(pool.pop(d) for d in digits)


def binomial_tuple_set(
    n: int, k: int, q: float, stream: SeededStream, budget: int = 10**7
) -> Digraph:
    """Each ordered k-tuple of distinct vertices kept independently w.p. q.

    Uses geometric skipping over the tuple index space, so the universe is
    never materialized; the expected work is q * n!/(n-k)! draws.
    """
    if not 0.0 <= q <= 1.0:
        raise ParameterError(f"need 0 <= q <= 1, got {q}")
    if k < 1 or k > n:
        raise ParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    total = 1
    for i in range(k):
        total *= n - i
    if q == 0.0:
        return Digraph(n, frozenset())
    if q == 1.0:
        if total > budget:
            raise BudgetExceededError(f"q=1 would materialize {total} tuples")
        return Digraph(n, frozenset(itertools.permutations(range(1, n + 1), k)))
    if q * total > budget:
        raise BudgetExceededError(f"expected {q * total:.0f} tuples exceeds budget")
    edges = []
    idx = -1
    log1q = log(1.0 - q)
    while True:
        u = stream.rand()
        # u == 0 would mean an infinite skip; nudge to the smallest draw
        if u == 0.0:
            u = 2.0**-53
        idx += 1 + floor(log(u) / log1q)
        if idx >= total:
            break
        edges.append(_unrank_tuple(idx, n, k))
    return Digraph(n, frozenset(edges))


# ---------------------------------------------------------------------------
# exact-uniform samplers


class HamiltonCycleSampler:
    """Uniform over the (n-1)!/2 undirected Hamilton cycles of K_n.

    A shuffled ordering induces each cycle with equal multiplicity 2n, so
    the canonical edge-set image of a uniform permutation is uniform.
    """

    def __init__(self, n: int):
        if n < 3:
            raise ParameterError(f"need n >= 3, got {n}")
        self.n = n
        self.name = f"hamcycle(n={n})"

    def ground_contains(self, el) -> bool:
        e = tuple(el)
        return (
            len(e) == 2
            and e[0] != e[1]
            and e == tuple(sorted(e))
            and 1 <= e[0]
            and e[1] <= self.n
        )

    def support_size(self) -> int:
        out = 1
        for i in range(2, self.n):
            out *= i
        return out // 2

    def draw(self, stream: SeededStream) -> frozenset[Edge]:
        order = stream.shuffle(list(range(1, self.n + 1)))
        edges = []
        for i in range(self.n):
            a, b = order[i], order[(i + 1) % self.n]
            edges.append((a, b) if a < b else (b, a))
        return frozenset(edges)


class UniformMatchingSampler:
    """Exactly uniform perfect matchings via a count-and-descend DP.

    States are bitmasks of unmatched vertices; counts are exact integers.
    Construction fails on graphs without a perfect matching and when the
    memo table would exceed the budget.
    """

    def __init__(
        self,
        H: Hypergraph,
        partite: Sequence[Iterable[int]] | None = None,
        budget: int = 10**6,
    ):
        self.H = H
        self.n = H.n
        self.name = f"matching(n={H.n},k={H.k})"
        edges = H.sorted_edges()
        if partite is not None:
            parts = [frozenset(P) for P in partite]
            flat = [v for P in parts for v in P]
            if len(flat) != len(set(flat)):
                raise ParameterError("partite parts overlap")
            edges = [
                e for e in edges if all(len(set(e) & P) <= 1 for P in parts)
            ]
        self._edges = edges
        self._budget = budget
        self._by_vertex: dict[int, list[tuple[int, Edge]]] = {
            v: [] for v in range(1, H.n + 1)
        }
        for e in edges:
            emask = 0
            for v in e:
                emask |= 1 << (v - 1)
            for v in e:
                self._by_vertex[v].append((emask, e))
        self._memo: dict[int, int] = {0: 1}
        self._full = (1 << H.n) - 1
        if self._count(self._full) == 0:
            raise ParameterError("graph has no perfect matching")

    def _count(self, mask: int) -> int:
        memo = self._memo
        cached = memo.get(mask)
        if cached is not None:
            return cached
        if len(memo) > self._budget:
            raise BudgetExceededError(
                f"matching count table exceeded {self._budget} states"
            )
        v = (mask & -mask).bit_length()  # lowest unmatched vertex
        total = 0
        for emask, _ in self._by_vertex[v]:
            if emask & mask == emask:
                total += self._count(mask & ~emask)
        memo[mask] = total
        return total

    def count(self) -> int:
        return self._count(self._full)

    def ground_contains(self, el) -> bool:
        return tuple(el) in self.H.edges

    def edge_probability(self, e: Edge) -> Fraction:
        """Exact P[e in M] under the uniform distribution."""
        e = tuple(sorted(e))
        if e not in self.H.edges:
            raise ParameterError(f"{e} is not an edge")
        emask = 0
        for v in e:
            emask |= 1 << (v - 1)
        return Fraction(self._count(self._full & ~emask), self._count(self._full))

    def draw(self, stream: SeededStream) -> frozenset[Edge]:
        mask = self._full
        picked: list[Edge] = []
        while mask:
            v = (mask & -mask).bit_length()
            total = self._count(mask)
            x = stream.randbelow(total)
            for emask, e in self._by_vertex[v]:
                if emask & mask != emask:
                    continue
                c = self._count(mask & ~emask)
                if x < c:
                    picked.append(e)
                    mask &= ~emask
                    break
                x -= c
            else:  # pragma: no cover - count/descend mismatch is a bug
                raise AssertionError("descent outran the count table")
        return frozenset(picked)


def count_perfect_matchings(
    H: Hypergraph,
    partite: Sequence[Iterable[int]] | None = None,
    budget: int = 10**6,
) -> int:
    """Exact number of perfect matchings (0 when none exists)."""
    try:
        sampler = UniformMatchingSampler(H, partite=partite, budget=budget)
    except ParameterError as exc:
        if "no perfect matching" in str(exc):
            return 0
        raise
    return sampler.count()


def sample_perfect_matching_uniform(
    H: Hypergraph,
    stream: SeededStream,
    partite: Sequence[Iterable[int]] | None = None,
    budget: int = 10**6,
) -> frozenset[Edge]:
    """One exactly uniform perfect matching of H."""
    return UniformMatchingSampler(H, partite=partite, budget=budget).draw(stream)


def sample_hamilton_cycle_uniform(n: int, stream: SeededStream) -> frozenset[Edge]:
    """One exactly uniform Hamilton cycle of K_n, as a 2-edge set."""
    return HamiltonCycleSampler(n).draw(stream)


# ---------------------------------------------------------------------------
# spread estimation


@dataclass(frozen=True)
class PerSizeStats:
    sets: int
    max_freq: float
    sum_freq: float


@dataclass(frozen=True)
class SpreadReport:
    trials: int
    q_hat: float
    per_size: dict[int, PerSizeStats]
    freqs: dict[tuple, float]
    strong: "StrongSpreadTable | None"
    generator: str = GENERATOR_ID


@dataclass(frozen=True)
class StrongSpreadTable:
    a: float
    set_size: int
    sums: dict[int, float]
    b_hat: float


def estimate_spread(
    sampler,
    test_sets: Sequence[Iterable],
    trials: int,
    stream: SeededStream,
    strong_a: float | None = None,
    strong_set: Iterable | None = None,
) -> SpreadReport:
    """Empirical spread of a sampler over explicit test sets.

    q_hat = max over nonempty I of freq(I subset of draw)^(1/|I|).  With
    ``strong_a`` and ``strong_set`` S, also tabulates, for each
    a|S| <= j <= |S|, the empirical sum of P[I subset of draw] over all
    j-subsets I of S, via the identity  sum_I 1[I in C] = binom(|S & C|, j).
    """
    canon: list[frozenset] = []
    for I in test_sets:
        I = frozenset(tuple(el) for el in I)
        for el in I:
            if not sampler.ground_contains(el):
                raise ParameterError(f"test element {el} outside sampler ground")
        canon.append(I)
    if trials < 1:
        raise ParameterError(f"need trials >= 1, got {trials}")
    strong_elems: frozenset | None = None
    if strong_a is not None:
        if strong_set is None:
            raise ParameterError("strong_a needs strong_set")
        if not 0.0 < strong_a <= 1.0:
            raise ParameterError(f"need 0 < a <= 1, got {strong_a}")
        strong_elems = frozenset(tuple(el) for el in strong_set)
        for el in strong_elems:
            if not sampler.ground_contains(el):
                raise ParameterError(f"strong-set element {el} outside ground")

    counts = [0] * len(canon)
    overlap_hist: dict[int, int] = {}
    for _ in range(trials):
        drawn = sampler.draw(stream)
        for i, I in enumerate(canon):
            if I <= drawn:
                counts[i] += 1
        if strong_elems is not None:
            x = len(strong_elems & drawn)
            overlap_hist[x] = overlap_hist.get(x, 0) + 1

    freqs: dict[tuple, float] = {}
    per_size_acc: dict[int, list[float]] = {}
    q_hat = 0.0
    for I, cnt in zip(canon, counts):
        f = cnt / trials
        freqs[tuple(sorted(I))] = f
        j = len(I)
        if j > 0:
            q_hat = max(q_hat, f ** (1.0 / j))
            per_size_acc.setdefault(j, []).append(f)
    per_size = {
        j: PerSizeStats(len(fs), max(fs), sum(fs))
        for j, fs in sorted(per_size_acc.items())
    }

    strong: StrongSpreadTable | None = None
    if strong_elems is not None:
        size = len(strong_elems)
        j_lo = max(1, ceil(strong_a * size))
        sums: dict[int, float] = {}
        b_hat = 0.0
        for j in range(j_lo, size + 1):
            total = sum(comb(x, j) * c for x, c in overlap_hist.items())
            s = total / trials
            sums[j] = s
            if q_hat > 0 and s > 0:
                b_hat = max(b_hat, s ** (1.0 / j) / q_hat)
        strong = StrongSpreadTable(strong_a, size, sums, b_hat)

    return SpreadReport(trials, q_hat, per_size, freqs, strong)


@dataclass(frozen=True)
class CensusReport:
    """Containment frequencies for every subset (up to a size) of the draws."""

    trials: int
    max_size: int
    counts: dict[tuple, int]
    per_size_max: dict[int, float]

    def frequency(self, I: Iterable) -> float:
        key = tuple(sorted(tuple(el) for el in I))
        return self.counts.get(key, 0) / self.trials

    def q_hat(self) -> float:
        out = 0.0
        for key, cnt in self.counts.items():
            out = max(out, (cnt / self.trials) ** (1.0 / len(key)))
        return out


def spread_census(
    sampler, max_size: int, trials: int, stream: SeededStream
) -> CensusReport:
    """Tally every <=max_size subset of each draw.

    Equivalent to estimate_spread over all possible test sets of size up to
    ``max_size``: any set never observed has frequency 0.  Cost per trial is
    sum_j binom(|draw|, j) rather than the number of test sets.
    """
    if max_size < 1:
        raise ParameterError(f"need max_size >= 1, got {max_size}")
    if trials < 1:
        raise ParameterError(f"need trials >= 1, got {trials}")
    counts: dict[tuple, int] = {}
    for _ in range(trials):
        drawn = sorted(sampler.draw(stream))
        for j in range(1, max_size + 1):
            for combo in itertools.combinations(drawn, j):
                counts[combo] = counts.get(combo, 0) + 1
    per_size_max: dict[int, float] = {}
    for key, cnt in counts.items():
        j = len(key)
        f = cnt / trials
        if f > per_size_max.get(j, 0.0):
            per_size_max[j] = f
    return CensusReport(trials, max_size, counts, per_size_max)


# ---------------------------------------------------------------------------
# correctness estimation


@dataclass(frozen=True)
class CorrectnessEntry:
    label: str
    v: int
    c: int
    freq: float
    k_entry: float | None


@dataclass(frozen=True)
class CorrectnessReport:
    trials: int
    n: int
    K_hat: float
    table: tuple[CorrectnessEntry, ...]
    generator: str = GENERATOR_ID


def estimate_correctness(
    chain_sampler,
    test_graphs: Sequence[Digraph],
    trials: int,
    stream: SeededStream,
) -> CorrectnessReport:
    """Empirical correctness constant of a chain sampler.

    For each test digraph I with v vertices (support) and c components,
    the entry is (freq * n^(v-c))^(1/v); K_hat is the maximum over entries
    with positive frequency.
    """
    if trials < 1:
        raise ParameterError(f"need trials >= 1, got {trials}")
    n = chain_sampler.n
    prepared = []
    for I in test_graphs:
        support = {v for e in I.edges for v in e}
        if not support:
            raise ParameterError("test graph without edges")
        c = len(components2(I))
        prepared.append((I.edges, len(support), c))
    counts = [0] * len(prepared)
    for _ in range(trials):
        drawn = chain_sampler.draw(stream)
        for i, (edges, _, _) in enumerate(prepared):
            if edges <= drawn:
                counts[i] += 1
    entries = []
    K_hat = 0.0
    for (edges, v, c), cnt in zip(prepared, counts):
        freq = cnt / trials
        k_entry = None
        if freq > 0:
            k_entry = (freq * float(n) ** (v - c)) ** (1.0 / v)
            K_hat = max(K_hat, k_entry)
        label = ";".join(",".join(map(str, e)) for e in sorted(edges))
        entries.append(CorrectnessEntry(label, v, c, freq, k_entry))
    return CorrectnessReport(trials, n, K_hat, tuple(entries))


# ---------------------------------------------------------------------------
# spread-to-matching transfer bound


@dataclass(frozen=True)
class SpreadMatchingReport:
    holds: bool
    margin: float
    p_hat: float
    bound: float
    c_prime: float
    v: int
    c: int
    trials: int
    generator: str = GENERATOR_ID


def verify_spread_matching_bound(
    H: Hypergraph,
    I: Hypergraph,
    C_param: float | None = None,
    trials: int = 5000,
    stream: SeededStream | None = None,
) -> SpreadMatchingReport:
    """Check P[I in shadow2(M)] <= (2C)^v * n^(c-v) for uniform matchings M.

    C defaults to the exact singleton spread constant of the sampler:
    max_e P[e in M] * n^(s-1).  The containment probability is estimated
    over ``trials`` draws; the check allows 3 sigma of statistical error
    and the margin reported is bound - p_hat.
    """
    if stream is None:
        raise ParameterError("a stream is required")
    if I.k != 2:
        raise ParameterError(f"I must be a 2-graph, got k={I.k}")
    sampler = UniformMatchingSampler(H)
    n, s = H.n, H.k
    support = {v for e in I.edges for v in e}
    v = len(support)
    c = len(components2(I))
    if not I.edges:
        raise ParameterError("I needs at least one edge")
    if c > n / 2:
        raise ParameterError(f"need c <= n/2, got c={c}, n={n}")
    if C_param is None:
        c_prime = max(
            float(sampler.edge_probability(e)) * float(n) ** (s - 1)
            for e in H.sorted_edges()
        )
    else:
        c_prime = float(C_param)
    hits = 0
    for _ in range(trials):
        M = sampler.draw(stream)
        shadow = {
            pair for e in M for pair in itertools.combinations(sorted(e), 2)
        }
        if all(e in shadow for e in I.edges):
            hits += 1
    p_hat = hits / trials
    bound = (2.0 * c_prime) ** v * float(n) ** (c - v)
    sigma = sqrt(max(p_hat * (1.0 - p_hat), 1.0 / trials) / trials)
    holds = p_hat <= bound + 3.0 * sigma
    return SpreadMatchingReport(
        holds, bound - p_hat, p_hat, bound, c_prime, v, c, trials
    )
