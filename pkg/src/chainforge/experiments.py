"""Threshold sweeps, inheritance experiments, stress runs, CSV persistence.

A sweep fixes a host family and a guest link, then for each (n, p) grid
point repeatedly sparsifies the host and runs the exact chain search.
Undirected hosts use the edge model (keep each k-set, then orient);
directed hosts from files use the tuple model.  Per-trial randomness is
keyed by (row index, trial index), so reruns with the same config and seed
reproduce results, and the CSV they persist to, byte for byte.

The elapsed_ms column is a determinism-preserving proxy: total search
nodes across the row's trials divided by 1000, not wall-clock time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from .errors import ParameterError, SchemaError
from .hypercore import (
    Digraph,
    Hypergraph,
    complete_hypergraph,
    induced_hypergraph,
    orient_all,
    parse_graph,
)
from .linkchain import Link, parse_link_spec
from .hamilton import UNKNOWN, Predicate, find_hamilton_chain
from .randomness import (
    CorrectnessReport,
    SeededStream,
    estimate_correctness,
    sparsify,
    wilson_interval,
)
from .constructor import (
    ConstructionSampler,
    PredicateCache,
    construct_chain,
    construction_record,
    replay_construction,
)
from .errors import BudgetExceededError, ConstructionInfeasibleError

CSV_HEADER = "n,k,ell,r,p,trials,successes,unknowns,p_hat,wilson_low,wilson_high,seed,elapsed_ms"

HOST_FAMILIES = ("complete", "dirac_extremal", "uniformly_dense_random", "from_file")


@dataclass(frozen=True)
class SweepConfig:
    """Grid description for a threshold sweep."""

    host: str
    host_file: str | None
    mu: float
    ns: tuple[int, ...]
    link: str
    ps: tuple[float, ...]
    trials: int
    budget: int
    seed: int | None


@dataclass(frozen=True)
class SweepRow:
    n: int
    k: int
    ell: int
    r: int
    p: float
    trials: int
    successes: int
    unknowns: int
    p_hat: float
    wilson_low: float
    wilson_high: float
    seed: int
    elapsed_ms: int


_CONFIG_KEYS = (
    "host",
    "host_file",
    "mu",
    "n",
    "link",
    "p",
    "trials",
    "budget",
    "seed",
)


def parse_sweep_config(text: str) -> SweepConfig:
    """Flat ``key = value`` format; '#' starts a comment; unknown keys error."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        if not sep:
            raise SchemaError(f"line {lineno}: expected key = value, got {line!r}")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise SchemaError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise SchemaError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise SchemaError(f"line {lineno}: empty value for {key!r}")
        raw[key] = value

    for req in ("n", "link", "p"):
        if req not in raw:
            raise SchemaError(f"missing required key {req!r}")
    try:
        ns = tuple(int(x) for x in raw["n"].split(","))
        ps = tuple(float(x) for x in raw["p"].split(","))
        trials = int(raw.get("trials", "50"))
        budget = int(raw.get("budget", str(10**6)))
        mu = float(raw.get("mu", "0"))
        seed = int(raw["seed"]) if "seed" in raw else None
    except ValueError as exc:
        raise SchemaError(f"malformed numeric value: {exc}")
    host = raw.get("host", "complete")
    if host not in HOST_FAMILIES:
        raise SchemaError(f"unknown host family {host!r}; know {HOST_FAMILIES}")
    if host == "from_file" and "host_file" not in raw:
        raise SchemaError("host_file is required when host = from_file")
    if host == "uniformly_dense_random" and not 0 < mu <= 1:
        raise SchemaError("uniformly_dense_random needs mu in (0, 1]")
    if not all(0.0 <= p <= 1.0 for p in ps):
        raise SchemaError("p values must lie in [0, 1]")
    if trials < 1:
        raise SchemaError("trials must be >= 1")
    if not 0.0 <= mu <= 1.0:
        raise SchemaError("mu must lie in [0, 1]")
    if any(n < 1 for n in ns):
        raise SchemaError("n values must be positive")
    parse_link_spec(raw["link"])  # fail fast on a bad guest spec
    return SweepConfig(
        host, raw.get("host_file"), mu, ns, raw["link"], ps, trials, budget, seed
    )


def load_sweep_config(path: str) -> SweepConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_sweep_config(fh.read())


# ---------------------------------------------------------------------------
# host sampling


def dirac_extremal_core(n: int, k: int) -> Hypergraph:
    """k-sets meeting {1..floor(n/2)} in an odd number of vertices.

    The classical space barrier for codegree-1/2 Hamiltonicity, at finite n.
    """
    half = set(range(1, n // 2 + 1))
    edges = frozenset(
        e
        for e in combinations(range(1, n + 1), k)
        if len(half.intersection(e)) % 2 == 1
    )
    return Hypergraph(n, k, edges)


_BASE_CACHE: dict[tuple, Hypergraph] = {}


def _trial_host(cfg: SweepConfig, n: int, L: Link, p: float, stream: SeededStream):
    """One sparsified host draw; undirected families orient after keeping."""
    if cfg.host == "from_file":
        key = ("file", cfg.host_file)
        base = _BASE_CACHE.get(key)
        if base is None:
            base = _BASE_CACHE[key] = parse_graph(open(cfg.host_file).read())
        if isinstance(base, Digraph):
            return sparsify(base, p, stream)
        return orient_all(sparsify(base, p, stream))
    if cfg.host == "complete":
        key = ("complete", n, L.k)
        base = _BASE_CACHE.get(key)
        if base is None:
            base = _BASE_CACHE[key] = complete_hypergraph(n, L.k)
        return orient_all(sparsify(base, p, stream))
    if cfg.host == "dirac_extremal":
        key = ("dirac", n, L.k)
        core = _BASE_CACHE.get(key)
        if core is None:
            core = _BASE_CACHE[key] = dirac_extremal_core(n, L.k)
        extras = frozenset(
            e
            for e in combinations(range(1, n + 1), L.k)
            if e not in core.edges and stream.bernoulli(cfg.mu)
        )
        host = Hypergraph(n, L.k, core.edges | extras)
        return orient_all(sparsify(host, p, stream))
    if cfg.host == "uniformly_dense_random":
        key = ("complete", n, L.k)
        base = _BASE_CACHE.get(key)
        if base is None:
            base = _BASE_CACHE[key] = complete_hypergraph(n, L.k)
        host = sparsify(base, cfg.mu, stream)
        return orient_all(sparsify(host, p, stream))
    raise ParameterError(f"unknown host family {cfg.host!r}")


def run_threshold_sweep(cfg: SweepConfig) -> list[SweepRow]:
    """Grid-order rows; per-trial stream id is row_index * trials + trial."""
    if cfg.seed is None:
        raise ParameterError("sweep config has no seed")
    L = parse_link_spec(cfg.link)
    for n in cfg.ns:
        if n % L.r != 0 or n < 2 * (L.r + L.ell):
            raise ParameterError(
                f"closed chains need r | n and n >= 2(r + ell); n={n} fails"
            )
    rows: list[SweepRow] = []
    for ni, n in enumerate(cfg.ns):
        for pi, p in enumerate(cfg.ps):
            row_index = ni * len(cfg.ps) + pi
            successes = unknowns = 0
            total_nodes = 0
            for t in range(cfg.trials):
                stream = SeededStream(cfg.seed, row_index * cfg.trials + t)
                D = _trial_host(cfg, n, L, p, stream)
                res = find_hamilton_chain(D, L, closed=True, budget=cfg.budget)
                total_nodes += res.nodes
                if res.status == "found":
                    successes += 1
                elif res.status == "unknown":
                    unknowns += 1
            effective = cfg.trials - unknowns
            p_hat = successes / effective if effective else 0.0
            low, high = wilson_interval(successes, effective)
            rows.append(
                SweepRow(
                    n,
                    L.k,
                    L.ell,
                    L.r,
                    p,
                    cfg.trials,
                    successes,
                    unknowns,
                    p_hat,
                    low,
                    high,
                    cfg.seed,
                    total_nodes // 1000,
                )
            )
    return rows


def estimate_crossing(rows: Sequence[SweepRow], n: int) -> float | None:
    """Linear interpolation of the first upward 0.5-crossing of p_hat."""
    pts = sorted((row.p, row.p_hat) for row in rows if row.n == n)
    if pts and pts[0][1] >= 0.5:
        return pts[0][0]
    for (p0, y0), (p1, y1) in zip(pts, pts[1:]):
        if y0 < 0.5 <= y1:
            return p0 + (0.5 - y0) * (p1 - p0) / (y1 - y0)
    return None


# ---------------------------------------------------------------------------
# CSV persistence

_INT_COLS = {"n", "k", "ell", "r", "trials", "successes", "unknowns", "seed", "elapsed_ms"}


def write_csv(rows: Sequence[SweepRow], path: str) -> None:
    """Fixed header; floats via repr so that reading back is bit-exact."""
    names = CSV_HEADER.split(",")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            vals = []
            for name in names:
                v = getattr(row, name)
                vals.append(str(v) if name in _INT_COLS else repr(float(v)))
            fh.write(",".join(vals) + "\n")


def read_csv(path: str) -> list[SweepRow]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise SchemaError(
            f"bad CSV header: expected {CSV_HEADER!r}, got {lines[0] if lines else ''!r}"
        )
    names = CSV_HEADER.split(",")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(names):
            raise SchemaError(f"line {lineno}: expected {len(names)} columns")
        try:
            kwargs = {
                name: (int(part) if name in _INT_COLS else float(part))
                for name, part in zip(names, parts)
            }
        except ValueError as exc:
            raise SchemaError(f"line {lineno}: {exc}")
        rows.append(SweepRow(**kwargs))
    return rows


# ---------------------------------------------------------------------------
# minimum-degree inheritance


@dataclass(frozen=True)
class InheritanceReport:
    """Fraction of random q-anchored s-sets keeping a predicate.

    Compared against 1 - exp(-sqrt(s)) and 1 - s^-2, the two guarantee
    shapes used for degree inheritance.
    """

    n: int
    s: int
    q: int
    trials: int
    hits: int
    unknowns: int
    fraction: float
    bound_sqrt: float
    bound_poly: float
    meets_sqrt: bool
    meets_poly: bool
    predicate_id: str


def run_inheritance_experiment(
    G: Hypergraph,
    predicate: Predicate,
    s: int,
    q: int,
    trials: int,
    stream: SeededStream,
) -> InheritanceReport:
    """Sample s-sets through random q-anchors and test the induced graphs."""
    if not 0 <= q <= s <= G.n:
        raise ParameterError(f"need 0 <= q <= s <= n, got q={q}, s={s}, n={G.n}")
    if trials < 1:
        raise ParameterError(f"need trials >= 1, got {trials}")
    verts = list(range(1, G.n + 1))
    hits = unknowns = 0
    for _ in range(trials):
        anchor = stream.sample(verts, q)
        rest = [v for v in verts if v not in set(anchor)]
        S = sorted(anchor + stream.sample(rest, s - q))
        outcome = predicate.fn(induced_hypergraph(G, S))
        if outcome is UNKNOWN:
            unknowns += 1
        elif outcome:
            hits += 1
    fraction = hits / trials
    bound_sqrt = 1.0 - math.exp(-math.sqrt(s))
    bound_poly = 1.0 - 1.0 / (s * s)
    return InheritanceReport(
        G.n,
        s,
        q,
        trials,
        hits,
        unknowns,
        fraction,
        bound_sqrt,
        bound_poly,
        fraction >= bound_sqrt,
        fraction >= bound_poly,
        predicate.pid,
    )


# ---------------------------------------------------------------------------
# constructor stress


def correctness_battery(n: int, k: int) -> list[Digraph]:
    """Small test digraphs: one edge, a tight pair, two disjoint edges."""
    if n < k:
        raise ParameterError(f"battery needs n >= k, got n={n}, k={k}")
    first = tuple(range(1, k + 1))
    tests = [Digraph(n, frozenset({first}))]
    if n >= k + 1:
        tests.append(Digraph(n, frozenset({first, tuple(range(2, k + 2))})))
    if n >= 2 * k:
        tests.append(Digraph(n, frozenset({first, tuple(range(k + 1, 2 * k + 1))})))
    return tests


@dataclass(frozen=True)
class StressConfig:
    s1: int
    runs: int
    seed: int
    correctness_trials: int = 0
    search_budget: int = 10**6
    retries: int = 20
    margin_samples: int = 12
    exhaustive_budget: int = 128


@dataclass(frozen=True)
class StressReport:
    runs: int
    successes: int
    infeasible: int
    budget_exceeded: int
    validation_passes: int
    success_rate: float
    correctness: CorrectnessReport | None


def run_constructor_stress(D: Digraph, L: Link, cfg: StressConfig) -> StressReport:
    """Repeated constructions with independent streams; replay each success.

    Every returned chain must replay-validate; the correctness battery runs
    afterwards on the shared predicate cache when requested, and needs a
    host on which construction reliably succeeds.
    """
    cache = PredicateCache(D, L, cfg.search_budget)
    successes = infeasible = budget_exceeded = validation_passes = 0
    for i in range(cfg.runs):
        stream = SeededStream(cfg.seed, i)
        try:
            result = construct_chain(
                D,
                L,
                cfg.s1,
                stream,
                retries=cfg.retries,
                cache=cache,
                search_budget=cfg.search_budget,
                margin_samples=cfg.margin_samples,
                exhaustive_budget=cfg.exhaustive_budget,
            )
        except ConstructionInfeasibleError:
            infeasible += 1
            continue
        except BudgetExceededError:
            budget_exceeded += 1
            continue
        successes += 1
        ok, _ = replay_construction(D, construction_record(result))
        if ok:
            validation_passes += 1
    correctness = None
    if cfg.correctness_trials > 0:
        sampler = ConstructionSampler(
            D,
            L,
            cfg.s1,
            cache=cache,
            retries=cfg.retries,
            search_budget=cfg.search_budget,
            margin_samples=cfg.margin_samples,
            exhaustive_budget=cfg.exhaustive_budget,
        )
        correctness = estimate_correctness(
            sampler,
            correctness_battery(D.n, L.k),
            cfg.correctness_trials,
            SeededStream(cfg.seed, 10**9),
        )
    return StressReport(
        cfg.runs,
        successes,
        infeasible,
        budget_exceeded,
        validation_passes,
        successes / cfg.runs if cfg.runs else 0.0,
        correctness,
    )
