"""Command-line entry point: check, propgraph, construct, sweep, spread.

Thin adapters over the library: parse arguments, load inputs, dispatch,
and print one JSON record per result line.  Exit codes: 0 when the asked
property holds (or the run succeeded), 1 when it fails, 2 on usage or
input errors, 3 when a construction is infeasible or a budget ran out.

Randomized subcommands take --seed, fall back to the CHAINFORGE_SEED
environment variable, and otherwise generate a seed and print it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from fractions import Fraction
from math import comb

from .errors import (
    BudgetExceededError,
    ConstructionInfeasibleError,
    GraphParseError,
    ParameterError,
    SchemaError,
)
from .hypercore import (
    Digraph,
    Hypergraph,
    check_degree_sequence,
    complete_hypergraph,
    degree_min,
    digraph_union,
    is_uniformly_dense,
    l_shadow,
    orient_all,
    parse_graph,
)
from .linkchain import check_balanced, parse_link_spec
from .hamilton import (
    framework_report,
    predicate_hamilton_connected,
    predicate_has_perfect_matching,
    predicate_min_degree,
    predicate_strongly_hamilton_connected,
    property_graph,
    property_graph_min_degree,
)
from .randomness import (
    HamiltonCycleSampler,
    SeededStream,
    UniformMatchingSampler,
    spread_census,
    wilson_interval,
)
from .constructor import construct_chain, construction_record, replay_construction
from .constructor import ConstructionSampler
from .experiments import (
    SweepRow,
    load_sweep_config,
    run_threshold_sweep,
    write_csv,
)

EXIT_HOLDS = 0
EXIT_FAILS = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3


def _emit(record: dict) -> None:
    print(json.dumps(record, sort_keys=True))


def _load(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())


def _require_hypergraph(G, what: str) -> Hypergraph:
    if not isinstance(G, Hypergraph):
        raise ParameterError(f"{what} needs an undirected graph file")
    return G


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("CHAINFORGE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ParameterError(f"CHAINFORGE_SEED={env!r} is not an integer")
    seed = int.from_bytes(os.urandom(4), "big")
    _emit({"generated_seed": seed})
    return seed


def _construct_host(G, ell: int) -> Digraph:
    """Directed hosts pass through; undirected ones get all orientations.

    For ell >= 1 the ell-edges come from orienting the ell-shadow, so every
    ell-set inside some edge is available as an endpoint tuple.
    """
    if isinstance(G, Digraph):
        return G
    D = orient_all(G)
    if ell > 0:
        D = digraph_union(D, orient_all(l_shadow(G, ell)))
    return D


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(args) -> int:
    G = _load(args.graph)
    outcomes: list[bool] = []
    selected = False

    if args.deg is not None:
        selected = True
        H = _require_hypergraph(G, "--deg")
        value = degree_min(H, args.deg)
        rec = {"check": "deg", "d": args.deg, "delta": value}
        if args.min is not None:
            bound = Fraction(args.min) * comb(H.n - args.deg, H.k - args.deg)
            ok = value >= bound
            rec["bound"] = float(bound)
            rec["ok"] = ok
            outcomes.append(ok)
        _emit(rec)

    if args.balance is not None:
        selected = True
        spec, n_str, d_str, lam_str = args.balance
        L = parse_link_spec(spec)
        rep = check_balanced(L, int(n_str), Fraction(d_str), Fraction(lam_str))
        rec = {
            "check": "balance",
            "link": spec,
            "n": rep.n,
            "d": str(rep.d),
            "lambda": str(rep.lam),
            "chain_edges": rep.chain_edges,
            "subsets_checked": rep.subsets_checked,
            "ok": rep.ok,
        }
        if rep.witness is not None:
            rec["witness"] = {
                "condition": rep.witness.condition,
                "edges": [list(e) for e in rep.witness.edges],
                "v": rep.witness.v,
                "e": rep.witness.e,
            }
        _emit(rec)
        outcomes.append(rep.ok)

    if args.uniform_dense is not None:
        selected = True
        H = _require_hypergraph(G, "--uniform-dense")
        eps_str, d_str = args.uniform_dense
        if args.sample:
            stream = SeededStream(_resolve_seed(args), 0)
            ok, wit = is_uniformly_dense(
                H, Fraction(eps_str), Fraction(d_str),
                mode="sampled", samples=args.sample, stream=stream,
            )
        else:
            ok, wit = is_uniformly_dense(H, Fraction(eps_str), Fraction(d_str))
        rec = {"check": "uniform_dense", "eps": eps_str, "d": d_str, "ok": ok}
        if wit is not None:
            rec["witness"] = {
                "parts": [list(p) for p in wit.parts],
                "crossing": wit.crossing_edges,
                "required": float(wit.required),
            }
        _emit(rec)
        outcomes.append(ok)

    if args.framework:
        selected = True
        H = _require_hypergraph(G, "--framework")
        rep = framework_report(H, budget=args.budget)
        _emit(
            {
                "check": "framework",
                "tight_component": rep.f1_tight_component,
                "fractional_matching": rep.f2_fractional_matching,
                "aperiodic": rep.f3_aperiodic,
                "optimum": str(rep.fractional.optimum),
                "all_hold": rep.all_hold,
            }
        )
        outcomes.append(rep.all_hold)

    if args.degseq is not None:
        selected = True
        H = _require_hypergraph(G, "--degseq")
        t_str, mu_str = args.degseq
        ok, idx = check_degree_sequence(H, int(t_str), Fraction(mu_str))
        _emit({"check": "degseq", "t": int(t_str), "mu": mu_str, "ok": ok,
               "failing_index": idx})
        outcomes.append(ok)

    if not selected:
        raise ParameterError(
            "no check selected; use --deg/--balance/--uniform-dense/--framework/--degseq"
        )
    return EXIT_HOLDS if all(outcomes) else EXIT_FAILS


def _parse_predicate(spec: str, budget: int):
    name, _, rest = spec.partition("=")
    if name == "perfect_matching":
        return predicate_has_perfect_matching(budget=budget)
    if name == "hamilton_connected":
        return predicate_hamilton_connected(parse_link_spec(rest), budget=budget)
    if name == "strongly_hamilton_connected":
        return predicate_strongly_hamilton_connected(int(rest), budget=budget)
    if name == "min_degree":
        d_str, _, delta_str = rest.partition(",")
        return predicate_min_degree(int(d_str), Fraction(delta_str))
    raise ParameterError(f"unknown predicate {spec!r}")


def cmd_propgraph(args) -> int:
    G = _load(args.graph)
    _require_hypergraph(G, "propgraph")
    predicate = _parse_predicate(args.pred, args.budget)
    base = G
    if args.pred.startswith("hamilton_connected="):
        # chain connectivity tests run on directed hosts
        L = parse_link_spec(args.pred.partition("=")[2])
        base = _construct_host(G, L.ell)
    if args.sample:
        stream = SeededStream(_resolve_seed(args), 0)
        P = property_graph(
            base, predicate, args.s,
            mode="sampled", samples=args.sample, stream=stream,
            degree_probe_q=args.q,
        )
        rec = {
            "command": "propgraph",
            "predicate": P.predicate_id,
            "n": P.n,
            "s": P.s,
            "q": args.q,
            "mode": P.mode,
            "edge_fraction": P.edge_fraction,
            "unknown_sets": P.unknown_sets,
            "degree_probes": [
                {"q_set": list(e), "fraction": f} for e, f in P.degree_probes
            ],
            "poly_bound": 1.0 - 1.0 / (args.s * args.s),
        }
        _emit(rec)
        return EXIT_HOLDS
    P = property_graph(base, predicate, args.s, budget=args.budget)
    delta, ratio = property_graph_min_degree(P, args.q)
    poly = 1.0 - 1.0 / (args.s * args.s)
    _emit(
        {
            "command": "propgraph",
            "predicate": P.predicate_id,
            "n": P.n,
            "s": P.s,
            "q": args.q,
            "mode": P.mode,
            "edges": len(P.edges),
            "edge_fraction": P.edge_fraction,
            "unknown_sets": P.unknown_sets,
            "delta_q": delta,
            "ratio": float(ratio),
            "poly_bound": poly,
            "meets_poly": float(ratio) >= poly,
        }
    )
    return EXIT_HOLDS


def cmd_construct(args) -> int:
    G = _load(args.graph)
    L = parse_link_spec(args.link)
    D = _construct_host(G, L.ell)
    if args.replay:
        with open(args.replay, "r", encoding="utf-8") as fh:
            record = json.load(fh)
        ok, problems = replay_construction(D, record)
        _emit({"replay": args.replay, "ok": ok, "problems": problems})
        return EXIT_HOLDS if ok else EXIT_FAILS
    seed = _resolve_seed(args)
    result = construct_chain(
        D, L, args.s1, SeededStream(seed, 0),
        retries=args.retries, search_budget=args.budget,
    )
    record = construction_record(result)
    record["seed"] = seed
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(record, fh, sort_keys=True, indent=1)
            fh.write("\n")
        _emit(
            {
                "command": "construct",
                "out": args.out,
                "seed": seed,
                "n": result.plan.n,
                "edges": len(result.chain.edges),
                "desk_scale_deviation": result.desk_scale_deviation,
                "margins": result.witness.margins,
            }
        )
    else:
        _emit(record)
    return EXIT_HOLDS


def cmd_sweep(args) -> int:
    cfg = load_sweep_config(args.config)
    if cfg.seed is None:
        cfg = replace(cfg, seed=_resolve_seed(args))
    rows = run_threshold_sweep(cfg)
    write_csv(rows, args.out)
    _emit({"command": "sweep", "rows": len(rows), "out": args.out, "seed": cfg.seed})
    return EXIT_HOLDS


def _parse_sampler(spec: str, budget: int):
    kind, _, rest = spec.partition(":")
    if kind == "hamilton_cycle":
        return HamiltonCycleSampler(int(rest)), 2
    if kind == "matching":
        n_str, _, k_str = rest.partition(",")
        n, k = int(n_str), int(k_str)
        return UniformMatchingSampler(complete_hypergraph(n, k), budget=budget), k
    if kind == "construct":
        parts = rest.split(";")
        if len(parts) != 3:
            raise ParameterError(
                "construct sampler spec is construct:FILE;LINK;S1"
            )
        path, link_spec, s1_str = parts
        L = parse_link_spec(link_spec)
        D = _construct_host(_load(path), L.ell)
        return ConstructionSampler(D, L, int(s1_str), search_budget=budget), L.k
    raise ParameterError(f"unknown sampler {spec!r}")


def cmd_spread(args) -> int:
    sampler, k = _parse_sampler(args.sampler, args.budget)
    seed = _resolve_seed(args)
    census = spread_census(sampler, args.sizes, args.trials, SeededStream(seed, 0))
    rows = []
    for j in range(1, args.sizes + 1):
        best = 0
        for key, cnt in census.counts.items():
            if len(key) == j and cnt > best:
                best = cnt
        low, high = wilson_interval(best, args.trials)
        rows.append(
            SweepRow(
                sampler.n, k, 0, 0, float(j), args.trials, best, 0,
                best / args.trials, low, high, seed, 0,
            )
        )
    write_csv(rows, args.out)
    _emit(
        {
            "command": "spread",
            "sampler": args.sampler,
            "trials": args.trials,
            "q_hat": census.q_hat(),
            "per_size_max": {str(j): v for j, v in census.per_size_max.items()},
            "out": args.out,
            "seed": seed,
        }
    )
    return EXIT_HOLDS


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--budget", type=int, default=10**6)
    common.add_argument("--threads", type=int, default=1,
                        help="parallelism cap (sequential execution)")

    parser = argparse.ArgumentParser(
        prog="chainforge",
        description="Desk-scale experiments on robust Hamiltonicity in hypergraphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="structural checks")
    p.add_argument("graph")
    p.add_argument("--deg", type=int, metavar="D")
    p.add_argument("--min", metavar="DELTA")
    p.add_argument("--balance", nargs=4, metavar=("LINK", "N", "D", "LAMBDA"))
    p.add_argument("--uniform-dense", nargs=2, dest="uniform_dense",
                   metavar=("EPS", "D"))
    p.add_argument("--framework", action="store_true")
    p.add_argument("--degseq", nargs=2, metavar=("T", "MU"))
    p.add_argument("--sample", type=int, metavar="N")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("propgraph", parents=[common], help="property-graph degrees")
    p.add_argument("graph")
    p.add_argument("--pred", required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--sample", type=int, metavar="N")
    p.set_defaults(fn=cmd_propgraph)

    p = sub.add_parser("construct", parents=[common], help="randomized chain build")
    p.add_argument("graph")
    p.add_argument("--link", required=True)
    p.add_argument("--s1", type=int)
    p.add_argument("--retries", type=int, default=20)
    p.add_argument("--out")
    p.add_argument("--replay", metavar="FILE")
    p.set_defaults(fn=cmd_construct)

    p = sub.add_parser("sweep", parents=[common], help="threshold sweep to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("spread", parents=[common], help="spread census to CSV")
    p.add_argument("--sampler", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--sizes", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_spread)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.command == "construct" and not args.replay and args.s1 is None:
        print(json.dumps({"error": "--s1 is required unless --replay is given"}),
              file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except (ConstructionInfeasibleError, BudgetExceededError) as exc:
        print(json.dumps({"error": str(exc), "kind": type(exc).__name__}),
              file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ParameterError, SchemaError, GraphParseError, OSError, ValueError) as exc:
        print(json.dumps({"error": str(exc), "kind": type(exc).__name__}),
              file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
