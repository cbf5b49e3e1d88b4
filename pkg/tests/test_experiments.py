"""Sweep configs, threshold sweeps, CSV persistence, inheritance, stress."""

from fractions import Fraction
from itertools import combinations
from math import comb

import pytest

from chainforge import (
    Digraph,
    Hypergraph,
    ParameterError,
    SchemaError,
    SeededStream,
    StressConfig,
    SweepRow,
    complete_kl_digraph,
    correctness_battery,
    dirac_extremal_core,
    ell_cycle_link,
    estimate_crossing,
    load_sweep_config,
    orient_all,
    parse_sweep_config,
    predicate_has_perfect_matching,
    predicate_min_degree,
    predicate_strongly_hamilton_connected,
    read_csv,
    run_constructor_stress,
    run_inheritance_experiment,
    run_threshold_sweep,
    serialize_graph,
    write_csv,
)
from chainforge import complete_hypergraph


def cycle_graph(n):
    edges = frozenset(
        tuple(sorted((i, i % n + 1))) for i in range(1, n + 1)
    )
    return Hypergraph(n, 2, edges)


BASIC = "n = 6\nlink = ell_cycle:2,1\np = 0.0,1.0\ntrials = 4\nseed = 1\n"


class TestParseSweepConfig:
    def test_defaults(self):
        cfg = parse_sweep_config("n = 6\nlink = matching:2\np = 0.5")
        assert cfg.host == "complete"
        assert cfg.host_file is None
        assert cfg.ns == (6,) and cfg.ps == (0.5,)
        assert cfg.trials == 50 and cfg.budget == 10**6
        assert cfg.mu == 0.0 and cfg.seed is None

    def test_full_config_with_comments(self):
        text = (
            "# sweep over two sizes\n"
            "host = dirac_extremal\n"
            "mu = 0.25   # extra edge rate\n"
            "n = 8, 10\n"
            "link = ell_cycle:2,1\n"
            "p = 0.1,0.5,0.9\n"
            "trials = 7\n"
            "budget = 5000\n"
            "seed = 42\n"
        )
        cfg = parse_sweep_config(text)
        assert cfg.host == "dirac_extremal" and cfg.mu == 0.25
        assert cfg.ns == (8, 10) and cfg.ps == (0.1, 0.5, 0.9)
        assert cfg.trials == 7 and cfg.budget == 5000 and cfg.seed == 42

    def test_line_numbered_errors(self):
        with pytest.raises(SchemaError, match="line 2: unknown key"):
            parse_sweep_config("n = 6\nfoo = 1\nlink = matching:2\np = 1")
        with pytest.raises(SchemaError, match="line 2: duplicate key"):
            parse_sweep_config("n = 6\nn = 8\nlink = matching:2")
        with pytest.raises(SchemaError, match="line 1: expected key = value"):
            parse_sweep_config("just words\n")
        with pytest.raises(SchemaError, match="line 1: empty value"):
            parse_sweep_config("n =\nlink = matching:2\np = 1")

    def test_required_keys(self):
        with pytest.raises(SchemaError, match="missing required key 'link'"):
            parse_sweep_config("n = 6\np = 0.5")

    def test_value_validation(self):
        with pytest.raises(SchemaError, match="malformed numeric"):
            parse_sweep_config("n = six\nlink = matching:2\np = 0.5")
        with pytest.raises(SchemaError, match="unknown host family"):
            parse_sweep_config("host = torus\nn = 6\nlink = matching:2\np = 0.5")
        with pytest.raises(SchemaError, match="host_file is required"):
            parse_sweep_config("host = from_file\nn = 6\nlink = matching:2\np = 0.5")
        with pytest.raises(SchemaError, match="mu in \\(0, 1\\]"):
            parse_sweep_config(
                "host = uniformly_dense_random\nn = 6\nlink = matching:2\np = 0.5"
            )
        with pytest.raises(SchemaError, match="p values"):
            parse_sweep_config("n = 6\nlink = matching:2\np = 1.5")
        with pytest.raises(SchemaError, match="trials"):
            parse_sweep_config("n = 6\nlink = matching:2\np = 0.5\ntrials = 0")
        with pytest.raises(SchemaError, match="must be positive"):
            parse_sweep_config("n = 0\nlink = matching:2\np = 0.5")
        with pytest.raises(ParameterError):
            parse_sweep_config("n = 6\nlink = nonsense\np = 0.5")

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "sweep.cfg"
        path.write_text(BASIC)
        cfg = load_sweep_config(str(path))
        assert cfg.ns == (6,) and cfg.seed == 1


class TestDiracCore:
    def test_pair_core_is_bipartite_complete(self):
        core = dirac_extremal_core(6, 2)
        assert len(core.edges) == 9
        half = {1, 2, 3}
        for e in core.edges:
            assert len(half & set(e)) == 1

    def test_triple_core_count(self):
        core = dirac_extremal_core(6, 3)
        assert len(core.edges) == comb(3, 1) * comb(3, 2) + comb(3, 3) == 10

    def test_odd_meet_characterizes_edges(self):
        core = dirac_extremal_core(7, 3)
        half = set(range(1, 4))
        for e in combinations(range(1, 8), 3):
            assert (e in core.edges) == (len(half & set(e)) % 2 == 1)


class TestThresholdSweep:
    def test_extreme_probabilities(self):
        rows = run_threshold_sweep(parse_sweep_config(BASIC))
        assert len(rows) == 2
        dead, full = rows
        assert dead.p == 0.0 and dead.successes == 0 and dead.p_hat == 0.0
        assert full.p == 1.0 and full.successes == 4 and full.p_hat == 1.0
        assert full.wilson_low < 1.0 <= full.wilson_high
        assert all(row.unknowns == 0 for row in rows)
        assert all(row.elapsed_ms >= 0 for row in rows)

    def test_rerun_is_identical(self):
        a = run_threshold_sweep(parse_sweep_config(BASIC))
        b = run_threshold_sweep(parse_sweep_config(BASIC))
        assert a == b

    def test_budget_starves_into_unknowns(self):
        cfg = parse_sweep_config(
            "n = 8\nlink = ell_cycle:2,1\np = 1.0\ntrials = 3\nbudget = 2\nseed = 5"
        )
        (row,) = run_threshold_sweep(cfg)
        assert row.unknowns == 3 and row.successes == 0
        assert row.p_hat == 0.0

    def test_seed_is_mandatory(self):
        cfg = parse_sweep_config("n = 6\nlink = ell_cycle:2,1\np = 0.5")
        with pytest.raises(ParameterError, match="seed"):
            run_threshold_sweep(cfg)

    def test_shape_constraints_on_n(self):
        cfg = parse_sweep_config(
            "n = 7\nlink = ell_cycle:3,1\np = 0.5\ntrials = 2\nseed = 0"
        )
        with pytest.raises(ParameterError, match="r \\| n"):
            run_threshold_sweep(cfg)

    def test_dirac_core_host(self):
        cfg = parse_sweep_config(
            "host = dirac_extremal\nn = 6\nlink = ell_cycle:2,1\n"
            "p = 1.0\ntrials = 3\nseed = 2"
        )
        (row,) = run_threshold_sweep(cfg)
        # the core contains complete bipartite cycles already
        assert row.p_hat == 1.0

    def test_uniformly_dense_host_at_full_rate(self):
        cfg = parse_sweep_config(
            "host = uniformly_dense_random\nmu = 1.0\nn = 6\n"
            "link = ell_cycle:2,1\np = 1.0\ntrials = 3\nseed = 3"
        )
        (row,) = run_threshold_sweep(cfg)
        assert row.p_hat == 1.0

    def test_from_file_host(self, tmp_path):
        host = tmp_path / "host.txt"
        host.write_text(serialize_graph(complete_kl_digraph(6, 2, 0)))
        cfg = parse_sweep_config(
            f"host = from_file\nhost_file = {host}\nn = 6\n"
            "link = ell_cycle:2,1\np = 1.0\ntrials = 2\nseed = 4"
        )
        (row,) = run_threshold_sweep(cfg)
        assert row.p_hat == 1.0


class TestCrossingEstimate:
    def row(self, n, p, p_hat):
        return SweepRow(n, 2, 1, 1, p, 10, 0, 0, p_hat, 0.0, 1.0, 0, 0)

    def test_interpolates(self):
        rows = [
            self.row(6, 0.2, 0.0),
            self.row(6, 0.4, 0.4),
            self.row(6, 0.6, 0.8),
        ]
        assert estimate_crossing(rows, 6) == pytest.approx(0.45)

    def test_already_above(self):
        rows = [self.row(6, 0.1, 0.7), self.row(6, 0.5, 0.9)]
        assert estimate_crossing(rows, 6) == 0.1

    def test_never_crosses(self):
        rows = [self.row(6, 0.2, 0.1), self.row(6, 0.8, 0.3)]
        assert estimate_crossing(rows, 6) is None

    def test_filters_by_n(self):
        rows = [
            self.row(6, 0.2, 1.0),
            self.row(8, 0.2, 0.0),
            self.row(8, 0.6, 1.0),
        ]
        assert estimate_crossing(rows, 8) == pytest.approx(0.4)
        assert estimate_crossing(rows, 6) == 0.2
        assert estimate_crossing(rows, 10) is None


class TestCsvPersistence:
    def test_round_trip_is_exact(self, tmp_path):
        rows = run_threshold_sweep(parse_sweep_config(BASIC))
        path = tmp_path / "rows.csv"
        write_csv(rows, str(path))
        assert read_csv(str(path)) == rows

    def test_rewrite_is_byte_identical(self, tmp_path):
        rows = run_threshold_sweep(parse_sweep_config(BASIC))
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(rows, str(p1))
        write_csv(run_threshold_sweep(parse_sweep_config(BASIC)), str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("n,k\n")
        with pytest.raises(SchemaError, match="bad CSV header"):
            read_csv(str(path))

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(SchemaError):
            read_csv(str(path))

    def test_header_only_is_no_rows(self, tmp_path):
        from chainforge import CSV_HEADER

        path = tmp_path / "header.csv"
        path.write_text(CSV_HEADER + "\n")
        assert read_csv(str(path)) == []

    def test_column_count_checked(self, tmp_path):
        from chainforge import CSV_HEADER

        path = tmp_path / "short.csv"
        path.write_text(CSV_HEADER + "\n1,2,3\n")
        with pytest.raises(SchemaError, match="line 2"):
            read_csv(str(path))

    def test_value_types_checked(self, tmp_path):
        from chainforge import CSV_HEADER

        path = tmp_path / "types.csv"
        cells = ["x"] + ["1"] * 12
        path.write_text(CSV_HEADER + "\n" + ",".join(cells) + "\n")
        with pytest.raises(SchemaError, match="line 2"):
            read_csv(str(path))


class TestInheritance:
    def test_complete_graph_keeps_degree(self):
        rep = run_inheritance_experiment(
            complete_hypergraph(10, 2),
            predicate_min_degree(1, Fraction(1, 2)),
            4,
            1,
            40,
            SeededStream(1, 0),
        )
        assert rep.fraction == 1.0
        assert rep.meets_sqrt and rep.meets_poly
        assert rep.hits == 40 and rep.unknowns == 0

    def test_edgeless_graph_never_inherits(self):
        rep = run_inheritance_experiment(
            Hypergraph(10, 2, frozenset()),
            predicate_has_perfect_matching(),
            4,
            0,
            20,
            SeededStream(2, 0),
        )
        assert rep.fraction == 0.0
        assert not rep.meets_sqrt and not rep.meets_poly

    def test_fraction_matches_exact_census(self):
        # induced 4-sets of the 6-cycle have a perfect matching in 9 of 15
        # cases, so the sampled fraction should sit near 0.6
        rep = run_inheritance_experiment(
            cycle_graph(6),
            predicate_has_perfect_matching(),
            4,
            1,
            400,
            SeededStream(3, 0),
        )
        assert abs(rep.fraction - 0.6) < 0.1

    def test_unknowns_are_separated(self):
        rep = run_inheritance_experiment(
            complete_hypergraph(7, 3),
            predicate_strongly_hamilton_connected(1, budget=1),
            5,
            1,
            10,
            SeededStream(4, 0),
        )
        assert rep.unknowns == 10 and rep.hits == 0

    def test_bound_shapes(self):
        rep = run_inheritance_experiment(
            complete_hypergraph(8, 2),
            predicate_min_degree(1, Fraction(1, 2)),
            4,
            0,
            5,
            SeededStream(5, 0),
        )
        assert rep.bound_sqrt == pytest.approx(0.8646647167633873)
        assert rep.bound_poly == pytest.approx(1 - 1 / 16)

    def test_validation(self):
        G = complete_hypergraph(6, 2)
        pred = predicate_has_perfect_matching()
        with pytest.raises(ParameterError):
            run_inheritance_experiment(G, pred, 4, 5, 10, SeededStream(0, 0))
        with pytest.raises(ParameterError):
            run_inheritance_experiment(G, pred, 4, 1, 0, SeededStream(0, 0))


class TestCorrectnessBattery:
    def test_full_battery(self):
        battery = correctness_battery(6, 2)
        assert [sorted(D.edges) for D in battery] == [
            [(1, 2)],
            [(1, 2), (2, 3)],
            [(1, 2), (3, 4)],
        ]

    def test_truncated_batteries(self):
        assert len(correctness_battery(3, 3)) == 1
        assert len(correctness_battery(4, 3)) == 2
        assert len(correctness_battery(6, 3)) == 3

    def test_needs_enough_vertices(self):
        with pytest.raises(ParameterError):
            correctness_battery(2, 3)


class TestConstructorStress:
    def test_complete_host_always_succeeds(self):
        D = complete_kl_digraph(12, 2, 1)
        rep = run_constructor_stress(
            D, ell_cycle_link(2, 1), StressConfig(s1=3, runs=5, seed=0)
        )
        assert rep.runs == 5
        assert rep.successes == 5 == rep.validation_passes
        assert rep.infeasible == 0 and rep.budget_exceeded == 0
        assert rep.success_rate == 1.0
        assert rep.correctness is None

    def test_correctness_battery_attaches(self):
        D = complete_kl_digraph(12, 2, 1)
        rep = run_constructor_stress(
            D,
            ell_cycle_link(2, 1),
            StressConfig(s1=3, runs=2, seed=1, correctness_trials=25),
        )
        assert rep.correctness is not None
        assert rep.correctness.trials == 25
        assert rep.correctness.K_hat > 0.0

    def test_edgeless_host_is_all_infeasible(self):
        D = Digraph(12, frozenset())
        rep = run_constructor_stress(
            D, ell_cycle_link(2, 1), StressConfig(s1=3, runs=3, seed=2, retries=2)
        )
        assert rep.successes == 0 and rep.infeasible == 3
        assert rep.success_rate == 0.0

    def test_starved_budget_is_counted(self):
        D = complete_kl_digraph(12, 2, 1)
        rep = run_constructor_stress(
            D,
            ell_cycle_link(2, 1),
            StressConfig(s1=3, runs=2, seed=3, search_budget=1),
        )
        assert rep.budget_exceeded == 2 and rep.successes == 0
