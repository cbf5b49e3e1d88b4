"""End-to-end tests for the command line interface.

Everything runs in process through main(argv), so exit codes and the
JSON-lines protocol are asserted directly without spawning subprocesses.
"""

import json

import pytest

from chainforge import (
    Hypergraph,
    complete_hypergraph,
    complete_kl_digraph,
    serialize_graph,
)
from chainforge.cli import main
from chainforge.experiments import read_csv


def run_cli(capsys, *argv):
    """Invoke the CLI and return (exit code, stdout records, stderr text)."""
    code = main(list(argv))
    captured = capsys.readouterr()
    records = [json.loads(line) for line in captured.out.splitlines() if line]
    return code, records, captured.err


def write_graph(tmp_path, name, G):
    path = tmp_path / name
    path.write_text(serialize_graph(G))
    return str(path)


def cycle_graph(n):
    edges = frozenset(tuple(sorted((i, i % n + 1))) for i in range(1, n + 1))
    return Hypergraph(n, 2, edges)


def tight_cycle(n, k):
    edges = set()
    for i in range(n):
        edges.add(tuple(sorted((i + j) % n + 1 for j in range(k))))
    return Hypergraph(n, k, frozenset(edges))


def stderr_record(err):
    return json.loads(err.splitlines()[-1])


class TestCheck:
    def test_deg_reports_minimum_degree(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, _ = run_cli(capsys, "check", g, "--deg", "1")
        assert code == 0
        assert records[0] == {"check": "deg", "d": 1, "delta": 5}

    def test_deg_min_passes(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, _ = run_cli(capsys, "check", g, "--deg", "1", "--min", "1/2")
        assert code == 0
        rec = records[0]
        assert rec["bound"] == 2.5
        assert rec["ok"] is True

    def test_deg_min_fails(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, _ = run_cli(capsys, "check", g, "--deg", "1", "--min", "2")
        assert code == 1
        assert records[0]["ok"] is False

    def test_balance_holds_at_known_constants(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, _ = run_cli(
            capsys, "check", g,
            "--balance", "ell_cycle:3,1", "8", "1/2", "1/2",
        )
        assert code == 0
        rec = records[0]
        assert rec["ok"] is True
        assert rec["chain_edges"] == 4
        assert rec["subsets_checked"] == 15
        assert "witness" not in rec

    def test_balance_witness_on_failure(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, _ = run_cli(
            capsys, "check", g,
            "--balance", "ell_cycle:3,1", "8", "1/4", "0",
        )
        assert code == 1
        wit = records[0]["witness"]
        assert wit["condition"] in {"B1", "B2"}
        assert wit["e"] >= 1
        assert all(len(e) == 3 for e in wit["edges"])

    def test_uniform_dense_trivial_parameters_hold(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, _ = run_cli(capsys, "check", g, "--uniform-dense", "1", "0")
        assert code == 0
        assert records[0]["ok"] is True

    def test_uniform_dense_witness_on_failure(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, _ = run_cli(capsys, "check", g, "--uniform-dense", "0", "1")
        assert code == 1
        wit = records[0]["witness"]
        assert len(wit["parts"]) == 2
        assert wit["crossing"] < wit["required"]

    def test_framework_passes_on_odd_tight_cycle(self, capsys, tmp_path):
        g = write_graph(tmp_path, "c7.graph", tight_cycle(7, 3))
        code, records, _ = run_cli(capsys, "check", g, "--framework")
        assert code == 0
        rec = records[0]
        assert rec["all_hold"] is True
        assert rec["optimum"] == "7/3"

    def test_framework_fails_aperiodicity_on_even_cycle(self, capsys, tmp_path):
        g = write_graph(tmp_path, "c6.graph", tight_cycle(6, 3))
        code, records, _ = run_cli(capsys, "check", g, "--framework")
        assert code == 1
        rec = records[0]
        assert rec["aperiodic"] is False
        assert rec["tight_component"] is True

    def test_degseq_passes_on_complete_graph(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k12.graph", complete_hypergraph(12, 2))
        code, records, _ = run_cli(capsys, "check", g, "--degseq", "3", "1/20")
        assert code == 0
        rec = records[0]
        assert rec["ok"] is True
        assert rec["failing_index"] is None

    def test_degseq_fails_on_sparse_cycle(self, capsys, tmp_path):
        g = write_graph(tmp_path, "c12.graph", cycle_graph(12))
        code, records, _ = run_cli(capsys, "check", g, "--degseq", "3", "0")
        assert code == 1
        assert records[0]["failing_index"] == 1

    def test_no_check_selected_is_usage_error(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, err = run_cli(capsys, "check", g)
        assert code == 2
        assert records == []
        assert stderr_record(err)["kind"] == "ParameterError"

    def test_degree_check_rejects_directed_file(self, capsys, tmp_path):
        g = write_graph(tmp_path, "d.graph", complete_kl_digraph(4, 2, 0))
        code, _, err = run_cli(capsys, "check", g, "--deg", "1")
        assert code == 2
        assert "undirected" in stderr_record(err)["error"]

    def test_combined_checks_fail_together(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, _ = run_cli(
            capsys, "check", g,
            "--deg", "1", "--min", "1/2",
            "--balance", "ell_cycle:3,1", "8", "1/4", "0",
        )
        assert code == 1
        assert len(records) == 2
        assert records[0]["ok"] is True
        assert records[1]["ok"] is False


class TestPropgraph:
    def test_exhaustive_perfect_matching(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, _ = run_cli(
            capsys, "propgraph", g,
            "--pred", "perfect_matching", "--s", "4", "--q", "1",
        )
        assert code == 0
        rec = records[0]
        assert rec["edges"] == 15
        assert rec["delta_q"] == 10
        assert rec["ratio"] == 1.0
        assert rec["meets_poly"] is True
        assert rec["poly_bound"] == 0.9375

    def test_chain_connectivity_predicate_orients_host(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, _ = run_cli(
            capsys, "propgraph", g,
            "--pred", "hamilton_connected=ell_cycle:2,1",
            "--s", "4", "--q", "1",
        )
        assert code == 0
        rec = records[0]
        assert rec["predicate"] == "hamilton_connected(2,1,1)"
        assert rec["edges"] == 15

    def test_strong_connectivity_predicate(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, _ = run_cli(
            capsys, "propgraph", g,
            "--pred", "strongly_hamilton_connected=1",
            "--s", "4", "--q", "1",
        )
        assert code == 0
        assert records[0]["edges"] == 15

    def test_min_degree_predicate(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, _ = run_cli(
            capsys, "propgraph", g,
            "--pred", "min_degree=1,1/2", "--s", "4", "--q", "1",
        )
        assert code == 0
        assert records[0]["edges"] == 15

    def test_sampled_mode_reports_probes(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, records, _ = run_cli(
            capsys, "propgraph", g,
            "--pred", "perfect_matching", "--s", "4", "--q", "1",
            "--sample", "10", "--seed", "1",
        )
        assert code == 0
        rec = records[0]
        assert rec["mode"] == "sampled"
        assert rec["edge_fraction"] == 1.0
        assert len(rec["degree_probes"]) >= 1

    def test_unknown_predicate_is_usage_error(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, _, err = run_cli(
            capsys, "propgraph", g, "--pred", "chromatic", "--s", "4", "--q", "1",
        )
        assert code == 2
        assert "unknown predicate" in stderr_record(err)["error"]


class TestConstruct:
    LINK = "ell_cycle:2,1"

    def host(self, tmp_path):
        return write_graph(tmp_path, "k12.graph", complete_hypergraph(12, 2))

    def test_build_emits_full_record(self, capsys, tmp_path):
        code, records, _ = run_cli(
            capsys, "construct", self.host(tmp_path),
            "--link", self.LINK, "--s1", "3", "--seed", "7",
        )
        assert code == 0
        rec = records[-1]
        assert rec["seed"] == 7
        assert sorted(rec["ordering"]) == list(range(1, 13))
        assert rec["generator"] == "mt19937-forge/1"
        assert rec["plan"]["s1"] == 3
        assert set(rec["witness"]["margins"]) == {"D1", "D2", "D3"}

    def test_out_file_and_replay_roundtrip(self, capsys, tmp_path):
        g = self.host(tmp_path)
        out = str(tmp_path / "rec.json")
        code, records, _ = run_cli(
            capsys, "construct", g,
            "--link", self.LINK, "--s1", "3", "--seed", "7", "--out", out,
        )
        assert code == 0
        summary = records[-1]
        assert summary["out"] == out
        assert summary["edges"] == 12
        code, records, _ = run_cli(
            capsys, "construct", g, "--link", self.LINK, "--replay", out,
        )
        assert code == 0
        assert records[0]["ok"] is True
        assert records[0]["problems"] == []

    def test_replay_detects_tampering(self, capsys, tmp_path):
        g = self.host(tmp_path)
        out = tmp_path / "rec.json"
        run_cli(
            capsys, "construct", g,
            "--link", self.LINK, "--s1", "3", "--seed", "7", "--out", str(out),
        )
        record = json.loads(out.read_text())
        record["ordering"][0] = record["ordering"][1]
        out.write_text(json.dumps(record))
        code, records, _ = run_cli(
            capsys, "construct", g, "--link", self.LINK, "--replay", str(out),
        )
        assert code == 1
        assert records[0]["ok"] is False
        assert records[0]["problems"]

    def test_missing_s1_is_usage_error(self, capsys, tmp_path):
        code, records, err = run_cli(
            capsys, "construct", self.host(tmp_path), "--link", self.LINK,
        )
        assert code == 2
        assert records == []
        assert stderr_record(err)["error"] == (
            "--s1 is required unless --replay is given"
        )

    def test_edgeless_host_is_infeasible(self, capsys, tmp_path):
        g = write_graph(tmp_path, "empty.graph", Hypergraph(12, 2, frozenset()))
        code, _, err = run_cli(
            capsys, "construct", g,
            "--link", self.LINK, "--s1", "3", "--seed", "1",
        )
        assert code == 3
        assert stderr_record(err)["kind"] == "ConstructionInfeasibleError"

    def test_starved_budget_exits_three(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "construct", self.host(tmp_path),
            "--link", self.LINK, "--s1", "3", "--seed", "1", "--budget", "1",
        )
        assert code == 3
        assert stderr_record(err)["kind"] == "BudgetExceededError"

    def test_generated_seed_is_emitted_and_used(self, capsys, tmp_path, monkeypatch):
        monkeypatch.delenv("CHAINFORGE_SEED", raising=False)
        code, records, _ = run_cli(
            capsys, "construct", self.host(tmp_path),
            "--link", self.LINK, "--s1", "3",
        )
        assert code == 0
        assert "generated_seed" in records[0]
        assert records[-1]["seed"] == records[0]["generated_seed"]

    def test_env_seed_matches_flag(self, capsys, tmp_path, monkeypatch):
        g = self.host(tmp_path)
        monkeypatch.setenv("CHAINFORGE_SEED", "9")
        code, from_env, _ = run_cli(
            capsys, "construct", g, "--link", self.LINK, "--s1", "3",
        )
        assert code == 0
        monkeypatch.delenv("CHAINFORGE_SEED")
        code, from_flag, _ = run_cli(
            capsys, "construct", g, "--link", self.LINK, "--s1", "3", "--seed", "9",
        )
        assert code == 0
        assert from_env[-1] == from_flag[-1]

    def test_bad_env_seed_is_usage_error(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("CHAINFORGE_SEED", "banana")
        code, _, err = run_cli(
            capsys, "construct", self.host(tmp_path),
            "--link", self.LINK, "--s1", "3",
        )
        assert code == 2
        assert "CHAINFORGE_SEED" in stderr_record(err)["error"]

    def test_missing_graph_file(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "construct", str(tmp_path / "nope.graph"),
            "--link", self.LINK, "--s1", "3", "--seed", "1",
        )
        assert code == 2
        assert stderr_record(err)["error"]

    def test_bad_link_spec(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys, "construct", self.host(tmp_path),
            "--link", "moebius:3", "--s1", "3", "--seed", "1",
        )
        assert code == 2


SWEEP_CONFIG = "n = 6\nlink = ell_cycle:2,1\np = 0.0,1.0\ntrials = 4\nseed = 1\n"


class TestSweep:
    def test_sweep_writes_csv(self, capsys, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(SWEEP_CONFIG)
        out = str(tmp_path / "rows.csv")
        code, records, _ = run_cli(
            capsys, "sweep", "--config", str(cfg), "--out", out,
        )
        assert code == 0
        assert records[0] == {"command": "sweep", "rows": 2, "out": out, "seed": 1}
        rows = read_csv(out)
        assert [r.p_hat for r in rows] == [0.0, 1.0]

    def test_rerun_is_byte_identical(self, capsys, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(SWEEP_CONFIG)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(capsys, "sweep", "--config", str(cfg), "--out", str(a))
        run_cli(capsys, "sweep", "--config", str(cfg), "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_flag_seed_fills_missing_config_seed(self, capsys, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(SWEEP_CONFIG.replace("seed = 1\n", ""))
        code, records, _ = run_cli(
            capsys, "sweep", "--config", str(cfg),
            "--out", str(tmp_path / "r.csv"), "--seed", "5",
        )
        assert code == 0
        assert records[0]["seed"] == 5

    def test_generated_seed_when_nothing_given(self, capsys, tmp_path, monkeypatch):
        monkeypatch.delenv("CHAINFORGE_SEED", raising=False)
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(SWEEP_CONFIG.replace("seed = 1\n", ""))
        code, records, _ = run_cli(
            capsys, "sweep", "--config", str(cfg), "--out", str(tmp_path / "r.csv"),
        )
        assert code == 0
        assert records[-1]["seed"] == records[0]["generated_seed"]

    def test_bad_config_is_usage_error(self, capsys, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text("n = 6\nn = 8\n")
        code, _, err = run_cli(
            capsys, "sweep", "--config", str(cfg), "--out", str(tmp_path / "r.csv"),
        )
        assert code == 2
        assert stderr_record(err)["kind"] == "SchemaError"

    def test_missing_config_file(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys, "sweep", "--config", str(tmp_path / "nope.cfg"),
            "--out", str(tmp_path / "r.csv"),
        )
        assert code == 2


class TestSpread:
    def test_cycle_sampler_census(self, capsys, tmp_path):
        out = str(tmp_path / "spread.csv")
        code, records, _ = run_cli(
            capsys, "spread", "--sampler", "hamilton_cycle:6",
            "--trials", "40", "--sizes", "2", "--seed", "3", "--out", out,
        )
        assert code == 0
        summary = records[-1]
        assert 0.0 < summary["q_hat"] <= 1.0
        assert set(summary["per_size_max"]) == {"1", "2"}
        rows = read_csv(out)
        assert [r.p for r in rows] == [1.0, 2.0]
        assert all(r.n == 6 and r.k == 2 and r.trials == 40 for r in rows)
        assert all(r.p_hat == r.successes / 40 for r in rows)

    def test_matching_sampler(self, capsys, tmp_path):
        out = str(tmp_path / "spread.csv")
        code, records, _ = run_cli(
            capsys, "spread", "--sampler", "matching:6,2",
            "--trials", "30", "--sizes", "2", "--seed", "2", "--out", out,
        )
        assert code == 0
        rows = read_csv(out)
        assert rows[1].p_hat <= rows[0].p_hat

    def test_construct_sampler(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k12.graph", complete_hypergraph(12, 2))
        out = str(tmp_path / "spread.csv")
        code, records, _ = run_cli(
            capsys, "spread",
            "--sampler", f"construct:{g};ell_cycle:2,1;3",
            "--trials", "3", "--sizes", "1", "--seed", "5", "--out", out,
        )
        assert code == 0
        rows = read_csv(out)
        assert rows[0].k == 2
        assert rows[0].trials == 3

    def test_rerun_is_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["spread", "--sampler", "hamilton_cycle:5",
                "--trials", "25", "--sizes", "2", "--seed", "11"]
        run_cli(capsys, *args, "--out", str(a))
        run_cli(capsys, *args, "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_sampler_is_usage_error(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "spread", "--sampler", "erdos:6",
            "--trials", "10", "--out", str(tmp_path / "r.csv"),
        )
        assert code == 2
        assert "unknown sampler" in stderr_record(err)["error"]

    def test_malformed_construct_spec(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "spread", "--sampler", "construct:file;ell_cycle:2,1",
            "--trials", "10", "--out", str(tmp_path / "r.csv"),
        )
        assert code == 2
        assert "FILE;LINK;S1" in stderr_record(err)["error"]


class TestUsage:
    def test_unknown_subcommand(self, capsys):
        assert main(["bogus"]) == 2
        capsys.readouterr()

    def test_no_arguments(self, capsys):
        assert main([]) == 2
        capsys.readouterr()

    def test_threads_flag_is_accepted(self, capsys, tmp_path):
        g = write_graph(tmp_path, "k6.graph", complete_hypergraph(6, 2))
        code, _, _ = run_cli(capsys, "check", g, "--deg", "1", "--threads", "4")
        assert code == 0
