"""Batch-runner subcommands: exit codes, JSON-lines output, reproducibility."""

import io
import json
import sys

import pytest

from s3double import cli


def run(argv, capsys):
    code = cli.run(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def records(out):
    return [json.loads(line) for line in out.splitlines()]


class TestUsage:
    def test_no_subcommand_is_usage_error(self, capsys):
        code, out, err = run([], capsys)
        assert code == 2 and not out
        assert "usage" in err

    def test_unknown_subcommand(self, capsys):
        code, _, _ = run(["definitely-not-a-command"], capsys)
        assert code == 2

    def test_unknown_flag(self, capsys):
        code, _, _ = run(["verify-category", "--bogus"], capsys)
        assert code == 2

    def test_stochastic_commands_require_seed(self, capsys):
        for argv in (
            ["move-stats", "--anyon", "C"],
            ["ribbon-demo", "--anyon", "C"],
            ["measure-ma"],
            ["measure-mu"],
            ["merge-split"],
            ["qec-cycle"],
        ):
            code, _, _ = run(argv, capsys)
            assert code == 2, argv


class TestRecords:
    def test_verify_category_passes(self, capsys):
        code, out, _ = run(["verify-category", "--seed", "1"], capsys)
        recs = records(out)
        assert code == 0 and len(recs) == 2
        assert all(r["pass"] and r["seed"] == 1 for r in recs)
        assert {r["check"] for r in recs} == {"consistency", "gauge-invariant-oracle"}

    def test_ground_state_records(self, capsys):
        code, out, _ = run(["ground-state", "--width", "2", "--height", "1"], capsys)
        recs = records(out)
        assert code == 0
        assert sum(r["check"] == "vacuum" for r in recs) == 2
        assert recs[-1]["check"] == "charge-measurement" and recs[-1]["pass"]

    def test_move_stats_carries_analytic_reference(self, capsys):
        code, out, _ = run(
            ["move-stats", "--anyon", "B", "--rounds", "2", "--trials", "150", "--seed", "4"],
            capsys,
        )
        recs = records(out)
        assert code == 0 and len(recs) == 2
        for rec in recs:
            assert rec["analytic"] == 1.0 and rec["empirical"] == 1.0

    def test_syndrome_table_rows(self, capsys):
        code, out, _ = run(["syndrome-table"], capsys)
        recs = records(out)
        assert code == 0 and len(recs) == 12
        by_key = {(r["kind"], r["orientation"]): r for r in recs}
        assert by_key[("XhZh", "h")]["letters"] == ["F", "G", "C"]
        assert by_key[("XhZh", "v")]["letters"] == ["F", "H", "C"]
        assert by_key[("X", "h")]["s3_distribution"] == [["A", 1 / 3], ["C", 2 / 3]]

    def test_qec_cycle_round_records(self, capsys):
        code, out, _ = run(
            ["qec-cycle", "--width", "4", "--height", "4", "--p", "0.01",
             "--rounds", "2", "--seed", "11"],
            capsys,
        )
        recs = records(out)
        assert code == 0 and len(recs) == 2
        assert [r["round"] for r in recs] == [0, 1]

    def test_concat_cc_toy_and_fault_demo(self, capsys):
        code, out, _ = run(["concat-cc", "--blocks", "3"], capsys)
        assert code == 0 and records(out)[0]["deviation"] < 1e-12
        code, out, _ = run(
            ["concat-cc", "--blocks", "9", "--error-site", "2", "--error-kind", "Zh"],
            capsys,
        )
        assert code == 0 and records(out)[0]["uncorrectable"] == 0

    def test_orthonormality(self, capsys):
        code, out, _ = run(["orthonormality"], capsys)
        rec = records(out)[0]
        assert code == 0 and rec["operators_per_ribbon"] == 36


class TestErrors:
    def test_resource_bound_is_explained(self, capsys):
        code, out, _ = run(["ground-state", "--width", "3", "--height", "3"], capsys)
        recs = records(out)
        assert code == 1
        assert recs[-1]["error"] == "ResourceError" and not recs[-1]["pass"]

    def test_trial_floor_is_explained(self, capsys):
        code, out, _ = run(
            ["move-stats", "--anyon", "C", "--trials", "10", "--seed", "1"], capsys
        )
        recs = records(out)
        assert code == 1 and recs[-1]["error"] == "ProtocolError"


class TestReproducibility:
    def test_byte_identical_output(self, capsys):
        argv = ["ribbon-demo", "--anyon", "D", "--trials", "10", "--seed", "21"]
        _, out1, _ = run(argv, capsys)
        _, out2, _ = run(argv, capsys)
        assert out1 == out2 and out1

    def test_output_file_and_summary(self, tmp_path, capsys):
        path = tmp_path / "out.jsonl"
        code, out, err = run(
            ["orthonormality", "--output", str(path), "--summary"], capsys
        )
        assert code == 0 and not out
        assert "orthonormality" in err and "PASS" in err
        assert records(path.read_text())[0]["pass"]
