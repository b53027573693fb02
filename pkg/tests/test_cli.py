"""End-to-end tests of the command-line interface."""

from __future__ import annotations

import json

import numpy as np
import pytest
from click.testing import CliRunner

from cachecast.cache_codec import dump_cache, place
from cachecast.cli import main


@pytest.fixture()
def runner() -> CliRunner:
    return CliRunner()


def data_rows(output: str) -> list[list[str]]:
    """CSV rows of a table emitted after the header and column lines."""
    lines = output.strip().splitlines()
    return [line.split(",") for line in lines[2:]]


FIG5_JOINT_BREAKPOINTS = [
    (0.0, 0.25),
    (2.0548, 0.3836),
    (6.8681, 0.4505),
    (12.6386, 0.4789),
    (18.75, 0.4926),
    (25.0, 0.5),
]

INLINE_SMALL = [
    "--num-weak", "2",
    "--num-strong", "1",
    "--delta-weak", "0.3",
    "--delta-strong", "0.1",
    "--num-files", "3",
    "--packet-bits", "4",
    "--memory-bits", "2",
]

INLINE_PAIR = [
    "--num-weak", "1",
    "--num-strong", "1",
    "--delta-weak", "0.8",
    "--delta-strong", "0.2",
    "--num-files", "2",
    "--packet-bits", "10",
]


class TestScenarioResolution:
    def test_requires_exactly_one_source(self, runner):
        result = runner.invoke(main, ["bounds"])
        assert result.exit_code == 2
        assert "exactly one scenario source" in result.output
        result = runner.invoke(main, ["bounds", "--preset", "fig5", "--num-weak", "4"])
        assert result.exit_code == 2

    def test_incomplete_inline_scenario_is_rejected(self, runner):
        result = runner.invoke(main, ["bounds", "--num-weak", "2"])
        assert result.exit_code == 2
        assert "missing" in result.output

    def test_scenario_file_matches_the_preset(self, runner, tmp_path):
        scenario = {
            "num_weak": 4,
            "num_strong": 16,
            "delta_weak": 0.8,
            "delta_strong": 0.2,
            "num_files": 50,
            "packet_bits": 10,
            "memory_bits": 25.0,
        }
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(scenario))
        from_file = runner.invoke(main, ["bounds", "--scenario", str(path)])
        from_preset = runner.invoke(main, ["bounds", "--preset", "fig5"])
        assert from_file.exit_code == 0
        assert from_file.output == from_preset.output

    def test_scenario_file_field_validation(self, runner, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({"num_weak": 2}))
        result = runner.invoke(main, ["bounds", "--scenario", str(path)])
        assert result.exit_code == 2
        assert "lacks fields" in result.output
        path.write_text(json.dumps({
            "num_weak": 2, "num_strong": 1, "delta_weak": 0.3, "delta_strong": 0.1,
            "num_files": 3, "packet_bits": 4, "memory_bits": 2.0, "bogus": 1,
        }))
        result = runner.invoke(main, ["bounds", "--scenario", str(path)])
        assert result.exit_code == 2
        assert "unknown fields" in result.output
        path.write_text("{not json")
        result = runner.invoke(main, ["bounds", "--scenario", str(path)])
        assert result.exit_code == 2


class TestBounds:
    def test_breakpoint_grid_reproduces_the_tradeoff_table(self, runner):
        result = runner.invoke(main, ["bounds", "--preset", "fig5", "--grid", "6"])
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert lines[0].startswith("# cachecast bounds --num-weak 4 --num-strong 16")
        assert lines[1] == "M,lower_joint,lower_separate,upper"
        rows = data_rows(result.output)
        assert len(rows) == 6
        for row, (memory, rate) in zip(rows, FIG5_JOINT_BREAKPOINTS):
            assert float(row[0]) == pytest.approx(memory, abs=1e-3)
            assert float(row[1]) == pytest.approx(rate, abs=1e-3)

    def test_specialized_columns_appear_for_matching_topologies(self, runner):
        result = runner.invoke(main, ["bounds", "--preset", "fig8"])
        assert result.exit_code == 0
        header = result.output.strip().splitlines()[1]
        assert header == (
            "M,lower_joint,lower_separate,upper,"
            "single_weak_lower,single_weak_upper,two_user_lower,two_user_upper"
        )
        result = runner.invoke(main, ["bounds", "--preset", "fig7"])
        header = result.output.strip().splitlines()[1]
        assert header == "M,lower_joint,lower_separate,upper,single_weak_lower,single_weak_upper"

    def test_rejects_nonpositive_grid(self, runner):
        result = runner.invoke(main, ["bounds", "--preset", "fig5", "--grid", "0"])
        assert result.exit_code == 2
        assert "--grid" in result.output

    def test_output_file_and_reformat_idempotence(self, runner, tmp_path):
        path = tmp_path / "bounds.csv"
        result = runner.invoke(main, ["bounds", "--preset", "fig6", "--grid", "9", "--output", str(path)])
        assert result.exit_code == 0
        assert f"wrote 9 rows to {path}" in result.output
        text = path.read_text()
        lines = text.strip().splitlines()
        assert len(lines) == 11
        for row in lines[2:]:
            for cell in row.split(","):
                assert format(float(cell), ".6g") == cell

    def test_runs_are_reproducible(self, runner):
        first = runner.invoke(main, ["bounds", "--preset", "fig7", "--grid", "12"])
        second = runner.invoke(main, ["bounds", "--preset", "fig7", "--grid", "12"])
        assert first.output == second.output


class TestVerifyFigures:
    def test_single_weak_figure_passes_all_curves(self, runner):
        result = runner.invoke(main, ["verify-figures", "7"])
        assert result.exit_code == 0
        assert "fig7 joint PASS" in result.output
        assert "fig7 separate PASS" in result.output
        assert "fig7 upper PASS" in result.output

    def test_two_user_figure_passes_all_curves(self, runner):
        result = runner.invoke(main, ["verify-figures", "8"])
        assert result.exit_code == 0
        assert "fig8 lower PASS" in result.output
        assert "fig8 separate PASS" in result.output
        assert "fig8 upper PASS" in result.output

    def test_large_examples_report_upper_curve_info_only(self, runner):
        for figure in ("5", "6"):
            result = runner.invoke(main, ["verify-figures", figure])
            assert result.exit_code == 0
            assert f"fig{figure} joint PASS" in result.output
            assert f"fig{figure} separate PASS" in result.output
            assert f"fig{figure} upper INFO expected mismatch" in result.output
            assert "FAIL" not in result.output

    def test_all_covers_every_figure(self, runner):
        result = runner.invoke(main, ["verify-figures", "all"])
        assert result.exit_code == 0
        curve_lines = [line for line in result.output.splitlines() if " PASS" in line or " INFO" in line]
        assert len(curve_lines) == 12

    def test_unknown_figure_is_a_usage_error(self, runner):
        result = runner.invoke(main, ["verify-figures", "9"])
        assert result.exit_code == 2
        assert "unknown figure id" in result.output


class TestSimulate:
    def test_joint_scheme_smoke_run(self, runner):
        result = runner.invoke(
            main,
            ["simulate", *INLINE_SMALL, "--t", "1", "--rate-fraction", "0.5",
             "--n", "1500", "--trials", "1", "--demand-count", "2", "--seed", "0"],
        )
        assert result.exit_code == 0
        assert result.output.startswith("# cachecast simulate --num-weak 2")
        assert "--scheme joint --t 1" in result.output.splitlines()[0]
        assert "phase_budget beta1=" in result.output
        assert "worst_demand_error 0" in result.output
        assert "phase_failures none" in result.output

    def test_overrate_joint_run_exits_one_with_the_violation(self, runner):
        result = runner.invoke(
            main,
            ["simulate", "--preset", "fig7", "--t", "1", "--rate-fraction", "1.15",
             "--n", "2000", "--trials", "1", "--seed", "0"],
        )
        assert result.exit_code == 1
        assert "infeasible: violated phase" in result.output

    def test_refined_scheme_runs_all_four_demands(self, runner):
        result = runner.invoke(
            main,
            ["simulate", *INLINE_PAIR, "--memory-bits", "16", "--scheme", "refined",
             "--rate-fraction", "0.3", "--n", "600", "--trials", "2", "--seed", "0"],
        )
        assert result.exit_code == 0
        for demand in ("0,0", "0,1", "1,0", "1,1"):
            assert f"demand {demand} error 0" in result.output
        assert "worst_demand_error 0" in result.output

    def test_refined_scheme_reports_infeasible_cache_budgets(self, runner):
        result = runner.invoke(
            main,
            ["simulate", *INLINE_PAIR, "--memory-bits", "2", "--scheme", "refined",
             "--rate-fraction", "0.95", "--n", "600", "--trials", "1", "--seed", "0"],
        )
        assert result.exit_code == 1
        assert "infeasible:" in result.output

    def test_transcripts_are_byte_identical_across_reruns(self, runner, tmp_path):
        paths = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
        for path in paths:
            result = runner.invoke(
                main,
                ["simulate", *INLINE_PAIR, "--memory-bits", "16", "--scheme", "refined",
                 "--rate-fraction", "0.3", "--n", "600", "--trials", "2", "--seed", "7",
                 "--transcript", str(path)],
            )
            assert result.exit_code == 0
            assert f"wrote 8 records to {path}" in result.output
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_rejects_nonpositive_sizes(self, runner):
        result = runner.invoke(main, ["simulate", "--preset", "fig7", "--n", "0"])
        assert result.exit_code == 2
        result = runner.invoke(main, ["simulate", "--preset", "fig7", "--trials", "0"])
        assert result.exit_code == 2


class TestPiggybackSweep:
    def test_interior_point_succeeds_and_origin_is_vacuous(self, runner):
        result = runner.invoke(
            main,
            ["piggyback-sweep", "--delta1", "0.8", "--delta2", "0.2",
             "--blocklength", "500", "--trials", "5", "--seed", "0",
             "--r1", "0", "--r1", "0.1", "--r2", "0", "--r2", "0.3"],
        )
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert lines[1] == "r1,r2,side_info_success,full_success"
        rows = {(row[0], row[1]): (row[2], row[3]) for row in data_rows(result.output)}
        assert rows[("0", "0")] == ("1", "1")
        assert rows[("0", "0.3")] == ("1", "1")
        assert rows[("0.1", "0.3")] == ("1", "1")

    def test_thread_count_does_not_change_the_output(self, runner):
        args = [
            "piggyback-sweep", "--delta1", "0.8", "--delta2", "0.2",
            "--blocklength", "400", "--trials", "4", "--seed", "3",
            "--r1", "0.05", "--r1", "0.1", "--r2", "0.2",
        ]
        single = runner.invoke(main, args, env={"CACHECAST_THREADS": "1"})
        threaded = runner.invoke(main, args, env={"CACHECAST_THREADS": "2"})
        assert single.exit_code == threaded.exit_code == 0
        assert single.output == threaded.output
        assert len(data_rows(single.output)) == 2

    def test_rejects_bad_probabilities(self, runner):
        result = runner.invoke(
            main,
            ["piggyback-sweep", "--delta1", "1.2", "--delta2", "0.2", "--r1", "0.1", "--r2", "0.1"],
        )
        assert result.exit_code == 2


class TestAllEqualCheck:
    def test_tight_budget_is_feasible(self, runner):
        result = runner.invoke(
            main,
            ["all-equal", "check", "--deltas", "0.5,0", "--rates", "0.7,0.6",
             "--budgets", "0.3,0", "--packet-bits", "1"],
        )
        assert result.exit_code == 0
        payload = json.loads(result.output.split("\n", 1)[1])
        assert payload["feasible"] is True
        assert payload["capacities"] == [0.5, 1.0]
        assert payload["allocation"] == [[0.2, 0.1], [0.0, 0.0]]
        assert payload["totals"] == [0.3, 0.0]
        assert payload["certificate"] is None

    def test_overdrawn_budget_exits_one_with_a_certificate(self, runner):
        result = runner.invoke(
            main,
            ["all-equal", "check", "--deltas", "0.5,0", "--rates", "0.7,0.6",
             "--budgets", "0.2,0", "--packet-bits", "1"],
        )
        assert result.exit_code == 1
        payload = json.loads(result.output.split("\n", 1)[1])
        assert payload["feasible"] is False
        assert payload["certificate"] == {"receiver": 0, "deficit": 0.1}

    def test_rejects_malformed_lists(self, runner):
        result = runner.invoke(
            main,
            ["all-equal", "check", "--deltas", "0.5,oops", "--rates", "0.7", "--budgets", "0"],
        )
        assert result.exit_code == 2
        assert "--deltas" in result.output


class TestCacheInspect:
    def test_summarizes_a_cache_dump(self, runner, tmp_path):
        rng = np.random.default_rng(0)
        library = [rng.integers(0, 2, size=12, dtype=np.uint8) for _ in range(2)]
        caches = place(3, 1, library)
        path = tmp_path / "cache.bin"
        dump_cache(caches[1], str(path))
        result = runner.invoke(main, ["cache", "inspect", str(path)])
        assert result.exit_code == 0
        assert "receiver 1 of 3, placement level 1, 2 entries, 8 bits" in result.output
        assert "file 0: subsets [1] (4 bits each)" in result.output
        assert "file 1: subsets [1] (4 bits each)" in result.output

    def test_rejects_foreign_files(self, runner, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"junkjunkjunkjunk" * 4)
        result = runner.invoke(main, ["cache", "inspect", str(path)])
        assert result.exit_code == 2
        assert "not a cache dump" in result.output
