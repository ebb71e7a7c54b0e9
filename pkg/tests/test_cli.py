"""Command line interface: subcommands, outputs, and exit codes."""

from __future__ import annotations

import numpy as np
import pytest

from gsisio.cli import main
from gsisio.config import EXAMPLE_CONFIG, parse_scenario

DIVERGENT = """\
# existence condition holds, but the dynamics overflow within a few steps
f1 = "exp(x1)*1e300"
g1 = "x1"
B = [[0.0]]
D = [[0.0]]
G = [[1.0]]
H = [[1.0]]
w_lower = [0.0]
w_upper = [0.0]
v_lower = [0.0]
v_upper = [0.0]
x0_lower = [2.0]
x0_upper = [2.0]
jacobian_f_lower = [[1.0]]
jacobian_f_upper = [[1.0]]
jacobian_g_lower = [[1.0]]
jacobian_g_upper = [[1.0]]
lipschitz_f = 1.0
lipschitz_g = 1.0
horizon = 8
"""


@pytest.fixture()
def synthetic_path(tmp_path, synthetic_text):
    path = tmp_path / "scenario.cfg"
    path.write_text(synthetic_text, encoding="utf-8")
    return str(path)


@pytest.fixture()
def example_path(tmp_path):
    path = tmp_path / "example.cfg"
    path.write_text(EXAMPLE_CONFIG, encoding="utf-8")
    return str(path)


class TestRun:
    def test_success_summary(self, synthetic_path, capsys):
        rc = main(["run", synthetic_path, "--steps", "40"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "steps = 40" in out
        assert "seed = 0" in out
        assert "contraction constant = 0.70611" in out
        assert "steady state width limit = " in out

    def test_csv_and_charts_written(self, synthetic_path, tmp_path, capsys):
        csv = str(tmp_path / "out.csv")
        svg = str(tmp_path / "chart_")
        rc = main(
            ["run", synthetic_path, "--steps", "30", "--csv", csv, "--svg", svg]
        )
        out = capsys.readouterr().out
        assert rc == 0
        with open(csv, encoding="ascii") as fh:
            header = fh.readline().strip()
        assert header.startswith("k,x1,x1_upper,x1_lower")
        assert f"wrote {csv}" in out
        assert (tmp_path / "chart_state1.svg").exists()
        assert (tmp_path / "chart_state2.svg").exists()
        assert (tmp_path / "chart_input1.svg").exists()
        assert (tmp_path / "chart_widths.svg").exists()

    def test_fig_written(self, synthetic_path, tmp_path, capsys):
        fig = str(tmp_path / "fig_")
        rc = main(["run", synthetic_path, "--steps", "10", "--fig", fig])
        capsys.readouterr()
        assert rc == 0
        assert (tmp_path / "fig_state_envelopes.png").exists()
        assert (tmp_path / "fig_width_bounds.png").exists()

    def test_deterministic_csv(self, synthetic_path, tmp_path, capsys):
        c1, c2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert main(["run", synthetic_path, "--steps", "25", "--csv", c1]) == 0
        assert main(["run", synthetic_path, "--steps", "25", "--csv", c2]) == 0
        capsys.readouterr()
        assert open(c1, "rb").read() == open(c2, "rb").read()

    def test_seed_override_changes_data(self, synthetic_path, tmp_path, capsys):
        c1, c2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        main(["run", synthetic_path, "--steps", "25", "--seed", "9", "--csv", c1])
        main(["run", synthetic_path, "--steps", "25", "--seed", "10", "--csv", c2])
        out = capsys.readouterr().out
        assert "seed = 9" in out and "seed = 10" in out
        assert open(c1, "rb").read() != open(c2, "rb").read()

    def test_missing_config_is_exit_2(self, tmp_path, capsys):
        rc = main(["run", str(tmp_path / "missing.cfg")])
        err = capsys.readouterr().err
        assert rc == 2
        assert err.startswith("gsisio: error:")
        assert "cannot read config" in err

    def test_malformed_config_is_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("f1 = \n", encoding="utf-8")
        rc = main(["run", str(bad)])
        assert rc == 2
        assert "missing value" in capsys.readouterr().err

    def test_bad_steps_is_exit_2(self, synthetic_path, capsys):
        rc = main(["run", synthetic_path, "--steps", "0"])
        assert rc == 2
        assert "--steps" in capsys.readouterr().err

    def test_rank_deficient_example_is_exit_3(self, example_path, capsys):
        rc = main(["run", example_path])
        err = capsys.readouterr().err
        assert rc == 3
        assert "existence condition fails" in err
        assert "ranks (2, 1)" in err

    def test_numeric_divergence_is_exit_4(self, tmp_path, capsys):
        cfg = tmp_path / "divergent.cfg"
        cfg.write_text(DIVERGENT, encoding="utf-8")
        with np.errstate(over="ignore", invalid="ignore"):
            rc = main(["run", str(cfg)])
        err = capsys.readouterr().err
        assert rc == 4
        assert "numeric failure" in err


class TestGains:
    def test_synthetic_diagnosis(self, synthetic_path, capsys):
        rc = main(["gains", synthetic_path])
        out = capsys.readouterr().out
        assert rc == 0
        assert "J =" in out and "K =" in out and "L =" in out
        assert "rank(I - K1 - L1) = 2 (need 2)" in out
        assert "existence condition: satisfied" in out
        assert "condition (i): holds" in out
        assert "condition (ii): fails" in out
        assert "condition (iii): fails" in out
        assert "steady state width limit = 0.552574" in out
        assert "steady state input limit = 0.724424" in out

    def test_example_diagnosis_is_informative_not_an_error(self, example_path, capsys):
        # the command diagnoses; only run/montecarlo refuse
        rc = main(["gains", example_path])
        out = capsys.readouterr().out
        assert rc == 0
        assert "rank(I - K1 + L1) = 1 (need 2)" in out
        assert "existence condition: FAILS" in out
        assert "condition (i): fails" in out
        assert "contraction constant = 2.05" in out
        assert "steady state width limit = inf" in out

    def test_example_j_matches_reference(self, example_path, capsys):
        main(["gains", example_path])
        out = capsys.readouterr().out
        assert "-2.023575639" in out  # J[0, 0] of the bundled example
        assert "6.99410609" in out

    def test_missing_config(self, tmp_path, capsys):
        rc = main(["gains", str(tmp_path / "none.cfg")])
        assert rc == 2


class TestMonteCarlo:
    def test_small_batch(self, synthetic_path, capsys):
        rc = main(
            ["montecarlo", synthetic_path, "--trials", "3", "--steps", "30",
             "--seed", "7"]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert "trials = 3" in out
        assert "state containment violations = 0" in out
        assert "input containment violations = 0" in out
        assert "partial input violations = 0" in out
        assert "width domination violations = 0" in out

    def test_example_refused_with_exit_3(self, example_path, capsys):
        rc = main(["montecarlo", example_path, "--trials", "2"])
        assert rc == 3
        assert "existence condition fails" in capsys.readouterr().err

    def test_trials_flag_required(self, synthetic_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["montecarlo", synthetic_path])
        assert exc.value.code == 2


class TestExampleCommand:
    def test_stdout_matches_bundle(self, capsys):
        rc = main(["example-sectionV"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out == EXAMPLE_CONFIG
        cfg = parse_scenario(out)
        assert cfg.n == 2

    def test_out_file(self, tmp_path, capsys):
        target = str(tmp_path / "example.cfg")
        rc = main(["example-sectionV", "--out", target])
        out = capsys.readouterr().out
        assert rc == 0
        assert f"wrote {target}" in out
        assert open(target, encoding="utf-8").read() == EXAMPLE_CONFIG


class TestParser:
    def test_no_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
