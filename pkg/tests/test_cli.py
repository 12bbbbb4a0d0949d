import json
import subprocess
import sys

import numpy as np
import pytest

from fastsbl.cli import EXIT_INPUT, EXIT_OK, EXIT_VIOLATION, main
from fastsbl.datagen import read_csv


def test_verify_clean_run(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["verify", "--n-sections", "200", "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    assert report["checked"] + len(report["boundary"]) == 200
    assert report["violations"] == []
    assert "0 violations" in capsys.readouterr().out


def test_verify_empty_and_boundary(tmp_path):
    out = tmp_path / "v.json"
    assert main(["--seed", "4", "verify", "--n-sections", "0", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["checked"] == 0
    assert main(["verify", "--n-sections", "0", "--inject-boundary", "3", "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    assert len(report["boundary"]) == 3 and report["checked"] == 0


def test_verify_reports_violations(tmp_path, monkeypatch):
    import fastsbl.harness as harness

    monkeypatch.setattr(harness, "kappa_pruning_rule", lambda stats, kappa=1.0: False)
    assert main(["verify", "--n-sections", "50", "--out", str(tmp_path / "v.json")]) == EXIT_VIOLATION


def test_global_flags_after_subcommand(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["--seed", "7", "verify", "--n-sections", "20", "--out", str(a)])
    main(["verify", "--n-sections", "20", "--seed", "7", "--out", str(b)])
    assert json.loads(a.read_text())["sections"] == json.loads(b.read_text())["sections"]


def test_figure1_writes_both_cases(tmp_path):
    assert main(["figure1", "--out", str(tmp_path)]) == EXIT_OK
    table = read_csv(tmp_path / "figure1_case_a.csv", header=True)
    header = (tmp_path / "figure1_case_a.csv").read_text().splitlines()[0]
    assert header == "x,f,t,R1,R1bar"
    x, f, t, r1, r1bar = table.T
    np.testing.assert_allclose(f - t, r1, atol=1e-15)
    assert r1bar[x == 0] == 0.0
    case_b = read_csv(tmp_path / "figure1_case_b.csv", header=True)
    assert np.all(case_b[:, 4] <= 1e-15)


def test_figure1_single_case(tmp_path):
    out = tmp_path / "one.csv"
    assert main(["figure1", "--mu", "2", "--sigma2", "0.5", "--out", str(out)]) == EXIT_OK
    assert read_csv(out, header=True).shape == (801, 5)


def test_figure2_default_precisions(tmp_path, capsys):
    out = tmp_path / "f2.csv"
    assert main(["figure2", "--out", str(out)]) == EXIT_OK
    assert "gamma1=26.5396" in capsys.readouterr().out
    x, _, _, p1, p2 = read_csv(out, header=True).T
    assert np.trapezoid(p1, x) == pytest.approx(1.0, abs=1e-6)
    assert p2.max() == pytest.approx(2 * p1.max(), rel=1e-12)


def test_generate_then_solve(tmp_path):
    prob = tmp_path / "prob"
    assert main(["generate", "--n", "30", "--m", "50", "--k", "3", "--seed", "2", "--out", str(prob)]) == EXIT_OK
    run = tmp_path / "run.json"
    assert main(["solve", "--problem", str(prob), "--out", str(run)]) == EXIT_OK
    record = json.loads(run.read_text())
    assert record["converged"]
    assert len(record["planted_support"]) == 3
    assert record["min_update_delta"] >= -1e-10
    assert np.all(np.diff(record["evidence_trace"]) >= -1e-10)


def test_bench(tmp_path, capsys):
    out = tmp_path / "b.json"
    assert main(["bench", "--trials", "2", "--n", "30", "--m", "50", "--k", "3", "--out", str(out)]) == EXIT_OK
    result = json.loads(out.read_text())
    assert result["trials"] == 2 and result["monotone"]
    assert "exact recoveries" in capsys.readouterr().out


def test_student_t_prior_flag(tmp_path):
    prob = tmp_path / "p"
    args = ["generate", "--n", "10", "--m", "12", "--k", "2", "--out", str(prob),
            "--weight-prior", '{"family": "student_t", "dof": 6}']
    assert main(args) == EXIT_OK
    assert json.loads((prob / "problem.json").read_text())["spec"]["weight_prior"]["dof"] == 6


@pytest.mark.parametrize("argv", [
    ["solve", "--problem", "does-not-exist"],
    ["figure2", "--gammas", "5", "1"],
    ["generate", "--k", "99", "--m", "10"],
    ["verify", "--quad-rel-tol", "0"],
])
def test_bad_input_exit_code(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == EXIT_INPUT


def test_malformed_problem_file(tmp_path, capsys):
    assert main(["generate", "--n", "5", "--m", "6", "--k", "1", "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "dictionary.csv", "a") as fh:
        fh.write("1,2,oops\n")
    assert main(["solve", "--problem", str(tmp_path), "--out", str(tmp_path / "r.json")]) == EXIT_INPUT
    assert "dictionary.csv:6" in capsys.readouterr().err


def test_argparse_errors_exit_two():
    with pytest.raises(SystemExit) as info:
        main(["figure2", "--prior", "cauchy"])
    assert info.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fastsbl", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("solve", "verify", "figure1", "figure2", "generate", "bench"):
        assert name in proc.stdout


def test_verify_with_quadrature_oracle(tmp_path):
    out = tmp_path / "v.json"
    argv = ["verify", "--n-sections", "20", "--oracle", "quadrature", "--quad-rel-tol", "1e-11", "--out", str(out)]
    assert main(argv) == EXIT_OK
    report = json.loads(out.read_text())
    assert report["oracle"] == "quadrature" and report["violations"] == []


def test_quadrature_budget_flag_is_honoured(tmp_path):
    argv = ["verify", "--n-sections", "5", "--oracle", "quadrature", "--quad-max-subdiv", "1",
            "--out", str(tmp_path / "v.json")]
    assert main(argv) == EXIT_INPUT


def test_figure1_shape_claims(tmp_path):
    main(["figure1", "--out", str(tmp_path)])
    for name, convex in (("case_a", True), ("case_b", False)):
        x, f, t, r1, _ = read_csv(tmp_path / f"figure1_{name}.csv", header=True).T
        zero = x == 0.0
        assert t[zero] == f[zero] and r1[zero] == 0.0
        inner = np.abs(x) < 0.5
        curvature = np.diff(f[inner], 2)
        assert np.all(curvature > 0) if convex else np.all(curvature < 0)
        if convex:
            assert np.all(r1[inner] >= -1e-15)


def test_figure2_mass_and_normalization(tmp_path):
    from scipy import stats

    out = tmp_path / "f2.csv"
    main(["figure2", "--out", str(out)])
    x, _, _, p1, p2 = read_csv(out, header=True).T
    g1 = float(json.dumps(2.5758293035489004**2 / 0.25))
    assert stats.norm.cdf(0.5 * np.sqrt(g1)) - stats.norm.cdf(-0.5 * np.sqrt(g1)) >= 0.99 - 1e-12
    for p in (p1, p2):
        assert np.trapezoid(p, x) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("seed", [0, 3])
def test_noiseless_single_column_recovered(tmp_path, seed):
    run = tmp_path / "r.json"
    argv = ["solve", "--noiseless", "--k", "1", "--seed", str(seed), "--sweep-order", "largest_gain",
            "--out", str(run)]
    assert main(argv) == EXIT_OK
    record = json.loads(run.read_text())
    assert record["recovered_support"] == record["planted_support"]


def test_noiseless_cyclic_sweep_saturates_rank(tmp_path, capsys):
    # from the empty model every correlated column raises the noiseless evidence,
    # so index-order sweeps fill the column space before the planted column is met
    argv = ["solve", "--noiseless", "--k", "1", "--seed", "0", "--out", str(tmp_path / "r.json")]
    assert main(argv) == EXIT_INPUT
    assert "condition number" in capsys.readouterr().err


def test_solve_is_deterministic(tmp_path):
    runs = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.json"
        main(["solve", "--n", "30", "--m", "50", "--k", "3", "--seed", "8", "--out", str(out)])
        record = json.loads(out.read_text())
        record.pop("wall_time")
        runs.append(record)
    assert runs[0] == runs[1]
