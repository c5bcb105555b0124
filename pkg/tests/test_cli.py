import pytest

from stoppred import cli
from stoppred.priors import E_INV
from stoppred.thresholds import threshold_from_csv


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_verify_quick_passes(capsys):
    code, out, _ = run_cli(capsys, "verify", "quick")
    assert code == 0
    assert "FAIL" not in out


def test_verify_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setitem(cli.cmd_verify.__globals__, "_verify_quick", lambda: [("forced", False)])
    code, out, _ = run_cli(capsys, "verify", "quick")
    assert code == 4
    assert "FAIL  forced" in out


def test_maxprob_curve_stdout(capsys):
    code, out, _ = run_cli(capsys, "maxprob-curve", "--beta-grid", f"0.2,{E_INV}")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("# command=maxprob-curve")
    assert lines[1] == "beta,alpha"
    assert len(lines) == 4
    beta, alpha = lines[3].split(",")
    assert float(alpha) == pytest.approx(E_INV, abs=1e-9)


def test_identical_manifest_byte_identical(tmp_path, capsys):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    args = ["simulate", "--real", "uniform:0,1", "--predicted", "uniform:0,1",
            "--threshold", "dynkin:0.368", "--n", "50", "--trials", "2000", "--seed", "5"]
    assert cli.main(args + ["--out", str(out1)]) == 0
    assert cli.main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_thresholds_dump_and_reload(tmp_path, capsys):
    path = tmp_path / "theta.csv"
    code = cli.main(["thresholds", "--threshold", "gm:6", "--m", "40",
                     "--robustify", "0.25", "--out", str(path)])
    assert code == 0
    text = path.read_text()
    assert text.splitlines()[0].startswith("# command=thresholds")
    theta = threshold_from_csv(text)
    assert theta.eval(0.01) == 1.0
    code, out, _ = run_cli(capsys, "simulate", "--real", "uniform:0,1",
                           "--predicted", "uniform:0,1", "--threshold", f"file:{path}",
                           "--n", "6", "--trials", "1000", "--seed", "0")
    assert code == 0
    assert "maxprob=" in out


def test_simulate_adversarial_prior(capsys):
    code, out, _ = run_cli(
        capsys, "simulate", "--real", "uniform:0,1", "--predicted", "uniform:2,3",
        "--threshold", "gm:10", "--m", "60", "--n", "10", "--trials", "3000", "--seed", "1",
    )
    assert code == 0
    fields = dict(line.split("=") for line in out.strip().splitlines()[1:])
    assert float(fields["maxprob"]) == 0.0  # sampled levels never clear the threshold


def test_hardness_frontier_embedded(capsys):
    code, out, _ = run_cli(capsys, "hardness-frontier", "--n", "3", "--k-support", "8",
                           "--lambda-grid", "0:1:0.5")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[1] == "lambda,lp_star,alpha_star,beta_star"
    assert len(lines) == 5


def test_hardness_frontier_export(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "hardness-frontier", "--n", "2", "--k-support", "3",
                           "--lambda-grid", "0,1", "--solver", "export",
                           "--out", str(tmp_path / "lps"))
    assert code == 0
    files = sorted((tmp_path / "lps").glob("*.lp"))
    assert len(files) == 2
    assert files[0].read_text().splitlines()[1] == "Maximize"


def test_maxexp_curve_peak_point(capsys):
    code, out, _ = run_cli(capsys, "maxexp-curve", "--beta", str(E_INV), "--m", "40")
    assert code == 0
    beta, alpha = out.strip().splitlines()[-1].split(",")
    assert float(alpha) == pytest.approx(E_INV, abs=1e-9)


def test_maxexp_curve_gap_and_failure(capsys):
    code, out, err = run_cli(capsys, "maxexp-curve", "--beta-grid", f"0.0,{E_INV}", "--m", "40")
    assert code == 0  # one point succeeded
    assert "failed" in err
    assert len(out.strip().splitlines()) == 3
    code, _, err = run_cli(capsys, "maxexp-curve", "--beta", "0.0", "--m", "40")
    assert code == 3


def test_bad_arguments(capsys):
    code, _, err = run_cli(capsys, "simulate", "--real", "nope:1", "--predicted",
                           "uniform:0,1", "--threshold", "dynkin:0.5", "--n", "5")
    assert code == 2
    assert "error" in err


def test_grid_parsing():
    assert cli.parse_grid("0:1:0.5") == [0.0, 0.5, 1.0]
    assert cli.parse_grid("0.1,0.2") == [0.1, 0.2]
    with pytest.raises(cli.CliError):
        cli.parse_grid("0:1:-1")


def test_prior_spec_parsing(tmp_path):
    assert cli.parse_prior("uniform:2,3").cdf(2.5) == 0.5
    assert cli.parse_prior("exp:2.0").quantile(0.0) == 0.0
    assert cli.parse_prior("harmonic:4").support_size == 4
    pmf_file = tmp_path / "pmf.txt"
    pmf_file.write_text("0.5\n0.25\n0.25\n")
    assert cli.parse_prior(f"pmf:{pmf_file}").support_size == 3
    with pytest.raises(cli.CliError):
        cli.parse_prior("uniform:1")
