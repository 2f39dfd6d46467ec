import csv
import io

import pytest

from ridgesplit.cli import main
from ridgesplit.config import SEED_ENV_VAR


def test_recommend(capsys):
    assert main(["recommend", "--m", "1000", "--n", "5"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0][0] == "m" and rows[1][-1] == "266"
    assert main(["recommend", "--m", "12", "--n", "5"]) == 0
    assert list(csv.reader(io.StringIO(capsys.readouterr().out)))[1][-1] == "7"


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["recommend", "--m", "10"])
    assert exc.value.code == 1
    assert main(["recommend", "--m", "6", "--n", "5"]) == 1
    assert "no split" in capsys.readouterr().err


def test_im_curve_with_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("m = 80\nn = 3\nc = 0.1\nsigma = 0.1\nalpha = 2\ntrials = 200\nseed = 42\n")
    out = tmp_path / "out"
    assert main(["im-curve", "--config", str(cfg), "--alpha=4", "--step", "5", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "im_curve.csv", newline="")))
    assert {r["alpha"] for r in rows} == {"4"}
    assert (out / "recommendation.csv").exists()


def test_im_curve_bad_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("m = 80\nn = 3\nc = 0.1\nsigma = 0.1\nalpha = -1\n")
    assert main(["im-curve", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "alpha > 0" in capsys.readouterr().err


def test_im_curve_io_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    args = ["im-curve", "--m", "40", "--n", "2", "--c", "0.1", "--sigma", "0.1", "--alpha", "1",
            "--trials", "100", "--step", "10", "--out", str(blocker / "sub")]
    assert main(args) == 2


def test_verify_moments(tmp_path, capsys):
    code = main(["verify-moments", "--n", "3", "--alpha", "2", "--p-ladder", "50,100,200",
                 "--trials", "20000", "--seed", "3", "--bounds-instances", "300", "--out", str(tmp_path)])
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "moments.csv", newline="")))
    assert all(r["passed"] == "true" for r in rows)
    assert "PASS" in capsys.readouterr().out


def test_verify_moments_failure_exit_code(tmp_path, capsys, monkeypatch):
    import ridgesplit.report as report
    real = report.moment_report

    def broken(*args, **kwargs):
        rep = real(*args, **kwargs)
        rep.rows[0]["passed"] = False
        return rep

    monkeypatch.setattr(report, "moment_report", broken)
    code = main(["verify-moments", "--n", "2", "--p-ladder", "20,40,80", "--trials", "500",
                 "--bounds-instances", "10", "--out", str(tmp_path)])
    assert code == 2
    rows = list(csv.DictReader(open(tmp_path / "moments.csv", newline="")))
    assert rows[0]["passed"] == "false"
    assert "FAIL" in capsys.readouterr().out


def test_verify_moments_ladder_precondition(tmp_path):
    assert main(["verify-moments", "--n", "3", "--p-ladder", "4,40", "--out", str(tmp_path)]) == 1


def test_reproduce_figures(tmp_path, monkeypatch):
    monkeypatch.setenv(SEED_ENV_VAR, "11")
    code = main(["reproduce-figures", "--panels", "1-2", "--trials", "200", "--m-ladder", "40,60",
                 "--out", str(tmp_path)])
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "panel-1.csv", "panel-1.svg", "panel-2.csv", "panel-2.svg"]
    rows = list(csv.DictReader(open(tmp_path / "panel-1.csv", newline="")))
    assert {r["seed"] for r in rows} == {"11"}


def test_bad_panel_list():
    with pytest.raises(SystemExit) as exc:
        main(["reproduce-figures", "--panels", "0-9"])
    assert exc.value.code == 1
