import json
import subprocess
import sys

import pandas as pd
import pytest

from jumprisk.cli import main

SMALL = {"simulation": {"n_assets": 20, "n_days": 756, "intervals_per_day": 13, "intervals_per_night": 1},
         "strategy": {"placebo_seeds": [1, 2], "costs_bps": [10, 20, 50]}}
REPORTS = ["table2.csv", "table3.csv", "table4.csv", "table6.csv", "table7.csv", "tests.json"]


def write_config(tmp_path, out, **extra):
    cfg = dict(SMALL, out=str(out), **extra)
    p = tmp_path / f"cfg_{out.name}.json"
    p.write_text(json.dumps(cfg))
    return p


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    out = tmp / "run"
    assert main(["all", "--config", str(write_config(tmp, out))]) == 0
    return tmp, out


def test_full_run_emits_reports(full_run):
    _, out = full_run
    for name in REPORTS:
        assert (out / "reports" / name).exists()
    t4 = pd.read_csv(out / "reports" / "table4.csv")
    assert list(t4.columns) == ["Factor", "Ann RP(%)", "Std Err(%)", "SR"]


def test_stage_by_stage_matches_all(full_run, tmp_path):
    _, out = full_run
    out2 = tmp_path / "staged"
    cfg = write_config(tmp_path, out2)
    for stage in ["simulate", "detect", "classify", "betas", "fmb", "strategy", "rollover", "report"]:
        assert main([stage, "--config", str(cfg)]) == 0
    for f in sorted(out.rglob("*")):
        if f.is_file():
            assert f.read_bytes() == (out2 / f.relative_to(out)).read_bytes(), f.name


def test_seed_override_changes_outputs(full_run, tmp_path):
    tmp, out = full_run
    out2 = tmp_path / "seeded"
    assert main(["simulate", "--config", str(write_config(tmp_path, out2)), "--seed", "5"]) == 0
    assert (out2 / "factor.csv").read_bytes() != (out / "factor.csv").read_bytes()


def test_missing_input_names_stage_and_path(tmp_path, capsys):
    code = main(["fmb", "--out", str(tmp_path / "empty")])
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert code == 1
    assert err["stage"] == "fmb" and err["path"].endswith("factor.csv")


def test_invalid_config_exits_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"jumps": {"varpi": 0.7}}))
    assert main(["detect", "--config", str(p)]) == 1
    assert "varpi" in capsys.readouterr().err
    p.write_text(json.dumps({"colour": "blue"}))
    assert main(["detect", "--config", str(p)]) == 1


def test_unknown_command_exits_1():
    with pytest.raises(SystemExit) as exc:
        main(["dance"])
    assert exc.value.code == 1


def test_runtime_failure_exits_2(tmp_path, capsys):
    # a factor file with too few days for any premium estimate
    cfg = dict(SMALL, out=str(tmp_path / "short"))
    cfg["simulation"] = dict(SMALL["simulation"], n_days=60)
    p = tmp_path / "short.json"
    p.write_text(json.dumps(cfg))
    assert main(["all", "--config", str(p)]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["stage"] in ("fmb", "strategy", "report") and err["message"]


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "jumprisk.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "--seed" in res.stdout


def test_announcement_schedule_input(full_run, tmp_path):
    tmp, out = full_run
    run = tmp_path / "ann"
    run.mkdir()
    for f in out.glob("*.*"):
        (run / f.name).write_bytes(f.read_bytes())
    dates = pd.read_csv(out / "factor.csv")["ts_utc"].str[:10].drop_duplicates()
    sched = tmp_path / "schedule.csv"
    sched.write_text("date\n" + "\n".join(dates.iloc[5::21]) + "\n")
    cfg = write_config(tmp_path, run, inputs={"schedule": str(sched)})
    assert main(["strategy", "--config", str(cfg)]) == 0
    ann = json.loads((run / "announcement.json").read_text())
    assert ann["n_windows"] == len(dates.iloc[5::21])
    assert ann["per_year"] == pytest.approx(12.0, abs=0.5)
