import csv
import json

import pytest

from conftest import make_dataset
from gpsabb.cli import main
from gpsabb.io import save_dataset


@pytest.fixture
def data_csv(tmp_path):
    path = tmp_path / "data.csv"
    save_dataset(make_dataset(seed=6), path, treatment="arm", outcome="event")
    return path


def _base(data_csv):
    return ["--data", str(data_csv), "--treatment", "arm", "--outcome", "event", "--seed", "3"]


def test_estimate_writes_csv_and_json(tmp_path, data_csv):
    out = tmp_path / "report.csv"
    code = main(["estimate", *_base(data_csv), "--Q", "3", "--M", "6", "--reference", "2",
                 "--estimands", "risk_difference,log_odds_ratio", "--out", str(out),
                 "--balance-out", str(tmp_path / "bal.csv"),
                 "--dump-imputations", str(tmp_path / "imp")])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 6
    meta = json.loads(out.with_suffix(".json").read_text())["metadata"]
    assert meta["reference_label"] == "2"
    assert len(list((tmp_path / "imp").glob("imputation_*.csv"))) == 6
    assert (tmp_path / "bal.csv").read_text().startswith("covariate,context,max2sb")


def test_estimate_is_reproducible(tmp_path, data_csv):
    for name in ("a.csv", "b.csv"):
        assert main(["estimate", *_base(data_csv), "--M", "4", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_config_file_and_flag_override(tmp_path, data_csv):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"method": "matching", "M": 4}))
    out = tmp_path / "r.csv"
    assert main(["estimate", *_base(data_csv), "--config", str(cfg), "--out", str(out)]) == 0
    assert {r["method"] for r in csv.DictReader(out.open())} == {"matching"}
    assert main(["estimate", *_base(data_csv), "--config", str(cfg), "--method", "ipw",
                 "--out", str(out)]) == 0
    assert {r["method"] for r in csv.DictReader(out.open())} == {"ipw"}


def test_missing_seed_is_usage_error(data_csv, tmp_path):
    args = ["estimate", "--data", str(data_csv), "--treatment", "arm", "--outcome", "event",
            "--out", str(tmp_path / "x.csv")]
    with pytest.raises(SystemExit) as exc:
        main(args)
    assert exc.value.code == 2


def test_bad_input_reports_error(tmp_path, data_csv, capsys):
    code = main(["estimate", "--data", str(data_csv), "--treatment", "arm", "--outcome", "nope",
                 "--seed", "1", "--out", str(tmp_path / "x.csv")])
    assert code != 0
    assert "missing column" in capsys.readouterr().err
    code = main(["estimate", *_base(data_csv), "--reference", "zzz", "--out", str(tmp_path / "x.csv")])
    assert code != 0


def test_balance_command(tmp_path, data_csv):
    out = tmp_path / "bal.csv"
    assert main(["balance", *_base(data_csv), "--method", "matching", "--out", str(out)]) == 0
    contexts = {r["context"] for r in csv.DictReader(out.open())}
    assert contexts == {"raw", "matched"}


def test_sensitivity_command(tmp_path, data_csv):
    out = tmp_path / "sens.csv"
    assert main(["sensitivity", *_base(data_csv), "--M", "4", "--reference", "1",
                 "--delta=-0.5,0.5", "--phi", "0", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 2 * 1 * 2 + 2
    assert {r["contrast"] for r in rows} == {"1 vs 2", "1 vs 3"}


def test_simulate_command(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--seed", "1", "--b", "0.5", "--methods", "abb:3,ipw",
                 "--R", "2", "--M", "4", "--out", str(out)]) == 0
    assert "abb:3" in capsys.readouterr().out
    assert len(list(csv.DictReader(out.open()))) == 4


def test_simulate_rejects_bad_method():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--seed", "1", "--methods", "ols"])
    assert exc.value.code == 2
