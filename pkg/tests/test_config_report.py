import json

import pytest

from spectragraph.config import SCHEMA, ConfigError, defaults, format_schema, load_config, parse_config
from spectragraph.report import RunReport, format_report, load_report, read_csv, save_report, write_csv


def test_parse_types_and_comments():
    cfg = parse_config("# run\nepochs = 7\nrates = 1.0, 0.5\nhalf_spectrum = yes  # trailing\nK = none\n")
    assert cfg == {"epochs": 7, "rates": [1.0, 0.5], "half_spectrum": True, "K": None}


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="'epoch'"):
        parse_config("epoch = 3")


def test_bad_value_named():
    with pytest.raises(ConfigError, match="'lr'"):
        parse_config("lr = fast")
    with pytest.raises(ConfigError, match=":2:"):
        parse_config("seed = 1\nno equals sign")


def test_defaults_cover_schema(tmp_path):
    assert set(defaults()) == set(SCHEMA)
    assert all(k in format_schema() for k in SCHEMA)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


def test_report_json_round_trip(tmp_path):
    r = RunReport(task={"dataset": "synth"}, config={}, model={"name": "mlp"}, seed=3,
                  metrics={"accuracy": 0.9, "specificity": 1.0, "sensitivity": 0.8,
                           "tp": 4, "tn": 5, "fp": 0, "fn": 1},
                  timing={"created": "x"})
    save_report(r, tmp_path / "r.json")
    back = load_report(tmp_path / "r.json")
    assert back == r and back.final_accuracy() == 0.9
    assert json.loads((tmp_path / "r.json").read_text())["seed"] == 3
    assert "acc 0.9000" in format_report(back)


def test_csv_round_trip(tmp_path):
    write_csv(tmp_path / "t.csv", [{"a": 1, "b": 2.5}, {"a": 3, "b": 4.0}])
    assert read_csv(tmp_path / "t.csv") == [{"a": "1", "b": "2.5"}, {"a": "3", "b": "4.0"}]
