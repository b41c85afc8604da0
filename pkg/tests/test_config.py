"""Config schema: validation messages, default materialization, round-trips."""

import json
import math

import pytest

from condux.config import (
    EXPERIMENTS,
    config_from_dict,
    load_config,
    materialize,
    validate_raw,
)
from condux.errors import ConfigError
from condux.experiments import run_experiment


def test_experiment_names():
    assert EXPERIMENTS == ("kapitza", "fhn", "hh", "chua", "lorenz",
                           "observer", "probe")


def test_defaults_materialized():
    cfg = config_from_dict({"experiment": "kapitza"})
    assert cfg.params["omega"] == 1000.0
    assert cfg.params["amplitude_grid"][7] == pytest.approx(0.8 * math.pi)
    assert cfg.step is None
    assert cfg.seed == 0
    assert cfg.out_prefix == "kapitza"


def test_given_values_survive_materialization():
    raw = {"experiment": "chua", "params": {"M": 150.0},
           "integration": {"step": 0.01}, "seed": 7, "out_prefix": "trial"}
    cfg = config_from_dict(raw)
    assert cfg.params["M"] == 150.0
    assert cfg.params["omega"] == 1.0  # untouched default
    assert cfg.step == 0.01
    assert cfg.seed == 7
    assert cfg.out_prefix == "trial"


def test_missing_experiment_is_the_only_error():
    assert validate_raw({}) == ["experiment: required field"]


def test_unknown_experiment():
    msgs = validate_raw({"experiment": "pendulum"})
    assert len(msgs) == 1
    assert msgs[0].startswith("experiment: expected one of")


def test_non_object_config():
    assert validate_raw([1, 2]) == ["config: expected a JSON object"]


def test_all_violations_reported_at_once():
    raw = {
        "experiment": "hh",
        "params": {"levels": [1.0, 0.5, "x", -0.5], "bogus": 3,
                   "sync_periods": 2.5},
        "integration": {"step": -1.0, "solver": "rk4"},
        "seed": "zero",
        "note": "hi",
    }
    with pytest.raises(ConfigError) as exc:
        config_from_dict(raw)
    msgs = str(exc.value).split("; ")
    paths = {m.split(":")[0] for m in msgs}
    assert paths == {"params.levels[2]", "params.bogus", "params.sync_periods",
                     "integration.step", "integration.solver", "seed", "note"}


def test_bool_is_not_a_number():
    msgs = validate_raw({"experiment": "kapitza", "params": {"alpha": True}})
    assert msgs == ["params.alpha: expected number, got bool"]


def test_points_field_checks_rows():
    msgs = validate_raw({"experiment": "hh",
                         "params": {"sync_ics": [[1.0, 0.0], 5]}})
    assert msgs == ["params.sync_ics[1]: expected a list of numbers"]


def test_probe_target_enum():
    msgs = validate_raw({"experiment": "probe", "params": {"target": "chua"}})
    assert msgs == ["params.target: expected one of leaky, fhn, hh"]
    assert validate_raw({"experiment": "probe", "params": {"target": "hh"}}) == []


def test_materialize_idempotent():
    full = materialize({"experiment": "lorenz"})
    assert materialize(full) == full


def test_round_trip_through_to_dict():
    cfg = config_from_dict({"experiment": "fhn", "params": {"eps": 0.05},
                            "seed": 3})
    again = config_from_dict(cfg.to_dict())
    assert again == cfg


def test_load_config_rejects_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(str(path))


def test_load_config_reads_file(tmp_path):
    path = tmp_path / "probe.json"
    path.write_text(json.dumps({"experiment": "probe"}), encoding="utf-8")
    cfg = load_config(str(path))
    assert cfg.experiment == "probe"
    assert cfg.params["target"] == "leaky"


def test_echoed_config_matches_to_dict(tmp_path):
    cfg = config_from_dict({"experiment": "probe", "params": {"t1": 10.0}})
    run_experiment(cfg, str(tmp_path))
    echoed = json.loads((tmp_path / "probe_config.json").read_text())
    assert echoed == cfg.to_dict()
    # echoed config validates and reproduces the same materialized object
    assert config_from_dict(echoed) == cfg
