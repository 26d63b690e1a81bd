import json

import pytest
import yaml

from config.config import DEFAULT_CONFIG, env_overrides, get_section, load_config, save_config
from utils.errors import ConfigError


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return str(path)


def test_defaults_validate_and_are_copied():
    config = load_config(environ={})
    assert config == DEFAULT_CONFIG
    config["convergence"]["budget"] = 1
    assert load_config(environ={})["convergence"]["budget"] == DEFAULT_CONFIG["convergence"]["budget"]


def test_precedence_flag_over_env_over_file(tmp_path):
    path = write_yaml(tmp_path / "run.yaml", {"convergence": {"budget": 100, "lambda": 0.5}})
    environ = {"CONVERGEX_CONVERGENCE__BUDGET": "200"}
    overrides = {"convergence": {"budget": 300}}

    assert load_config(path, environ={})["convergence"]["budget"] == 100
    assert load_config(path, environ=environ)["convergence"]["budget"] == 200
    config = load_config(path, overrides, environ)
    assert config["convergence"]["budget"] == 300
    assert config["convergence"]["lambda"] == 0.5
    assert config["convergence"]["engine"] == "mmr"


def test_json_config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"cluster": {"min_cluster_size": 8, "min_samples": 3}}), encoding="utf-8")
    config = load_config(str(path), environ={})
    assert config["cluster"] == {"min_cluster_size": 8, "min_samples": 3, "drop_noise": False}


def test_empty_yaml_means_defaults(tmp_path):
    path = tmp_path / "empty.yml"
    path.write_text("", encoding="utf-8")
    assert load_config(str(path), environ={}) == DEFAULT_CONFIG


@pytest.mark.parametrize("content", ["{broken", "[1, 2]"])
def test_unreadable_config_file(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(path), environ={})


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.yaml"), environ={})


def test_env_overrides_parsing():
    environ = {
        "CONVERGEX_VIDEOKEY__WINDOW_LEN": "15",
        "CONVERGEX_LOGGING__LOG_LEVEL": "DEBUG",
        "CONVERGEX_CLUSTER__DROP_NOISE": "true",
        "CONVERGEX_FIXTURE_DIR": "/data/fixtures",
        "CONVERGEX_ENDPOINT_SUMMARIZER": "http://localhost:9000",
        "HOME": "/root",
    }
    assert env_overrides(environ) == {
        "videokey": {"window_len": 15},
        "logging": {"log_level": "DEBUG"},
        "cluster": {"drop_noise": True},
        "clients": {"fixture_dir": "/data/fixtures"},
    }


@pytest.mark.parametrize("overrides", [
    {"nonsense": {}},
    {"videokey": {"frame_rate": 30}},
    {"videokey": 5},
    {"convergence": {"engine": "abstractive"}},
    {"tokenizer": {"policy": "shouting"}},
    {"clients": {"mode": "offline"}},
    {"videokey": {"fps": "fast"}},
    {"videokey": {"order": True}},
    {"cluster": {"min_samples": "3"}},
    {"cluster": {"min_samples": False}},
])
def test_rejects_unknown_keys_choices_and_types(overrides):
    with pytest.raises(ConfigError):
        load_config(overrides=overrides, environ={})


@pytest.mark.parametrize("overrides", [
    {"videokey": {"fps": 0.0}},
    {"videokey": {"window_len": 4}},
    {"videokey": {"window_len": 1}},
    {"videokey": {"order": 0}},
    {"videokey": {"brightness_lo": 200.0, "brightness_hi": 100.0}},
    {"videokey": {"brightness_percentiles": [90.0, 10.0]}},
    {"videokey": {"brightness_percentiles": [10.0]}},
    {"videokey": {"dct_keep": 40}},
    {"cluster": {"min_cluster_size": 1}},
    {"cluster": {"min_samples": 0}},
    {"retrieval": {"k": 0}},
    {"retrieval": {"chunk_size": 32, "chunk_overlap": 32}},
    {"clients": {"retries": -1}},
    {"clients": {"backoff_factor": 0.5}},
    {"clients": {"endpoints": {"summarizer": 8080}}},
    {"convergence": {"lambda": 1.2}},
    {"convergence": {"budget": 0}},
    {"convergence": {"budget_share": 0.0}},
    {"convergence": {"budget_share": 1.5}},
    {"convergence": {"topic_threshold": -0.1}},
    {"convergence": {"sources": ["youtube", "podcast"]}},
    {"metrics": {"epsilon": 0.0}},
])
def test_rejects_out_of_range_values(overrides):
    with pytest.raises(ConfigError):
        load_config(overrides=overrides, environ={})


def test_accepts_edge_values():
    config = load_config(overrides={
        "videokey": {"window_len": 3, "fps": 0.5},
        "cluster": {"min_cluster_size": 2, "min_samples": 1},
        "convergence": {"lambda": 0.0, "topic_threshold": 1.0, "budget_share": 1.0, "sources": ["web"]},
        "clients": {"endpoints": {"ocr": "http://ocr.local"}},
    }, environ={})
    assert config["videokey"]["window_len"] == 3
    assert config["clients"]["endpoints"] == {"ocr": "http://ocr.local"}


def test_integer_accepted_for_float_keys():
    assert load_config(overrides={"convergence": {"lambda": 1}}, environ={})["convergence"]["lambda"] == 1


def test_save_config_round_trip(tmp_path):
    config = load_config(overrides={"retrieval": {"k": 5}}, environ={})
    path = tmp_path / "saved.json"
    save_config(config, str(path))
    text = path.read_text(encoding="utf-8")
    assert text.endswith("}\n") and "\r" not in text
    assert load_config(str(path), environ={}) == config


def test_save_config_validates(tmp_path):
    config = load_config(environ={})
    config["convergence"]["budget"] = -5
    with pytest.raises(ConfigError):
        save_config(config, str(tmp_path / "bad.json"))
    assert not (tmp_path / "bad.json").exists()


def test_get_section():
    config = load_config(environ={})
    assert get_section(config, "cluster")["min_cluster_size"] == 5
    with pytest.raises(ConfigError):
        get_section(config, "dice")
