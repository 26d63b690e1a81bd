"""
Configuration Module

This module handles loading, validating and saving the pipeline configuration.
Values are resolved with flag > environment > file > default precedence and
every key is checked against DEFAULT_CONFIG; unknown keys are rejected.
"""

import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml  # type: ignore

from utils.errors import ConfigError
from utils.text_processing import DEFAULT_ABBREVIATIONS, TOKENIZER_POLICIES

ENV_PREFIX = "CONVERGEX_"

# Default configuration settings
DEFAULT_CONFIG: Dict[str, Any] = {
    "tokenizer": {
        "policy": "default",
        "abbreviations": list(DEFAULT_ABBREVIATIONS),
    },
    "metrics": {
        "epsilon": 1e-9,
        "coherence_vectorizer": "tf",
    },
    "videokey": {
        "fps": 30.0,
        "window_len": 25,
        "order": 5,
        "include_boundary_maxima": False,
        "seed_first_shot": True,
        "quality_mode": "absolute",
        "brightness_lo": 25.5,
        "brightness_hi": 229.5,
        "min_entropy": 1.0,
        "brightness_percentiles": [10.0, 90.0],
        "entropy_percentile": 25.0,
        "entropy_radius": 5,
        "dct_size": 32,
        "dct_keep": 8,
        "progress": False,
    },
    "cluster": {
        "min_cluster_size": 5,
        "min_samples": None,
        "drop_noise": False,
    },
    "retrieval": {
        "dim": 384,
        "k": 10,
        "rerank_n": 10,
        "chunk_size": 256,
        "chunk_overlap": 32,
        "metric": "cosine",
        "rag_top_k": 4,
        "extract_budget": 120,
        "corpus_path": None,
        "index_path": None,
    },
    "clients": {
        "mode": "auto",
        "fixture_dir": None,
        "endpoints": {},
        "timeout_s": 60.0,
        "retries": 3,
        "backoff_base_s": 0.2,
        "backoff_factor": 2.0,
        "web_engines": ["wikipedia", "duckduckgo", "google"],
        "target_language": "en",
        "echo_sentences": 3,
    },
    "convergence": {
        "engine": "mmr",
        "lambda": 0.7,
        "budget": 400,
        "budget_share": 0.125,
        "similarity": "tf",
        "topic_threshold": 0.5,
        "off_topic_labels": [],
        "max_workers": 4,
        "sources": ["youtube", "arxiv", "web"],
    },
    "logging": {
        "log_level": "INFO",
        "log_to_file": False,
        "log_file": None,
    },
}

# Sections whose keys are free-form (service name -> value)
FREE_FORM_KEYS = {("clients", "endpoints")}

CHOICES = {
    ("tokenizer", "policy"): set(TOKENIZER_POLICIES),
    ("metrics", "coherence_vectorizer"): {"tf", "embedding"},
    ("videokey", "quality_mode"): {"absolute", "percentile"},
    ("retrieval", "metric"): {"cosine"},
    ("clients", "mode"): {"auto", "fixture", "live"},
    ("convergence", "engine"): {"mmr", "service"},
    ("convergence", "similarity"): {"tf", "embedding"},
    ("logging", "log_level"): {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"},
}

# Defaults of None accept these types
NULLABLE_TYPES = {
    ("cluster", "min_samples"): int,
    ("retrieval", "corpus_path"): str,
    ("retrieval", "index_path"): str,
    ("clients", "fixture_dir"): str,
    ("logging", "log_file"): str,
}

KNOWN_SOURCES = ("youtube", "arxiv", "web")


def load_config(path: Optional[str] = None,
                overrides: Optional[Mapping[str, Any]] = None,
                environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    """
    Load configuration from defaults, a file, the environment and overrides.

    Args:
        path: Optional JSON or YAML config file
        overrides: Nested overrides from command-line flags (highest precedence)
        environ: Environment mapping (defaults to os.environ)

    Returns:
        Validated configuration dictionary

    Raises:
        ConfigError: on unreadable files, unknown keys or invalid values
    """
    config = copy.deepcopy(DEFAULT_CONFIG)

    if path:
        _deep_update(config, _read_config_file(path))

    _deep_update(config, env_overrides(os.environ if environ is None else environ))

    if overrides:
        _deep_update(config, copy.deepcopy(dict(overrides)))

    validate_config(config)
    return config


def _read_config_file(path: str) -> Dict[str, Any]:
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            if config_path.suffix in (".yaml", ".yml"):
                loaded = yaml.safe_load(f)
            else:
                loaded = json.load(f)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Error loading config from {path}: {e}") from e
    if loaded is None:
        return {}
    if not isinstance(loaded, dict):
        raise ConfigError(f"Config file {path} must hold an object")
    return loaded


def env_overrides(environ: Mapping[str, str]) -> Dict[str, Any]:
    """
    Collect CONVERGEX_<SECTION>__<KEY> overrides; values are parsed as JSON
    when possible and kept as strings otherwise. CONVERGEX_FIXTURE_DIR maps
    to clients.fixture_dir.
    """
    result: Dict[str, Any] = {}
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        value = environ[name]
        if name == f"{ENV_PREFIX}FIXTURE_DIR":
            result.setdefault("clients", {})["fixture_dir"] = value
            continue
        body = name[len(ENV_PREFIX):]
        if "__" not in body:
            continue
        section, key = body.split("__", 1)
        result.setdefault(section.lower(), {})[key.lower()] = _parse_env_value(value)
    return result


def _parse_env_value(value: str) -> Any:
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def validate_config(config: Dict[str, Any]) -> None:
    """
    Check keys, types and ranges.

    Raises:
        ConfigError: describing the first problem found
    """
    for section, values in config.items():
        if section not in DEFAULT_CONFIG:
            raise ConfigError(f"Unknown config section: {section}")
        if not isinstance(values, dict):
            raise ConfigError(f"Config section {section} must be an object")
        for key, value in values.items():
            if key not in DEFAULT_CONFIG[section]:
                raise ConfigError(f"Unknown config key: {section}.{key}")
            _check_type(section, key, value)

    for (section, key), allowed in CHOICES.items():
        if config[section][key] not in allowed:
            raise ConfigError(f"{section}.{key} must be one of {sorted(allowed)}, got {config[section][key]!r}")

    video = config["videokey"]
    _require(video["fps"] > 0, "videokey.fps must be positive")
    _require(video["window_len"] >= 3 and video["window_len"] % 2 == 1, "videokey.window_len must be odd and >= 3")
    _require(video["order"] >= 1, "videokey.order must be >= 1")
    _require(0 <= video["brightness_lo"] <= video["brightness_hi"] <= 255,
             "videokey brightness band must satisfy 0 <= lo <= hi <= 255")
    _require(video["min_entropy"] >= 0, "videokey.min_entropy must be >= 0")
    lo_pct, hi_pct = _pair(video["brightness_percentiles"], "videokey.brightness_percentiles")
    _require(0 <= lo_pct <= hi_pct <= 100, "videokey.brightness_percentiles must lie in [0, 100] and be ordered")
    _require(0 <= video["entropy_percentile"] <= 100, "videokey.entropy_percentile must lie in [0, 100]")
    _require(video["entropy_radius"] >= 1, "videokey.entropy_radius must be >= 1")
    _require(1 <= video["dct_keep"] <= video["dct_size"], "videokey.dct_keep must be between 1 and dct_size")

    cluster = config["cluster"]
    _require(cluster["min_cluster_size"] >= 2, "cluster.min_cluster_size must be >= 2")
    _require(cluster["min_samples"] is None or cluster["min_samples"] >= 1, "cluster.min_samples must be >= 1")

    retrieval = config["retrieval"]
    for key in ("dim", "k", "rerank_n", "rag_top_k", "extract_budget"):
        _require(retrieval[key] >= 1, f"retrieval.{key} must be >= 1")
    _require(retrieval["chunk_size"] > retrieval["chunk_overlap"] >= 0,
             "retrieval.chunk_size must exceed chunk_overlap >= 0")

    clients = config["clients"]
    _require(clients["timeout_s"] > 0, "clients.timeout_s must be positive")
    _require(clients["retries"] >= 0, "clients.retries must be >= 0")
    _require(clients["backoff_base_s"] >= 0 and clients["backoff_factor"] >= 1,
             "clients backoff must have base >= 0 and factor >= 1")
    _require(clients["echo_sentences"] >= 1, "clients.echo_sentences must be >= 1")
    for service, url in clients["endpoints"].items():
        _require(isinstance(url, str), f"clients.endpoints.{service} must be a string")

    conv = config["convergence"]
    _require(0.0 <= conv["lambda"] <= 1.0, "convergence.lambda must lie in [0, 1]")
    _require(conv["budget"] >= 1, "convergence.budget must be >= 1")
    _require(0.0 < conv["budget_share"] <= 1.0, "convergence.budget_share must lie in (0, 1]")
    _require(0.0 <= conv["topic_threshold"] <= 1.0, "convergence.topic_threshold must lie in [0, 1]")
    _require(conv["max_workers"] >= 1, "convergence.max_workers must be >= 1")
    unknown = [s for s in conv["sources"] if s not in KNOWN_SOURCES]
    _require(not unknown, f"Unknown source(s): {unknown}")

    _require(config["metrics"]["epsilon"] > 0, "metrics.epsilon must be positive")


def _check_type(section: str, key: str, value: Any) -> None:
    default = DEFAULT_CONFIG[section][key]
    if (section, key) in FREE_FORM_KEYS:
        ok = isinstance(value, dict)
    elif default is None:
        ok = value is None or isinstance(value, NULLABLE_TYPES[(section, key)])
        if isinstance(value, bool):
            ok = False
    elif isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError(f"{section}.{key} has invalid type {type(value).__name__}")


def _pair(value: Any, name: str):
    if len(value) != 2 or not all(isinstance(v, (int, float)) for v in value):
        raise ConfigError(f"{name} must hold two numbers")
    return float(value[0]), float(value[1])


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def save_config(config: Dict[str, Any], path: str) -> None:
    """
    Save configuration to a JSON file.

    Args:
        config: Configuration dictionary to save
        path: Destination file
    """
    validate_config(config)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(config, f, indent=2, sort_keys=True)
        f.write("\n")


def get_section(config: Dict[str, Any], section: str) -> Dict[str, Any]:
    """
    Get configuration specific to one module.

    Args:
        config: Full configuration dictionary
        section: Section name

    Returns:
        Section dictionary
    """
    if section not in config:
        raise ConfigError(f"Unknown config section: {section}")
    return config[section]


def _deep_update(base_dict: Dict[str, Any], update_dict: Dict[str, Any]) -> None:
    """
    Recursively update a dictionary with another dictionary.

    Args:
        base_dict: Dictionary to update
        update_dict: Dictionary with updates
    """
    for key, value in update_dict.items():
        if key in base_dict and isinstance(base_dict[key], dict) and isinstance(value, dict):
            _deep_update(base_dict[key], value)
        else:
            base_dict[key] = value
