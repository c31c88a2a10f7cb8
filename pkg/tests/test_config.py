"""Config schema, JSON round trips, and named RNG substreams."""
from __future__ import annotations

import numpy as np
import pytest

from heterospec.config import (
    CONFIG_VERSION,
    CalibrationSpec,
    DraftSpec,
    ExperimentConfig,
    ModelSpec,
    PromptSpec,
    config_from_dict,
    config_to_dict,
    load_config,
    rng_for,
    save_config,
)
from heterospec.errors import ConfigError


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.version == CONFIG_VERSION == 1
    assert cfg.seed == 0
    assert cfg.tokenization == "word"
    assert cfg.corpus_path is None
    assert cfg.planted.num_docs == 96
    assert cfg.model == ModelSpec(order=3, smoothing=0.1)
    assert cfg.draft == DraftSpec(order=2, temperature=1.0, noise=0.01)
    assert cfg.prompts == PromptSpec(count=24, prompt_tokens=8,
                                     calibration_count=30)
    assert cfg.calibration.filter == "fully-accepted"
    assert cfg.controller.depth == 5
    assert cfg.cost.c_call == 1.0


def test_version_and_tokenization_validation():
    with pytest.raises(ConfigError, match="version"):
        ExperimentConfig(version=2)
    with pytest.raises(ConfigError, match="tokenization"):
        ExperimentConfig(tokenization="byte")


def test_calibration_spec_validation():
    with pytest.raises(ConfigError):
        CalibrationSpec(criterion="gini")
    with pytest.raises(ConfigError):
        CalibrationSpec(max_depth=0)
    with pytest.raises(ConfigError):
        CalibrationSpec(filter="some")


def test_rng_for_reproducible_independent_streams():
    a1 = rng_for(7, "corpus").random(5)
    a2 = rng_for(7, "corpus").random(5)
    b = rng_for(7, "verify").random(5)
    c = rng_for(8, "corpus").random(5)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)
    assert not np.array_equal(a1, c)


def test_config_from_dict_minimal_and_sections():
    cfg = config_from_dict({})
    assert cfg == ExperimentConfig()
    cfg = config_from_dict({
        "seed": 5,
        "corpus": {"planted": {"num_docs": 10, "doc_len": 50,
                               "template_len": 8, "vocab_size": 12}},
        "controller": {"depth": 3, "low_bins": [0, 1]},
        "draft": {"order": None, "noise": 0.2},
    })
    assert cfg.seed == 5
    assert cfg.planted.num_docs == 10
    assert cfg.controller.low_bins == (0, 1)  # JSON list becomes tuple
    assert cfg.draft.order is None


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError, match=r"unknown keys \['sneed'\]"):
        config_from_dict({"sneed": 1})
    with pytest.raises(ConfigError, match=r"config\.model: unknown keys"):
        config_from_dict({"model": {"order": 2, "window": 4}})
    with pytest.raises(ConfigError, match=r"corpus: unknown keys"):
        config_from_dict({"corpus": {"file": "x.txt"}})


def test_config_from_dict_corpus_path_xor_planted():
    cfg = config_from_dict({"corpus": {"path": "corpus.txt"}})
    assert cfg.corpus_path == "corpus.txt"
    with pytest.raises(ConfigError, match="not both"):
        config_from_dict({"corpus": {"path": "corpus.txt",
                                     "planted": {"num_docs": 4}}})


def test_config_from_dict_shape_errors():
    with pytest.raises(ConfigError, match="top level"):
        config_from_dict([1, 2])
    with pytest.raises(ConfigError, match="expected an object"):
        config_from_dict({"model": 3})
    with pytest.raises(ConfigError, match="corpus"):
        config_from_dict({"corpus": "corpus.txt"})


def test_config_json_round_trip(tmp_path):
    cfg = config_from_dict({
        "seed": 11,
        "out_dir": "runs/x",
        "controller": {"depth": 4, "top_n": 16, "low_bins": [0]},
        "calibration": {"filter": "accepting"},
        "cost": {"c_tok": 0.0},
    })
    path = str(tmp_path / "config.json")
    save_config(cfg, path)
    assert load_config(path) == cfg
    # a second dump of the reloaded config is byte-identical
    again = str(tmp_path / "config2.json")
    save_config(load_config(path), again)
    assert open(path).read() == open(again).read()
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_load_config_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(str(path))


def test_load_config_missing_file_is_oserror(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / "absent.json"))
