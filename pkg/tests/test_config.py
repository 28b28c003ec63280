from pathlib import Path

import pytest
import yaml

from maxout_mlp.config import (RunConfig, build_network, config_from_dict, dump_config,
                               load_config)
from maxout_mlp.exceptions import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_defaults_follow_the_mnist_architecture():
    cfg = RunConfig(seed=0)
    assert cfg.model.hidden_units == [1200, 1200]
    assert cfg.model.pool_size == 5
    assert (cfg.data.n_train, cfg.data.n_valid) == (50000, 10000)
    assert (cfg.dropout.input_keep, cfg.dropout.hidden_keep) == (0.8, 0.5)
    assert cfg.optimizer.batch_size == 100
    assert cfg.protocol.patience == 20


def test_seed_is_mandatory():
    with pytest.raises(ConfigError) as info:
        load_config(CONFIGS / "xor.yaml", validate=False).__class__().validate()
    assert info.value.field == "seed"


def test_width_not_divisible_by_pool():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"seed": 1, "data": {"kind": "xor"},
                          "model": {"hidden_units": [1200, 1201]}}).validate()
    assert info.value.field == "model.hidden_units[1]"
    assert "1201" in str(info.value)


@pytest.mark.parametrize("raw, field", [
    ({"seed": 1, "bogus": 2}, "config"),
    ({"seed": 1, "model": {"widths": [4]}}, "model"),
    ({"seed": 1, "optimizer": {"base_lr": -1}}, "optimizer.base_lr"),
    ({"seed": 1, "protocol": {"patience": -1}}, "protocol.patience"),
    ({"seed": 1, "data": {"kind": "xor"}, "dropout": {"hidden_keep": 0}},
     "dropout.hidden_keep"),
    ({"seed": 1, "precision": "float16", "data": {"kind": "xor"}}, "precision"),
    ({"seed": 1}, "data.train_images"),
    ({"seed": 1, "data": {"kind": "mnist_like"}}, "data.kind"),
])
def test_field_level_errors(raw, field):
    with pytest.raises(ConfigError) as info:
        config_from_dict(raw).validate()
    assert info.value.field == field


def test_mnist_dir_fills_paths(tmp_path):
    cfg = config_from_dict({"seed": 1, "data": {"mnist_dir": str(tmp_path)}}).validate()
    paths = cfg.data.resolved_paths()
    assert paths["test_labels"] == tmp_path / "t10k-labels-idx1-ubyte"


def test_overrides_and_round_trip(tmp_path):
    cfg = load_config(CONFIGS / "xor.yaml", seed=9, out=tmp_path)
    assert cfg.seed == 9 and cfg.output.dir == str(tmp_path)
    dump_config(cfg, tmp_path / "effective.yaml")
    again = load_config(tmp_path / "effective.yaml")
    assert again == cfg
    assert yaml.safe_load((tmp_path / "effective.yaml").read_text())["seed"] == 9


@pytest.mark.parametrize("name", ["mnist.yaml", "xor.yaml", "blobs.yaml", "gradcheck.yaml"])
def test_shipped_configs_parse(name):
    cfg = load_config(CONFIGS / name, validate=False)
    cfg.validate(check_data=cfg.data.kind != "mnist")


def test_build_network_uses_config():
    cfg = config_from_dict({"seed": 4, "precision": "float64", "data": {"kind": "xor"},
                            "model": {"hidden_units": [6, 6], "pool_size": 3,
                                      "n_classes": 2}}).validate()
    net = build_network(cfg, 2)
    assert [l.W.shape for l in net.affine_layers] == [(2, 6), (2, 6), (2, 2)]
    assert net.dtype.name == "float64"
