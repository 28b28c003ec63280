import numpy as np
import pytest

from maxout_mlp.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from maxout_mlp.exceptions import DataError
from maxout_mlp.network import MaxoutNetwork


@pytest.fixture
def net(rng):
    return MaxoutNetwork(6, (10, 10), 5, 3, 0.8, 0.5, random_state=rng)


def test_round_trip(net, tmp_path, rng):
    save_checkpoint(tmp_path / "c.npz", net, {"seed": 3})
    loaded, meta = load_checkpoint(tmp_path / "c.npz")
    for a, b in zip(net.get_state(), loaded.get_state()):
        assert a.tobytes() == b.tobytes()
    assert meta["config"] == {"seed": 3}
    assert loaded.architecture() == net.architecture()
    X = rng.standard_normal((4, 6))
    np.testing.assert_array_equal(net.predict_logits(X), loaded.predict_logits(X))


def test_float32_round_trip(tmp_path):
    net = MaxoutNetwork(4, (4,), 2, 2, dtype=np.float32, random_state=0)
    save_checkpoint(tmp_path / "c.npz", net)
    loaded, meta = load_checkpoint(tmp_path / "c.npz")
    assert loaded.dtype == np.float32 and meta["precision"] == "float32"


def test_truncated_file(net, tmp_path):
    save_checkpoint(tmp_path / "c.npz", net)
    blob = (tmp_path / "c.npz").read_bytes()
    (tmp_path / "t.npz").write_bytes(blob[: len(blob) // 2])
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "t.npz")
    assert issubclass(CheckpointError, DataError)


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "nope.npz")


def test_hash_mismatch(net, tmp_path):
    save_checkpoint(tmp_path / "c.npz", net)
    with np.load(tmp_path / "c.npz") as z:
        members = dict(z)
    members["config_hash"] = np.array("0" * 64)
    np.savez(tmp_path / "bad.npz", **members)
    with pytest.raises(CheckpointError, match="hash"):
        load_checkpoint(tmp_path / "bad.npz")


def test_parameter_shape_mismatch(net, tmp_path):
    save_checkpoint(tmp_path / "c.npz", net)
    with np.load(tmp_path / "c.npz") as z:
        members = dict(z)
    members["param_0000"] = np.zeros((7, 10))
    np.savez(tmp_path / "bad.npz", **members)
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "bad.npz")
