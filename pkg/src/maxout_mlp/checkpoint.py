"""Checkpoint files.

A checkpoint is an uncompressed numpy ``.npz`` archive with these members:

``format_version``  int scalar, currently 1
``architecture``    JSON string (input_dim, hidden_units, pool_size,
                    n_classes, input_keep, hidden_keep, inverted_dropout)
``config_hash``     SHA-256 hex digest of the canonical architecture JSON
``precision``       ``"float32"`` or ``"float64"``
``config``          JSON string of the full run configuration (may be ``{}``)
``param_0000`` ...  parameter arrays in order W0, b0, W1, b1, ...
"""

import json
import zipfile

import numpy as np

from .config import architecture_hash
from .exceptions import DataError
from .network import MaxoutNetwork

FORMAT_VERSION = 1


class CheckpointError(DataError):
    """The checkpoint file is unreadable, truncated, or inconsistent."""


def save_checkpoint(path, net, config=None, state=None):
    """Write ``net`` (or an explicit parameter ``state``) to ``path``."""
    arch = net.architecture()
    state = net.get_state() if state is None else state
    members = {
        "format_version": np.array(FORMAT_VERSION),
        "architecture": np.array(json.dumps(arch, sort_keys=True)),
        "config_hash": np.array(architecture_hash(arch)),
        "precision": np.array(net.dtype.name),
        "config": np.array(json.dumps(config or {}, sort_keys=True)),
    }
    for i, arr in enumerate(state):
        members[f"param_{i:04d}"] = arr
    with open(path, "wb") as fh:
        np.savez(fh, **members)


def load_checkpoint(path):
    """Return ``(net, metadata)``; raises :class:`CheckpointError` on any defect."""
    try:
        with np.load(path, allow_pickle=False) as archive:
            files = {k: archive[k] for k in archive.files}
    except (OSError, ValueError, EOFError, zipfile.BadZipFile) as exc:
        raise CheckpointError(f"{path}: cannot read checkpoint ({exc})") from None
    try:
        version = int(files["format_version"])
        if version != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported format version {version}")
        arch = json.loads(str(files["architecture"]))
        stored_hash = str(files["config_hash"])
        precision = str(files["precision"])
        config = json.loads(str(files["config"]))
    except KeyError as exc:
        raise CheckpointError(f"{path}: missing member {exc}") from None
    except (ValueError, TypeError) as exc:
        raise CheckpointError(f"{path}: malformed metadata ({exc})") from None
    if architecture_hash(arch) != stored_hash:
        raise CheckpointError(f"{path}: architecture hash mismatch")
    try:
        net = MaxoutNetwork(dtype=np.dtype(precision), random_state=0, **arch)
        names = sorted(k for k in files if k.startswith("param_"))
        net.set_state([files[k] for k in names])
    except Exception as exc:
        raise CheckpointError(f"{path}: parameters do not match architecture ({exc})") \
            from None
    return net, {"architecture": arch, "config_hash": stored_hash, "config": config,
                 "precision": precision, "format_version": version}
