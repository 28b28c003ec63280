"""Run configuration: YAML file <-> nested dataclasses.

Every section and key is optional; missing values take the defaults below,
which reproduce the MNIST architecture (two hidden layers of 1200
presynaptic units pooled in groups of 5). Unknown keys are rejected.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import yaml

from .data import load_dataset, make_toy, mnist_paths, split_train_valid
from .exceptions import ConfigError
from .network import MaxoutNetwork
from .optim import OptimizerConfig
from .protocol import ProtocolConfig
from .tensor import resolve_dtype


@dataclass
class DataConfig:
    # "mnist" reads IDX files; "xor" and "gaussian_blobs" are generated
    kind: str = "mnist"
    mnist_dir: str | None = None
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    n_train: int = 50000
    n_valid: int = 10000
    n_test: int = 10000  # toy sets only
    toy_noise: float = 0.0

    def validate(self):
        if self.kind not in ("mnist", "xor", "gaussian_blobs"):
            raise ConfigError(f"unknown dataset kind {self.kind!r}", "data.kind")
        for name in ("n_train", "n_valid", "n_test"):
            if getattr(self, name) < 1:
                raise ConfigError("must be >= 1", f"data.{name}")
        if self.kind == "mnist":
            for key, path in self.resolved_paths().items():
                if path is None:
                    raise ConfigError("required for MNIST runs (or set data.mnist_dir)",
                                      f"data.{key}")

    def resolved_paths(self):
        base = mnist_paths(self.mnist_dir) if self.mnist_dir else {}
        return {key: getattr(self, key) or base.get(key)
                for key in ("train_images", "train_labels", "test_images", "test_labels")}


@dataclass
class ModelConfig:
    hidden_units: list = field(default_factory=lambda: [1200, 1200])
    pool_size: int = 5
    n_classes: int = 10
    # null: Gaussian with std 1/sqrt(fan_in)
    init_std: float | None = None

    def validate(self):
        if self.pool_size < 1:
            raise ConfigError(f"must be >= 1, got {self.pool_size}", "model.pool_size")
        if not self.hidden_units:
            raise ConfigError("need at least one hidden layer", "model.hidden_units")
        for i, width in enumerate(self.hidden_units):
            if not isinstance(width, int) or width < 1:
                raise ConfigError(f"width must be a positive integer, got {width!r}",
                                  f"model.hidden_units[{i}]")
            if width % self.pool_size:
                raise ConfigError(
                    f"width {width} is not divisible by pool size {self.pool_size}",
                    f"model.hidden_units[{i}]",
                )
        if self.n_classes < 2:
            raise ConfigError("must be >= 2", "model.n_classes")
        if self.init_std is not None and not self.init_std > 0:
            raise ConfigError("must be positive or null", "model.init_std")


@dataclass
class DropoutConfig:
    input_keep: float = 0.8
    hidden_keep: float = 0.5
    inverted: bool = False

    def validate(self):
        for name in ("input_keep", "hidden_keep"):
            p = getattr(self, name)
            if not 0 < p <= 1:
                raise ConfigError(f"must be in (0, 1], got {p}", f"dropout.{name}")


@dataclass
class GradcheckConfig:
    input_dim: int = 8
    hidden_units: list = field(default_factory=lambda: [12, 12])
    pool_size: int = 3
    n_classes: int = 4
    batch_size: int = 4
    eps: float = 1e-5
    tie_tolerance: float = 1e-3
    threshold: float = 1e-4
    # applied automatically when pool_size == 1 (pure affine network)
    linear_threshold: float = 1e-7
    n_networks: int = 1
    dropout: bool = True

    def validate(self):
        if self.pool_size < 1:
            raise ConfigError("must be >= 1", "gradcheck.pool_size")
        for i, width in enumerate(self.hidden_units):
            if width % self.pool_size:
                raise ConfigError(
                    f"width {width} is not divisible by pool size {self.pool_size}",
                    f"gradcheck.hidden_units[{i}]",
                )
        if not self.eps > 0:
            raise ConfigError("must be positive", "gradcheck.eps")


@dataclass
class OutputConfig:
    dir: str = "runs"
    # False writes wall_seconds = 0 so metrics files are reproducible bytewise
    wall_clock: bool = True


@dataclass
class RunConfig:
    seed: int | None = None
    precision: str = "float32"
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    dropout: DropoutConfig = field(default_factory=DropoutConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    gradcheck: GradcheckConfig = field(default_factory=GradcheckConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self, check_data=True):
        if self.seed is None:
            raise ConfigError("a seed is required (set it in the file or pass --seed)",
                              "seed")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"must be a non-negative integer, got {self.seed!r}", "seed")
        if self.precision not in ("float32", "float64"):
            raise ConfigError(f"must be float32 or float64, got {self.precision!r}",
                              "precision")
        sections = [self.model, self.dropout, self.optimizer, self.protocol, self.gradcheck]
        for section in ([self.data] if check_data else []) + sections:
            _validate_section(section)
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    @property
    def dtype(self):
        return resolve_dtype(self.precision)


_SECTIONS = {
    "data": DataConfig, "model": ModelConfig, "dropout": DropoutConfig,
    "optimizer": OptimizerConfig, "protocol": ProtocolConfig,
    "gradcheck": GradcheckConfig, "output": OutputConfig,
}
_SCALARS = ("seed", "precision")


def _validate_section(section):
    prefix = {OptimizerConfig: "optimizer.", ProtocolConfig: "protocol."}.get(type(section))
    try:
        section.validate()
    except ConfigError as exc:
        if prefix and exc.field and "." not in exc.field:
            raise ConfigError(str(exc).split(": ", 1)[-1], prefix + exc.field) from None
        raise


def _build_section(cls, values, name):
    if values is None:
        values = {}
    if not isinstance(values, dict):
        raise ConfigError("expected a mapping", name)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(unknown)}", name)
    try:
        return cls(**values)
    except ConfigError as exc:
        where = f"{name}.{exc.field}" if exc.field else name
        raise ConfigError(str(exc).split(": ", 1)[-1], where) from None
    except TypeError as exc:
        raise ConfigError(str(exc), name) from None


def config_from_dict(raw):
    raw = dict(raw or {})
    unknown = sorted(set(raw) - set(_SECTIONS) - set(_SCALARS))
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(unknown)}", "config")
    kwargs = {k: raw[k] for k in _SCALARS if k in raw}
    for name, cls in _SECTIONS.items():
        if name in raw:
            kwargs[name] = _build_section(cls, raw[name], name)
    return RunConfig(**kwargs)


def load_config(path=None, seed=None, out=None, validate=True, check_data=True):
    """Read a YAML config (or defaults when ``path`` is None) and apply overrides."""
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse YAML: {exc}", "config") from None
        if not isinstance(raw, dict):
            raise ConfigError("top level must be a mapping", "config")
    cfg = config_from_dict(raw)
    if seed is not None:
        cfg.seed = seed
    if out is not None:
        cfg.output.dir = str(out)
    return cfg.validate(check_data) if validate else cfg


def dump_config(cfg, path):
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)


def architecture_hash(arch):
    blob = json.dumps(arch, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def build_network(cfg, input_dim):
    return MaxoutNetwork(
        input_dim=input_dim,
        hidden_units=cfg.model.hidden_units,
        pool_size=cfg.model.pool_size,
        n_classes=cfg.model.n_classes,
        input_keep=cfg.dropout.input_keep,
        hidden_keep=cfg.dropout.hidden_keep,
        inverted_dropout=cfg.dropout.inverted,
        init_std=cfg.model.init_std,
        dtype=cfg.dtype,
        random_state=np.random.default_rng([cfg.seed, 0]),
    )


def load_data(cfg):
    """Return ``(train, valid, test)`` datasets described by ``cfg.data``."""
    d = cfg.data
    if d.kind == "mnist":
        paths = d.resolved_paths()
        full = load_dataset(paths["train_images"], paths["train_labels"], "full", cfg.dtype)
        test = load_dataset(paths["test_images"], paths["test_labels"], "test", cfg.dtype)
    else:
        full = make_toy(d.kind, d.n_train + d.n_valid, np.random.default_rng([cfg.seed, 2]),
                        noise=d.toy_noise, dtype=cfg.dtype)
        test = make_toy(d.kind, d.n_test, np.random.default_rng([cfg.seed, 3]),
                        noise=d.toy_noise, dtype=cfg.dtype)
        test = type(test)(test.images, test.labels, "test")
    train, valid = split_train_valid(full, d.n_train, d.n_valid)
    return train, valid, test
