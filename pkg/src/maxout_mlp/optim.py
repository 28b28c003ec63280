"""Minibatch SGD with momentum, per-epoch schedules and max-norm projection."""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DivergenceError


@dataclass
class OptimizerConfig:
    base_lr: float = 0.1
    lr_decay: float = 0.998
    momentum_start: float = 0.5
    momentum_end: float = 0.99
    momentum_ramp_epochs: int = 20
    maxnorm_c: float | None = 3.5
    batch_size: int = 100

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.base_lr > 0:
            raise ConfigError(f"must be positive, got {self.base_lr}", "base_lr")
        if not 0 < self.lr_decay <= 1:
            raise ConfigError(f"must be in (0, 1], got {self.lr_decay}", "lr_decay")
        if not 0 <= self.momentum_start <= self.momentum_end < 1:
            raise ConfigError(
                "need 0 <= momentum_start <= momentum_end < 1, got "
                f"{self.momentum_start} and {self.momentum_end}",
                "momentum_start",
            )
        if self.momentum_ramp_epochs < 0:
            raise ConfigError("must be >= 0", "momentum_ramp_epochs")
        if self.maxnorm_c is not None and not self.maxnorm_c > 0:
            raise ConfigError(f"must be positive or null, got {self.maxnorm_c}", "maxnorm_c")
        if self.batch_size < 1:
            raise ConfigError(f"must be >= 1, got {self.batch_size}", "batch_size")

    def schedule(self, epoch):
        return schedule(self, epoch)


def schedule(cfg, epoch):
    """Return ``(lr, momentum)`` for a 0-based epoch.

    The learning rate decays geometrically; momentum ramps linearly from
    ``momentum_start`` to ``momentum_end`` over ``momentum_ramp_epochs``.
    """
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    lr = cfg.base_lr * cfg.lr_decay ** epoch
    ramp = cfg.momentum_ramp_epochs
    if ramp == 0 or epoch >= ramp:
        momentum = cfg.momentum_end
    else:
        t = epoch / ramp
        momentum = cfg.momentum_start + t * (cfg.momentum_end - cfg.momentum_start)
    return lr, momentum


def maxnorm_project(W, c):
    """Rescale, in place, every column of ``W`` whose L2 norm exceeds ``c``."""
    if not c > 0:
        raise ValueError(f"max-norm bound must be positive, got {c}")
    norms = np.sqrt((W.astype(np.float64) ** 2).sum(axis=0))
    over = norms > c
    if over.any():
        W[:, over] *= (c / norms[over]).astype(W.dtype)
        # float rounding can leave a column a hair above c
        shrink = np.nextafter(W.dtype.type(1), W.dtype.type(0))
        cols = np.flatnonzero(over)
        for _ in range(64):
            cols = cols[np.sqrt((W[:, cols].astype(np.float64) ** 2).sum(axis=0)) > c]
            if not cols.size:
                break
            W[:, cols] *= shrink
    return W


def sgd_step(layer, cfg, epoch, batch=None, name=None):
    """One momentum step on ``layer`` followed by optional max-norm projection.

    Gradients are zeroed afterwards.
    """
    if not (np.isfinite(layer.grad_W).all() and np.isfinite(layer.grad_b).all()):
        raise DivergenceError("non-finite gradient", layer=name or repr(layer),
                              epoch=epoch, batch=batch)
    lr, mu = schedule(cfg, epoch)
    dt = layer.W.dtype.type
    layer.velocity_W *= dt(mu)
    layer.velocity_W -= dt(lr) * layer.grad_W
    layer.velocity_b *= dt(mu)
    layer.velocity_b -= dt(lr) * layer.grad_b
    layer.W += layer.velocity_W
    layer.b += layer.velocity_b
    if cfg.maxnorm_c is not None:
        maxnorm_project(layer.W, cfg.maxnorm_c)
    layer.zero_grad()
