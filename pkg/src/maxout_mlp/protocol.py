"""Two-phase training and stopping procedure plus model evaluation.

Phase 1 trains on the first part of the training data and early-stops on
validation misclassifications, then records the mean log-likelihood of the
best checkpoint on its own training data. Phase 2 keeps training from that
checkpoint on training + validation data and stops at the first epoch whose
validation mean log-likelihood exceeds the recorded value.

Log-likelihoods are per-example means in nats everywhere.
"""

import csv
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import concatenate, minibatches
from .exceptions import ConfigError, DataError, DivergenceError
from .layers import log_softmax
from .optim import OptimizerConfig, schedule, sgd_step

METRICS_COLUMNS = ["phase", "epoch", "train_mean_ll", "valid_errors",
                   "valid_mean_ll", "lr", "momentum", "wall_seconds"]


@dataclass(frozen=True)
class EvalReport:
    errors: int
    error_rate: float
    mean_ll: float
    n: int

    def as_dict(self):
        return asdict(self)


def evaluate(model, ds, batch_size=10000):
    """Classify ``ds`` in inference mode; ties in the logits go to the lowest class."""
    if len(ds) == 0:
        raise DataError("cannot evaluate on an empty dataset")
    logits = model.predict_logits(ds.images, batch_size)
    return report_from_logits(logits, ds.labels)


def report_from_logits(logits, labels):
    n = labels.shape[0]
    if n == 0:
        raise DataError("cannot evaluate on an empty dataset")
    logp = log_softmax(logits.astype(np.float64))
    errors = int((logp.argmax(axis=1) != labels).sum())
    mean_ll = float(logp[np.arange(n), labels].sum() / n)
    return EvalReport(errors, errors / n, mean_ll, n)


@dataclass
class ProtocolConfig:
    patience: int = 20
    max_epochs: int = 500
    phase2_max_epochs: int = 500
    # True: stop when valid_ll >= recorded; False: strictly greater
    phase2_inclusive: bool = False
    reset_velocity: bool = True
    eval_batch_size: int = 10000

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.patience < 0:
            raise ConfigError(f"must be >= 0, got {self.patience}", "patience")
        if self.max_epochs < 1:
            raise ConfigError(f"must be >= 1, got {self.max_epochs}", "max_epochs")
        if self.phase2_max_epochs < 0:
            raise ConfigError(f"must be >= 0, got {self.phase2_max_epochs}",
                              "phase2_max_epochs")
        if self.eval_batch_size < 1:
            raise ConfigError("must be >= 1", "eval_batch_size")


class MetricsLog:
    """Collects one row per epoch and optionally streams them to a CSV file.

    With ``wall_clock=False`` the ``wall_seconds`` column is written as 0 so
    that repeated runs produce byte-identical files.
    """

    def __init__(self, path=None, wall_clock=True):
        self.rows = []
        self.wall_clock = wall_clock
        self._start = time.perf_counter()
        self._fh = None
        if path is not None:
            self._fh = open(path, "x", newline="")
            self._writer = csv.writer(self._fh, lineterminator="\n")
            self._writer.writerow(METRICS_COLUMNS)
            self._fh.flush()

    def log(self, phase, epoch, train_mean_ll, valid_errors, valid_mean_ll, lr, momentum):
        wall = time.perf_counter() - self._start if self.wall_clock else 0.0
        row = dict(phase=phase, epoch=epoch, train_mean_ll=train_mean_ll,
                   valid_errors=valid_errors, valid_mean_ll=valid_mean_ll,
                   lr=lr, momentum=momentum, wall_seconds=wall)
        self.rows.append(row)
        if self._fh is not None:
            self._writer.writerow([_fmt(row[c]) for c in METRICS_COLUMNS])
            self._fh.flush()
        return row

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


class Trainer:
    """Owns a network, its optimizer settings and the training random stream."""

    def __init__(self, model, opt_cfg=None, rng=None, eval_batch_size=10000):
        self.model = model
        self.opt_cfg = opt_cfg or OptimizerConfig()
        self.rng = np.random.default_rng(rng)
        self.eval_batch_size = eval_batch_size
        self.n_updates = 0

    def schedule(self, epoch):
        return schedule(self.opt_cfg, epoch)

    def train_epoch(self, ds, epoch):
        """One shuffled pass with dropout; returns the running mean log-likelihood."""
        model = self.model.train()
        total, seen = 0.0, 0
        for b, (X, y) in enumerate(minibatches(ds, self.opt_cfg.batch_size, self.rng)):
            loss = model.loss_and_grad(X, y, self.rng)
            if not np.isfinite(loss):
                raise DivergenceError("non-finite loss", layer="loss", epoch=epoch, batch=b)
            for i, layer in enumerate(model.affine_layers):
                sgd_step(layer, self.opt_cfg, epoch, batch=b, name=f"affine[{i}]")
            self.n_updates += 1
            total += loss * len(y)
            seen += len(y)
        return -total / seen if seen else float("nan")

    def evaluate(self, ds):
        return evaluate(self.model, ds, self.eval_batch_size)

    def get_state(self):
        return self.model.get_state()

    def set_state(self, state):
        self.model.set_state(state)

    def reset_velocity(self):
        self.model.reset_velocity()


@dataclass
class Phase1Result:
    best_epoch: int
    best_valid_errors: int
    recorded_train_mean_ll: float
    checkpoint: list = field(repr=False)
    epochs_run: int
    stop_reason: str


@dataclass
class Phase2Result:
    status: str  # "crossed" or "criterion_not_met"
    stop_index: int | None
    epochs_run: int
    last_epoch: int | None
    final_valid_mean_ll: float | None

    @property
    def crossed(self):
        return self.status == "crossed"


def _log(metrics, trainer, phase, epoch, train_ll, report):
    if metrics is None:
        return
    lr, mu = trainer.schedule(epoch)
    metrics.log(phase, epoch, train_ll, report.errors, report.mean_ll, lr, mu)


def phase1(trainer, train, valid, cfg, metrics=None):
    """Train on ``train`` until validation errors stop improving.

    Stops once ``cfg.patience`` consecutive epochs fail to beat the best
    error count (patience 0 stops at the first such epoch) or after
    ``cfg.max_epochs``. The best checkpoint is restored and its mean
    log-likelihood on ``train`` is recorded.
    """
    best_errors, best_epoch, checkpoint = None, -1, None
    stale, stop_reason = 0, "max_epochs"
    epoch = -1
    for epoch in range(cfg.max_epochs):
        train_ll = trainer.train_epoch(train, epoch)
        report = trainer.evaluate(valid)
        _log(metrics, trainer, 1, epoch, train_ll, report)
        if best_errors is None or report.errors < best_errors:
            best_errors, best_epoch = report.errors, epoch
            checkpoint = trainer.get_state()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                stop_reason = "patience"
                break
    trainer.set_state(checkpoint)
    recorded = trainer.evaluate(train).mean_ll
    return Phase1Result(best_epoch, best_errors, recorded, checkpoint, epoch + 1,
                        stop_reason)


def phase2(trainer, full, valid, recorded_train_mean_ll, cfg, start_epoch=0,
           metrics=None):
    """Continue training on ``full`` until validation mean log-likelihood
    first exceeds ``recorded_train_mean_ll``.

    ``start_epoch`` is the schedule epoch of the first phase-2 epoch. If the
    criterion is never met within ``cfg.phase2_max_epochs`` the status is
    ``"criterion_not_met"`` and the model is left as trained.
    """
    if cfg.reset_velocity:
        trainer.reset_velocity()
    last_ll, epoch = None, None
    for t in range(cfg.phase2_max_epochs):
        epoch = start_epoch + t
        train_ll = trainer.train_epoch(full, epoch)
        report = trainer.evaluate(valid)
        _log(metrics, trainer, 2, epoch, train_ll, report)
        last_ll = report.mean_ll
        if crosses(last_ll, recorded_train_mean_ll, cfg.phase2_inclusive):
            return Phase2Result("crossed", t, t + 1, epoch, last_ll)
    return Phase2Result("criterion_not_met", None, cfg.phase2_max_epochs, epoch, last_ll)


def crosses(valid_ll, recorded, inclusive=False):
    return valid_ll >= recorded if inclusive else valid_ll > recorded


def run_two_phase(trainer, train, valid, cfg, metrics=None):
    p1 = phase1(trainer, train, valid, cfg, metrics)
    full = concatenate(train, valid, "full")
    p2 = phase2(trainer, full, valid, p1.recorded_train_mean_ll, cfg,
                start_epoch=p1.best_epoch + 1, metrics=metrics)
    return p1, p2


def run_full_protocol(config, metrics_path=None):
    """Load data, build the network, run both phases, evaluate on the test set.

    ``config`` is a :class:`~maxout_mlp.config.RunConfig`. Returns
    ``(trainer, test_report, phase1_result, phase2_result)``; the trained
    network is ``trainer.model``.
    """
    from .config import build_network, load_data

    train, valid, test = load_data(config)
    model = build_network(config, input_dim=train.images.shape[1])
    trainer = Trainer(model, config.optimizer, np.random.default_rng([config.seed, 1]),
                      config.protocol.eval_batch_size)
    with MetricsLog(metrics_path, config.output.wall_clock) as metrics:
        p1, p2 = run_two_phase(trainer, train, valid, config.protocol, metrics)
    test_report = trainer.evaluate(test)
    return trainer, test_report, p1, p2


__all__ = ["EvalReport", "MetricsLog", "Phase1Result", "Phase2Result",
           "ProtocolConfig", "Trainer", "crosses", "evaluate", "phase1", "phase2",
           "run_full_protocol", "run_two_phase"]
