"""scikit-learn compatible classifier wrapping the two-phase maxout trainer."""

import numbers

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset
from .layers import log_softmax
from .network import MaxoutNetwork
from .optim import OptimizerConfig
from .protocol import MetricsLog, ProtocolConfig, Trainer, evaluate, run_two_phase
from .tensor import resolve_dtype


class _PrintingLog(MetricsLog):
    def log(self, *args):
        row = super().log(*args)
        print("phase {phase} epoch {epoch:4d}  train_ll {train_mean_ll:.5f}  "
              "valid_errors {valid_errors}  valid_ll {valid_mean_ll:.5f}".format(**row))
        return row


class MaxoutMLPClassifier(ClassifierMixin, BaseEstimator):
    """Maxout MLP trained with dropout and two-phase early stopping.

    ``fit`` holds out the last ``validation_size`` rows of ``X`` (an int
    count or a float fraction). Phase 1 trains on the remaining rows and
    early-stops on validation errors; phase 2 continues on all rows until
    the validation mean log-likelihood first exceeds the phase-1 training
    value. With the defaults and the 60,000 MNIST training images this is
    the 50,000/10,000 protocol.

    Parameters
    ----------
    hidden_units : sequence of int
        Presynaptic width of each hidden layer; each must be divisible by
        ``pool_size``.
    pool_size : int
        Number of consecutive presynaptic units each output unit maxes over.
    input_keep, hidden_keep : float
        Dropout keep probabilities for the input and for each pooled hidden
        layer.
    inverted_dropout : bool
        Scale by ``1/keep`` during training instead of by ``keep`` at
        inference.
    max_norm : float or None
        Column norm cap applied to every weight matrix after each update.
    validation_size : int or float
        Held-out rows taken from the end of the training data.
    precision : {"float32", "float64"}
    random_state : int or None

    Attributes
    ----------
    network_ : MaxoutNetwork
    classes_ : ndarray
    phase1_ : Phase1Result
    phase2_ : Phase2Result
    history_ : list of dict
        One metrics row per epoch.
    n_updates_ : int
    """

    def __init__(self, hidden_units=(1200, 1200), pool_size=5, input_keep=0.8,
                 hidden_keep=0.5, inverted_dropout=False, init_std=None,
                 batch_size=100, learning_rate=0.1, lr_decay=0.998,
                 momentum_start=0.5, momentum_end=0.99, momentum_ramp_epochs=20,
                 max_norm=3.5, patience=20, max_epochs=500, phase2_max_epochs=500,
                 phase2_inclusive=False, reset_velocity=True, validation_size=10000,
                 precision="float32", random_state=None, verbose=0):
        self.hidden_units = hidden_units
        self.pool_size = pool_size
        self.input_keep = input_keep
        self.hidden_keep = hidden_keep
        self.inverted_dropout = inverted_dropout
        self.init_std = init_std
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.lr_decay = lr_decay
        self.momentum_start = momentum_start
        self.momentum_end = momentum_end
        self.momentum_ramp_epochs = momentum_ramp_epochs
        self.max_norm = max_norm
        self.patience = patience
        self.max_epochs = max_epochs
        self.phase2_max_epochs = phase2_max_epochs
        self.phase2_inclusive = phase2_inclusive
        self.reset_velocity = reset_velocity
        self.validation_size = validation_size
        self.precision = precision
        self.random_state = random_state
        self.verbose = verbose

    def _n_valid(self, n):
        v = self.validation_size
        if isinstance(v, numbers.Integral):
            n_valid = int(v)
        elif isinstance(v, numbers.Real) and 0 < v < 1:
            n_valid = int(round(v * n))
        else:
            raise ValueError(f"validation_size must be an int or a fraction, got {v!r}")
        if not 0 < n_valid < n:
            raise ValueError(f"validation_size={v!r} leaves no training or validation "
                             f"rows out of {n}")
        return n_valid

    def fit(self, X, y):
        dtype = resolve_dtype(self.precision)
        X, y = check_X_y(X, y, dtype=dtype)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes")
        self.n_features_in_ = X.shape[1]
        n_valid = self._n_valid(X.shape[0])
        n_train = X.shape[0] - n_valid
        train = Dataset(X[:n_train], y_idx[:n_train], "train")
        valid = Dataset(X[n_train:], y_idx[n_train:], "valid")

        if self.random_state is None:
            init_rng, train_rng = np.random.default_rng(), np.random.default_rng()
        else:
            init_rng = np.random.default_rng([self.random_state, 0])
            train_rng = np.random.default_rng([self.random_state, 1])
        self.network_ = MaxoutNetwork(
            X.shape[1], self.hidden_units, self.pool_size, len(self.classes_),
            self.input_keep, self.hidden_keep, self.inverted_dropout, self.init_std,
            dtype, init_rng,
        )
        opt = OptimizerConfig(self.learning_rate, self.lr_decay, self.momentum_start,
                              self.momentum_end, self.momentum_ramp_epochs, self.max_norm,
                              self.batch_size)
        proto = ProtocolConfig(self.patience, self.max_epochs, self.phase2_max_epochs,
                               self.phase2_inclusive, self.reset_velocity)
        trainer = Trainer(self.network_, opt, train_rng, proto.eval_batch_size)
        log = (_PrintingLog if self.verbose else MetricsLog)(wall_clock=True)
        self.phase1_, self.phase2_ = run_two_phase(trainer, train, valid, proto, log)
        self.history_ = log.rows
        self.n_updates_ = trainer.n_updates
        return self

    def decision_function(self, X):
        """Inference-mode class logits."""
        check_is_fitted(self, "network_")
        X = check_array(X, dtype=self.network_.dtype)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.network_.predict_logits(X)

    def predict_log_proba(self, X):
        return log_softmax(self.decision_function(X))

    def predict_proba(self, X):
        return np.exp(self.predict_log_proba(X))

    def predict(self, X):
        logits = self.decision_function(X)
        return self.classes_[logits.argmax(axis=1)]

    def evaluate(self, X, y):
        """Error count, error rate and mean log-likelihood on ``(X, y)``."""
        check_is_fitted(self, "network_")
        X, y = check_X_y(X, y, dtype=self.network_.dtype)
        idx = np.searchsorted(self.classes_, y)
        if (idx >= len(self.classes_)).any() or (self.classes_[idx] != y).any():
            raise ValueError("y contains labels not seen during fit")
        return evaluate(self.network_, Dataset(X, idx, "eval"))
