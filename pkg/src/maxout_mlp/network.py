"""Maxout multilayer perceptron assembled from the layers module."""

import numpy as np

from .exceptions import ConfigError, DimensionError
from .layers import AffineLayer, DropoutState, MaxoutConfig, softmax_cross_entropy


class MaxoutNetwork:
    """Input dropout, then per hidden layer affine -> grouped max -> dropout,
    then an affine output layer producing class logits.

    ``hidden_units`` are the presynaptic widths; each hidden layer emits
    ``width // pool_size`` values.
    """

    def __init__(self, input_dim, hidden_units=(1200, 1200), pool_size=5,
                 n_classes=10, input_keep=0.8, hidden_keep=0.5,
                 inverted_dropout=False, init_std=None, dtype=np.float64,
                 random_state=None):
        self.input_dim = int(input_dim)
        self.hidden_units = tuple(int(w) for w in hidden_units)
        self.pool_size = int(pool_size)
        self.n_classes = int(n_classes)
        self.dtype = np.dtype(dtype)
        if self.n_classes < 2:
            raise ConfigError("need at least two classes", "n_classes")
        for i, width in enumerate(self.hidden_units):
            if width % self.pool_size:
                raise ConfigError(
                    f"hidden width {width} is not divisible by pool size {self.pool_size}",
                    f"hidden_units[{i}]",
                )
        rng = np.random.default_rng(random_state)

        self.input_dropout = DropoutState(input_keep, inverted_dropout)
        self.hidden = []
        fan_in = self.input_dim
        for width in self.hidden_units:
            affine = AffineLayer(fan_in, width, rng, init_std, self.dtype)
            pool = MaxoutConfig(self.pool_size, width)
            drop = DropoutState(hidden_keep, inverted_dropout)
            self.hidden.append((affine, pool, drop))
            fan_in = pool.output_width
        self.output = AffineLayer(fan_in, self.n_classes, rng, init_std, self.dtype)

    @property
    def affine_layers(self):
        return [a for a, _, _ in self.hidden] + [self.output]

    @property
    def dropouts(self):
        return [self.input_dropout] + [d for _, _, d in self.hidden]

    def architecture(self):
        return {
            "input_dim": self.input_dim,
            "hidden_units": list(self.hidden_units),
            "pool_size": self.pool_size,
            "n_classes": self.n_classes,
            "input_keep": self.input_dropout.keep_prob,
            "hidden_keep": self.hidden[0][2].keep_prob if self.hidden else 1.0,
            "inverted_dropout": self.input_dropout.inverted,
        }

    def n_weight_params(self):
        return [layer.W.size for layer in self.affine_layers]

    def train(self, mode=True):
        for d in self.dropouts:
            d.training = mode
        return self

    def eval(self):
        return self.train(False)

    def freeze_masks(self, frozen=True):
        for d in self.dropouts:
            d.frozen = frozen

    def forward(self, X, rng=None):
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DimensionError(f"expected input with {self.input_dim} columns, got {X.shape}")
        h = self.input_dropout.forward(X.astype(self.dtype, copy=False), rng)
        for affine, pool, drop in self.hidden:
            h = drop.forward(pool.forward(affine.forward(h)), rng)
        return self.output.forward(h)

    def backward(self, dlogits):
        d = self.output.backward(dlogits)
        for affine, pool, drop in reversed(self.hidden):
            d = affine.backward(pool.backward(drop.backward(d)))
        return d

    def zero_grad(self):
        for layer in self.affine_layers:
            layer.zero_grad()

    def loss_and_grad(self, X, y, rng=None):
        """Zero gradients, run forward/backward on one batch, return mean NLL."""
        self.zero_grad()
        logits = self.forward(X, rng)
        loss, dlogits = softmax_cross_entropy(logits, y)
        self.backward(dlogits)
        return loss

    def predict_logits(self, X, batch_size=10000):
        """Inference-mode logits, computed ``batch_size`` rows at a time."""
        was_training = self.input_dropout.training
        self.eval()
        try:
            n = X.shape[0]
            out = np.empty((n, self.n_classes), dtype=self.dtype)
            step = max(int(batch_size or n), 1)
            for start in range(0, n, step):
                out[start:start + step] = self.forward(X[start:start + step])
            return out
        finally:
            self.train(was_training)

    def get_state(self):
        """Copies of all parameters, in layer order: W0, b0, W1, b1, ..."""
        state = []
        for layer in self.affine_layers:
            state += [layer.W.copy(), layer.b.copy()]
        return state

    def set_state(self, state):
        layers = self.affine_layers
        if len(state) != 2 * len(layers):
            raise DimensionError(f"expected {2 * len(layers)} arrays, got {len(state)}")
        for layer, W, b in zip(layers, state[0::2], state[1::2]):
            if W.shape != layer.W.shape or b.shape != layer.b.shape:
                raise DimensionError(
                    f"parameter shapes {W.shape}/{b.shape} do not match "
                    f"{layer.W.shape}/{layer.b.shape}"
                )
            layer.W[...] = W
            layer.b[...] = b

    def reset_velocity(self):
        for layer in self.affine_layers:
            layer.reset_velocity()
