"""Forward/backward building blocks: affine map, grouped max, dropout, loss.

All layer objects keep the inputs they need for the backward pass on the
instance, so a layer must see ``forward`` before ``backward`` for the same
batch.
"""

import numpy as np

from .exceptions import ConfigError, DataError, DimensionError, StateError
from .tensor import add_row_broadcast, matmul


class AffineLayer:
    """Learnable map ``z = x W + b`` with ``W`` of shape (in, out).

    Gradients accumulate into ``grad_W``/``grad_b`` until ``zero_grad`` is
    called; ``velocity_W``/``velocity_b`` belong to the optimizer.
    """

    def __init__(self, in_features, out_features, rng=None, init_std=None,
                 dtype=np.float64):
        if in_features < 1 or out_features < 1:
            raise ConfigError("layer widths must be positive")
        rng = np.random.default_rng(rng)
        std = 1.0 / np.sqrt(in_features) if init_std is None else init_std
        self.W = (rng.standard_normal((in_features, out_features)) * std).astype(dtype)
        self.b = np.zeros(out_features, dtype=dtype)
        self.grad_W = np.zeros_like(self.W)
        self.grad_b = np.zeros_like(self.b)
        self.velocity_W = np.zeros_like(self.W)
        self.velocity_b = np.zeros_like(self.b)
        self._x = None

    @property
    def in_features(self):
        return self.W.shape[0]

    @property
    def out_features(self):
        return self.W.shape[1]

    def zero_grad(self):
        self.grad_W.fill(0)
        self.grad_b.fill(0)

    def reset_velocity(self):
        self.velocity_W.fill(0)
        self.velocity_b.fill(0)

    def forward(self, x):
        self._x = x
        return affine_forward(x, self)

    def backward(self, dz):
        if self._x is None:
            raise StateError("affine backward called before forward")
        return affine_backward(dz, self._x, self)

    def __repr__(self):
        return f"AffineLayer({self.in_features}, {self.out_features})"


def affine_forward(x, layer):
    if x.ndim != 2 or x.shape[1] != layer.W.shape[0]:
        raise DimensionError(
            f"input of shape {x.shape} does not match weights {layer.W.shape}"
        )
    return add_row_broadcast(matmul(x, layer.W), layer.b)


def affine_backward(dz, x_cached, layer):
    """Accumulate parameter gradients and return the gradient w.r.t. the input."""
    if dz.ndim != 2 or dz.shape != (x_cached.shape[0], layer.W.shape[1]):
        raise DimensionError(
            f"upstream gradient {dz.shape} does not match batch {x_cached.shape[0]} "
            f"x {layer.W.shape[1]} outputs"
        )
    layer.grad_W += matmul(x_cached.T, dz)
    layer.grad_b += dz.sum(axis=0)
    return matmul(dz, layer.W.T)


class MaxoutConfig:
    """Grouped max over non-overlapping runs of ``pool_size`` consecutive inputs.

    Group ``i`` covers indices ``pool_size*i ... pool_size*i + pool_size - 1``.
    ``last_argmax`` holds, per example and group, the absolute index of the
    winning input from the most recent forward pass.
    """

    def __init__(self, pool_size, input_width):
        if pool_size < 1:
            raise ConfigError(f"pool size must be >= 1, got {pool_size}", "pool_size")
        if input_width % pool_size:
            raise ConfigError(
                f"width {input_width} is not divisible by pool size {pool_size}",
                "pool_size",
            )
        self.pool_size = pool_size
        self.input_width = input_width
        self.last_argmax = None

    @property
    def output_width(self):
        return self.input_width // self.pool_size

    def groups(self):
        k = self.pool_size
        return [range(k * i, k * i + k) for i in range(self.output_width)]

    def forward(self, z):
        return maxout_forward(z, self)

    def backward(self, dh):
        return maxout_backward(dh, self)

    def __repr__(self):
        return f"MaxoutConfig(pool_size={self.pool_size}, input_width={self.input_width})"


def maxout_forward(z, cfg):
    if z.ndim != 2 or z.shape[1] != cfg.input_width:
        raise DimensionError(
            f"presynaptic input {z.shape} does not match width {cfg.input_width}"
        )
    n, k = z.shape[0], cfg.pool_size
    grouped = z.reshape(n, cfg.output_width, k)
    # np.argmax returns the first occurrence, so ties go to the lowest index
    local = grouped.argmax(axis=2)
    h = np.take_along_axis(grouped, local[:, :, None], axis=2)[:, :, 0]
    cfg.last_argmax = local + k * np.arange(cfg.output_width)
    return h


def maxout_backward(dh, cfg):
    if cfg.last_argmax is None:
        raise StateError("maxout backward called without a cached forward pass")
    if dh.shape != cfg.last_argmax.shape:
        raise StateError(
            f"gradient shape {dh.shape} does not match cached argmax "
            f"{cfg.last_argmax.shape}"
        )
    n = dh.shape[0]
    dz = np.zeros((n, cfg.input_width), dtype=dh.dtype)
    np.put_along_axis(dz, cfg.last_argmax, dh, axis=1)
    return dz


class DropoutState:
    """Dropout at one site of the network.

    In training mode each element is kept with probability ``keep_prob``.
    In inference mode activations are multiplied by ``keep_prob`` (the
    mean-network rule). With ``inverted=True`` training activations are
    divided by ``keep_prob`` instead and inference is the identity.

    Setting ``frozen=True`` makes training-mode calls reuse the last mask
    (as long as the shape matches), which gradient checks need.
    """

    def __init__(self, keep_prob, inverted=False, training=True):
        if not 0.0 < keep_prob <= 1.0:
            raise ConfigError(f"keep probability must be in (0, 1], got {keep_prob}",
                              "keep_prob")
        self.keep_prob = float(keep_prob)
        self.inverted = inverted
        self.training = training
        self.frozen = False
        self.mask = None

    @property
    def mode(self):
        return "train" if self.training else "inference"

    def forward(self, h, rng=None):
        return dropout_apply(h, self, rng)

    def backward(self, dout):
        return dropout_backward(dout, self)

    def __repr__(self):
        return f"DropoutState(keep_prob={self.keep_prob}, mode={self.mode!r})"


def dropout_apply(h, state, rng=None):
    p = state.keep_prob
    if not 0.0 < p <= 1.0:
        raise ConfigError(f"keep probability must be in (0, 1], got {p}", "keep_prob")
    if not state.training:
        if state.inverted or p == 1.0:
            return h
        return h * h.dtype.type(p)
    if state.frozen and state.mask is not None and state.mask.shape == h.shape:
        mask = state.mask
    elif p == 1.0:
        mask = np.ones_like(h)
    else:
        if rng is None:
            raise StateError("training-mode dropout needs a random generator")
        mask = (rng.random(h.shape) < p).astype(h.dtype)
    state.mask = mask
    out = h * mask
    if state.inverted and p != 1.0:
        out /= h.dtype.type(p)
    return out


def dropout_backward(dout, state):
    if not state.training:
        raise StateError("dropout backward is only defined in training mode")
    if state.mask is None:
        raise StateError("dropout backward called without a cached mask")
    if state.mask.shape != dout.shape:
        raise StateError(
            f"gradient shape {dout.shape} does not match cached mask {state.mask.shape}"
        )
    dx = dout * state.mask
    if state.inverted and state.keep_prob != 1.0:
        dx /= dout.dtype.type(state.keep_prob)
    return dx


def log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax_cross_entropy(logits, labels):
    """Mean negative log-likelihood of ``labels`` under ``softmax(logits)``.

    Returns ``(mean_nll, dlogits)`` where ``dlogits`` is the gradient of the
    mean, i.e. ``(softmax - one_hot) / batch``.
    """
    labels = np.asarray(labels)
    n, c = logits.shape
    if labels.shape != (n,):
        raise DimensionError(f"expected {n} labels, got shape {labels.shape}")
    if n and (labels.min() < 0 or labels.max() >= c):
        raise DataError(f"labels must lie in 0..{c - 1}")
    logp = log_softmax(logits)
    rows = np.arange(n)
    mean_nll = -logp[rows, labels].mean() if n else 0.0
    dlogits = np.exp(logp)
    dlogits[rows, labels] -= 1
    dlogits /= max(n, 1)
    return float(mean_nll), dlogits
