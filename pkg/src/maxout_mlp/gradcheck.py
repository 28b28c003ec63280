"""Finite-difference gradient checking for networks built from this package."""

from dataclasses import dataclass, field

import numpy as np



def relative_error(analytic, numeric, floor=1e-8):
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def central_difference(f, theta, eps=1e-5):
    """Numerical gradient of scalar ``f`` at ``theta`` by central differences.

    ``theta`` is not modified; ``f`` receives a perturbed copy in at least
    float64 precision.
    """
    theta = np.array(theta, dtype=np.result_type(theta, np.float64))
    scalar = theta.ndim == 0
    flat = theta.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = f(theta.copy() if not scalar else float(theta))
        flat[i] = orig - eps
        down = f(theta.copy() if not scalar else float(theta))
        flat[i] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise FloatingPointError(f"non-finite function value at coordinate {i}")
        grad[i] = (up - down) / (2 * eps)
    return grad.reshape(theta.shape) if not scalar else float(grad[0])


@dataclass
class GradCheckReport:
    block_errors: dict = field(default_factory=dict)
    max_error: float = 0.0
    eps: float = 1e-5
    # parameter redraws needed to get away from pooling ties
    rerandomized: int = 0
    n_checked: int = 0

    def passed(self, threshold):
        return self.max_error < threshold

    def table(self):
        lines = [f"{'block':<12}{'max rel error':>16}"]
        for name, err in self.block_errors.items():
            lines.append(f"{name:<12}{err:>16.3e}")
        lines.append(f"{'global':<12}{self.max_error:>16.3e}")
        lines.append(f"eps={self.eps:g}  checked={self.n_checked}  "
                     f"rerandomized={self.rerandomized}")
        return "\n".join(lines)


def pooling_gap(net, X):
    """Smallest gap between the top two entries of any pooling group.

    Runs a forward pass with the current (frozen) dropout masks. Returns
    ``inf`` when pooling is the identity.
    """
    gap = np.inf
    h = net.input_dropout.forward(X)
    for affine, pool, drop in net.hidden:
        z = affine.forward(h)
        if pool.pool_size > 1:
            grouped = np.sort(z.reshape(z.shape[0], pool.output_width, pool.pool_size), axis=2)
            gap = min(gap, float((grouped[:, :, -1] - grouped[:, :, -2]).min()))
        h = drop.forward(pool.forward(z))
    return gap


def _redraw(net, rng):
    for layer in net.affine_layers:
        layer.W[...] = rng.standard_normal(layer.W.shape) / np.sqrt(layer.in_features)
        layer.b[...] = 0.1 * rng.standard_normal(layer.b.shape)


def reference_loss(params, masks, keep_probs, inverted, pool_size, X, y,
                   dtype=np.longdouble):
    """Mean cross-entropy of a maxout network, written out directly.

    Shares no code with :class:`~maxout_mlp.network.MaxoutNetwork` so it can
    serve as an independent oracle. ``params`` is ``[W0, b0, W1, b1, ...]``
    and ``masks`` holds one dropout mask per site (input, then each hidden
    layer). Evaluated in ``dtype``, which defaults to extended precision
    where the platform has it.
    """
    h = np.asarray(X, dtype=dtype)
    weights = [np.asarray(p, dtype=dtype) for p in params]
    n_hidden = len(weights) // 2 - 1
    for layer in range(n_hidden + 1):
        mask = np.asarray(masks[layer], dtype=dtype)
        p = dtype(keep_probs[layer])
        h = h * mask / p if inverted else h * mask
        z = h @ weights[2 * layer] + weights[2 * layer + 1]
        if layer == n_hidden:
            break
        h = z.reshape(z.shape[0], -1, pool_size).max(axis=2)
    top = z.max(axis=1, keepdims=True)
    logz = top[:, 0] + np.log(np.exp(z - top).sum(axis=1))
    return (logz - z[np.arange(len(y)), y]).mean()


def check_network(net, X, y, eps=1e-5, tie_tolerance=1e-3, rng=None, max_redraws=1000,
                  oracle_dtype=np.longdouble):
    """Compare backprop gradients of the mean cross-entropy with central differences.

    Dropout masks are sampled once and held fixed. If any pooling group has
    its top two presynaptic values closer than ``tie_tolerance``, all
    parameters are redrawn until none are (at most ``max_redraws`` times).
    The numerical side uses :func:`reference_loss` in ``oracle_dtype``.
    """
    if net.dtype != np.float64:
        raise ValueError("gradient checks require a float64 network")
    rng = np.random.default_rng(rng)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    frozen_before = [d.frozen for d in net.dropouts]
    net.train()
    report = GradCheckReport(eps=eps)
    try:
        net.freeze_masks(False)
        for d in net.dropouts:
            d.mask = None
        net.forward(X, rng)
        net.freeze_masks(True)

        while pooling_gap(net, X) < tie_tolerance:
            if report.rerandomized >= max_redraws:
                raise RuntimeError("could not find parameters away from pooling ties")
            _redraw(net, rng)
            report.rerandomized += 1

        net.loss_and_grad(X, y)
        analytic = []
        for layer in net.affine_layers:
            analytic += [layer.grad_W.copy(), layer.grad_b.copy()]
        params = [p.astype(oracle_dtype) for p in net.get_state()]
        masks = [d.mask for d in net.dropouts]
        keep = [d.keep_prob for d in net.dropouts]
        inverted = net.input_dropout.inverted

        for j, grad in enumerate(analytic):
            def loss_at(theta, j=j):
                trial = list(params)
                trial[j] = theta
                return reference_loss(trial, masks, keep, inverted, net.pool_size, X, y,
                                      oracle_dtype)

            numeric = central_difference(loss_at, params[j], eps)
            err = float(relative_error(grad, numeric).max()) if grad.size else 0.0
            report.block_errors[f"{'Wb'[j % 2]}{j // 2}"] = err
            report.n_checked += grad.size
        report.max_error = max(report.block_errors.values(), default=0.0)
        net.zero_grad()
    finally:
        for d, was in zip(net.dropouts, frozen_before):
            d.frozen = was
    return report
