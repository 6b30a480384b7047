"""Pure-NumPy implementation of the hot kernels.

Semantics are shared with the compiled backend in ``_core.pyx``; the
compiled module fuses the elementwise work and calls BLAS directly, this
one leans on NumPy for everything.  Both operate on dense tanh MLPs whose
parameters are lists of float64 arrays: ``weights[i]`` has shape
``(out_i, in_i)`` and ``biases[i]`` shape ``(out_i,)``.

The jet kernels propagate (value, d/dx, d2/dx2) triples through the
network.  Batched triples are stored stacked: a ``(3*B, width)`` matrix
whose B-row blocks hold values, first and second derivatives.  That lets
one GEMM per layer serve all three components.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

__all__ = [
    "BACKEND",
    "jet_forward",
    "jet_backward",
    "value_forward",
    "value_backward",
    "sturm_counts",
]


def _as_batch(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected 1-D batch of inputs, got shape {x.shape}")
    return x


def jet_forward(weights, biases, x):
    """Propagate input jets (x, 1, 0) through the network.

    Returns ``(val, d1, d2, cache)`` where each output is ``(B, out)`` and
    ``cache`` is consumed by :func:`jet_backward`.
    """
    x = _as_batch(x)
    b_sz = x.shape[0]
    u0 = np.zeros((3 * b_sz, 1))
    u0[:b_sz, 0] = x
    u0[b_sz : 2 * b_sz, 0] = 1.0
    stack = u0
    hidden = []
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = stack @ w.T
        z[:b_sz] += b
        if i == last:
            return z[:b_sz].copy(), z[b_sz : 2 * b_sz].copy(), z[2 * b_sz :].copy(), (u0, hidden)
        t = np.tanh(z[:b_sz])
        s = 1.0 - t * t
        z1 = z[b_sz : 2 * b_sz]
        z2 = z[2 * b_sz :]
        a = np.empty_like(z)
        a[:b_sz] = t
        a[b_sz : 2 * b_sz] = s * z1
        a[2 * b_sz :] = s * z2 - (2.0 * t * s) * (z1 * z1)
        hidden.append((z1, z2, a))
        stack = a
    raise ValueError("network must have at least one layer")


def jet_backward(weights, cache, bar_val, bar_d1, bar_d2):
    """Accumulate parameter gradients for a scalar that depends on the
    jet outputs with adjoints ``bar_val``/``bar_d1``/``bar_d2`` (each
    ``(B, out)`` or None for zero)."""
    u0, hidden = cache
    b_sz = u0.shape[0] // 3
    out_dim = weights[-1].shape[0]
    zbar = np.zeros((3 * b_sz, out_dim))
    if bar_val is not None:
        zbar[:b_sz] = bar_val
    if bar_d1 is not None:
        zbar[b_sz : 2 * b_sz] = bar_d1
    if bar_d2 is not None:
        zbar[2 * b_sz :] = bar_d2

    grad_w = [None] * len(weights)
    grad_b = [None] * len(weights)
    for i in range(len(weights) - 1, -1, -1):
        below = hidden[i - 1][2] if i > 0 else u0
        grad_w[i] = zbar.T @ below
        grad_b[i] = zbar[:b_sz].sum(axis=0)
        if i == 0:
            break
        abar = zbar @ weights[i]
        z1, z2, a = hidden[i - 1]
        t = a[:b_sz]
        s = 1.0 - t * t
        g0 = abar[:b_sz]
        g1 = abar[b_sz : 2 * b_sz]
        g2 = abar[2 * b_sz :]
        ts2 = 2.0 * t * s
        zbar = np.empty_like(abar)
        zbar[:b_sz] = g0 * s - g1 * (ts2 * z1) - g2 * (ts2 * z2 + (2.0 * s * (s - 2.0 * t * t)) * (z1 * z1))
        zbar[b_sz : 2 * b_sz] = g1 * s - g2 * (2.0 * ts2 * z1)
        zbar[2 * b_sz :] = g2 * s
    return grad_w, grad_b


def value_forward(weights, biases, x):
    """Plain forward pass (no jets); returns ``(val, cache)``."""
    x = _as_batch(x)
    act = x.reshape(-1, 1)
    hidden = []
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = act @ w.T + b
        if i == last:
            return z, (x.reshape(-1, 1), hidden)
        act = np.tanh(z)
        hidden.append(act)
    raise ValueError("network must have at least one layer")


def value_backward(weights, cache, bar_val):
    x0, hidden = cache
    zbar = np.asarray(bar_val, dtype=np.float64)
    grad_w = [None] * len(weights)
    grad_b = [None] * len(weights)
    for i in range(len(weights) - 1, -1, -1):
        below = hidden[i - 1] if i > 0 else x0
        grad_w[i] = zbar.T @ below
        grad_b[i] = zbar.sum(axis=0)
        if i == 0:
            break
        abar = zbar @ weights[i]
        a = hidden[i - 1]
        zbar = abar * (1.0 - a * a)
    return grad_w, grad_b


def sturm_counts(diag, offdiag, shifts):
    """Number of eigenvalues of the symmetric tridiagonal matrix strictly
    below each shift, via the LDL^T Sturm sequence."""
    d = np.asarray(diag, dtype=np.float64)
    e = np.asarray(offdiag, dtype=np.float64)
    sig = np.atleast_1d(np.asarray(shifts, dtype=np.float64))
    if e.shape[0] != d.shape[0] - 1:
        raise ValueError("offdiag must have length len(diag) - 1")
    e2 = e * e
    pivmin = max(np.finfo(np.float64).tiny, 2.3e-308 * max(1.0, float(e2.max(initial=0.0))))
    q = d[0] - sig
    counts = (q < 0.0).astype(np.int64)
    for i in range(1, d.shape[0]):
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        q = d[i] - sig - e2[i - 1] / q
        counts += q < 0.0
    return counts
