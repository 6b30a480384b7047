# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementation of the hot kernels.

Same contracts as ``numpy_core``: jet and value passes through dense
tanh MLPs plus the Sturm-count scan.  GEMMs go straight to BLAS; the
tanh-jet elementwise work is fused into single passes over each layer's
activations, which is where this backend wins over the NumPy fallback.
"""

from libc.math cimport tanh as ctanh

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

BACKEND = "compiled"

__all__ = [
    "BACKEND",
    "jet_forward",
    "jet_backward",
    "value_forward",
    "value_backward",
    "sturm_counts",
]


# C = U @ W.T for row-major U (rows, in) and W (out, in) -> C (rows, out)
cdef void _gemm_ut(double[:, ::1] u, double[:, ::1] w, double[:, ::1] c) noexcept nogil:
    cdef int m = c.shape[1]          # out
    cdef int n = c.shape[0]          # rows
    cdef int k = u.shape[1]          # in
    cdef double one = 1.0, zero = 0.0
    dgemm("T", "N", &m, &n, &k, &one, &w[0, 0], &k, &u[0, 0], &k, &zero, &c[0, 0], &m)


# C = G @ W for row-major G (rows, out) and W (out, in) -> C (rows, in)
cdef void _gemm_gw(double[:, ::1] g, double[:, ::1] w, double[:, ::1] c) noexcept nogil:
    cdef int m = c.shape[1]          # in
    cdef int n = c.shape[0]          # rows
    cdef int k = g.shape[1]          # out
    cdef double one = 1.0, zero = 0.0
    dgemm("N", "N", &m, &n, &k, &one, &w[0, 0], &m, &g[0, 0], &k, &zero, &c[0, 0], &m)


# C = G.T @ U for row-major G (rows, out), U (rows, in) -> C (out, in)
cdef void _gemm_gtu(double[:, ::1] g, double[:, ::1] u, double[:, ::1] c) noexcept nogil:
    cdef int m = c.shape[1]          # in
    cdef int n = c.shape[0]          # out
    cdef int k = g.shape[0]          # rows
    cdef double one = 1.0, zero = 0.0
    dgemm("N", "T", &m, &n, &k, &one, &u[0, 0], &m, &g[0, 0], &n, &zero, &c[0, 0], &m)


cdef void _tanh_jets(double[:, ::1] z, double[::1] bias, double[:, ::1] a, int b_sz) noexcept nogil:
    """tanh-jet activation: z holds stacked pre-activations (bias not yet
    added to the value block); writes post-activation jets into a and the
    biased value back into z."""
    cdef Py_ssize_t r, c
    cdef Py_ssize_t width = z.shape[1]
    cdef double zv, t, s, z1, z2
    for r in range(b_sz):
        for c in range(width):
            zv = z[r, c] + bias[c]
            z[r, c] = zv
            t = ctanh(zv)
            s = 1.0 - t * t
            z1 = z[b_sz + r, c]
            z2 = z[2 * b_sz + r, c]
            a[r, c] = t
            a[b_sz + r, c] = s * z1
            a[2 * b_sz + r, c] = s * z2 - 2.0 * t * s * z1 * z1


cdef void _tanh_jets_backward(double[:, ::1] abar, double[:, ::1] z, double[:, ::1] a,
                              double[:, ::1] zbar, int b_sz) noexcept nogil:
    cdef Py_ssize_t r, c
    cdef Py_ssize_t width = z.shape[1]
    cdef double t, s, z1, z2, g0, g1, g2, ts2
    for r in range(b_sz):
        for c in range(width):
            t = a[r, c]
            s = 1.0 - t * t
            z1 = z[b_sz + r, c]
            z2 = z[2 * b_sz + r, c]
            g0 = abar[r, c]
            g1 = abar[b_sz + r, c]
            g2 = abar[2 * b_sz + r, c]
            ts2 = 2.0 * t * s
            zbar[r, c] = g0 * s - g1 * (ts2 * z1) - g2 * (ts2 * z2 + 2.0 * s * (s - 2.0 * t * t) * z1 * z1)
            zbar[b_sz + r, c] = g1 * s - g2 * (2.0 * ts2 * z1)
            zbar[2 * b_sz + r, c] = g2 * s


def _as_batch(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected 1-D batch of inputs, got shape {x.shape}")
    return x


def _as_c(arrs):
    return [np.ascontiguousarray(a, dtype=np.float64) for a in arrs]


def jet_forward(weights, biases, x):
    x = _as_batch(x)
    weights = _as_c(weights)
    biases = _as_c(biases)
    cdef int b_sz = x.shape[0]
    u0 = np.zeros((3 * b_sz, 1))
    u0[:b_sz, 0] = x
    u0[b_sz : 2 * b_sz, 0] = 1.0
    stack = u0
    hidden = []
    last = len(weights) - 1
    cdef Py_ssize_t i
    for i in range(len(weights)):
        w = weights[i]
        z = np.empty((3 * b_sz, w.shape[0]))
        _gemm_ut(stack, w, z)
        if i == last:
            z[:b_sz] += biases[i]
            return z[:b_sz].copy(), z[b_sz : 2 * b_sz].copy(), z[2 * b_sz :].copy(), (u0, hidden)
        a = np.empty_like(z)
        _tanh_jets(z, biases[i], a, b_sz)
        hidden.append((z, a))
        stack = a
    raise ValueError("network must have at least one layer")


def jet_backward(weights, cache, bar_val, bar_d1, bar_d2):
    u0, hidden = cache
    weights = _as_c(weights)
    cdef int b_sz = u0.shape[0] // 3
    out_dim = weights[len(weights) - 1].shape[0]
    zbar = np.zeros((3 * b_sz, out_dim))
    if bar_val is not None:
        zbar[:b_sz] = bar_val
    if bar_d1 is not None:
        zbar[b_sz : 2 * b_sz] = bar_d1
    if bar_d2 is not None:
        zbar[2 * b_sz :] = bar_d2

    grad_w = [None] * len(weights)
    grad_b = [None] * len(weights)
    cdef Py_ssize_t i
    for i in range(len(weights) - 1, -1, -1):
        below = hidden[i - 1][1] if i > 0 else u0
        gw = np.empty_like(weights[i])
        _gemm_gtu(zbar, below, gw)
        grad_w[i] = gw
        grad_b[i] = zbar[:b_sz].sum(axis=0)
        if i == 0:
            break
        abar = np.empty((3 * b_sz, weights[i].shape[1]))
        _gemm_gw(zbar, weights[i], abar)
        z, a = hidden[i - 1]
        zbar = np.empty_like(abar)
        _tanh_jets_backward(abar, z, a, zbar, b_sz)
    return grad_w, grad_b


def value_forward(weights, biases, x):
    x = _as_batch(x)
    weights = _as_c(weights)
    biases = _as_c(biases)
    cdef int b_sz = x.shape[0]
    act = x.reshape(-1, 1)
    hidden = []
    last = len(weights) - 1
    cdef Py_ssize_t i
    for i in range(len(weights)):
        w = weights[i]
        z = np.empty((b_sz, w.shape[0]))
        _gemm_ut(act, w, z)
        z += biases[i]
        if i == last:
            return z, (x.reshape(-1, 1), hidden)
        act = np.tanh(z)
        hidden.append(act)
    raise ValueError("network must have at least one layer")


def value_backward(weights, cache, bar_val):
    x0, hidden = cache
    weights = _as_c(weights)
    zbar = np.ascontiguousarray(bar_val, dtype=np.float64)
    grad_w = [None] * len(weights)
    grad_b = [None] * len(weights)
    cdef Py_ssize_t i
    for i in range(len(weights) - 1, -1, -1):
        below = hidden[i - 1] if i > 0 else x0
        gw = np.empty_like(weights[i])
        _gemm_gtu(zbar, below, gw)
        grad_w[i] = gw
        grad_b[i] = zbar.sum(axis=0)
        if i == 0:
            break
        abar = np.empty((zbar.shape[0], weights[i].shape[1]))
        _gemm_gw(zbar, weights[i], abar)
        a = hidden[i - 1]
        zbar = abar * (1.0 - a * a)
    return grad_w, grad_b


def sturm_counts(diag, offdiag, shifts):
    d_arr = np.ascontiguousarray(diag, dtype=np.float64)
    e_arr = np.ascontiguousarray(offdiag, dtype=np.float64)
    sig_arr = np.ascontiguousarray(np.atleast_1d(shifts), dtype=np.float64)
    if e_arr.shape[0] != d_arr.shape[0] - 1:
        raise ValueError("offdiag must have length len(diag) - 1")
    e2_arr = e_arr * e_arr
    counts_arr = np.zeros(sig_arr.shape[0], dtype=np.int64)

    cdef double[::1] d = d_arr
    cdef double[::1] e2 = e2_arr
    cdef double[::1] sig = sig_arr
    cdef long long[::1] counts = counts_arr
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t m = sig.shape[0]
    cdef Py_ssize_t i, j
    cdef double q, s, pivmin, e2max
    e2max = 0.0
    for i in range(n - 1):
        if e2[i] > e2max:
            e2max = e2[i]
    pivmin = 2.3e-308 * (e2max if e2max > 1.0 else 1.0)
    with nogil:
        for j in range(m):
            s = sig[j]
            q = d[0] - s
            if q < 0.0:
                counts[j] += 1
            for i in range(1, n):
                if q > -pivmin and q < pivmin:
                    q = -pivmin
                q = d[i] - s - e2[i - 1] / q
                if q < 0.0:
                    counts[j] += 1
    return counts_arr
