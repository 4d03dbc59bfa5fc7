"""Hot inner loops: simplex pivoting and batched conv/pool sweeps.

Every kernel exists twice: an ``@njit`` loop version and a vectorised numpy
version.  The public names at the bottom of the module are bound to one or the
other according to ``IMAGESTAR_NO_NUMBA``; both variants stay importable under
``*_numba`` / ``*_numpy`` so the benchmark and tests can compare them.

Batched image arrays are laid out ``(h, w, nc, B)``; the trailing axis is the
batch (anchor + generators, or concrete samples).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._config import USE_NUMBA

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f


SIMPLEX_OPTIMAL = 0
SIMPLEX_UNBOUNDED = 1
SIMPLEX_ITER_LIMIT = 2


# ---------------------------------------------------------------------------
# simplex
# ---------------------------------------------------------------------------

def simplex_numpy(T, basis, n_enter, cost_tol, pivot_tol, max_iter):
    """Primal simplex with Bland's rule, in place on tableau ``T``.

    ``T[:-1]`` are constraint rows, ``T[-1]`` the reduced-cost row with
    ``T[-1, -1] == -objective``; the last column is the right-hand side.
    Only columns ``< n_enter`` may enter the basis.
    """
    p = T.shape[0] - 1
    for _ in range(max_iter):
        costs = T[-1, :n_enter]
        neg = np.flatnonzero(costs < -cost_tol)
        if neg.size == 0:
            return SIMPLEX_OPTIMAL
        j = neg[0]
        col = T[:p, j]
        rows = np.flatnonzero(col > pivot_tol)
        if rows.size == 0:
            return SIMPLEX_UNBOUNDED
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = ties[np.argmin(basis[ties])]
        T[r] /= T[r, j]
        factors = T[:, j].copy()
        factors[r] = 0.0
        T -= np.outer(factors, T[r])
        basis[r] = j
    return SIMPLEX_ITER_LIMIT


@njit(cache=True, nogil=True)
def simplex_numba(T, basis, n_enter, cost_tol, pivot_tol, max_iter):
    p = T.shape[0] - 1
    ncol = T.shape[1]
    for _ in range(max_iter):
        j = -1
        for k in range(n_enter):
            if T[p, k] < -cost_tol:
                j = k
                break
        if j < 0:
            return SIMPLEX_OPTIMAL
        r = -1
        best = 0.0
        for i in range(p):
            a = T[i, j]
            if a > pivot_tol:
                ratio = T[i, ncol - 1] / a
                if r < 0:
                    r = i
                    best = ratio
                else:
                    slack = 1e-12 * max(1.0, abs(best))
                    if ratio < best - slack:
                        r = i
                        best = ratio
                    elif ratio <= best + slack and basis[i] < basis[r]:
                        r = i
                        if ratio < best:
                            best = ratio
        if r < 0:
            return SIMPLEX_UNBOUNDED
        piv = T[r, j]
        for k in range(ncol):
            T[r, k] /= piv
        for i in range(p + 1):
            if i != r:
                f = T[i, j]
                if f != 0.0:
                    for k in range(ncol):
                        T[i, k] -= f * T[r, k]
        basis[r] = j
    return SIMPLEX_ITER_LIMIT


# ---------------------------------------------------------------------------
# convolution (cross-correlation, no bias) on pre-padded batches
# ---------------------------------------------------------------------------

def _out_size(n, k, s, dil):
    return (n - ((k - 1) * dil + 1)) // s + 1


def conv2d_numpy(X, W, stride, dilation):
    hf, wf, nc, nf = W.shape
    s1, s2 = stride
    d1, d2 = dilation
    ho = _out_size(X.shape[0], hf, s1, d1)
    wo = _out_size(X.shape[1], wf, s2, d2)
    # windows: (ho', wo', nc, B, hf_span, wf_span)
    span_h = (hf - 1) * d1 + 1
    span_w = (wf - 1) * d2 + 1
    win = sliding_window_view(X, (span_h, span_w), axis=(0, 1))
    win = win[: (ho - 1) * s1 + 1 : s1, : (wo - 1) * s2 + 1 : s2, :, :, ::d1, ::d2]
    return np.einsum("ijcbuv,uvcf->ijfb", win, W, optimize=True)


@njit(cache=True, nogil=True)
def conv2d_numba(X, W, stride, dilation):
    hf, wf, nc, nf = W.shape
    s1, s2 = stride
    d1, d2 = dilation
    B = X.shape[3]
    ho = (X.shape[0] - ((hf - 1) * d1 + 1)) // s1 + 1
    wo = (X.shape[1] - ((wf - 1) * d2 + 1)) // s2 + 1
    out = np.zeros((ho, wo, nf, B))
    for i in range(ho):
        for j in range(wo):
            for f in range(nf):
                for u in range(hf):
                    r = i * s1 + u * d1
                    for v in range(wf):
                        c = j * s2 + v * d2
                        for ch in range(nc):
                            wgt = W[u, v, ch, f]
                            if wgt != 0.0:
                                for b in range(B):
                                    out[i, j, f, b] += wgt * X[r, c, ch, b]
    return out


# ---------------------------------------------------------------------------
# pooling on pre-padded batches
# ---------------------------------------------------------------------------

def _pool_windows(X, pool, stride):
    p1, p2 = pool
    s1, s2 = stride
    ho = _out_size(X.shape[0], p1, s1, 1)
    wo = _out_size(X.shape[1], p2, s2, 1)
    win = sliding_window_view(X, (p1, p2), axis=(0, 1))
    return win[: (ho - 1) * s1 + 1 : s1, : (wo - 1) * s2 + 1 : s2]


def avgpool_numpy(X, pool, stride):
    return _pool_windows(X, pool, stride).mean(axis=(-2, -1))


def maxpool_numpy(X, pool, stride):
    return _pool_windows(X, pool, stride).max(axis=(-2, -1))


@njit(cache=True, nogil=True)
def avgpool_numba(X, pool, stride):
    p1, p2 = pool
    s1, s2 = stride
    h, w, nc, B = X.shape
    ho = (h - p1) // s1 + 1
    wo = (w - p2) // s2 + 1
    out = np.zeros((ho, wo, nc, B))
    scale = 1.0 / (p1 * p2)
    for i in range(ho):
        for j in range(wo):
            for u in range(p1):
                for v in range(p2):
                    for ch in range(nc):
                        for b in range(B):
                            out[i, j, ch, b] += X[i * s1 + u, j * s2 + v, ch, b]
    for i in range(ho):
        for j in range(wo):
            for ch in range(nc):
                for b in range(B):
                    out[i, j, ch, b] *= scale
    return out


@njit(cache=True, nogil=True)
def maxpool_numba(X, pool, stride):
    p1, p2 = pool
    s1, s2 = stride
    h, w, nc, B = X.shape
    ho = (h - p1) // s1 + 1
    wo = (w - p2) // s2 + 1
    out = np.empty((ho, wo, nc, B))
    for i in range(ho):
        for j in range(wo):
            m = out[i, j]
            m[:, :] = X[i * s1, j * s2]
            for u in range(p1):
                for v in range(p2):
                    xs = X[i * s1 + u, j * s2 + v]
                    for ch in range(nc):
                        for b in range(B):
                            if xs[ch, b] > m[ch, b]:
                                m[ch, b] = xs[ch, b]
    return out


if USE_NUMBA and HAVE_NUMBA:
    simplex = simplex_numba
    conv2d = conv2d_numba
    avgpool = avgpool_numba
    maxpool = maxpool_numba
else:
    simplex = simplex_numpy
    conv2d = conv2d_numpy
    avgpool = avgpool_numpy
    maxpool = maxpool_numpy

BACKEND = "numba" if simplex is simplex_numba and HAVE_NUMBA and USE_NUMBA else "numpy"
