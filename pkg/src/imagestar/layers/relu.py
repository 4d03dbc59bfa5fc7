"""ReLU reachability: exact per-pixel splitting and the triangle relaxation."""

from dataclasses import dataclass

import numpy as np

from ..errors import EmptySetError
from ..image_star import ImageStar, _row_range
from .base import Layer, Scheme, check_budget


@dataclass(eq=False)
class ReLULayer(Layer):
    kind = "relu"

    def output_shape(self, in_shape):
        return tuple(in_shape)

    def forward(self, X):
        return np.maximum(X, 0.0)

    def reach(self, star, scheme=Scheme.EXACT, budget=None):
        if Scheme.parse(scheme) is Scheme.EXACT:
            return reach_relu_exact(star, budget=budget)
        return [reach_relu_approx(star)]

    def to_dict(self):
        return {"type": self.kind}


def _zero_pixel(star, index):
    basis = star.basis.copy()
    basis[index] = 0.0
    return star.with_basis(basis)


def step_relu(star, index, rng=None):
    """Apply ReLU to one pixel, splitting the set when its sign is undetermined.

    ``rng`` may pass a precomputed exact range of the pixel.  The non-negative
    branch keeps the row and comes first; the non-positive branch zeroes it.
    Both branches keep the boundary ``value == 0``.
    """
    index = tuple(index)
    row = star.basis[index]
    lo, hi = _row_range(row, star.predicate) if rng is None else rng
    if lo >= 0:
        return [star]
    if hi <= 0:
        return [_zero_pixel(star, index)]
    coef, c = row[1:], row[0]
    # both branches are non-empty because lo < 0 < hi on this very predicate
    pos = ImageStar(star.basis, star.predicate.intersect(-coef[None, :], [c]))
    neg = ImageStar(star.basis, star.predicate.intersect(coef[None, :], [-c]))
    return [pos, _zero_pixel(neg, index)]


def _classify(star):
    """Split pixels into ``(negative, splitting)`` index lists, plus exact ranges
    of the splitting ones.  Estimated ranges rule out most pixels; LPs are
    solved only for those whose estimate straddles zero."""
    if star.is_empty():
        raise EmptySetError("ReLU of an empty ImageStar")
    lo, hi = star.estimate_ranges()
    negative = [tuple(ix) for ix in np.argwhere(hi <= 0)]
    unsure = np.argwhere((lo < 0) & (hi > 0))
    split, ranges = [], []
    for ix in unsure:
        ix = tuple(ix)
        l, u = _row_range(star.basis[ix], star.predicate)
        if l >= 0:
            continue
        if u <= 0:
            negative.append(ix)
            continue
        split.append(ix)
        ranges.append((l, u))
    return negative, split, ranges


def reach_relu_exact(star, budget=None):
    """Fold :func:`step_relu` over every pixel that can change sign."""
    negative, split, ranges = _classify(star)
    base = star
    if negative:
        basis = star.basis.copy()
        for ix in negative:
            basis[ix] = 0.0
        base = star.with_basis(basis)
    running = [base]
    for n, ix in enumerate(split):
        nxt = []
        for s in running:
            # the first split sees the unconstrained predicate: reuse its range
            known = ranges[n] if s.predicate is star.predicate else None
            nxt.extend(step_relu(s, ix, known))
        running = nxt
        check_budget(running, budget)
    return running


def reach_relu_approx(star):
    """One ImageStar; each pixel with exact range ``[l, u]``, ``l < 0 < u``,
    is replaced by a fresh variable ``beta`` with ``beta >= 0``,
    ``beta >= x`` and ``beta <= u (x - l) / (u - l)``."""
    negative, split, ranges = _classify(star)
    m = star.n_vars
    k = len(split)
    basis = np.concatenate([star.basis, np.zeros(star.shape + (k,))], axis=-1)
    for ix in negative:
        basis[ix] = 0.0
    if k == 0:
        return star.with_basis(basis)
    C = np.zeros((3 * k, m + k))
    d = np.zeros(3 * k)
    new_ub = np.empty(k)
    for n, (ix, (l, u)) in enumerate(zip(split, ranges)):
        row = star.basis[ix]
        c, coef = row[0], row[1:]
        col = m + n
        basis[ix] = 0.0
        basis[ix][1 + col] = 1.0
        # beta >= 0
        C[3 * n, col] = -1.0
        # beta >= c + coef.alpha
        C[3 * n + 1, :m] = coef
        C[3 * n + 1, col] = -1.0
        d[3 * n + 1] = -c
        # beta <= u (c + coef.alpha - l) / (u - l)
        slope = u / (u - l)
        C[3 * n + 2, :m] = -slope * coef
        C[3 * n + 2, col] = 1.0
        d[3 * n + 2] = slope * (c - l)
        new_ub[n] = u
    pred = star.predicate.extend(C, d, np.zeros(k), new_ub)
    return ImageStar(basis, pred)
