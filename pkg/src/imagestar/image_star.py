"""ImageStar: an anchor image plus generator images over one shared predicate.

The anchor and generators are stored together in a basis array of shape
``(h, w, nc, m + 1)`` whose slot ``0`` is the anchor.  Flattening to a
:class:`~imagestar.star.Star` uses numpy C order on ``(h, w, nc)``: channel
varies fastest, then column, then row.  Every FC layer, file format and test
relies on this one order.
"""

import numpy as np

from . import lp
from .errors import DimensionMismatch, EmptySetError
from .lp import LinearConstraints
from .star import Predicate, Star, interval_image


class ImageStar:

    def __init__(self, basis, predicate):
        basis = np.asarray(basis, dtype=float)
        if basis.ndim != 4:
            raise DimensionMismatch(f"basis must be (h, w, nc, m+1), got shape {basis.shape}")
        if not isinstance(predicate, Predicate):
            predicate = Predicate(predicate)
        if basis.shape[3] != predicate.n_vars + 1:
            raise DimensionMismatch(
                f"basis has {basis.shape[3] - 1} generators but the predicate has "
                f"{predicate.n_vars} variables"
            )
        self.basis = basis
        self.predicate = predicate

    @classmethod
    def from_generators(cls, anchor, generators, predicate):
        """Build from an anchor image and a sequence (or ``(h, w, nc, m)`` array) of generators."""
        anchor = _as_image(anchor)
        if isinstance(generators, np.ndarray) and generators.ndim == 4:
            gens = generators.astype(float)
        elif len(generators) == 0:
            gens = np.zeros(anchor.shape + (0,))
        else:
            gens = np.stack([_as_image(g) for g in generators], axis=-1)
        if gens.shape[:3] != anchor.shape:
            raise DimensionMismatch("generator images must share the anchor's shape")
        return cls(np.concatenate([anchor[..., None], gens], axis=-1), predicate)

    @classmethod
    def from_box(cls, anchor, generators, lb, ub):
        return cls.from_generators(anchor, generators, Predicate.box(lb, ub))

    @classmethod
    def singleton(cls, image):
        image = _as_image(image)
        return cls(image[..., None], Predicate.vacuous(0))

    @classmethod
    def from_star(cls, star, shape):
        h, w, nc = shape
        if star.dim != h * w * nc:
            raise DimensionMismatch(f"star of dimension {star.dim} cannot be shaped {shape}")
        basis = np.concatenate([star.c[:, None], star.V], axis=1).reshape(h, w, nc, -1)
        return cls(basis, star.predicate)

    def __repr__(self):
        h, w, nc = self.shape
        return f"ImageStar({h}x{w}x{nc}, m={self.n_vars}, p={self.predicate.n_rows})"

    @property
    def anchor(self):
        return self.basis[..., 0]

    @property
    def generators(self):
        return self.basis[..., 1:]

    @property
    def shape(self):
        return self.basis.shape[:3]

    @property
    def n_pixels(self):
        h, w, nc = self.shape
        return h * w * nc

    @property
    def n_vars(self):
        return self.basis.shape[3] - 1

    @property
    def C(self):
        return self.predicate.C

    @property
    def d(self):
        return self.predicate.d

    def with_basis(self, basis):
        """Same predicate, new basis array."""
        return ImageStar(basis, self.predicate)

    def flat_basis(self):
        return self.basis.reshape(self.n_pixels, self.n_vars + 1)

    def to_star(self):
        B = self.flat_basis()
        return Star(B[:, 0], B[:, 1:], self.predicate)

    def point(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        return self.anchor + self.generators @ alpha

    def is_empty(self):
        return not self.predicate.is_feasible()

    def affine_scale(self, gamma=1.0, beta=0.0):
        """``anchor -> gamma * anchor + beta`` and ``generator -> gamma * generator``.

        ``gamma`` is a scalar or one factor per channel; ``beta`` is a scalar,
        one offset per channel, or a full offset image.
        """
        nc = self.shape[2]
        gamma = np.asarray(gamma, dtype=float)
        beta = np.asarray(beta, dtype=float)
        if gamma.ndim == 1 and gamma.size != nc:
            raise DimensionMismatch(f"per-channel scale needs {nc} values, got {gamma.size}")
        if gamma.ndim > 1:
            raise DimensionMismatch("scale must be a scalar or a per-channel vector")
        if beta.ndim == 1 and beta.size != nc:
            raise DimensionMismatch(f"per-channel offset needs {nc} values, got {beta.size}")
        if beta.ndim == 3 and beta.shape != self.shape:
            raise DimensionMismatch(f"offset image must be {self.shape}, got {beta.shape}")
        if beta.ndim == 2 or beta.ndim > 3:
            raise DimensionMismatch("offset must be a scalar, per-channel vector or image")
        g = gamma.reshape(1, 1, nc, 1) if gamma.ndim == 1 else gamma
        basis = self.basis * g
        basis[..., 0] += beta
        return self.with_basis(basis)

    # ---- ranges -----------------------------------------------------------

    def estimate_ranges(self):
        """Interval bounds of every pixel, shape ``(h, w, nc)`` each."""
        if self.n_vars == 0:
            if self.is_empty():
                raise EmptySetError("range of an empty ImageStar")
            return self.anchor.copy(), self.anchor.copy()
        lb, ub = self.predicate.bounds()
        lo, hi = interval_image(self.anchor, self.generators, lb, ub)
        return lo, hi

    def pixel_estimate_range(self, i, j, k):
        if self.n_vars == 0:
            v = float(self.anchor[i, j, k])
            return v, v
        lb, ub = self.predicate.bounds()
        lo, hi = interval_image(self.anchor[i, j, k], self.generators[i, j, k][None, :], lb, ub)
        return float(lo[0]), float(hi[0])

    def pixel_exact_range(self, i, j, k):
        row = self.basis[i, j, k]
        return _row_range(row, self.predicate)

    def pixel_value_row(self, i, j, k):
        """The pixel as an affine function ``row[0] + row[1:] @ alpha``."""
        return self.basis[i, j, k]

    # ---- max-pool support ---------------------------------------------------

    def get_local_max_index(self, start, pool, channel, est=None):
        """Positions of the pool region that can be the regional maximum.

        First discards positions whose estimated upper bound is strictly below
        the largest estimated lower bound, then confirms each survivor ``q`` by
        checking ``value(r) <= value(q)`` for all other survivors ``r`` is
        feasible.  Survivors with identical value functions are merged into the
        first of them.  ``est`` may pass precomputed ``estimate_ranges()``.
        """
        r0, c0 = start
        p1, p2 = pool
        k = channel
        h, w, _ = self.shape
        if r0 < 0 or c0 < 0 or r0 + p1 > h or c0 + p2 > w:
            raise DimensionMismatch("pool region lies outside the image")
        if self.is_empty():
            raise EmptySetError("max candidates of an empty ImageStar")
        pos = [(r0 + u, c0 + v) for u in range(p1) for v in range(p2)]
        rows = np.array([self.basis[r, c, k] for r, c in pos])
        rows, first = _unique_rows(rows)
        pos = [pos[i] for i in first]
        if len(pos) == 1:
            return pos
        if est is None:
            lo, hi = self.estimate_ranges()
        else:
            lo, hi = est
        lo = np.array([lo[r, c, k] for r, c in pos])
        hi = np.array([hi[r, c, k] for r, c in pos])
        keep = np.flatnonzero(~(hi < lo.max()))
        if keep.size == 1:
            return [pos[keep[0]]]
        out = []
        for q in keep:
            others = [r for r in keep if r != q]
            if _can_dominate(rows[q], rows[others], self.predicate):
                out.append(pos[q])
        return out

    def pad(self, padding):
        """Zero-pad anchor and generators; ``padding = (top, bottom, left, right)``."""
        t, b, l, r = padding
        if not any(padding):
            return self
        basis = np.pad(self.basis, ((t, b), (l, r), (0, 0), (0, 0)))
        return self.with_basis(basis)

    # ---- membership & sampling ---------------------------------------------

    def contains_image(self, x, tol=None):
        x = _as_image(x)
        if x.shape != self.shape:
            raise DimensionMismatch(f"image shape {x.shape} differs from set shape {self.shape}")
        return self.to_star().contains(x.reshape(-1), tol)

    def sample_alpha(self, k, seed=None):
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return self.predicate.sample(k, rng)

    def sample(self, k, seed=None):
        """``k`` member images, shape ``(k, h, w, nc)``."""
        alphas = self.sample_alpha(k, seed)
        return self.images_at(alphas)

    def images_at(self, alphas):
        """Member images for predicate points ``alphas`` of shape ``(k, m)``."""
        alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
        flat = self.flat_basis()
        pts = flat[:, 0][None, :] + alphas @ flat[:, 1:].T
        return pts.reshape((alphas.shape[0],) + self.shape)


def _as_image(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[:, :, None]
    if x.ndim != 3:
        raise DimensionMismatch(f"expected an (h, w, nc) image, got shape {x.shape}")
    return x


def _row_range(row, predicate):
    """Exact range of ``row[0] + row[1:] @ alpha`` over the predicate."""
    coef = row[1:]
    if coef.size == 0 or not np.any(coef):
        if not predicate.is_feasible():
            raise EmptySetError("range of an empty set")
        return float(row[0]), float(row[0])
    lo = lp.minimize(coef, predicate.cons)
    if lo.status is lp.LPStatus.INFEASIBLE:
        raise EmptySetError("range of an empty set")
    hi = lp.maximize(coef, predicate.cons)
    lo_v = lo.value if lo.optimal else -np.inf
    hi_v = hi.value if hi.optimal else np.inf
    return float(row[0] + lo_v), float(row[0] + hi_v)


def _unique_rows(rows, tol=1e-12):
    keep = []
    for i, r in enumerate(rows):
        if not any(np.allclose(r, rows[j], rtol=0.0, atol=tol) for j in keep):
            keep.append(i)
    return rows[keep], keep


def _can_dominate(row_q, rows_other, predicate):
    """Is ``value(r) - value(q) <= 0`` for every other ``r`` feasible?"""
    C, d = dominance_constraints(row_q, rows_other)
    return lp.is_feasible(predicate.cons.stack(C, d))


def dominance_constraints(row_q, rows_other):
    """Rows making ``q`` the maximum: ``(v_r - v_q) alpha <= c_q - c_r``."""
    rows_other = np.atleast_2d(rows_other)
    diff = rows_other - row_q
    return diff[:, 1:], -diff[:, 0]


__all__ = ["ImageStar", "LinearConstraints", "dominance_constraints"]
