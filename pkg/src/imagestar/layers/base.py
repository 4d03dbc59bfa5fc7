import enum

import numpy as np

from ..errors import BudgetExceeded, DimensionMismatch


class Scheme(str, enum.Enum):
    EXACT = "exact"
    APPROX = "approx"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown scheme {value!r}; use 'exact' or 'approx'") from None


def as_batch(x):
    """``(h, w, nc)`` image or ``(B, h, w, nc)`` stack -> ``(h, w, nc, B)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[:, :, None]
    if x.ndim == 3:
        return x[..., None], True
    if x.ndim == 4:
        return np.moveaxis(x, 0, -1), False
    raise DimensionMismatch(f"expected an image or a stack of images, got shape {x.shape}")


def from_batch(X, single):
    return X[..., 0] if single else np.moveaxis(X, -1, 0)


def pair(v, name):
    if np.isscalar(v):
        v = (v, v)
    v = tuple(int(a) for a in v)
    if len(v) != 2:
        raise ValueError(f"{name} needs two values, got {v}")
    return v


def quad(v, name):
    if np.isscalar(v):
        v = (v,) * 4
    v = tuple(int(a) for a in v)
    if len(v) != 4:
        raise ValueError(f"{name} needs four values (top, bottom, left, right), got {v}")
    if min(v) < 0:
        raise ValueError(f"{name} must be non-negative")
    return v


def pad_batch(X, padding):
    t, b, l, r = padding
    if not any(padding):
        return X
    return np.pad(X, ((t, b), (l, r), (0, 0), (0, 0)))


def check_budget(stars, budget):
    if budget is not None and len(stars) > budget:
        raise BudgetExceeded(len(stars), budget)


class Layer:
    """Common surface of every layer description.

    ``reach(star, scheme)`` maps one ImageStar to a list of ImageStars and
    ``forward(X)`` runs a concrete batch laid out ``(h, w, nc, B)``.
    """

    kind = "layer"

    def output_shape(self, in_shape):
        raise NotImplementedError

    def reach(self, star, scheme=Scheme.EXACT, budget=None):
        raise NotImplementedError

    def forward(self, X):
        raise NotImplementedError

    def evaluate(self, x):
        """Concrete forward pass of one image or a ``(B, h, w, nc)`` stack."""
        X, single = as_batch(x)
        return from_batch(self.forward(np.ascontiguousarray(X)), single)

    def to_dict(self):
        raise NotImplementedError
