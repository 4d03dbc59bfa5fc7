"""Generalized star sets ``{c + V alpha : C alpha <= d}`` over flat vectors."""

import threading

import numpy as np

from . import lp
from ._config import CONFIG
from .errors import DimensionMismatch, EmptySetError
from .lp import LinearConstraints, LPStatus


class Predicate:
    """Linear constraints on the predicate variables plus cached variable bounds.

    The cached ``(lb, ub)`` are outer bounds: every feasible ``alpha`` satisfies
    ``lb <= alpha <= ub``.  A predicate built by adding rows starts stale and
    recomputes its bounds with ``2 m`` LPs the first time they are needed.
    Apart from that cache a predicate is immutable, so stars share them freely.
    """

    def __init__(self, cons, lb=None, ub=None):
        if not isinstance(cons, LinearConstraints):
            cons = LinearConstraints(*cons)
        self.cons = cons
        self._lock = threading.Lock()
        self._lb = None if lb is None else np.asarray(lb, dtype=float).copy()
        self._ub = None if ub is None else np.asarray(ub, dtype=float).copy()
        self._feasible = None
        if (self._lb is None) != (self._ub is None):
            raise ValueError("lb and ub must be given together")
        if self._lb is not None and self._lb.shape != (cons.n_vars,):
            raise DimensionMismatch("bounds do not match the number of predicate variables")

    @classmethod
    def box(cls, lb, ub):
        lb = np.asarray(lb, dtype=float).reshape(-1)
        ub = np.asarray(ub, dtype=float).reshape(-1)
        return cls(LinearConstraints.box(lb, ub), lb, ub)

    @classmethod
    def vacuous(cls, m=0):
        return cls(LinearConstraints(np.zeros((0, m)), np.zeros(0)))

    @property
    def C(self):
        return self.cons.C

    @property
    def d(self):
        return self.cons.d

    @property
    def n_vars(self):
        return self.cons.n_vars

    @property
    def n_rows(self):
        return self.cons.n_rows

    @property
    def fresh(self):
        return self._lb is not None

    def is_feasible(self):
        if self._feasible is None:
            self._feasible = lp.is_feasible(self.cons)
        return self._feasible

    def bounds(self):
        """Per-variable ``(lb, ub)``; refreshed by LP when stale."""
        if self._lb is None:
            with self._lock:
                if self._lb is None:
                    self._refresh()
        return self._lb, self._ub

    def _refresh(self):
        m = self.n_vars
        lb = np.empty(m)
        ub = np.empty(m)
        if not self.is_feasible():
            raise EmptySetError("predicate is infeasible")
        for i in range(m):
            e = np.zeros(m)
            e[i] = 1.0
            lo = lp.minimize(e, self.cons)
            hi = lp.maximize(e, self.cons)
            lb[i] = lo.value if lo.optimal else -np.inf
            ub[i] = hi.value if hi.optimal else np.inf
        self._lb, self._ub = lb, ub

    def intersect(self, C, d):
        """Conjunction with extra rows; the result has stale bounds."""
        return Predicate(self.cons.stack(C, d))

    def extend(self, C_new, d_new, new_lb, new_ub):
        """Append ``k`` new variables with their defining rows.

        ``C_new`` is expressed over all ``m + k`` variables.  ``new_lb`` and
        ``new_ub`` must be valid outer bounds of the new variables; the existing
        variables keep their bounds, so this is only correct when the new rows
        never restrict the old variables (true for relaxation variables).
        """
        k = len(new_lb)
        cons = self.cons.extend_vars(k).stack(C_new, d_new)
        if self.fresh:
            lb, ub = self.bounds()
            return Predicate(cons, np.concatenate([lb, new_lb]), np.concatenate([ub, new_ub]))
        return Predicate(cons)

    def contains(self, alpha, tol=None):
        return self.cons.satisfied(alpha, tol)

    def sample(self, k, rng):
        """``k`` feasible predicate points.

        Rejection sampling inside the bounding box first; whatever is still
        missing is filled with random convex combinations of LP vertices, which
        are feasible by convexity.
        """
        m = self.n_vars
        if m == 0:
            if not self.is_feasible():
                raise EmptySetError("predicate is infeasible")
            return np.zeros((k, 0))
        lb, ub = self.bounds()
        ub = np.maximum(ub, lb)  # flat predicates can give lb a hair above ub
        C, d = self.cons.C, self.cons.d
        got = []
        n_have = 0
        if np.all(np.isfinite(lb)) and np.all(np.isfinite(ub)):
            batch = max(4 * k, 256)
            for _ in range(20):
                pts = rng.uniform(lb, ub, size=(batch, m))
                ok = np.all(pts @ C.T <= d, axis=1)
                if ok.any():
                    got.append(pts[ok])
                    n_have += int(ok.sum())
                if n_have >= k:
                    break
        if n_have < k:
            got.append(self._vertex_mixtures(k - n_have, rng))
        return np.vstack(got)[:k]

    def _vertex_mixtures(self, k, rng):
        m = self.n_vars
        verts = []
        for _ in range(2 * m + 4):
            out = lp.maximize(rng.normal(size=m), self.cons)
            if out.optimal:
                verts.append(out.witness)
        if not verts:
            p = lp.feasible_point(self.cons)
            if p is None:
                raise EmptySetError("predicate is infeasible")
            verts.append(p)
        verts = np.array(verts)
        w = rng.dirichlet(np.ones(len(verts)), size=k)
        return w @ verts


class Star:
    """``{c + V @ alpha : C @ alpha <= d}`` in ``R^n``.

    ``V`` has shape ``(n, m)``; column ``j`` is the generator of predicate
    variable ``alpha_j``.  ``m == 0`` with a vacuous predicate is the singleton
    ``{c}``.  Stars are immutable; operations return new stars and share the
    predicate whenever it is unchanged.
    """

    def __init__(self, c, V, predicate):
        c = np.asarray(c, dtype=float).reshape(-1)
        V = np.asarray(V, dtype=float)
        if V.ndim == 1 and V.size == 0:
            V = V.reshape(c.size, 0)
        if not isinstance(predicate, Predicate):
            predicate = Predicate(predicate)
        if c.size < 1:
            raise DimensionMismatch("a star needs dimension n >= 1")
        if V.shape != (c.size, predicate.n_vars):
            raise DimensionMismatch(
                f"basis shape {V.shape} does not match center {c.size} "
                f"and {predicate.n_vars} predicate variables"
            )
        self.c = c
        self.V = V
        self.predicate = predicate

    def __repr__(self):
        return f"Star(n={self.dim}, m={self.n_vars}, p={self.predicate.n_rows})"

    @property
    def dim(self):
        return self.c.size

    @property
    def n_vars(self):
        return self.V.shape[1]

    @property
    def C(self):
        return self.predicate.C

    @property
    def d(self):
        return self.predicate.d

    @classmethod
    def from_polyhedron(cls, C, d, n=None):
        """The polyhedron ``{x : C x <= d}`` as ``<0, I_n, C alpha <= d>``."""
        C = np.asarray(C, dtype=float)
        if n is None:
            n = C.shape[1]
        if C.ndim != 2 or C.shape[1] != n:
            raise DimensionMismatch(f"C must have {n} columns, got shape {C.shape}")
        return cls(np.zeros(n), np.eye(n), Predicate(LinearConstraints(C, d)))

    @classmethod
    def from_box(cls, lb, ub):
        lb = np.asarray(lb, dtype=float).reshape(-1)
        ub = np.asarray(ub, dtype=float).reshape(-1)
        return cls(np.zeros(lb.size), np.eye(lb.size), Predicate.box(lb, ub))

    def point(self, alpha):
        return self.c + self.V @ np.asarray(alpha, dtype=float)

    def affine_map(self, W, b=None):
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.shape[1] != self.dim:
            raise DimensionMismatch(f"W must have {self.dim} columns, got shape {W.shape}")
        b = np.zeros(W.shape[0]) if b is None else np.asarray(b, dtype=float).reshape(-1)
        if b.shape[0] != W.shape[0]:
            raise DimensionMismatch("offset length does not match W rows")
        return Star(W @ self.c + b, W @ self.V, self.predicate)

    def intersect_halfspace(self, H, g):
        """``self ∩ {x : H x <= g}``, i.e. rows ``(H V) alpha <= g - H c`` added."""
        H = np.atleast_2d(np.asarray(H, dtype=float))
        if H.shape[1] != self.dim:
            raise DimensionMismatch(f"H must have {self.dim} columns, got shape {H.shape}")
        g = np.asarray(g, dtype=float).reshape(-1)
        return Star(self.c, self.V, self.predicate.intersect(H @ self.V, g - H @ self.c))

    def is_empty(self):
        return not self.predicate.is_feasible()

    def exact_range(self, i):
        """``[min x_i, max x_i]`` over the set, by two LPs."""
        row = self.V[i]
        if self.n_vars == 0 or not np.any(row):
            if self.is_empty():
                raise EmptySetError("range of an empty star")
            return float(self.c[i]), float(self.c[i])
        lo = lp.minimize(row, self.predicate.cons)
        if lo.status is LPStatus.INFEASIBLE:
            raise EmptySetError("range of an empty star")
        hi = lp.maximize(row, self.predicate.cons)
        lo_v = lo.value if lo.optimal else -np.inf
        hi_v = hi.value if hi.optimal else np.inf
        return float(self.c[i] + lo_v), float(self.c[i] + hi_v)

    def estimate_ranges(self):
        """Interval-arithmetic bounds of every coordinate from the variable bounds."""
        if self.n_vars == 0:
            if self.is_empty():
                raise EmptySetError("range of an empty star")
            return self.c.copy(), self.c.copy()
        lb, ub = self.predicate.bounds()
        return interval_image(self.c, self.V, lb, ub)

    def estimate_range(self, i):
        lo, hi = self.estimate_ranges()
        return float(lo[i]), float(hi[i])

    def contains(self, x, tol=None):
        """Membership by a phase-1 LP on ``V alpha = x - c`` and the predicate."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.dim:
            raise DimensionMismatch(f"point has length {x.size}, star has dimension {self.dim}")
        tol = CONFIG.member_tol if tol is None else tol
        tol = tol * max(1.0, float(np.abs(x).max(initial=0.0)))
        r = x - self.c
        C = np.vstack([self.C, self.V, -self.V])
        d = np.concatenate([self.d, r + tol, -r + tol])
        return lp.is_feasible(LinearConstraints(C, d))

    def sample(self, k, seed=None):
        """``k`` points of the set (see :meth:`Predicate.sample`)."""
        rng = np.random.default_rng(seed)
        alphas = self.predicate.sample(k, rng)
        return self.c + alphas @ self.V.T


def interval_image(c, V, lb, ub):
    """Bounds of ``c + V alpha`` over the box ``lb <= alpha <= ub``."""
    Vp = np.maximum(V, 0.0)
    Vn = np.minimum(V, 0.0)
    with np.errstate(invalid="ignore"):
        lo = c + _safe_dot(Vp, lb) + _safe_dot(Vn, ub)
        hi = c + _safe_dot(Vp, ub) + _safe_dot(Vn, lb)
    return lo, hi


def _safe_dot(M, v):
    # 0 * inf must count as 0 for untouched coordinates
    if np.all(np.isfinite(v)):
        return M @ v
    prod = np.where(M == 0.0, 0.0, M * v)
    return prod.sum(axis=-1)
