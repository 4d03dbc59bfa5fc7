"""Dense two-phase simplex over ``{alpha : C alpha <= d}`` with free variables.

This is the only numerical engine behind emptiness checks, exact ranges and
max-point candidate pruning.  Free variables are split as ``alpha = u - w``
with ``u, w >= 0``; every row receives a slack, and rows with a negative
right-hand side are flipped and given an artificial for phase 1.  Bland's rule
is used in both phases, so the solver always terminates and identical inputs
give identical outcomes.
"""

import enum
import threading
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._config import CONFIG
from .errors import DimensionMismatch


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LinearConstraints:
    """``C @ alpha <= d`` with ``C`` of shape ``(p, m)``."""

    C: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        C = np.array(self.C, dtype=float, copy=True)
        d = np.array(self.d, dtype=float, copy=True).reshape(-1)
        if C.ndim == 1 and C.size == 0:
            C = C.reshape(0, 0)
        if C.ndim != 2:
            raise DimensionMismatch(f"C must be 2-D, got shape {C.shape}")
        if C.shape[0] != d.shape[0]:
            raise DimensionMismatch(f"C has {C.shape[0]} rows but d has {d.shape[0]}")
        if not (np.all(np.isfinite(C)) and np.all(np.isfinite(d))):
            raise ValueError("constraints must be finite")
        C.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "d", d)

    @property
    def n_vars(self):
        return self.C.shape[1]

    @property
    def n_rows(self):
        return self.C.shape[0]

    @classmethod
    def box(cls, lb, ub):
        lb = np.asarray(lb, dtype=float).reshape(-1)
        ub = np.asarray(ub, dtype=float).reshape(-1)
        eye = np.eye(lb.size)
        return cls(np.vstack([eye, -eye]), np.concatenate([ub, -lb]))

    def stack(self, C, d):
        """Return these constraints with extra rows appended."""
        d = np.asarray(d, dtype=float).reshape(-1)
        C = np.asarray(C, dtype=float).reshape(d.size, self.n_vars)
        return LinearConstraints(np.vstack([self.C, C]), np.concatenate([self.d, d]))

    def extend_vars(self, k):
        """Embed into a space with ``k`` extra trailing variables (zero columns)."""
        return LinearConstraints(np.hstack([self.C, np.zeros((self.n_rows, k))]), self.d)

    def satisfied(self, alpha, tol=None):
        tol = CONFIG.feas_tol if tol is None else tol
        alpha = np.asarray(alpha, dtype=float)
        return bool(np.all(self.C @ alpha <= self.d + tol))


@dataclass(frozen=True)
class LPOutcome:
    status: LPStatus
    value: float = float("nan")
    witness: np.ndarray = field(default=None, repr=False)

    @property
    def optimal(self):
        return self.status is LPStatus.OPTIMAL


class _Counter:
    def __init__(self):
        self._lock = threading.Lock()
        self._n = 0

    def bump(self):
        with self._lock:
            self._n += 1

    @property
    def value(self):
        return self._n


LP_CALLS = _Counter()


def lp_call_count():
    """Total number of LP solves performed by this process."""
    return LP_CALLS.value


def _as_constraints(cons):
    if isinstance(cons, LinearConstraints):
        return cons
    C, d = cons
    return LinearConstraints(C, d)


def _phase_one(C, d):
    """Build the tableau and drive it to a feasible basis.

    Returns ``(T, basis, n_real)`` with artificial columns removed, or ``None``
    when the polytope is empty.
    """
    cfg = CONFIG
    p, m = C.shape
    n_real = 2 * m + p
    neg = d < 0
    n_art = int(neg.sum())
    T = np.zeros((p + 1, n_real + n_art + 1))
    T[:p, :m] = C
    T[:p, m : 2 * m] = -C
    T[:p, 2 * m : n_real] = np.eye(p)
    T[:p, -1] = d
    T[:p][neg] *= -1.0
    basis = np.arange(2 * m, n_real, dtype=np.int64)
    if n_art:
        art_rows = np.flatnonzero(neg)
        T[art_rows, n_real + np.arange(n_art)] = 1.0
        basis[art_rows] = n_real + np.arange(n_art)
        T[-1, :n_real] = -T[art_rows, :n_real].sum(axis=0)
        T[-1, -1] = -T[art_rows, -1].sum()
        status = _kernels.simplex(
            T, basis, n_real, cfg.pivot_tol, cfg.pivot_tol, cfg.max_simplex_iter
        )
        if status == _kernels.SIMPLEX_ITER_LIMIT:  # pragma: no cover
            raise RuntimeError("phase-1 simplex hit the iteration limit")
        scale = max(1.0, float(np.abs(d).max()))
        if -T[-1, -1] > cfg.feas_tol * scale:
            return None
        keep = np.ones(p + 1, dtype=bool)
        for i in range(p):
            if basis[i] < n_real:
                continue
            row = T[i, :n_real]
            cand = np.flatnonzero(np.abs(row) > cfg.pivot_tol)
            if cand.size == 0:
                keep[i] = False  # redundant row
                continue
            j = cand[0]
            T[i] /= T[i, j]
            f = T[:, j].copy()
            f[i] = 0.0
            T -= np.outer(f, T[i])
            basis[i] = j
        T = T[keep]
        basis = basis[keep[:-1]]
        T = np.ascontiguousarray(np.hstack([T[:, :n_real], T[:, -1:]]))
        T[-1] = 0.0
    return T, basis, n_real


def _solve(obj, cons):
    cons = _as_constraints(cons)
    obj = np.asarray(obj, dtype=float).reshape(-1)
    m = cons.n_vars
    if obj.shape[0] != m:
        raise DimensionMismatch(f"objective has length {obj.shape[0]}, constraints have {m} columns")
    LP_CALLS.bump()
    C, d = cons.C, cons.d
    start = _phase_one(C, d)
    if start is None:
        return LPOutcome(LPStatus.INFEASIBLE)
    T, basis, n_real = start
    cost = np.zeros(n_real)
    cost[:m] = obj
    cost[m : 2 * m] = -obj
    T[-1, :n_real] = cost
    T[-1, -1] = 0.0
    cb = cost[basis]
    T[-1] -= cb @ T[:-1]
    status = _kernels.simplex(
        T, basis, n_real, CONFIG.pivot_tol, CONFIG.pivot_tol, CONFIG.max_simplex_iter
    )
    if status == _kernels.SIMPLEX_UNBOUNDED:
        return LPOutcome(LPStatus.UNBOUNDED)
    if status == _kernels.SIMPLEX_ITER_LIMIT:  # pragma: no cover
        raise RuntimeError("phase-2 simplex hit the iteration limit")
    x = np.zeros(n_real)
    x[basis] = T[:-1, -1]
    alpha = x[:m] - x[m : 2 * m]
    return LPOutcome(LPStatus.OPTIMAL, float(obj @ alpha), alpha)


def minimize(obj, cons):
    """Minimise ``obj @ alpha`` subject to ``cons``."""
    return _solve(obj, cons)


def maximize(obj, cons):
    """Maximise ``obj @ alpha`` subject to ``cons``; defined as ``-minimize(-obj)``."""
    out = _solve(-np.asarray(obj, dtype=float), cons)
    if out.optimal:
        return LPOutcome(LPStatus.OPTIMAL, -out.value, out.witness)
    return out


def is_feasible(cons):
    """Phase-1 check that ``{alpha : C alpha <= d}`` is non-empty."""
    cons = _as_constraints(cons)
    LP_CALLS.bump()
    return _phase_one(cons.C, cons.d) is not None


def feasible_point(cons):
    """Some point of the polytope, or ``None`` if it is empty."""
    out = minimize(np.zeros(_as_constraints(cons).n_vars), cons)
    return out.witness if out.optimal else None
