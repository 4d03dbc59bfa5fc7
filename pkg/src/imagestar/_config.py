"""Numerical tolerances and the numba switch, declared once."""

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class NumericConfig:
    # primal feasibility slack accepted on C @ alpha <= d
    feas_tol: float = 1e-7
    # smallest magnitude accepted as a simplex pivot
    pivot_tol: float = 1e-9
    # tolerance used when pairing equalities as two inequalities (membership)
    member_tol: float = 1e-7
    max_simplex_iter: int = 50_000


CONFIG = NumericConfig()


def _env_flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


# IMAGESTAR_NO_NUMBA=1 forces the pure-numpy kernels.
USE_NUMBA = not _env_flag("IMAGESTAR_NO_NUMBA")
