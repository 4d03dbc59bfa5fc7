"""Max pooling: exact reachability by splitting on max-point candidates, and
the over-approximation that gives every ambiguous region a fresh variable."""

from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..errors import EmptySetError, ShapeError
from ..image_star import ImageStar, _row_range, dominance_constraints
from .affine import pool_output_shape
from .base import Layer, Scheme, check_budget, pad_batch, pair, quad


@dataclass(eq=False)
class MaxPoolLayer(Layer):
    pool_size: tuple = (2, 2)
    padding: tuple = (0, 0, 0, 0)
    stride: tuple = None
    kind = "maxpool"

    def __post_init__(self):
        self.pool_size = pair(self.pool_size, "pool_size")
        self.stride = self.pool_size if self.stride is None else pair(self.stride, "stride")
        self.padding = quad(self.padding, "padding")
        if min(self.pool_size) < 1 or min(self.stride) < 1:
            raise ShapeError("pool size and stride must be >= 1")

    def output_shape(self, in_shape):
        return pool_output_shape(in_shape, self.pool_size, self.stride, self.padding)

    def forward(self, X):
        self.output_shape(X.shape[:3])
        X = np.ascontiguousarray(pad_batch(X, self.padding))
        return _kernels.maxpool(X, self.pool_size, self.stride)

    def reach(self, star, scheme=Scheme.EXACT, budget=None):
        if Scheme.parse(scheme) is Scheme.EXACT:
            return reach_maxpool_exact(self, star, budget=budget)
        return [reach_maxpool_approx(self, star)]

    def to_dict(self):
        return {
            "type": self.kind,
            "pool_size": list(self.pool_size),
            "padding": list(self.padding),
            "stride": list(self.stride),
        }


def _max_candidates(layer, star):
    """Pad, then find the candidate positions of every max-map entry.

    Returns the padded set, the output shape and a dict
    ``(i, j, k) -> [(row, col), ...]`` in channel, row, column order.
    """
    if star.is_empty():
        raise EmptySetError("max pooling of an empty ImageStar")
    ho, wo, nc = layer.output_shape(star.shape)
    padded = star.pad(layer.padding)
    est = padded.estimate_ranges()
    s1, s2 = layer.stride
    cands = {}
    for k in range(nc):
        for i in range(ho):
            for j in range(wo):
                cands[i, j, k] = padded.get_local_max_index(
                    (i * s1, j * s2), layer.pool_size, k, est=est
                )
    return padded, (ho, wo, nc), cands


def reach_maxpool_exact(layer, star, budget=None):
    """Exact image of max pooling as a list of ImageStars.

    Regions with one candidate copy that candidate's basis row.  Each region
    with several candidates splits every running star into one branch per
    candidate, constrained so that candidate is the regional maximum;
    infeasible branches are dropped.
    """
    padded, out_shape, cands = _max_candidates(layer, star)
    basis = np.zeros(out_shape + (star.n_vars + 1,))
    splits = []
    for (i, j, k), pos in cands.items():
        r, c = pos[0]
        basis[i, j, k] = padded.basis[r, c, k]
        if len(pos) > 1:
            splits.append((i, j, k))
    running = [star.with_basis(basis)]
    for i, j, k in splits:
        rows = np.array([padded.basis[r, c, k] for r, c in cands[i, j, k]])
        nxt = []
        for s in running:
            nxt.extend(_step_split(s, (i, j, k), rows))
        running = nxt
        check_budget(running, budget)
    return running


def _step_split(s, index, rows):
    i, j, k = index
    out = []
    for q in range(len(rows)):
        others = np.delete(rows, q, axis=0)
        C, d = dominance_constraints(rows[q], others)
        pred = s.predicate.intersect(C, d)
        if not pred.is_feasible():
            continue
        basis = s.basis.copy()
        basis[i, j, k] = rows[q]
        out.append(ImageStar(basis, pred))
    return out


def reach_maxpool_approx(layer, star):
    """One ImageStar; each multi-candidate region gets a variable ``beta`` with
    ``beta >= value(q)`` for every candidate ``q`` and ``beta <= ub`` where
    ``ub`` is the exact upper bound over the region."""
    padded, out_shape, cands = _max_candidates(layer, star)
    m = star.n_vars
    multi = [key for key, pos in cands.items() if len(pos) > 1]
    n_new = len(multi)
    basis = np.zeros(out_shape + (m + 1 + n_new,))
    for key, pos in cands.items():
        if len(pos) == 1:
            r, c = pos[0]
            basis[key][: m + 1] = padded.basis[r, c, key[2]]
    C_rows, d_rows = [], []
    new_lb = np.empty(n_new)
    new_ub = np.empty(n_new)
    est_lo, _ = padded.estimate_ranges()
    for l, key in enumerate(multi):
        k = key[2]
        col = m + l
        basis[key][m + 1 + l] = 1.0
        rows = np.array([padded.basis[r, c, k] for r, c in cands[key]])
        ub = max(_row_range(row, padded.predicate)[1] for row in rows)
        # beta_l <= ub
        up = np.zeros(m + n_new)
        up[col] = 1.0
        C_rows.append(up)
        d_rows.append(ub)
        # value(q) - beta_l <= 0
        for row in rows:
            g = np.zeros(m + n_new)
            g[:m] = row[1:]
            g[col] = -1.0
            C_rows.append(g)
            d_rows.append(-row[0])
        new_lb[l] = max(est_lo[r, c, k] for r, c in cands[key])
        new_ub[l] = ub
    if n_new == 0:
        return star.with_basis(basis)
    pred = star.predicate.extend(np.array(C_rows), np.array(d_rows), new_lb, new_ub)
    return ImageStar(basis, pred)
