"""Attack input sets, argmax robustness checks, counterexamples and falsification."""

import enum
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .errors import NoAttackedPixelsWarning, WitnessMappingFailed
from .image_star import ImageStar, _as_image
from .layers.base import Scheme
from .network import DEFAULT_BUDGET, ReachStats, reach

log = logging.getLogger(__name__)


class Verdict(str, enum.Enum):
    ROBUST = "Robust"
    NOT_ROBUST = "NotRobust"
    UNKNOWN = "Unknown"


@dataclass
class Counterexample:
    image: np.ndarray
    label: int
    logits: np.ndarray = field(repr=False)


@dataclass
class RobustnessResult:
    verdict: Verdict
    counterexamples: list = field(default_factory=list)
    violating_label: int = None
    stats: ReachStats = None
    output_sets: list = field(default_factory=list, repr=False)
    scheme: Scheme = Scheme.EXACT
    rejected: int = 0


# ---------------------------------------------------------------------------
# attack sets
# ---------------------------------------------------------------------------

def _unit_generators(shape, pixels, values=None):
    gens = np.zeros(shape + (len(pixels),))
    for n, ix in enumerate(pixels):
        gens[ix + (n,)] = 1.0 if values is None else values[n]
    return gens


def brightening_set(image, d_threshold, delta, pixel_max=255.0):
    """Darkening attack on every pixel ``x_i >= d_threshold``.

    Attacked pixels are zeroed in the anchor and carried by one unit generator
    each, with ``0 <= alpha_i <= delta * pixel_max``.  ``pixel_max`` is the top
    of the pixel scale (255 for 8-bit images); pass ``None`` to bound each
    pixel by its own value instead, ``0 <= alpha_i <= delta * x_i``.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    image = _as_image(image)
    pixels = [tuple(ix) for ix in np.argwhere(image >= d_threshold)]
    if not pixels:
        warnings.warn(
            f"no pixel reaches the threshold {d_threshold}; the set is a single image",
            NoAttackedPixelsWarning,
            stacklevel=2,
        )
        return ImageStar.singleton(image)
    anchor = image.copy()
    for ix in pixels:
        anchor[ix] = 0.0
    if pixel_max is None:
        ub = np.array([delta * image[ix] for ix in pixels])
    else:
        ub = np.full(len(pixels), delta * pixel_max)
    gens = _unit_generators(image.shape, pixels)
    return ImageStar.from_box(anchor, gens, np.zeros(len(pixels)), ub)


def interpolation_set(ori, adv, l, delta_max):
    """``ori + (l + delta) (adv - ori)`` for ``0 <= delta <= delta_max``."""
    ori = _as_image(ori)
    adv = _as_image(adv)
    if adv.shape != ori.shape:
        raise ValueError(f"adversarial image {adv.shape} differs from original {ori.shape}")
    if not (0.0 <= l <= 1.0 and 0.0 <= delta_max <= 1.0):
        raise ValueError("l and delta_max must lie in [0, 1]")
    diff = adv - ori
    anchor = ori + l * diff
    if delta_max == 0:
        return ImageStar.singleton(anchor)
    return ImageStar.from_box(anchor, diff[..., None], [0.0], [delta_max])


def zonotope_brightening_set(image, delta):
    """Pixels with ``x_i >= 1 - delta`` may brighten anywhere in ``[x_i, 1]``."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    image = _as_image(image)
    pixels = [tuple(ix) for ix in np.argwhere((image >= 1.0 - delta) & (image < 1.0))]
    if not pixels:
        return ImageStar.singleton(image)
    widths = np.array([1.0 - image[ix] for ix in pixels])
    gens = _unit_generators(image.shape, pixels, widths)
    m = len(pixels)
    return ImageStar.from_box(image, gens, np.zeros(m), np.ones(m))


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def violation_label(logits, target):
    """Label ``j != target`` with the largest logit if it ties or beats the target."""
    y = np.asarray(logits, dtype=float)
    others = y.copy()
    others[target] = -np.inf
    j = int(np.argmax(others))
    return j if y[j] >= y[target] else None


def _label_halfspace(n, target, j):
    # y_target - y_j <= 0
    H = np.zeros((1, n))
    H[0, target] = 1.0
    H[0, j] = -1.0
    return H


def find_violations(output_sets, target):
    """``(set index, label, violating star)`` for every non-empty ``set ∩ {y_j >= y_t}``."""
    found = []
    for si, s in enumerate(output_sets):
        st = s.to_star()
        for j in range(st.dim):
            if j == target:
                continue
            inter = st.intersect_halfspace(_label_halfspace(st.dim, target, j), [0.0])
            if not inter.is_empty():
                found.append((si, j, inter))
    return found


def verify_robustness(
    net,
    input_set,
    target,
    scheme=Scheme.EXACT,
    budget=DEFAULT_BUDGET,
    n_counterexamples=5,
    seed=0,
    falsify_samples=0,
    workers=1,
):
    """Prove or refute that ``target`` keeps the strictly largest logit on the set.

    Ties count as violations.  Exact scheme: Robust or NotRobust with
    counterexamples.  Approx scheme: Robust or Unknown; with
    ``falsify_samples > 0`` an Unknown is handed to :func:`falsify`, and a hit
    turns it into NotRobust.
    """
    scheme = Scheme.parse(scheme)
    if not 0 <= target < net.n_outputs:
        raise ValueError(f"target {target} is not a valid label index (0..{net.n_outputs - 1})")
    res = reach(net, input_set, scheme, budget=budget, workers=workers)
    out = RobustnessResult(Verdict.ROBUST, stats=res.stats, output_sets=res.output_sets, scheme=scheme)
    violations = find_violations(res.output_sets, target)
    if not violations:
        return out
    out.violating_label = violations[0][1]
    if scheme is Scheme.EXACT:
        rng = np.random.default_rng(seed)
        for _, j, inter in violations:
            need = n_counterexamples - len(out.counterexamples)
            if need <= 0:
                break
            good, bad = _extract(net, input_set, inter, target, j, need, rng)
            out.counterexamples.extend(good)
            out.rejected += bad
        if out.counterexamples:
            out.verdict = Verdict.NOT_ROBUST
            out.violating_label = out.counterexamples[0].label
        else:
            # only boundary touches within LP tolerance: nothing concrete misclassifies
            log.warning("violating sets found but no witness misclassifies; reporting Unknown")
            out.verdict = Verdict.UNKNOWN
        return out
    out.verdict = Verdict.UNKNOWN
    if falsify_samples > 0:
        hit = falsify(net, input_set, target, falsify_samples, seed)
        if hit is not None:
            out.verdict = Verdict.NOT_ROBUST
            out.counterexamples = [hit]
            out.violating_label = hit.label
    return out


def extract_counterexamples(net, input_set, violating, target, label, k=5, seed=0):
    """Concrete misclassified inputs from a violating output star.

    ``violating`` must live in the input set's predicate space (exact scheme):
    its witnesses are mapped back through the input ImageStar and replayed
    through the network; candidates that fail membership or do not
    misclassify are dropped.
    """
    good, bad = _extract(net, input_set, violating, target, label, k, np.random.default_rng(seed))
    if bad:
        log.info("discarded %d counterexample candidates that failed validation", bad)
    return good


def _extract(net, input_set, violating, target, label, k, rng):
    if violating.n_vars != input_set.n_vars:
        raise WitnessMappingFailed(
            f"violating set has {violating.n_vars} predicate variables, the input set "
            f"{input_set.n_vars}; counterexamples can only be mapped back from exact reach sets"
        )
    if violating.is_empty():
        return [], 0
    alphas = []
    if input_set.n_vars:
        obj = violating.V[label] - violating.V[target]
        best = lp.maximize(obj, violating.predicate.cons)
        if best.optimal:
            alphas.append(best.witness)
        if k > len(alphas):
            alphas.extend(violating.predicate.sample(k - len(alphas), rng))
    else:
        alphas.append(np.zeros(0))
    images = input_set.images_at(np.array(alphas).reshape(len(alphas), input_set.n_vars))
    logits = net.evaluate(images)
    good, bad = [], 0
    for x, y in zip(images, logits):
        j = violation_label(y, target)
        if j is None or not input_set.contains_image(x):
            bad += 1
            continue
        good.append(Counterexample(x, j, y))
        if len(good) == k:
            break
    return good, bad


def falsify(net, input_set, target, n_samples, seed=0):
    """Random simulation: the first sampled member misclassified, else ``None``.

    ``None`` proves nothing.
    """
    if n_samples <= 0:
        return None
    images = input_set.sample(n_samples, seed)
    logits = net.evaluate(images)
    for x, y in zip(images, logits):
        j = violation_label(y, target)
        if j is not None:
            return Counterexample(x, j, y)
    return None


def output_ranges(output_sets):
    """Per-output ``(lo, hi)``: exact LP ranges, hulled over all sets."""
    n = output_sets[0].n_pixels
    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    for s in output_sets:
        st = s.to_star()
        for i in range(n):
            a, b = st.exact_range(i)
            lo[i] = min(lo[i], a)
            hi[i] = max(hi[i], b)
    return lo, hi


__all__ = [
    "Counterexample",
    "RobustnessResult",
    "Verdict",
    "brightening_set",
    "extract_counterexamples",
    "falsify",
    "find_violations",
    "interpolation_set",
    "output_ranges",
    "verify_robustness",
    "violation_label",
    "zonotope_brightening_set",
]
