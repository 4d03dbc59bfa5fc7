import warnings

import numpy as np
import pytest

from imagestar import (
    FCLayer,
    ImageStar,
    Network,
    NoAttackedPixelsWarning,
    ReLULayer,
    Scheme,
    Verdict,
    WitnessMappingFailed,
    brightening_set,
    extract_counterexamples,
    falsify,
    interpolation_set,
    reach,
    verify_robustness,
    zonotope_brightening_set,
)
from imagestar.robustness import find_violations, output_ranges, violation_label


def relu_gap_net():
    # y0 = 0.25, y1 = relu(x) - relu(x) = 0: exact proves it, the relaxation can't
    return Network(
        [FCLayer([[1.0], [1.0]], [0.0, 0.0]), ReLULayer(), FCLayer([[0.0, 0.0], [1.0, -1.0]], [0.25, 0.0])],
        (1, 1, 1),
    )


def unit_input(lb=-1.0, ub=1.0):
    return ImageStar.from_box(np.zeros((1, 1)), [np.ones((1, 1))], [lb], [ub])


def identity_net():
    return Network([FCLayer(np.eye(2), np.zeros(2))], (1, 2, 1), labels=["cat", "dog"])


def pair_input(lb, ub):
    # image (1, a)
    return ImageStar.from_box(np.array([[1.0, 0.0]]), [np.array([[0.0, 1.0]])], [lb], [ub])


def test_violation_label_ties_count():
    assert violation_label([1.0, 1.0], 0) == 1
    assert violation_label([2.0, 1.0], 0) is None
    assert violation_label([0.0, 1.0, 3.0], 0) == 2


def test_exact_robust_approx_unknown():
    net = relu_gap_net()
    assert verify_robustness(net, unit_input(), 0, Scheme.EXACT).verdict is Verdict.ROBUST
    res = verify_robustness(net, unit_input(), 0, Scheme.APPROX)
    assert res.verdict is Verdict.UNKNOWN and not res.counterexamples
    # sampling can't break a robust net
    res = verify_robustness(net, unit_input(), 0, Scheme.APPROX, falsify_samples=200)
    assert res.verdict is Verdict.UNKNOWN


def test_linear_robust_and_not_robust():
    net = identity_net()
    assert verify_robustness(net, pair_input(-0.5, 0.5), 0, Scheme.EXACT).verdict is Verdict.ROBUST
    assert verify_robustness(net, pair_input(-0.5, 0.5), 0, Scheme.APPROX).verdict is Verdict.ROBUST
    s = pair_input(0.0, 2.0)
    res = verify_robustness(net, s, 0, Scheme.EXACT, n_counterexamples=3, seed=4)
    assert res.verdict is Verdict.NOT_ROBUST
    assert res.violating_label == 1
    assert 1 <= len(res.counterexamples) <= 3
    for c in res.counterexamples:
        assert s.contains_image(c.image)
        assert violation_label(net.evaluate(c.image), 0) == c.label
    assert verify_robustness(net, s, 0, Scheme.APPROX).verdict is Verdict.UNKNOWN


def test_falsifier_upgrades_unknown():
    net = identity_net()
    s = pair_input(0.0, 2.0)
    res = verify_robustness(net, s, 0, Scheme.APPROX, falsify_samples=100, seed=1)
    assert res.verdict is Verdict.NOT_ROBUST
    (c,) = res.counterexamples
    assert s.contains_image(c.image) and c.image[0, 1, 0] >= 1.0
    assert falsify(net, pair_input(-0.5, 0.5), 0, 100) is None


def test_counterexamples_need_exact_sets():
    net = relu_gap_net()
    approx = reach(net, unit_input(), Scheme.APPROX).output_sets
    net2 = Network(net.layers[:2] + [FCLayer([[0.0, 0.0], [1.0, 1.0]], [0.25, 0.0])], (1, 1, 1))
    outs = reach(net2, unit_input(), Scheme.APPROX).output_sets
    viol = find_violations(outs, 0)
    assert viol and approx
    with pytest.raises(WitnessMappingFailed):
        extract_counterexamples(net2, unit_input(), viol[0][2], 0, viol[0][1])


def test_target_validation():
    with pytest.raises(ValueError):
        verify_robustness(identity_net(), pair_input(0, 1), 5)


def test_brightening_set_ranges():
    img = np.array([[250.0, 10.0], [255.0, 200.0]])
    s = brightening_set(img, 240.0, 0.01)
    assert s.n_vars == 2
    assert s.anchor[0, 0, 0] == 0.0 and s.anchor[0, 1, 0] == 10.0
    lo, hi = s.pixel_exact_range(0, 0, 0)
    assert lo == 0.0 and hi == pytest.approx(2.55, rel=1e-15, abs=0)
    per_pixel = brightening_set(img, 240.0, 0.01, pixel_max=None)
    assert per_pixel.pixel_exact_range(0, 0, 0)[1] == pytest.approx(2.5)
    assert per_pixel.pixel_exact_range(1, 0, 0)[1] == pytest.approx(2.55)


def test_brightening_without_attacked_pixels():
    with pytest.warns(NoAttackedPixelsWarning):
        s = brightening_set(np.zeros((2, 2)), 100.0, 0.1)
    assert s.n_vars == 0
    with pytest.raises(ValueError):
        brightening_set(np.zeros((2, 2)), 0.0, 1.5)


def test_interpolation_and_zonotope_sets():
    ori = np.zeros((1, 2))
    adv = np.array([[1.0, -1.0]])
    s = interpolation_set(ori, adv, 0.25, 0.5)
    assert s.pixel_exact_range(0, 0, 0) == pytest.approx((0.25, 0.75))
    assert s.pixel_exact_range(0, 1, 0) == pytest.approx((-0.75, -0.25))
    assert interpolation_set(ori, adv, 0.3, 0.0).n_vars == 0
    z = zonotope_brightening_set(np.array([[0.95, 0.5, 1.0]]), 0.1)
    assert z.n_vars == 1
    assert z.pixel_exact_range(0, 0, 0) == pytest.approx((0.95, 1.0))


def test_output_ranges_hull():
    net = identity_net()
    sets = reach(net, pair_input(-1.0, 2.0)).output_sets
    lo, hi = output_ranges(sets)
    assert lo == pytest.approx([1.0, -1.0]) and hi == pytest.approx([1.0, 2.0])


def test_determinism():
    net = identity_net()
    a = verify_robustness(net, pair_input(0, 2), 0, Scheme.EXACT, seed=7)
    b = verify_robustness(net, pair_input(0, 2), 0, Scheme.EXACT, seed=7)
    assert [c.image.tolist() for c in a.counterexamples] == [c.image.tolist() for c in b.counterexamples]


def test_singleton_input_verdicts():
    net = identity_net()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = ImageStar.singleton(np.array([[1.0, 2.0]]))
    res = verify_robustness(net, s, 0, Scheme.EXACT)
    assert res.verdict is Verdict.NOT_ROBUST
    assert res.counterexamples[0].image.tolist() == s.anchor.tolist()
    assert verify_robustness(net, s, 1, Scheme.EXACT).verdict is Verdict.ROBUST
