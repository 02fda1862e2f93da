from __future__ import annotations

import math

import numpy as np
import pytest

from wqlab.errors import UnsupportedError
from wqlab.measures import (DiscreteMeasure, Mixture, Norm, PiecewiseConstantDensity,
                            ProductLaplace, TwoPoint, UniformBox, box_diameter, box_mass,
                            measure_from_dict, moment_maxnorm, sample, unit_cube_diameter)
from wqlab.rng import make_rng

E1 = (1.0, 0.0, 0.0)
ORIGIN = (0.0, 0.0, 0.0)


def _pcd(rng, level=1, d=3):
    v = rng.random((2**level,) * d) + 0.05
    v /= v.sum() * 2.0 ** (-level * d)
    return PiecewiseConstantDensity(level, v)


def _all_measures(rng):
    return [
        UniformBox.unit(3),
        UniformBox((0.2, -1.0, 0.5), (0.5, 2.0, 1.0)),
        _pcd(rng),
        TwoPoint(ORIGIN, E1, 0.3),
        Mixture([0.25, 0.75], [UniformBox.unit(3), UniformBox(ORIGIN, (0.5, 1.0, 1.0))]),
        ProductLaplace(1.0, 3),
    ]


@pytest.mark.parametrize("norm,d,expected", [("LInf", 3, 1.0), ("L2", 4, 2.0), ("L1", 3, 3.0)])
def test_unit_cube_diameter(norm, d, expected):
    assert unit_cube_diameter(norm, d) == expected


def test_norm_parse_and_distance():
    assert Norm.parse("linf") is Norm.LInf
    assert Norm.parse("l2") is Norm.L2
    with pytest.raises(ValueError):
        Norm.parse("L3")
    x, y = np.array([0.0, 0.0]), np.array([3.0, 4.0])
    assert Norm.L1.distance(x, y) == 7.0
    assert Norm.L2.distance(x, y) == 5.0
    assert Norm.LInf.distance(x, y) == 4.0
    assert box_diameter("L2", [3.0, 4.0]) == 5.0


def test_discrete_measure_drops_zero_weights():
    m = DiscreteMeasure([[0, 0], [1, 1], [2, 2]], [0.5, 0.0, 0.5])
    assert len(m) == 2
    assert m.total_mass == 1.0
    with pytest.raises(ValueError):
        DiscreteMeasure([[0, 0]], [-1.0])
    with pytest.raises(ValueError):
        m.atoms[0, 0] = 3.0


def test_discrete_roundtrip_and_ops():
    m = DiscreteMeasure([[0, 0], [1, 1]], [0.25, 0.75])
    assert np.array_equal(DiscreteMeasure.from_dict(m.to_dict()).atoms, m.atoms)
    assert (m + m).total_mass == 2.0
    assert m.scaled(2.0).total_mass == 2.0
    pf = m.pushforward(2.0, [1.0, 0.0])
    assert np.array_equal(pf.atoms, [[1, 0], [3, 2]])
    assert m.box_mass([0, 0], [0.5, 0.5]) == 0.25


def test_sample_degenerate_twopoint():
    pts = sample(TwoPoint(ORIGIN, E1, 1.0), 3, seed=99)
    assert np.array_equal(pts, np.zeros((3, 3)))


def test_sample_uniform_means():
    pts = sample(UniformBox.unit(3), 10_000, seed=1)
    assert np.all((pts.mean(axis=0) > 0.49) & (pts.mean(axis=0) < 0.51))


def test_sample_deterministic(rng):
    for m in _all_measures(rng):
        assert np.array_equal(sample(m, 50, 7), sample(m, 50, 7))
        assert not np.array_equal(sample(m, 50, 7), sample(m, 50, 8)) or isinstance(m, TwoPoint)
    assert sample(UniformBox.unit(2), 0, 1).shape == (0, 2)


def test_box_mass_examples():
    assert box_mass(UniformBox.unit(3), ORIGIN, (0.5, 0.5, 0.5)) == pytest.approx(0.125, abs=1e-15)
    assert box_mass(TwoPoint(ORIGIN, E1, 0.5), (-0.1,) * 3, (0.1,) * 3) == 0.5
    t = 1.0
    val = box_mass(ProductLaplace(1.0, 3), (-t,) * 3, (t,) * 3)
    assert val == pytest.approx((1 - math.exp(-t)) ** 3, abs=1e-12)
    assert val == pytest.approx(0.25258, abs=1e-5)


def test_box_masses_of_partition_sum_to_one(rng):
    # the level-2 grid over a box containing the support partitions the mass
    for m in _all_measures(rng):
        box = m.support_box()
        if box is None:
            continue
        lo, hi = np.asarray(box[0]) - 0.25, np.asarray(box[1]) + 0.25
        g = 4
        idx = np.indices((g,) * 3).reshape(3, -1).T
        side = (hi - lo) / g
        assert m.box_masses(lo + idx * side, lo + (idx + 1) * side).sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("k", range(6))
def test_sample_consistent_with_box_mass(k):
    rng = np.random.default_rng(k)
    m = _all_measures(rng)[k]
    lo = np.array([0.0, -0.5, 0.25])
    hi = np.array([0.6, 0.7, 1.2])
    n = 40_000
    pts = m.sample(n, make_rng(3, k))
    freq = np.all((pts >= lo) & (pts < hi), axis=1).mean()
    prob = m.box_mass(lo, hi)
    assert abs(freq - prob) <= 5 * math.sqrt(max(prob * (1 - prob), 1e-12) / n) + 1e-12


@pytest.mark.parametrize("k", range(6))
def test_sample_in_box_stays_inside(k):
    rng = np.random.default_rng(k)
    m = _all_measures(rng)[k]
    lo = np.array([-0.1, -0.1, -0.1])
    hi = np.array([0.6, 0.6, 0.6])
    pts = m.sample_in_box(lo, hi, 500, make_rng(5))
    assert pts.shape == (500, 3)
    assert np.all((pts >= lo) & (pts < hi))


def test_moment_examples():
    assert moment_maxnorm(UniformBox.unit(3), 1) == pytest.approx(0.75, abs=1e-12)
    assert moment_maxnorm(UniformBox.unit(3), 3) == pytest.approx(0.5, abs=1e-12)
    assert moment_maxnorm(TwoPoint(ORIGIN, E1, 0.5), 2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        moment_maxnorm(UniformBox.unit(3), 0.5)


@pytest.mark.parametrize("k", range(6))
def test_moment_matches_monte_carlo(k):
    rng = np.random.default_rng(k)
    m = _all_measures(rng)[k]
    pts = m.sample(200_000, make_rng(11, k))
    mc = np.abs(pts).max(axis=1) ** 3
    se = mc.std() / math.sqrt(len(mc))
    assert abs(m.moment_maxnorm(3.0) - mc.mean()) <= 5 * se + 1e-12


def test_product_laplace_moment_and_truncation():
    m = ProductLaplace(1.0, 3)
    t = m.truncation_radius(1e-6)
    assert m.tail_maxnorm(t) == pytest.approx(1e-6, rel=1e-9)
    # partial moment over [t, inf) plus the bulk recovers the full moment
    assert m.partial_moment_maxnorm(3.0, 0.0) == pytest.approx(m.moment_maxnorm(3.0), rel=1e-9)


def test_piecewise_constant_density_validation():
    with pytest.raises(ValueError):
        PiecewiseConstantDensity(1, np.ones((2, 2, 2)) * 2)
    with pytest.raises(ValueError):
        PiecewiseConstantDensity(1, np.ones((2, 3)))


def test_discrete_views():
    tp = TwoPoint(ORIGIN, E1, 0.25)
    assert tp.is_discrete
    d = tp.as_discrete()
    assert sorted(d.weights.tolist()) == [0.25, 0.75]
    with pytest.raises(UnsupportedError):
        UniformBox.unit(3).as_discrete()


def test_measure_dict_roundtrip(rng):
    for m in _all_measures(rng):
        back = measure_from_dict(m.to_dict())
        lo, hi = (0.1, 0.0, -0.3), (0.7, 0.4, 0.9)
        assert back.box_mass(lo, hi) == pytest.approx(m.box_mass(lo, hi), abs=1e-15)


@pytest.mark.parametrize("k", range(6))
def test_box_mass_additive_over_children(k):
    rng = np.random.default_rng(100 + k)
    m = _all_measures(rng)[k]
    lo = np.array([-0.3, 0.1, 0.0])
    hi = lo + np.array([0.8, 0.5, 1.1])
    mid = 0.5 * (lo + hi)
    offs = np.indices((2, 2, 2)).reshape(3, -1).T
    clo = np.where(offs == 0, lo, mid)
    chi = np.where(offs == 0, mid, hi)
    assert m.box_masses(clo, chi).sum() == pytest.approx(m.box_mass(lo, hi), abs=1e-12)


def test_mixture_component_frequencies():
    a = UniformBox((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    b = UniformBox((5.0, 5.0, 5.0), (1.0, 1.0, 1.0))
    m = Mixture([0.3, 0.7], [a, b])
    n = 10_000
    pts = m.sample(n, make_rng(21))
    freq = float((pts[:, 0] < 2.5).mean())
    assert abs(freq - 0.3) <= 4 * math.sqrt(0.3 * 0.7 / n)


def test_norm_metric_axioms():
    rng = np.random.default_rng(4)
    for norm in Norm:
        x, y, z = rng.normal(size=(3, 200, 3))
        assert np.all(norm.distance(x, x) == 0)
        np.testing.assert_array_equal(norm.distance(x, y), norm.distance(y, x))
        assert np.all(norm.distance(x, z) <= norm.distance(x, y) + norm.distance(y, z) + 1e-12)
