from __future__ import annotations

import itertools

import numpy as np
import pytest

from wqlab.dyadic import (DyadicCell, cell_indices, default_levels, dyadic_bound, level_cells,
                          level_sums, partition_approximation, resample_coupling)
from wqlab.errors import ArityError, DomainError, SupportViolationError
from wqlab.measures import DiscreteMeasure, PiecewiseConstantDensity, ProductLaplace, UniformBox
from wqlab.ot_exact import grid_measure, semidiscrete
from wqlab.rng import make_rng

U3 = UniformBox.unit(3)
DELTA0 = DiscreteMeasure.dirac([0.0, 0.0, 0.0])


def test_cell_geometry():
    c = DyadicCell(2, (1, 3, 0))
    np.testing.assert_allclose(c.lower, [0.25, 0.75, 0.0])
    np.testing.assert_allclose(c.upper, [0.5, 1.0, 0.25])
    assert c.parent() == DyadicCell(1, (0, 1, 0))
    kids = c.children()
    assert len(kids) == 8 and all(k.parent() == c for k in kids)
    assert c.contains([0.3, 0.9, 0.1]) and not c.contains([0.5, 0.9, 0.1])
    with pytest.raises(ValueError):
        DyadicCell(1, (2, 0))
    with pytest.raises(ValueError):
        DyadicCell(0, (0,)).parent()


def test_level_cells_and_indices():
    cells = level_cells(2, 2)
    assert len(cells) == 16
    pts = np.array([[0.0, 0.99], [0.5, 0.26]])
    np.testing.assert_array_equal(cell_indices(pts, 2), [[0, 3], [2, 1]])


def test_partition_approximation_examples():
    grid, _, _ = grid_measure(U3, 1)
    approx = partition_approximation(U3, grid, level_cells(1, 3))
    assert all(a.ratio == pytest.approx(1.0) for a in approx)
    approx = partition_approximation(U3, DELTA0, level_cells(1, 3))
    ratios = [a.ratio for a in approx]
    assert ratios[0] == pytest.approx(8.0) and all(r == 0 for r in ratios[1:])


def test_partition_approximation_support_violation():
    half = UniformBox((0.0, 0.0, 0.0), (0.5, 1.0, 1.0))
    nu = DiscreteMeasure.dirac([0.75, 0.1, 0.1])
    with pytest.raises(SupportViolationError):
        partition_approximation(half, nu, level_cells(1, 3))


def test_delta0_series():
    res = dyadic_bound(U3, DELTA0, 1, "LInf", 20)
    assert res.upper_bound == pytest.approx(1.75, abs=1e-5)
    assert res.levels_used == 20
    np.testing.assert_allclose(res.level_sums, 2 * (1 - 2.0**-3))


def test_grid_measure_has_only_tail_below_its_level():
    grid, _, _ = grid_measure(U3, 3)
    sums = level_sums(U3, grid, 6)
    np.testing.assert_allclose(sums[:3], 0.0, atol=1e-12)
    res = dyadic_bound(U3, grid, 1, "LInf", 3)
    assert res.partial_sum == pytest.approx(0.0, abs=1e-12)
    assert res.upper_bound == pytest.approx(res.tail_bound)


def _dense_level_sums(m, nu, L):
    """Reference evaluation over every father cell of every level."""
    d = nu.dim
    out = []
    for level in range(L):
        total = 0.0
        for idx in itertools.product(range(2**level), repeat=d):
            father = DyadicCell(level, idx)
            kids = father.children()
            nu_c = np.array([nu.box_mass(*k.box) for k in kids])
            mu_c = np.array([m.box_mass(*k.box) for k in kids])
            nu_f, mu_f = nu_c.sum(), mu_c.sum()
            if mu_f > 0:
                total += np.abs(nu_c - nu_f * mu_c / mu_f).sum()
        out.append(total)
    return np.array(out)


@pytest.mark.parametrize("seed", range(4))
def test_sparse_matches_dense(seed):
    rng = np.random.default_rng(seed)
    v = rng.random((4, 4, 4)) + 0.1
    m = PiecewiseConstantDensity(2, v / (v.sum() / 64))
    nu = DiscreteMeasure.empirical(m.sample(12, make_rng(seed)))
    np.testing.assert_allclose(level_sums(m, nu, 3), _dense_level_sums(m, nu, 3), atol=1e-12)


def test_bound_dominates_semidiscrete():
    for seed in range(5):
        nu = DiscreteMeasure.empirical(U3.sample(16, make_rng(seed)))
        for norm in ("LInf", "L2"):
            ub = dyadic_bound(U3, nu, 1, norm, 10).upper_bound
            sd = semidiscrete(U3, nu, 1, norm, 4)
            assert ub >= sd.lower


def test_dyadic_errors():
    with pytest.raises(DomainError):
        dyadic_bound(ProductLaplace(1.0, 3), DELTA0)
    with pytest.raises(DomainError):
        dyadic_bound(U3, DiscreteMeasure.dirac([1.0, 0.0, 0.0]))
    half = UniformBox((0.0, 0.0, 0.0), (0.5, 1.0, 1.0))
    with pytest.raises(SupportViolationError) as info:
        dyadic_bound(half, DiscreteMeasure.dirac([0.75, 0.0, 0.0]), L=4)
    assert info.value.cell is not None


def test_default_levels_and_json():
    assert default_levels(64, 3) == 10
    assert default_levels(1, 3) == 8
    res = dyadic_bound(U3, DELTA0, 2, "LInf", 5)
    assert res.to_dict()["levels_used"] == 5
    assert '"tail_bound"' in res.to_json()


def test_coupling_trivial_cases():
    pts = U3.sample(20, make_rng(1))
    out, mism = resample_coupling(pts, [DyadicCell(0, (0, 0, 0))], [20], U3, seed=3)
    assert mism == 0 and np.array_equal(out, pts)
    cells = level_cells(1, 3)
    counts = np.bincount(cell_indices(pts, 1) @ np.array([4, 2, 1]), minlength=8)
    out, mism = resample_coupling(pts, cells, counts, U3, seed=3)
    assert mism == 0


def test_coupling_marginals_and_errors():
    pts = U3.sample(64, make_rng(2))
    cells = level_cells(1, 3)
    targets = np.array([8] * 8)
    out, mism = resample_coupling(pts, cells, targets, U3, seed=4)
    counts = np.bincount(cell_indices(out, 1) @ np.array([4, 2, 1]), minlength=8)
    np.testing.assert_array_equal(counts, targets)
    assert mism == int(np.sum(np.any(out != pts, axis=1)))
    with pytest.raises(ArityError):
        resample_coupling(pts, cells, [8] * 7 + [7], U3, seed=4)
    with pytest.raises(ArityError):
        resample_coupling(pts, cells, [8] * 7, U3, seed=4)


def test_monotone_truncation():
    nu = DiscreteMeasure.empirical(U3.sample(20, make_rng(9)))
    res = [dyadic_bound(U3, nu, 1.5, "L2", L) for L in range(0, 12)]
    for a, b in zip(res[:-1], res[1:]):
        assert b.partial_sum >= a.partial_sum - 1e-15
        assert b.partial_sum + b.tail_bound <= a.partial_sum + a.tail_bound + 1e-12


def test_bound_dominates_exact_for_discrete_reference():
    # uniform law on the level-2 grid cells dominates its own empirical samples
    rng = np.random.default_rng(12)
    v = rng.random((4, 4, 4)) + 0.2
    m = PiecewiseConstantDensity(2, v / (v.sum() / 64))
    for seed in range(4):
        nu = DiscreteMeasure.empirical(m.sample(10, make_rng(seed)))
        sd = semidiscrete(m, nu, 2, "L1", 4)
        assert dyadic_bound(m, nu, 2, "L1", 10).upper_bound >= sd.lower - 1e-8


def test_coupling_fills_with_conditional_law():
    # fill one deficient cell many times and compare a sub-box frequency with its mass
    cells = level_cells(1, 3)
    targets = np.zeros(8, dtype=int)
    targets[5] = 400
    pts = np.full((400, 3), 0.1)  # all points sit in cell 0, so every place is refilled
    out, mism = resample_coupling(pts, cells, targets, U3, seed=6)
    assert mism == 400
    lo, hi = cells[5].box
    assert np.all((out >= lo) & (out < hi))
    sub_hi = lo + np.array([0.25, 0.5, 0.5])
    freq = np.all(out < sub_hi, axis=1).mean()
    assert abs(freq - 0.5) <= 4 * np.sqrt(0.25 / 400)
