from __future__ import annotations

import warnings

import numpy as np
import pytest

from wqlab.errors import CapacityError, DomainError
from wqlab.measures import Norm, TwoPoint, UniformBox
from wqlab.quantize import (ExperimentSpec, SolverSpec, kappa_unif_trace, optimal_quantizer,
                            rate_fit, rel_change_last3, run_replication, run_replications,
                            summarize, two_point_exact, v_rand_estimate, write_replications_csv,
                            write_summary_csv)

E1 = (1.0, 0.0, 0.0)
ORIGIN = (0.0, 0.0, 0.0)


def test_two_point_exact_examples():
    assert two_point_exact(2, 1) == pytest.approx(0.25)
    assert two_point_exact(1, 1) == pytest.approx(0.5)
    assert two_point_exact(17, 2, w=1.0, distance=3.0) == 0.0
    assert two_point_exact(4, 1, distance=2.0) == pytest.approx(2 * two_point_exact(4, 1))
    with pytest.raises(ValueError):
        two_point_exact(0, 1)


def test_rate_fit_examples():
    pts = [(2.0**k, 2.0 ** (-k / 3)) for k in range(4, 11)]
    assert rate_fit(pts).slope == pytest.approx(-1 / 3, abs=1e-12)
    pts = [(2.0**k, 5 * 2.0 ** (-k / 2)) for k in range(4, 11)]
    fit = rate_fit(pts)
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.intercept == pytest.approx(np.log(5))
    with pytest.raises(DomainError):
        rate_fit([(1, 1.0), (2, 0.0), (4, 1.0)])
    with pytest.raises(DomainError):
        rate_fit([(1, 1.0), (2, 1.0)])


def test_two_point_rate_slope():
    ns = [16, 32, 64, 128, 256, 512, 1024]
    assert -0.57 <= rate_fit([(n, two_point_exact(n, 1)) for n in ns]).slope <= -0.43


def test_degenerate_two_point_is_zero():
    spec = ExperimentSpec(TwoPoint(ORIGIN, E1, 1.0), 1, "LInf", (8,), 5, 1, SolverSpec("exact"))
    (s,) = v_rand_estimate(spec)
    assert s.V_hat == 0.0


def test_two_point_small_monte_carlo():
    spec = ExperimentSpec(TwoPoint(ORIGIN, E1, 0.5), 1, "LInf", (2,), 2000, 9, SolverSpec("exact"))
    (s,) = v_rand_estimate(spec)
    assert abs(s.V_hat - 0.25) <= 4 * s.boot_se
    assert s.ci_lo <= s.V_hat <= s.ci_hi
    assert s.V_lower == s.V_upper == pytest.approx(s.V_hat)


def test_spec_validation():
    with pytest.warns(UserWarning):
        ExperimentSpec(UniformBox.unit(2), 1, "LInf", (4,), 3, 1)
    with pytest.raises(ValueError):
        ExperimentSpec(UniformBox.unit(3), 0.5, "LInf", (4,), 3, 1)
    with pytest.raises(ValueError):
        ExperimentSpec(UniformBox.unit(3), 1, "LInf", (4,), 1, 1)
    with pytest.raises(ValueError):
        SolverSpec("magic")


def test_replication_is_keyed_by_n_and_rep():
    spec = ExperimentSpec(UniformBox.unit(3), 1, Norm.LInf, (8, 16), 3, 42,
                          SolverSpec("semidiscrete", 2))
    recs = run_replications(spec)
    assert [(r.N, r.rep) for r in recs] == [(8, 0), (8, 1), (8, 2), (16, 0), (16, 1), (16, 2)]
    again = run_replication(spec, 16, 1)
    assert again == recs[4]
    for r in recs:
        assert r.lower <= r.rho_p_pow_p <= r.upper


def test_capacity_error_carries_context():
    spec = ExperimentSpec(UniformBox.unit(3), 1, "LInf", (8,), 2, 1,
                          SolverSpec("semidiscrete", 5, edge_cap=1000))
    with pytest.raises(CapacityError, match="N=8, rep=0"):
        run_replication(spec, 8, 0)


def test_dyadic_solver_gives_upper_only():
    spec = ExperimentSpec(UniformBox.unit(3), 1, "LInf", (8,), 3, 5, SolverSpec("dyadic", levels=8))
    (s,) = v_rand_estimate(spec)
    assert s.V_lower == 0.0 and s.V_upper == pytest.approx(s.V_hat)


def test_csv_writers_deterministic(tmp_path):
    spec = ExperimentSpec(UniformBox.unit(3), 1, "LInf", (8,), 4, 3, SolverSpec("semidiscrete", 2))
    recs = run_replications(spec)
    sums = summarize(spec, recs)
    for name in ("a", "b"):
        write_replications_csv(tmp_path / f"{name}.csv", spec, recs)
        write_summary_csv(tmp_path / f"{name}.sum.csv", spec, summarize(spec, recs))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.sum.csv").read_bytes() == (tmp_path / "b.sum.csv").read_bytes()
    assert sums[0].rescaled == pytest.approx(2.0 * sums[0].V_hat)


def test_worker_count_does_not_change_records():
    spec = ExperimentSpec(UniformBox.unit(3), 1, "LInf", (8, 12), 3, 77, SolverSpec("semidiscrete", 2))
    assert run_replications(spec, workers=1) == run_replications(spec, workers=3)


def test_kappa_trace_shape():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tr = kappa_unif_trace(1, 3, "LInf", [8, 16, 32], 3, 1, SolverSpec("semidiscrete", 2))
    assert [r[0] for r in tr.rows] == [8, 16, 32]
    assert all(r[2] <= r[1] <= r[3] for r in tr.rows)
    assert tr.max_rel_change_last3 == pytest.approx(rel_change_last3([r[1] for r in tr.rows]))
    assert rel_change_last3([1.0, 1.1, 0.99]) == pytest.approx(0.1)


def test_optimal_quantizer_single_point():
    res = optimal_quantizer(UniformBox.unit(3), 1, 2, "L2", sample_size=5000, seed=2)
    np.testing.assert_allclose(res.codebook[0], 0.5, atol=0.02)


def test_optimal_quantizer_covers_two_point():
    res = optimal_quantizer(TwoPoint(ORIGIN, E1, 0.3), 2, 2, "L2", seed=1)
    assert res.v_opt == pytest.approx(0.0, abs=1e-12)
    res = optimal_quantizer(TwoPoint(ORIGIN, E1, 0.3), 3, 1, "LInf", seed=1)
    assert res.v_opt == pytest.approx(0.0, abs=1e-12)


def test_optimal_quantizer_beats_random_codebook():
    m = UniformBox.unit(3)
    res = optimal_quantizer(m, 8, 1, "LInf", seed=3, iters=20)
    # eight cube centres of the level-1 partition give 1/4 * 3/4 = 0.1875
    assert res.v_opt <= 0.2
    with pytest.raises(ValueError):
        optimal_quantizer(m, 8, sample_size=10)


def test_monte_carlo_matches_oracle_across_seeds():
    tp = TwoPoint(ORIGIN, E1, 0.5)
    hits = 0
    for seed in range(100):
        spec = ExperimentSpec(tp, 1, "LInf", (4,), 200, seed, SolverSpec("exact"))
        (s,) = v_rand_estimate(spec)
        hits += abs(s.V_hat - two_point_exact(4, 1)) <= 3 * s.boot_se
    assert hits >= 95


def test_optimal_error_decreases_in_n():
    m = UniformBox.unit(3)
    wins = 0
    for seed in range(20):
        a = optimal_quantizer(m, 2, 2, "L2", restarts=1, iters=15, seed=seed).v_opt
        b = optimal_quantizer(m, 4, 2, "L2", restarts=1, iters=15, seed=seed).v_opt
        wins += b < a
    # sign test: 15 or more of 20 has probability < 0.021 under a fair coin
    assert wins >= 15
