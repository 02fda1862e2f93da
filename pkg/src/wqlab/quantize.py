"""Monte Carlo estimation of random quantization errors.

For a reference measure ``mu`` and its empirical measure ``mu_N`` built from
``N`` i.i.d. draws, the random quantization error is

    V_N = E[rho_p^p(mu, mu_N)]^{1/p}.

Each replication ``(N, r)`` draws its sample from a stream derived from the
master seed and ``(N, r)`` alone, so results do not depend on scheduling.
"""
from __future__ import annotations

import csv
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, stats
from scipy.spatial import cKDTree

from .dyadic import dyadic_bound
from .errors import CapacityError, DomainError
from .measures import DiscreteMeasure, ModelMeasure, Norm, UniformBox
from .ot_exact import DEFAULT_EDGE_CAP, rho_exact, semidiscrete
from .rng import derive_seed, make_rng

TRUNCATION_MASS = 1e-6
BOOTSTRAP_RESAMPLES = 1000

REPLICATION_FIELDS = ["measure_id", "p", "norm", "N", "rep", "rho_p_pow_p", "lower", "upper", "seed"]
SUMMARY_FIELDS = ["measure_id", "p", "norm", "N", "V_hat", "ci_lo", "ci_hi", "rescaled"]


@dataclass(frozen=True)
class SolverSpec:
    """How ``rho_p(mu, mu_N)`` is evaluated for one replication.

    ``"exact"`` needs a finitely supported ``mu``; ``"semidiscrete"`` grids
    ``mu`` at ``grid_level`` (unbounded measures are first restricted to a box
    of mass ``1 - TRUNCATION_MASS``); ``"dyadic"`` only yields an upper bound
    and uses ``levels`` (default depends on ``N``).
    """

    kind: str = "semidiscrete"
    grid_level: int = 5
    levels: int | None = None
    edge_cap: int = DEFAULT_EDGE_CAP

    def __post_init__(self):
        if self.kind not in ("exact", "semidiscrete", "dyadic"):
            raise ValueError(f"unknown solver {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "grid_level": self.grid_level, "levels": self.levels,
                "edge_cap": self.edge_cap}


@dataclass(frozen=True)
class ExperimentSpec:
    measure: ModelMeasure
    p: float
    norm: Norm
    n_values: tuple
    replications: int
    master_seed: int
    solver: SolverSpec = field(default_factory=SolverSpec)
    measure_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "norm", Norm.parse(self.norm))
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if not self.measure_id:
            object.__setattr__(self, "measure_id", type(self.measure).__name__)
        if self.replications < 2:
            raise ValueError("need at least 2 replications")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if any(n < 1 for n in self.n_values):
            raise ValueError("sample sizes must be positive")
        if not self.p < self.measure.dim / 2:
            warnings.warn(f"p={self.p} is outside 1 <= p < d/2 for d={self.measure.dim}",
                          stacklevel=2)


@dataclass(frozen=True)
class ReplicationRecord:
    N: int
    rep: int
    rho_p_pow_p: float
    lower: float
    upper: float
    seed: int


@dataclass(frozen=True)
class NSummary:
    """Estimate of ``V_N`` with a bootstrap interval and bracket aggregates.

    ``V_lower``/``V_upper`` are the ``p``-mean of the per-replication solver
    brackets, i.e. the estimate the solver certifies from below and above.
    """

    N: int
    V_hat: float
    ci_lo: float
    ci_hi: float
    boot_se: float
    V_lower: float
    V_upper: float
    rescaled: float
    records: tuple = field(repr=False, default=())


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    stderr_slope: float


def _truncation_box(m: ModelMeasure):
    if m.support_box() is not None:
        return None
    t = m.truncation_radius(TRUNCATION_MASS)
    return (np.full(m.dim, -t), np.full(m.dim, t))


def run_replication(spec: ExperimentSpec, N: int, rep: int, backend: str | None = None) -> ReplicationRecord:
    """Evaluate one replication ``(N, rep)`` of ``spec``."""
    try:
        return _replicate(spec, N, rep, backend)
    except CapacityError as exc:
        raise CapacityError(f"N={N}, rep={rep}: {exc}") from exc


def _replicate(spec: ExperimentSpec, N: int, rep: int, backend: str | None) -> ReplicationRecord:
    seed = derive_seed(spec.master_seed, N, rep)
    points = spec.measure.sample(N, make_rng(seed))
    nu = DiscreteMeasure.empirical(points)
    p = spec.p
    solver = spec.solver
    if solver.kind == "exact":
        rho, _ = rho_exact(spec.measure.as_discrete(), nu, p, spec.norm, backend=backend)
        return ReplicationRecord(N, rep, rho**p, rho, rho, seed)
    if solver.kind == "semidiscrete":
        res = semidiscrete(spec.measure, nu, p, spec.norm, solver.grid_level,
                           box=_truncation_box(spec.measure), edge_cap=solver.edge_cap,
                           backend=backend)
        return ReplicationRecord(N, rep, res.estimate**p, res.lower, res.upper, seed)
    res = dyadic_bound(spec.measure, nu, p, spec.norm, solver.levels)
    return ReplicationRecord(N, rep, res.upper_bound**p, 0.0, res.upper_bound, seed)


def _run_task(args):
    spec, N, rep = args
    return run_replication(spec, N, rep)


def resolve_workers(workers: int | None) -> int:
    """Explicit value, else ``WQLAB_WORKERS``, else 1."""
    if workers is None:
        workers = int(os.environ.get("WQLAB_WORKERS", "1") or 1)
    return max(1, int(workers))


def run_replications(spec: ExperimentSpec, workers: int | None = None) -> list[ReplicationRecord]:
    """All replications of ``spec`` ordered by ``(N, rep)``."""
    tasks = [(spec, N, r) for N in spec.n_values for r in range(spec.replications)]
    workers = resolve_workers(workers)
    if workers == 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks, chunksize=1))


def _pmean(values: np.ndarray, p: float) -> float:
    return float(np.mean(values)) ** (1.0 / p)


def summarize(spec: ExperimentSpec, records: Sequence[ReplicationRecord]) -> list[NSummary]:
    """Per-``N`` estimates with 95% bootstrap intervals."""
    p, d = spec.p, spec.measure.dim
    out = []
    for N in spec.n_values:
        recs = [r for r in records if r.N == N]
        vals = np.array([r.rho_p_pow_p for r in recs])
        rng = make_rng(spec.master_seed, "bootstrap", N)
        draws = rng.integers(0, len(vals), size=(BOOTSTRAP_RESAMPLES, len(vals)))
        boot = vals[draws].mean(axis=1) ** (1.0 / p)
        v_hat = _pmean(vals, p)
        lo, hi = np.percentile(boot, [2.5, 97.5])
        out.append(NSummary(
            N=N, V_hat=v_hat, ci_lo=float(lo), ci_hi=float(hi), boot_se=float(boot.std(ddof=1)),
            V_lower=_pmean(np.array([r.lower for r in recs]) ** p, p),
            V_upper=_pmean(np.array([r.upper for r in recs]) ** p, p),
            rescaled=N ** (1.0 / d) * v_hat, records=tuple(recs)))
    return out


def v_rand_estimate(spec: ExperimentSpec, workers: int | None = None) -> list[NSummary]:
    """Estimate ``V_N`` for every ``N`` of ``spec``."""
    return summarize(spec, run_replications(spec, workers))


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_replications_csv(path, spec: ExperimentSpec, records: Iterable[ReplicationRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPLICATION_FIELDS)
        for r in records:
            w.writerow([spec.measure_id, _fmt(float(spec.p)), spec.norm.value, r.N, r.rep,
                        _fmt(r.rho_p_pow_p), _fmt(r.lower), _fmt(r.upper), r.seed])


def write_summary_csv(path, spec: ExperimentSpec, summaries: Iterable[NSummary]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for s in summaries:
            w.writerow([spec.measure_id, _fmt(float(spec.p)), spec.norm.value, s.N,
                        _fmt(s.V_hat), _fmt(s.ci_lo), _fmt(s.ci_hi), _fmt(s.rescaled)])


def two_point_exact(N: int, p: float, w: float = 0.5, distance: float = 1.0) -> float:
    """Exact ``V_N`` for ``w delta_a + (1-w) delta_b`` with ``|a-b| = distance``.

    ``rho_p^p(mu, mu_N) = distance^p |mu_N({a}) - w|`` and ``N mu_N({a})`` is
    binomial, so the expectation is a finite sum.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0.0 <= w <= 1.0:
        raise ValueError("w must lie in [0, 1]")
    k = np.arange(N + 1)
    pmf = stats.binom.pmf(k, N, w)
    mean_abs = math.fsum((pmf * np.abs(k / N - w)).tolist())
    return distance * mean_abs ** (1.0 / p)


def rate_fit(points: Sequence[tuple[float, float]]) -> RateFit:
    """Least-squares fit of ``log V = intercept + slope * log N``."""
    N = np.array([float(a) for a, _ in points])
    V = np.array([float(b) for _, b in points])
    if np.any(V <= 0) or np.any(N <= 0):
        raise DomainError("rate fit needs positive N and V")
    if len(np.unique(N)) < 3:
        raise DomainError("rate fit needs at least 3 distinct N")
    res = stats.linregress(np.log(N), np.log(V))
    return RateFit(float(res.slope), float(res.intercept), float(res.stderr))


@dataclass(frozen=True)
class KappaTrace:
    rows: tuple
    max_rel_change_last3: float
    summaries: tuple = field(repr=False, default=())


def rel_change_last3(values: Sequence[float]) -> float:
    """Largest relative step among the last three values."""
    v = list(values)[-3:]
    if len(v) < 2:
        return 0.0
    return max(abs(b - a) / abs(a) for a, b in zip(v[:-1], v[1:]))


def kappa_unif_trace(p: float, d: int, norm: Norm | str, n_schedule: Sequence[int], R: int,
                     seed: int, solver: SolverSpec | None = None,
                     workers: int | None = None) -> KappaTrace:
    """``N^{1/d} V_N`` for the uniform measure on ``[0,1)^d`` along ``n_schedule``.

    Rows are ``(N, rescaled, ci_lo, ci_hi, rescaled_upper)``, the interval and
    upper bracket rescaled the same way.
    """
    spec = ExperimentSpec(UniformBox.unit(d), p, Norm.parse(norm), tuple(n_schedule), R, seed,
                          solver or SolverSpec(), "uniform")
    sums = v_rand_estimate(spec, workers)
    rows = tuple((s.N, s.rescaled, s.N ** (1 / d) * s.ci_lo, s.N ** (1 / d) * s.ci_hi,
                  s.N ** (1 / d) * s.V_upper) for s in sums)
    return KappaTrace(rows, rel_change_last3([r[1] for r in rows]), tuple(sums))


# optimal quantizer baseline

_KD_P = {Norm.L1: 1, Norm.L2: 2, Norm.LInf: np.inf}


@dataclass(frozen=True)
class QuantizerResult:
    codebook: np.ndarray
    v_opt: float
    restarts: int
    iterations: int


def _centroid(cluster: np.ndarray, start: np.ndarray, p: float, norm: Norm) -> np.ndarray:
    if p == 2.0 and norm is Norm.L2:
        return cluster.mean(axis=0)
    if p == 1.0 and norm is Norm.L1:
        return np.median(cluster, axis=0)
    c = start.copy()
    for _sweep in range(3):
        for k in range(c.shape[0]):
            lo, hi = float(cluster[:, k].min()), float(cluster[:, k].max())
            if hi <= lo:
                c[k] = lo
                continue

            def loss(t, k=k):
                c[k] = t
                return float((norm.norm(cluster - c) ** p).sum())

            res = optimize.minimize_scalar(loss, bounds=(lo, hi), method="bounded",
                                           options={"xatol": 1e-6 * (hi - lo)})
            c[k] = res.x
    return c


def _lloyd(samples, codebook, p, norm, iters):
    tree_p = _KD_P[norm]
    labels = None
    it = 0
    for it in range(1, iters + 1):
        dist, new = cKDTree(codebook).query(samples, p=tree_p)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=len(codebook))
        for c in range(len(codebook)):
            if counts[c] == 0:
                far = int(np.argmax(dist))
                codebook[c] = samples[far]
                dist[far] = 0.0
            else:
                codebook[c] = _centroid(samples[labels == c], codebook[c], p, norm)
    dist, _ = cKDTree(codebook).query(samples, p=tree_p)
    return codebook, float(np.mean(dist**p)) ** (1.0 / p), it


def optimal_quantizer(m: ModelMeasure, N: int, p: float = 2.0, norm: Norm | str = Norm.L2,
                      sample_size: int | None = None, restarts: int = 3, iters: int = 50,
                      seed: int = 0) -> QuantizerResult:
    """Lloyd-type search for an ``N``-point codebook minimizing the ``p``-distortion.

    All work happens on one fixed cloud of ``sample_size`` draws (default
    ``100 N``). Each restart starts from ``N`` distinct cloud points; empty
    clusters are reseeded at the cloud point farthest from the codebook.
    """
    norm = Norm.parse(norm)
    if N < 1:
        raise ValueError("N must be >= 1")
    if sample_size is None:
        sample_size = 100 * N
    if sample_size < 100 * N:
        raise ValueError("sample_size must be at least 100 N")
    samples = m.sample(sample_size, make_rng(seed, "cloud"))
    distinct = np.unique(samples, axis=0)
    best = None
    for r in range(max(1, restarts)):
        rng = make_rng(seed, "init", r)
        if len(distinct) >= N:
            init = distinct[rng.choice(len(distinct), size=N, replace=False)]
        else:
            init = distinct[rng.choice(len(distinct), size=N, replace=True)]
        codebook, v, it = _lloyd(samples, init.astype(float).copy(), p, norm, iters)
        if best is None or v < best.v_opt:
            best = QuantizerResult(codebook, v, r + 1, it)
    return QuantizerResult(best.codebook, best.v_opt, max(1, restarts), best.iterations)
