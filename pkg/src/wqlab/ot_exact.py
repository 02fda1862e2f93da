"""Exact Wasserstein distances between discrete measures.

``rho_exact`` solves the transport problem on the complete bipartite graph
exactly. Two solvers are available:

* a network simplex with implicit arcs (costs are recomputed from the atom
  coordinates, so memory stays linear in the number of atoms), usable for any
  weights;
* a forward auction with epsilon-scaling for problems where each side has
  equal weights. Each source is split into unit "persons" and each target into
  unit slots; bidding is restricted to the K nearest targets of every source
  and the result is accepted only after a duality certificate computed over
  all arcs. If the certificate fails, K is doubled.

Both return a feasible plan whose cost is optimal to within 1e-9 relative.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .errors import CapacityError, InfeasibleError, UnsupportedError, WqlabError
from .measures import DiscreteMeasure, ModelMeasure, Norm, box_diameter

DEFAULT_ATOM_CAP = 50_000
DEFAULT_EDGE_CAP = 20_000_000
MASS_TOL = 1e-9
# auction is used for equal-weight problems with at least this many arcs
AUCTION_MIN_ARCS = 1 << 16
AUCTION_MAX_PERSONS = 4_000_000
AUCTION_MAX_REPLICATION = 2
# final epsilon is AUCTION_RTOL times the mean cost, so the auction's own
# optimality gap is at most AUCTION_RTOL relative; the certificate accepts 1e-9
AUCTION_RTOL = 1e-10
CERTIFICATE_RTOL = 1e-9
_KD_P = {Norm.L1: 1, Norm.L2: 2, Norm.LInf: np.inf}


class SolverError(WqlabError):
    """The solver stopped before reaching an optimal plan."""


@dataclass(frozen=True)
class TransportPlan:
    """A coupling stored as a sparse list of ``(source, target, mass)`` entries."""

    source_index: np.ndarray
    target_index: np.ndarray
    mass: np.ndarray
    cost_p: float

    @property
    def entries(self) -> list[tuple[int, int, float]]:
        return list(zip(self.source_index.tolist(), self.target_index.tolist(), self.mass.tolist()))

    def __len__(self) -> int:
        return self.mass.shape[0]

    def marginals(self, n_source: int, n_target: int) -> tuple[np.ndarray, np.ndarray]:
        rows = np.bincount(self.source_index, weights=self.mass, minlength=n_source)
        cols = np.bincount(self.target_index, weights=self.mass, minlength=n_target)
        return rows, cols

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["source_index", "target_index", "mass"])
            for i, j, w in self.entries:
                writer.writerow([i, j, repr(float(w))])


@dataclass(frozen=True)
class SemiDiscreteResult:
    """``rho_p`` of a gridded model measure against a discrete measure.

    The true distance lies in ``[lower, upper]``, where the half-width is
    ``discretization_bound`` (cell diameter) plus ``truncation_bound`` (zero
    unless the measure was restricted to a box that misses part of its
    support).
    """

    estimate: float
    discretization_bound: float
    grid_level: int
    truncation_bound: float = 0.0
    plan: TransportPlan | None = field(default=None, repr=False, compare=False)

    @property
    def half_width(self) -> float:
        return self.discretization_bound + self.truncation_bound

    @property
    def lower(self) -> float:
        return max(self.estimate - self.half_width, 0.0)

    @property
    def upper(self) -> float:
        return self.estimate + self.half_width


def _check_inputs(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float):
    if p < 1:
        raise ValueError("p must be >= 1")
    if mu.dim != nu.dim:
        raise ValueError("measures live in different dimensions")
    a, b = mu.total_mass, nu.total_mass
    if abs(a - b) > MASS_TOL:
        raise InfeasibleError(f"total masses differ: {a!r} vs {b!r}")


def _equal_weights(w: np.ndarray) -> bool:
    return w.size > 0 and float(w.max() - w.min()) <= 1e-12 * float(w.max())


def _cost_scale(X: np.ndarray, Y: np.ndarray, norm: Norm, p: float) -> float:
    pts = np.vstack([X, Y])
    span = pts.max(axis=0) - pts.min(axis=0)
    return float(norm.norm(span)) ** p


def _plan_from_arrays(rows, cols, flows, X, Y, norm_code, p, backend) -> TransportPlan:
    order = np.lexsort((cols, rows))
    rows, cols, flows = rows[order], cols[order], flows[order]
    costs = backend.pair_costs(X, Y, rows, cols, norm_code, float(p))
    cost = math.fsum((flows * costs).tolist())
    return TransportPlan(rows.astype(np.int64), cols.astype(np.int64), flows, float(cost))


def _solve_simplex(mu, nu, p, norm, backend, max_pivots) -> TransportPlan:
    X, Y = mu.atoms, nu.atoms
    supply = np.ascontiguousarray(mu.weights, dtype=np.float64)
    # absorb the tolerated mass mismatch into the target side
    demand = np.ascontiguousarray(nu.weights * (mu.total_mass / nu.total_mass), dtype=np.float64)
    scale = _cost_scale(X, Y, norm, p) or 1.0
    if max_pivots is None:
        max_pivots = 50 * X.shape[0] * Y.shape[0] + 1_000_000
    rows, cols, flows, _pot, _piv, converged = backend.network_simplex(
        supply, demand, X, Y, norm.code, float(p), scale, int(max_pivots))
    if not converged:
        raise SolverError(f"network simplex stopped after {max_pivots} pivots")
    rows, cols, flows = np.asarray(rows), np.asarray(cols), np.asarray(flows)
    keep = flows > 0
    return _plan_from_arrays(rows[keep], cols[keep], flows[keep], X, Y, norm.code, p, backend)


def _solve_auction(mu, nu, p, norm, backend, k_start=64) -> TransportPlan:
    X, Y = mu.atoms, nu.atoms
    n1, n2 = X.shape[0], Y.shape[0]
    g = math.gcd(n1, n2)
    persons_total = n1 * n2 // g
    reps, cap = persons_total // n1, persons_total // n2
    person_src = np.repeat(np.arange(n1, dtype=np.int64), reps)
    capacity = np.full(n2, cap, dtype=np.int64)
    scale = _cost_scale(X, Y, norm, p) or 1.0
    tree = cKDTree(Y)
    K = min(n2, k_start)
    while True:
        if K > 1:
            _, cand = tree.query(X, k=K, p=_KD_P[norm])
        else:
            cand = np.zeros((n1, 1), dtype=np.int64)
        cand = np.ascontiguousarray(cand, dtype=np.int64)
        rows = np.repeat(np.arange(n1, dtype=np.int64), K)
        cand_cost = np.asarray(backend.pair_costs(X, Y, rows, cand.ravel(), norm.code, float(p)))
        cand_cost = np.ascontiguousarray(cand_cost.reshape(n1, K))
        # keep each row sorted by cost so the last column bounds non-candidates
        order = np.argsort(cand_cost, axis=1, kind="stable")
        cand = np.ascontiguousarray(np.take_along_axis(cand, order, axis=1))
        cand_cost = np.ascontiguousarray(np.take_along_axis(cand_cost, order, axis=1))
        exact = K >= n2
        assign, lam, _eps, _bids, converged = backend.auction_transport(
            person_src, capacity, X, Y, cand, cand_cost, norm.code, float(p),
            0.05 * scale, 4.0, AUCTION_RTOL, 500 * persons_total + 10_000_000, exact)
        assign = np.asarray(assign)
        lam = np.asarray(lam, dtype=np.float64)
        if converged and np.all(assign >= 0):
            costs = np.asarray(backend.pair_costs(X, Y, person_src, assign, norm.code, float(p)))
            primal = math.fsum(costs.tolist())
            u = np.asarray(backend.c_transform(X, Y, lam, norm.code, float(p)))
            dual = math.fsum((reps * u).tolist()) - math.fsum((cap * lam).tolist())
            if primal - dual <= CERTIFICATE_RTOL * max(primal, 1e-300) or primal <= 0.0:
                break
        if exact:
            raise SolverError("auction failed to certify an optimal assignment")
        K = min(n2, 2 * K)
    key = person_src * n2 + assign
    uniq, counts = np.unique(key, return_counts=True)
    unit = mu.total_mass / persons_total
    flows = counts.astype(np.float64) * unit
    return _plan_from_arrays(uniq // n2, uniq % n2, flows, X, Y, norm.code, p, backend)


def rho_exact(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 1.0,
              norm: Norm | str = Norm.LInf, *, method: str = "auto",
              atom_cap: int = DEFAULT_ATOM_CAP, backend: str | None = None,
              max_pivots: int | None = None) -> tuple[float, TransportPlan]:
    """Exact ``rho_p(mu, nu)`` and an optimal plan.

    Parameters
    ----------
    mu, nu : DiscreteMeasure
        Measures of equal total mass (up to 1e-9).
    p : float
        Order, at least 1.
    norm : Norm or str
        Ground norm.
    method : {"auto", "simplex", "auction"}
        ``"auction"`` requires equal weights on each side. ``"auto"`` picks it
        for large equal-weight problems and the simplex otherwise.
    atom_cap : int
        Maximum combined number of atoms.
    backend : {"cython", "python"}, optional
        Kernel implementation; defaults to the active one.

    Returns
    -------
    rho : float
    plan : TransportPlan
    """
    norm = Norm.parse(norm)
    _check_inputs(mu, nu, p)
    n1, n2 = len(mu), len(nu)
    if n1 + n2 > atom_cap:
        raise CapacityError(f"{n1} + {n2} atoms exceed the cap of {atom_cap}")
    if n1 == 0 or n2 == 0:
        empty = np.empty(0, dtype=np.int64)
        return 0.0, TransportPlan(empty, empty, np.empty(0), 0.0)
    kernels = _kernels.get_backend(backend)
    if n1 == 1 or n2 == 1:
        # a single atom on either side leaves only the product plan
        rows = np.repeat(np.arange(n1), n2)
        cols = np.tile(np.arange(n2), n1)
        flows = nu.weights.copy() if n1 == 1 else mu.weights.copy()
        plan = _plan_from_arrays(rows, cols, flows, mu.atoms, nu.atoms, norm.code, p, kernels)
        return max(plan.cost_p, 0.0) ** (1.0 / p), plan
    equal = _equal_weights(mu.weights) and _equal_weights(nu.weights)
    persons = n1 * n2 // math.gcd(n1, n2)
    if method == "auto":
        # replicated persons of one source bid against each other, so the
        # auction only pays off when one atom count (nearly) divides the other
        use_auction = (equal and n1 * n2 >= AUCTION_MIN_ARCS and persons <= AUCTION_MAX_PERSONS
                       and persons <= AUCTION_MAX_REPLICATION * max(n1, n2))
        method = "auction" if use_auction else "simplex"
    if method == "auction":
        if not equal:
            raise UnsupportedError("the auction solver needs equal weights on each side")
        plan = _solve_auction(mu, nu, p, norm, kernels)
    elif method == "simplex":
        plan = _solve_simplex(mu, nu, p, norm, kernels, max_pivots)
    else:
        raise ValueError(f"unknown method {method!r}")
    return max(plan.cost_p, 0.0) ** (1.0 / p), plan


def rho_bruteforce(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 1.0,
                   norm: Norm | str = Norm.LInf) -> float:
    """``rho_p`` by enumerating all permutations; for n <= 8 equal-weight atoms."""
    norm = Norm.parse(norm)
    n = len(mu)
    if n != len(nu) or n > 8 or n == 0:
        raise UnsupportedError("brute force needs two measures with the same n <= 8 atoms")
    for w in (mu.weights, nu.weights):
        if np.any(np.abs(w - 1.0 / n) > 1e-12):
            raise UnsupportedError("brute force needs weights equal to 1/n")
    C = norm.pairwise(mu.atoms, nu.atoms) ** p
    cols = np.arange(n)
    best = min(C[cols, list(perm)].sum() for perm in itertools.permutations(range(n)))
    return float(best / n) ** (1.0 / p)


def grid_measure(m: ModelMeasure, level: int, box=None) -> tuple[DiscreteMeasure, np.ndarray, float]:
    """Discretize ``m`` on the ``2**level`` per-axis grid of ``box``.

    Each cell's mass sits at its center. Returns the discrete measure, the
    cell side lengths and the mass of ``m`` inside ``box``; masses are
    normalized to 1 so the result is ``m`` conditioned on ``box``.
    """
    if box is None:
        box = m.support_box()
        if box is None:
            raise UnsupportedError(f"{type(m).__name__} has unbounded support; pass a truncation box")
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    d = lo.shape[0]
    g = 2**int(level)
    side = (hi - lo) / g
    idx = np.indices((g,) * d).reshape(d, -1).T
    lower = lo + idx * side
    upper = np.where(idx + 1 == g, hi, lo + (idx + 1) * side)
    masses = m.box_masses(lower, upper)
    inside = float(masses.sum())
    if inside <= 0:
        raise ValueError("the box carries no mass")
    return DiscreteMeasure(lower + 0.5 * side, masses / inside), side, inside


def truncation_bound(m: ModelMeasure, box, p: float, norm: Norm | str) -> float:
    """Upper bound on ``rho_p(m, m( . | box))`` for a centred max-norm ball ``box``.

    Zero if ``box`` contains the support of ``m``. Otherwise ``m`` must provide
    ``tail_maxnorm`` and ``partial_moment_maxnorm`` and the box must be
    ``[-t, t)^d``. With ``eta = P(|X|_max >= t)`` the coupling that keeps the
    mass inside the box fixed and sends the outside mass independently gives

        rho_p^p <= 2^{p-1} D^p (E[|X|_max^p; |X|_max >= t] + eta/(1-eta) E|X|_max^p),

    where ``D`` is the norm of the all-ones vector.
    """
    norm = Norm.parse(norm)
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    sb = m.support_box()
    if sb is not None and np.all(sb[0] >= lo) and np.all(sb[1] <= hi):
        return 0.0
    if not hasattr(m, "tail_maxnorm"):
        raise UnsupportedError(f"no truncation estimate for {type(m).__name__}")
    t = float(hi[0])
    if not (np.allclose(hi, t) and np.allclose(lo, -t)):
        raise UnsupportedError("truncation box must be [-t, t)^d")
    eta = m.tail_maxnorm(t)
    if eta >= 1:
        raise ValueError("truncation box carries no mass")
    D = float(norm.norm(np.ones(lo.shape[0])))
    val = 2.0 ** (p - 1) * D**p * (m.partial_moment_maxnorm(p, t) + eta / (1 - eta) * m.moment_maxnorm(p))
    return val ** (1.0 / p)


def semidiscrete(m: ModelMeasure, nu: DiscreteMeasure, p: float = 1.0,
                 norm: Norm | str = Norm.LInf, grid_level: int = 5, *, box=None,
                 edge_cap: int = DEFAULT_EDGE_CAP, atom_cap: int = DEFAULT_ATOM_CAP,
                 backend: str | None = None, keep_plan: bool = False) -> SemiDiscreteResult:
    """Bracket ``rho_p(m, nu)`` by gridding ``m`` at ``grid_level``.

    The grid covers ``m.support_box()`` or, for unbounded measures, the
    truncation ``box``. The bracket half-width is the cell diameter under
    ``norm`` plus the truncation estimate of :func:`truncation_bound`.
    """
    norm = Norm.parse(norm)
    if abs(nu.total_mass - 1.0) > MASS_TOL:
        raise InfeasibleError(f"nu has mass {nu.total_mass!r}, expected 1")
    cells = 2 ** (int(grid_level) * m.dim)
    if cells * len(nu) > edge_cap:
        raise CapacityError(f"{cells} cells x {len(nu)} atoms exceed the edge cap of {edge_cap}")
    if box is None and m.support_box() is None:
        raise UnsupportedError(f"{type(m).__name__} has unbounded support; pass a truncation box")
    grid, side, _inside = grid_measure(m, grid_level, box)
    trunc = 0.0 if box is None else truncation_bound(m, box, p, norm)
    est, plan = rho_exact(grid, nu, p, norm, atom_cap=atom_cap, backend=backend)
    return SemiDiscreteResult(est, box_diameter(norm, side), int(grid_level), trunc,
                              plan if keep_plan else None)
