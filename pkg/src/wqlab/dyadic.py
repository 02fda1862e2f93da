"""Dyadic partitions of the unit cube and the multiscale transport bound.

The level-``l`` partition of ``[0,1)^d`` consists of the ``2**(d*l)`` cubes
``k * 2**-l + [0, 2**-l)^d``. For probability measures ``mu`` and ``nu`` on the
unit cube with ``nu(C) > 0 => mu(C) > 0``,

    rho_p^p(mu, nu) <= 1/2 D^p sum_l 2^{-pl} S_l,
    S_l = sum_{F in P_l} sum_{C child of F} |nu(C) - nu(F) mu(C) / mu(F)|,

where ``D`` is the diameter of the unit cube. Only fathers charged by ``nu``
contribute, so the sum is evaluated sparsely.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ArityError, DomainError, SupportViolationError
from .measures import DiscreteMeasure, ModelMeasure, Norm, unit_cube_diameter
from .rng import make_rng


@dataclass(frozen=True)
class DyadicCell:
    """The cube ``index * 2**-level + [0, 2**-level)^d``."""

    level: int
    index: tuple

    def __post_init__(self):
        index = tuple(int(k) for k in self.index)
        if self.level < 0 or any(k < 0 or k >= 2**self.level for k in index):
            raise ValueError(f"index {index} out of range for level {self.level}")
        object.__setattr__(self, "index", index)

    @property
    def dim(self) -> int:
        return len(self.index)

    @property
    def side(self) -> float:
        return 2.0 ** -self.level

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.index, dtype=float) * self.side

    @property
    def upper(self) -> np.ndarray:
        return (np.asarray(self.index, dtype=float) + 1.0) * self.side

    @property
    def box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lower, self.upper

    def parent(self) -> "DyadicCell":
        if self.level == 0:
            raise ValueError("the unit cube has no parent")
        return DyadicCell(self.level - 1, tuple(k >> 1 for k in self.index))

    def children(self) -> list["DyadicCell"]:
        offsets = np.indices((2,) * self.dim).reshape(self.dim, -1).T
        base = 2 * np.asarray(self.index, dtype=np.int64)
        return [DyadicCell(self.level + 1, tuple(base + o)) for o in offsets]

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.lower) & (x < self.upper)))


def level_cells(level: int, d: int) -> list[DyadicCell]:
    """All cells of the level-``level`` partition, in C order of their index."""
    idx = np.indices((2**level,) * d).reshape(d, -1).T
    return [DyadicCell(level, tuple(k)) for k in idx]


def cell_indices(points, level: int) -> np.ndarray:
    """Integer index of the level-``level`` cell containing each point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g = 2**level
    return np.minimum(np.floor(pts * g).astype(np.int64), g - 1)


@dataclass(frozen=True)
class CellApproximation:
    """Cell data of the partition approximation of ``mu`` to ``nu``.

    On ``cell`` the approximation equals ``ratio * mu``, with
    ``ratio = nu_mass / mu_mass`` (0 when both vanish).
    """

    cell: tuple
    nu_mass: float
    mu_mass: float
    ratio: float


def _as_mass_fn(mu) -> Callable:
    if isinstance(mu, ModelMeasure):
        return mu.box_masses
    if isinstance(mu, DiscreteMeasure):
        def masses(lower, upper):
            lo = np.atleast_2d(lower)
            hi = np.atleast_2d(upper)
            return np.array([mu.box_mass(a, b) for a, b in zip(lo, hi)])
        return masses
    return mu


def partition_approximation(mu_mass, nu: DiscreteMeasure, cells: Sequence) -> list[CellApproximation]:
    """Rescale ``mu`` cell by cell so that its cell masses match ``nu``.

    Parameters
    ----------
    mu_mass : ModelMeasure or callable
        A measure, or a function mapping ``(lower, upper)`` arrays of shape
        ``(k, d)`` to the ``k`` box masses.
    nu : DiscreteMeasure
    cells : sequence of boxes
        Disjoint half-open boxes given as ``(lower, upper)`` pairs or
        :class:`DyadicCell` objects.

    Raises
    ------
    SupportViolationError
        If a cell carries ``nu`` mass but no ``mu`` mass.
    """
    boxes = [c.box if isinstance(c, DyadicCell) else c for c in cells]
    if not boxes:
        return []
    lower = np.array([np.asarray(b[0], dtype=float) for b in boxes])
    upper = np.array([np.asarray(b[1], dtype=float) for b in boxes])
    mu_m = np.asarray(_as_mass_fn(mu_mass)(lower, upper), dtype=float)
    out = []
    for k, (lo, hi) in enumerate(zip(lower, upper)):
        nu_m = nu.box_mass(lo, hi)
        if nu_m > 0 and mu_m[k] <= 0:
            raise SupportViolationError(f"cell {k} has nu-mass {nu_m} but zero mu-mass", cells[k])
        ratio = nu_m / mu_m[k] if mu_m[k] > 0 else 0.0
        out.append(CellApproximation(tuple(map(tuple, (lo, hi))), nu_m, float(mu_m[k]), ratio))
    return out


@dataclass(frozen=True)
class DyadicBoundResult:
    """Certified upper bound on ``rho_p`` (not its p-th power).

    ``partial_sum`` covers levels ``0..levels_used-1`` and ``tail_bound`` the
    rest, both on the ``rho_p^p`` scale; ``upper_bound`` is
    ``(partial_sum + tail_bound) ** (1/p)``.
    """

    partial_sum: float
    tail_bound: float
    upper_bound: float
    levels_used: int
    level_sums: tuple = ()

    def to_dict(self) -> dict:
        data = asdict(self)
        data["level_sums"] = list(self.level_sums)
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def default_levels(n_atoms: int, d: int) -> int:
    """``ceil(log2(N^{1/d})) + 8``."""
    return max(0, math.ceil(math.log2(max(n_atoms, 1)) / d - 1e-12)) + 8


def _in_unit_cube(x: np.ndarray) -> bool:
    return bool(np.all((x >= 0.0) & (x < 1.0)))


def level_sums(m: ModelMeasure, nu: DiscreteMeasure, L: int) -> np.ndarray:
    """``S_0, ..., S_{L-1}`` by sparse traversal of ``nu``-charged fathers."""
    d = nu.dim
    atoms, w = nu.atoms, nu.weights
    idx_L = cell_indices(atoms, L)
    offsets = np.indices((2,) * d).reshape(d, -1).T
    sums = np.zeros(L)
    for level in range(L):
        fathers, inv = np.unique(idx_L >> (L - level), axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        nu_f = np.bincount(inv, weights=w, minlength=len(fathers))
        child_idx = (idx_L >> (L - level - 1)) - 2 * fathers[inv]
        child_code = child_idx @ (1 << np.arange(d - 1, -1, -1))
        nu_c = np.zeros((len(fathers), 2**d))
        np.add.at(nu_c, (inv, child_code), w)
        side = 2.0 ** -(level + 1)
        lower = (2 * fathers[:, None, :] + offsets[None, :, :]).reshape(-1, d) * side
        mu_c = np.asarray(m.box_masses(lower, lower + side)).reshape(len(fathers), 2**d)
        bad = (nu_c > 0) & (mu_c <= 0)
        if bad.any():
            f, c = np.argwhere(bad)[0]
            cell = DyadicCell(level + 1, tuple(2 * fathers[f] + offsets[c]))
            raise SupportViolationError(
                f"cell {cell.index} at level {level + 1} has nu-mass but zero mu-mass", cell)
        mu_f = mu_c.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            share = np.where(mu_f[:, None] > 0, mu_c / mu_f[:, None], 0.0)
        sums[level] = np.abs(nu_c - nu_f[:, None] * share).sum()
    return sums


def dyadic_bound(m: ModelMeasure, nu: DiscreteMeasure, p: float = 1.0,
                 norm: Norm | str = Norm.LInf, L: int | None = None) -> DyadicBoundResult:
    """Multiscale upper bound on ``rho_p(m, nu)`` truncated after ``L`` levels.

    The omitted levels are bounded with ``S_l <= 2``, giving the tail
    ``D^p 2^{-pL} / (1 - 2^{-p})``, so the result is a certified bound.
    """
    norm = Norm.parse(norm)
    if p < 1:
        raise ValueError("p must be >= 1")
    d = nu.dim
    if m.dim != d:
        raise ValueError("measures live in different dimensions")
    box = m.support_box()
    if box is None or not (np.all(box[0] >= 0) and np.all(box[1] <= 1)):
        raise DomainError("the model measure must live on [0,1)^d")
    if not _in_unit_cube(nu.atoms):
        raise DomainError("the discrete measure must live on [0,1)^d")
    if abs(nu.total_mass - 1.0) > 1e-9:
        raise DomainError(f"nu has mass {nu.total_mass!r}, expected 1")
    if L is None:
        L = default_levels(len(nu), d)
    diam_p = unit_cube_diameter(norm, d) ** p
    sums = level_sums(m, nu, int(L))
    weights = 2.0 ** (-p * np.arange(L))
    partial = 0.5 * diam_p * math.fsum((weights * sums).tolist())
    tail = diam_p * 2.0 ** (-p * L) / (1.0 - 2.0 ** (-p))
    return DyadicBoundResult(partial, tail, (partial + tail) ** (1.0 / p), int(L),
                             tuple(float(s) for s in sums))


def resample_coupling(points, cells: Sequence, targets: Sequence[int], m: ModelMeasure,
                      seed: int) -> tuple[np.ndarray, int]:
    """Move the fewest sample points so that cell ``k`` holds ``targets[k]`` of them.

    Scanning points in index order, each cell keeps the first ``targets[k]``
    points that fall in it; later points (and points outside every cell) are
    erased. The erased places are refilled, in index order, with draws from
    ``m`` conditioned on the cells that are short of points, taken in cell
    order.

    Returns
    -------
    new_points : ndarray
    mismatch : int
        The number of places whose point was replaced.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    N = pts.shape[0]
    targets = np.asarray(targets, dtype=np.int64)
    if len(targets) != len(cells):
        raise ArityError("need one target count per cell")
    if np.any(targets < 0) or int(targets.sum()) != N:
        raise ArityError(f"target counts sum to {int(targets.sum())}, expected {N}")
    boxes = [c.box if isinstance(c, DyadicCell) else c for c in cells]
    owner = np.full(N, -1, dtype=np.int64)
    for k, (lo, hi) in enumerate(boxes):
        inside = np.all((pts >= lo) & (pts < hi), axis=1) & (owner < 0)
        owner[inside] = k
    keep = np.zeros(N, dtype=bool)
    kept = np.zeros(len(boxes), dtype=np.int64)
    for j in range(N):
        k = owner[j]
        if k >= 0 and kept[k] < targets[k]:
            keep[j] = True
            kept[k] += 1
    erased = np.flatnonzero(~keep)
    out = pts.copy()
    rng = make_rng(seed)
    pos = 0
    for k, short in enumerate((targets - kept).tolist()):
        if short > 0:
            lo, hi = boxes[k]
            out[erased[pos:pos + short]] = m.sample_in_box(lo, hi, short, rng)
            pos += short
    return out, int(erased.size)
