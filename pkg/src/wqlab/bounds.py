"""Explicit constants and the checks of empirical errors against them."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import IncompleteDataError, RegimeError, UnsupportedError
from .measures import ModelMeasure, Norm, PiecewiseConstantDensity, unit_cube_diameter

BOUND_TOL = 1e-9

PIERCE_FOOTER = (
    "note: the Pierce constant is evaluated with its leading kappa_cube factor; "
    "dropping that factor gives a smaller constant, so the value used here is the "
    "conservative choice")


def _check_cube_regime(p: float, d: int):
    if d < 1:
        raise RegimeError("dimension must be >= 1")
    if not p >= 1:
        raise RegimeError(f"need p >= 1, got p={p}")
    if not p < d / 2:
        raise RegimeError(f"need p < d/2, got p={p}, d={d}")


def kappa_cube(p: float, d: int, norm: Norm | str = Norm.LInf) -> float:
    """Constant of the ``N^{-1/d}`` bound for measures on the unit cube.

    ``D 2^{(d-2)/(2p)} [1/(1-2^{p-d/2}) + 1/(1-2^{-p})]^{1/p}`` with ``D`` the
    diameter of ``[0,1)^d`` under ``norm``; requires ``1 <= p < d/2``.
    """
    _check_cube_regime(p, d)
    diam = unit_cube_diameter(norm, d)
    bracket = 1.0 / (1.0 - 2.0 ** (p - d / 2)) + 1.0 / (1.0 - 2.0 ** (-p))
    return diam * 2.0 ** ((d - 2) / (2 * p)) * bracket ** (1.0 / p)


def kappa_pierce(p: float, q: float, d: int, norm: Norm | str = Norm.LInf) -> float:
    """Constant of the moment bound ``V_N <= kappa [E|X|_max^q]^{1/q} N^{-1/d}``.

    Requires ``1 <= p < d/2`` and ``q > dp/(d-p)``; the first geometric series
    additionally needs ``q > 2p``.
    """
    _check_cube_regime(p, d)
    if not q > d * p / (d - p):
        raise RegimeError(f"need q > dp/(d-p) = {d * p / (d - p):.6g}, got q={q}")
    if not q > 2 * p:
        raise RegimeError(f"need q > 2p = {2 * p:.6g} for the series to converge, got q={q}")
    kc = kappa_cube(p, d, norm)
    diam = unit_cube_diameter(norm, d)
    a = 2.0 ** (p - 1) * 2.0 ** (q / 2) * diam**p / (1.0 - 2.0 ** (p - q / 2))
    e = q * (1.0 - p / d)
    b = 2.0 ** (p + e) * kc**p / (1.0 - 2.0 ** (-e + p))
    return kc * (a + b) ** (1.0 / p)


def norm_equivalence(norm: Norm | str, d: int) -> float:
    """Smallest ``c`` with ``|x| <= c |x|_max`` on R^d (1, sqrt(d) or d)."""
    return unit_cube_diameter(norm, d)


def pierce_rhs(m: ModelMeasure, N: int, p: float, q: float, norm: Norm | str = Norm.LInf) -> float:
    """Right-hand side of the moment bound for ``m`` at sample size ``N``.

    The bound is proved for the max norm; for another norm it is multiplied by
    :func:`norm_equivalence`, since ``rho_p`` under that norm is at most that
    factor times ``rho_p`` under the max norm.
    """
    d = m.dim
    factor = norm_equivalence(norm, d)
    moment = m.moment_maxnorm(q)
    return factor * kappa_pierce(p, q, d, Norm.LInf) * moment ** (1.0 / q) * N ** (-1.0 / d)


def _density_pieces(f) -> list:
    if isinstance(f, PiecewiseConstantDensity):
        return f.density_pieces()
    if hasattr(f, "density_pieces"):
        return f.density_pieces()
    raise UnsupportedError(f"{type(f).__name__} has no piecewise-constant density")


def hr_integral(f: ModelMeasure, p: float, d: int | None = None) -> float:
    """``integral f^{1-p/d}`` for piecewise-constant densities.

    ``f`` may be a :class:`UniformBox`, a :class:`PiecewiseConstantDensity` or
    a mixture of those; overlapping pieces are resolved on the arrangement of
    their faces, so the result is exact up to rounding.
    """
    d = f.dim if d is None else d
    if d != f.dim:
        raise ValueError("dimension does not match the measure")
    if not p < d:
        raise RegimeError(f"need p < d, got p={p}, d={d}")
    expo = 1.0 - p / d
    if isinstance(f, PiecewiseConstantDensity):
        vol = f._h**d
        vals = f.values[f.values > 0]
        return float(math.fsum((vals**expo * vol).tolist()))
    pieces = _density_pieces(f)
    if len(pieces) == 1:
        lo, hi, dens = pieces[0]
        return float(dens**expo * np.prod(np.asarray(hi) - np.asarray(lo)))
    breaks = [np.unique(np.concatenate([[lo[k], hi[k]] for lo, hi, _ in pieces])) for k in range(d)]
    mids = np.meshgrid(*[0.5 * (b[:-1] + b[1:]) for b in breaks], indexing="ij")
    widths = np.meshgrid(*[np.diff(b) for b in breaks], indexing="ij")
    density = np.zeros(mids[0].shape)
    for lo, hi, dens in pieces:
        inside = np.ones(density.shape, dtype=bool)
        for k in range(d):
            inside &= (mids[k] >= lo[k]) & (mids[k] < hi[k])
        density += dens * inside
    vol = np.prod(np.stack(widths), axis=0)
    return float(math.fsum((density[density > 0] ** expo * vol[density > 0]).tolist()))


@dataclass(frozen=True)
class BoundRow:
    label: str
    N: int
    empirical: float
    bound: float
    satisfied: bool
    slack: float
    hard: bool = True

    @property
    def status(self) -> str:
        return "ok" if self.satisfied else "UNSATISFIED"


@dataclass
class BoundReport:
    rows: list = field(default_factory=list)
    footer: list = field(default_factory=list)

    @property
    def unsatisfied_hard(self) -> list:
        return [r for r in self.rows if r.hard and not r.satisfied]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["label", "N", "empirical_upper", "bound", "satisfied", "slack", "check"])
            for r in self.rows:
                w.writerow([r.label, r.N, repr(r.empirical), repr(r.bound),
                            "true" if r.satisfied else "UNSATISFIED", repr(r.slack),
                            "hard" if r.hard else "empirical-constant"])

    def table(self) -> str:
        head = f"{'label':<28} {'N':>7} {'empirical':>12} {'bound':>12} {'slack':>12}  status"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            tag = r.status if r.hard else f"{r.status} (empirical-constant)"
            lines.append(f"{r.label:<28} {r.N:>7d} {r.empirical:>12.6g} {r.bound:>12.6g} "
                         f"{r.slack:>12.6g}  {tag}")
        lines.extend(self.footer)
        return "\n".join(lines)


def _row(label, N, empirical, bound, hard=True) -> BoundRow:
    return BoundRow(label, int(N), float(empirical), float(bound),
                    bool(empirical <= bound + BOUND_TOL), float(bound - empirical), hard)


def _upper(s) -> float:
    val = getattr(s, "V_upper", None)
    if val is None or not np.isfinite(val):
        raise IncompleteDataError(f"summary for N={getattr(s, 'N', '?')} has no upper bracket")
    return float(val)


def check_report(summaries: Sequence, bounds: Sequence[str], *, measure: ModelMeasure,
                 p: float, norm: Norm | str = Norm.LInf, q: float | None = None,
                 kappa_hat: float | None = None, hr_rtol: float = 0.15,
                 label: str = "") -> BoundReport:
    """Compare certified upper brackets with the selected bounds.

    Parameters
    ----------
    summaries : sequence
        Objects with ``N`` and ``V_upper`` (for example ``NSummary``).
    bounds : sequence of {"cube", "pierce", "hr"}
        ``"cube"`` needs ``measure`` on the unit cube, ``"pierce"`` needs
        ``q``, and ``"hr"`` needs an estimated ``kappa_hat``. ``"hr"`` rows
        compare ``V_hat`` with ``(1 + hr_rtol) kappa_hat (int f^{1-p/d})^{1/p}
        N^{-1/d}`` and never count as hard failures.
    """
    norm = Norm.parse(norm)
    if not summaries:
        raise IncompleteDataError("no experiment summaries to check")
    d = measure.dim
    prefix = f"{label}:" if label else ""
    report = BoundReport()
    for kind in bounds:
        if kind == "cube":
            box = measure.support_box()
            if box is None or np.any(box[0] < 0) or np.any(box[1] > 1):
                raise UnsupportedError("the cube bound needs a measure on [0,1)^d")
            kc = kappa_cube(p, d, norm)
            for s in summaries:
                report.rows.append(_row(prefix + "cube", s.N, _upper(s), kc * s.N ** (-1.0 / d)))
        elif kind == "pierce":
            if q is None:
                raise IncompleteDataError("the Pierce bound needs a moment order q")
            for s in summaries:
                report.rows.append(_row(prefix + f"pierce(q={q:g})", s.N, _upper(s),
                                        pierce_rhs(measure, s.N, p, q, norm)))
            if PIERCE_FOOTER not in report.footer:
                report.footer.append(PIERCE_FOOTER)
            if norm is not Norm.LInf:
                report.footer.append(
                    f"note: {norm.value} rows use the norm-equivalence factor "
                    f"{norm_equivalence(norm, d):.6g} relative to the max norm")
        elif kind == "hr":
            if kappa_hat is None:
                raise IncompleteDataError("the high-resolution check needs an estimated constant")
            scale = (1.0 + hr_rtol) * kappa_hat * hr_integral(measure, p, d) ** (1.0 / p)
            for s in summaries:
                report.rows.append(_row(prefix + "hr", s.N, float(s.V_hat),
                                        scale * s.N ** (-1.0 / d), hard=False))
        else:
            raise ValueError(f"unknown bound {kind!r}")
    return report
