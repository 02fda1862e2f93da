"""Reference measures, discrete measures and norms on R^d.

Every model measure provides exact sampling, exact masses of half-open
axis-aligned boxes ``[lower, upper)`` and max-norm moments. Boxes are passed
as pairs of arrays; the vectorized ``box_masses`` takes ``(k, d)`` arrays of
lower and upper corners.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import UnsupportedError
from .rng import make_rng


class Norm(str, Enum):
    L1 = "L1"
    L2 = "L2"
    LInf = "LInf"

    @classmethod
    def parse(cls, value: "Norm | str") -> "Norm":
        if isinstance(value, Norm):
            return value
        key = str(value).strip().lower().replace("_", "")
        aliases = {"l1": cls.L1, "l2": cls.L2, "linf": cls.LInf, "max": cls.LInf, "inf": cls.LInf}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown norm {value!r}") from None

    @property
    def code(self) -> int:
        return {"L1": 0, "L2": 1, "LInf": 2}[self.value]

    def norm(self, v: np.ndarray) -> np.ndarray:
        """Norm along the last axis."""
        v = np.asarray(v, dtype=float)
        if self is Norm.LInf:
            return np.abs(v).max(axis=-1)
        if self is Norm.L1:
            return np.abs(v).sum(axis=-1)
        return np.sqrt((v * v).sum(axis=-1))

    def distance(self, x, y) -> np.ndarray:
        return self.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))

    def pairwise(self, X, Y) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        return self.norm(X[:, None, :] - Y[None, :, :])


def unit_cube_diameter(norm: Norm | str, d: int) -> float:
    """Diameter of ``[0,1)^d`` under ``norm``: 1, d or sqrt(d)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    norm = Norm.parse(norm)
    return {Norm.LInf: 1.0, Norm.L1: float(d), Norm.L2: math.sqrt(d)}[norm]


def box_diameter(norm: Norm | str, sides) -> float:
    """Diameter of an axis-aligned box with the given side lengths."""
    return float(Norm.parse(norm).norm(np.asarray(sides, dtype=float)))


class DiscreteMeasure:
    """Finitely many weighted atoms in R^d.

    Atoms with zero weight are dropped on construction, so ``len(m)`` counts
    charged atoms only.
    """

    def __init__(self, atoms, weights):
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if atoms.shape[0] != weights.shape[0]:
            raise ValueError("atoms and weights differ in length")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atom coordinates must be finite")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and nonnegative")
        keep = weights > 0
        self.atoms = np.ascontiguousarray(atoms[keep])
        self.weights = np.ascontiguousarray(weights[keep])
        self.atoms.setflags(write=False)
        self.weights.setflags(write=False)
        self._dim = atoms.shape[1]

    @classmethod
    def empirical(cls, points) -> "DiscreteMeasure":
        """The empirical measure ``(1/N) sum delta_{x_j}``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = points.shape[0]
        return cls(points, np.full(n, 1.0 / n))

    @classmethod
    def dirac(cls, x, mass: float = 1.0) -> "DiscreteMeasure":
        return cls(np.asarray(x, dtype=float)[None, :], [mass])

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def total_mass(self) -> float:
        return float(math.fsum(self.weights))

    def __len__(self) -> int:
        return self.weights.shape[0]

    def __add__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        return DiscreteMeasure(np.vstack([self.atoms, other.atoms]),
                               np.concatenate([self.weights, other.weights]))

    def scaled(self, factor: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.atoms, self.weights * factor)

    def pushforward(self, scale: float, shift) -> "DiscreteMeasure":
        """Image under ``x -> scale * x + shift``."""
        return DiscreteMeasure(scale * self.atoms + np.asarray(shift, dtype=float), self.weights)

    def box_mass(self, lower, upper) -> float:
        inside = np.all((self.atoms >= lower) & (self.atoms < upper), axis=1)
        return float(self.weights[inside].sum())

    def to_dict(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteMeasure":
        return cls(data["atoms"], data["weights"])

    def __repr__(self) -> str:
        return f"DiscreteMeasure(n={len(self)}, dim={self.dim}, mass={self.total_mass:.6g})"


def _as_boxes(lower, upper, d: int) -> tuple[np.ndarray, np.ndarray]:
    lo = np.asarray(lower, dtype=float).reshape(-1, d)
    hi = np.asarray(upper, dtype=float).reshape(-1, d)
    if lo.shape != hi.shape:
        raise ValueError("lower and upper corners differ in shape")
    if np.any(hi <= lo):
        raise ValueError("box must satisfy lower < upper on every axis")
    return lo, hi


def _interval_overlap(lo, hi, a, b):
    """Length of ``[lo, hi) ∩ [a, b)``, broadcasting."""
    return np.clip(np.minimum(hi, b) - np.maximum(lo, a), 0.0, None)


class ModelMeasure:
    """A reference probability measure given analytically."""

    dim: int

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def box_masses(self, lower, upper) -> np.ndarray:
        raise NotImplementedError

    def sample_in_box(self, lower, upper, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` draws from the measure conditioned on ``[lower, upper)``."""
        raise NotImplementedError

    def moment_maxnorm(self, q: float) -> float:
        raise NotImplementedError

    def support_box(self) -> tuple[np.ndarray, np.ndarray] | None:
        """A half-open box containing the support, or None if unbounded."""
        return None

    @property
    def is_discrete(self) -> bool:
        return False

    def as_discrete(self) -> DiscreteMeasure:
        raise UnsupportedError(f"{type(self).__name__} is not finitely supported")

    def box_mass(self, lower, upper) -> float:
        return float(self.box_masses(lower, upper)[0])

    def to_dict(self) -> dict:
        raise NotImplementedError


def _maxnorm_moment_piecewise(cdf, breaks: np.ndarray, degree: int, q: float) -> float:
    """``E[M^q]`` for ``M >= 0`` whose CDF is a polynomial of ``degree`` between breaks.

    ``cdf`` is evaluated at ``degree + 1`` Chebyshev points per piece, the
    piece polynomial is interpolated, and ``q t^{q-1} (1 - F(t))`` is
    integrated term by term.
    """
    breaks = np.unique(np.asarray(breaks, dtype=float))
    total = 0.0
    nodes = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
    for t0, t1 in zip(breaks[:-1], breaks[1:]):
        mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
        ts = mid + half * nodes
        poly = np.polynomial.Polynomial.fit(ts, [cdf(t) for t in ts], degree).convert()
        coef = np.zeros(degree + 1)
        coef[: len(poly.coef)] = poly.coef
        surv = -coef
        surv[0] += 1.0
        for k, ck in enumerate(surv):
            if ck != 0.0:
                total += ck * q / (q + k) * (t1 ** (q + k) - t0 ** (q + k))
    return float(total)


@dataclass(frozen=True, eq=False)
class UniformBox(ModelMeasure):
    """Uniform distribution on ``lower + [0, sides)``."""

    lower: tuple
    sides: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        sides = tuple(float(v) for v in np.atleast_1d(self.sides))
        if len(sides) == 1 and len(lower) > 1:
            sides = sides * len(lower)
        if len(lower) != len(sides) or any(s <= 0 for s in sides):
            raise ValueError("UniformBox needs matching lower/sides with positive sides")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "sides", sides)

    @classmethod
    def unit(cls, d: int) -> "UniformBox":
        return cls((0.0,) * d, (1.0,) * d)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def _lo(self):
        return np.asarray(self.lower)

    @property
    def _hi(self):
        return np.asarray(self.lower) + np.asarray(self.sides)

    def sample(self, n, rng):
        return self._lo + rng.random((n, self.dim)) * np.asarray(self.sides)

    def box_masses(self, lower, upper):
        lo, hi = _as_boxes(lower, upper, self.dim)
        frac = _interval_overlap(lo, hi, self._lo, self._hi) / np.asarray(self.sides)
        return frac.prod(axis=1)

    def sample_in_box(self, lower, upper, n, rng):
        a = np.maximum(np.asarray(lower, dtype=float), self._lo)
        b = np.minimum(np.asarray(upper, dtype=float), self._hi)
        if np.any(b <= a):
            raise ValueError("box has zero mass")
        return a + rng.random((n, self.dim)) * (b - a)

    def moment_maxnorm(self, q):
        lo, hi = self._lo, self._hi
        breaks = np.concatenate([[0.0], np.abs(lo), np.abs(hi)])

        def cdf(t):
            frac = _interval_overlap(lo, hi, -t, t) / np.asarray(self.sides)
            return float(frac.prod())

        return _maxnorm_moment_piecewise(cdf, breaks, self.dim, q)

    def support_box(self):
        return self._lo.copy(), self._hi.copy()

    def density_pieces(self):
        """``[(lower, upper, density)]`` describing the density exactly."""
        return [(self._lo, self._hi, 1.0 / float(np.prod(self.sides)))]

    def to_dict(self):
        return {"type": "UniformBox", "lower": list(self.lower), "sides": list(self.sides)}


class PiecewiseConstantDensity(ModelMeasure):
    """Density on ``[0,1)^d`` constant on the dyadic cells of a given level.

    ``values`` has shape ``(2**level,) * d`` and is indexed by cell
    multi-index; the cell with index ``k`` is ``k * 2**-level + [0, 2**-level)^d``.
    """

    def __init__(self, level: int, values):
        values = np.asarray(values, dtype=float)
        g = 2**int(level)
        if values.ndim < 1 or any(s != g for s in values.shape):
            raise ValueError(f"values must have shape ({g},)*d for level {level}")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite and nonnegative")
        total = float(values.sum()) * float(g) ** (-values.ndim)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"density integrates to {total}, not 1")
        self.level = int(level)
        self.values = values.copy()
        self.values.setflags(write=False)
        self.dim = values.ndim
        self._h = 1.0 / g
        self._cell_mass = (self.values * self._h**self.dim).ravel()

    def sample(self, n, rng):
        flat = rng.choice(self._cell_mass.size, size=n, p=self._cell_mass / self._cell_mass.sum())
        idx = np.stack(np.unravel_index(flat, self.values.shape), axis=1)
        return (idx + rng.random((n, self.dim))) * self._h

    def _axis_overlaps(self, lo, hi):
        g = self.values.shape[0]
        edges = np.arange(g) * self._h
        return [_interval_overlap(lo[:, k, None], hi[:, k, None], edges, edges + self._h)
                for k in range(self.dim)]

    def box_masses(self, lower, upper):
        lo, hi = _as_boxes(lower, upper, self.dim)
        ov = self._axis_overlaps(lo, hi)
        letters = "abcdefghijklmnopqrstuvwxy"[: self.dim]
        spec = letters + "," + ",".join("z" + c for c in letters) + "->z"
        return np.einsum(spec, self.values, *ov, optimize=True)

    def sample_in_box(self, lower, upper, n, rng):
        lo = np.asarray(lower, dtype=float).reshape(1, -1)
        hi = np.asarray(upper, dtype=float).reshape(1, -1)
        ov = [o[0] for o in self._axis_overlaps(lo, hi)]
        weight = self.values.copy()
        for k in range(self.dim):
            shape = [1] * self.dim
            shape[k] = -1
            weight = weight * ov[k].reshape(shape)
        w = weight.ravel()
        if w.sum() <= 0:
            raise ValueError("box has zero mass")
        flat = rng.choice(w.size, size=n, p=w / w.sum())
        idx = np.stack(np.unravel_index(flat, self.values.shape), axis=1)
        a = np.maximum(idx * self._h, lo)
        b = np.minimum((idx + 1) * self._h, hi)
        return a + rng.random((n, self.dim)) * (b - a)

    def moment_maxnorm(self, q):
        breaks = np.arange(self.values.shape[0] + 1) * self._h

        def cdf(t):
            if t <= 0:
                return 0.0
            return float(self.box_masses(np.zeros(self.dim), np.full(self.dim, t))[0])

        return _maxnorm_moment_piecewise(cdf, breaks, self.dim, q)

    def support_box(self):
        nz = np.argwhere(self.values > 0)
        return nz.min(axis=0) * self._h, (nz.max(axis=0) + 1) * self._h

    def density_pieces(self):
        pieces = []
        for idx in np.argwhere(self.values > 0):
            lo = idx * self._h
            pieces.append((lo, lo + self._h, float(self.values[tuple(idx)])))
        return pieces

    def to_dict(self):
        return {"type": "PiecewiseConstantDensity", "level": self.level, "dim": self.dim,
                "values": self.values.ravel().tolist()}


@dataclass(frozen=True, eq=False)
class TwoPoint(ModelMeasure):
    """``w * delta_a + (1 - w) * delta_b``."""

    a: tuple
    b: tuple
    w: float = 0.5

    def __post_init__(self):
        a = tuple(float(v) for v in np.atleast_1d(self.a))
        b = tuple(float(v) for v in np.atleast_1d(self.b))
        if len(a) != len(b):
            raise ValueError("points differ in dimension")
        if not 0.0 <= float(self.w) <= 1.0:
            raise ValueError("weight must lie in [0, 1]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "w", float(self.w))

    @property
    def dim(self) -> int:
        return len(self.a)

    def sample(self, n, rng):
        pick_a = rng.random(n) < self.w
        return np.where(pick_a[:, None], np.asarray(self.a), np.asarray(self.b))

    def box_masses(self, lower, upper):
        lo, hi = _as_boxes(lower, upper, self.dim)
        a, b = np.asarray(self.a), np.asarray(self.b)
        in_a = np.all((a >= lo) & (a < hi), axis=1)
        in_b = np.all((b >= lo) & (b < hi), axis=1)
        return self.w * in_a + (1.0 - self.w) * in_b

    def sample_in_box(self, lower, upper, n, rng):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        a, b = np.asarray(self.a), np.asarray(self.b)
        wa = self.w * bool(np.all((a >= lower) & (a < upper)))
        wb = (1.0 - self.w) * bool(np.all((b >= lower) & (b < upper)))
        if wa + wb <= 0:
            raise ValueError("box has zero mass")
        pick_a = rng.random(n) < wa / (wa + wb)
        return np.where(pick_a[:, None], a, b)

    def moment_maxnorm(self, q):
        a = float(np.abs(self.a).max()) if self.dim else 0.0
        b = float(np.abs(self.b).max()) if self.dim else 0.0
        return self.w * a**q + (1.0 - self.w) * b**q

    def support_box(self):
        pts = np.array([self.a, self.b])
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        return lo, np.nextafter(hi, np.inf)

    @property
    def is_discrete(self) -> bool:
        return True

    def as_discrete(self):
        return DiscreteMeasure([self.a, self.b], [self.w, 1.0 - self.w])

    def to_dict(self):
        return {"type": "TwoPoint", "a": list(self.a), "b": list(self.b), "w": self.w}


class Mixture(ModelMeasure):
    """``sum_k alpha_k mu_k`` for model measures ``mu_k`` of a common dimension."""

    def __init__(self, weights: Sequence[float], components: Sequence[ModelMeasure]):
        weights = np.asarray(weights, dtype=float)
        if len(weights) != len(components) or len(components) == 0:
            raise ValueError("need one weight per component")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        dims = {c.dim for c in components}
        if len(dims) != 1:
            raise ValueError("components differ in dimension")
        self.weights = weights
        self.components = list(components)
        self.dim = dims.pop()

    def sample(self, n, rng):
        comp = rng.choice(len(self.components), size=n, p=self.weights)
        out = np.empty((n, self.dim))
        for k, c in enumerate(self.components):
            sel = comp == k
            if sel.any():
                out[sel] = c.sample(int(sel.sum()), rng)
        return out

    def box_masses(self, lower, upper):
        return sum(w * c.box_masses(lower, upper) for w, c in zip(self.weights, self.components))

    def sample_in_box(self, lower, upper, n, rng):
        w = np.array([a * c.box_mass(lower, upper) for a, c in zip(self.weights, self.components)])
        if w.sum() <= 0:
            raise ValueError("box has zero mass")
        comp = rng.choice(len(self.components), size=n, p=w / w.sum())
        out = np.empty((n, self.dim))
        for k, c in enumerate(self.components):
            sel = comp == k
            if sel.any():
                out[sel] = c.sample_in_box(lower, upper, int(sel.sum()), rng)
        return out

    def moment_maxnorm(self, q):
        return float(sum(w * c.moment_maxnorm(q) for w, c in zip(self.weights, self.components)))

    def support_box(self):
        boxes = [c.support_box() for c, w in zip(self.components, self.weights) if w > 0]
        if any(b is None for b in boxes):
            return None
        return (np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0))

    @property
    def is_discrete(self) -> bool:
        return all(c.is_discrete for c in self.components)

    def as_discrete(self):
        parts = [c.as_discrete().scaled(w) for w, c in zip(self.weights, self.components)]
        out = parts[0]
        for part in parts[1:]:
            out = out + part
        return out

    def density_pieces(self):
        pieces = []
        for w, c in zip(self.weights, self.components):
            if w == 0:
                continue
            if not hasattr(c, "density_pieces"):
                raise UnsupportedError(f"{type(c).__name__} has no piecewise-constant density")
            pieces.extend((lo, hi, w * f) for lo, hi, f in c.density_pieces())
        return pieces

    def to_dict(self):
        return {"type": "Mixture", "weights": self.weights.tolist(),
                "components": [c.to_dict() for c in self.components]}


def _laplace_cdf(x, b):
    x = np.asarray(x, dtype=float)
    return np.where(x < 0, 0.5 * np.exp(np.minimum(x, 0.0) / b), 1.0 - 0.5 * np.exp(-np.maximum(x, 0.0) / b))


def _laplace_interval(lo, hi, b):
    """P(lo <= X < hi) for X ~ Laplace(0, b), without cancellation in the tails."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    sf = lambda x: 0.5 * np.exp(-np.maximum(x, 0.0) / b)  # noqa: E731
    pos = lo >= 0
    neg = hi <= 0
    out = _laplace_cdf(hi, b) - _laplace_cdf(lo, b)
    out = np.where(pos, sf(lo) - sf(hi), out)
    out = np.where(neg, sf(-hi) - sf(-lo), out)
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class ProductLaplace(ModelMeasure):
    """``d`` independent centred Laplace coordinates with scale ``b``."""

    scale: float
    dim: int

    def __post_init__(self):
        if self.scale <= 0 or self.dim < 1:
            raise ValueError("ProductLaplace needs scale > 0 and dim >= 1")
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "dim", int(self.dim))

    def sample(self, n, rng):
        return rng.laplace(0.0, self.scale, size=(n, self.dim))

    def box_masses(self, lower, upper):
        lo, hi = _as_boxes(lower, upper, self.dim)
        return _laplace_interval(lo, hi, self.scale).prod(axis=1)

    def sample_in_box(self, lower, upper, n, rng):
        b = self.scale
        lo = np.broadcast_to(np.asarray(lower, dtype=float), (self.dim,))
        hi = np.broadcast_to(np.asarray(upper, dtype=float), (self.dim,))
        out = np.empty((n, self.dim))
        for k in range(self.dim):
            u = rng.random(n)
            if lo[k] >= 0:
                s_lo, s_hi = 0.5 * math.exp(-lo[k] / b), 0.5 * math.exp(-min(hi[k], 1e300) / b)
                out[:, k] = -b * np.log(2.0 * (s_hi + u * (s_lo - s_hi)))
            elif hi[k] <= 0:
                s_lo, s_hi = 0.5 * math.exp(hi[k] / b), 0.5 * math.exp(max(lo[k], -1e300) / b)
                out[:, k] = b * np.log(2.0 * (s_hi + u * (s_lo - s_hi)))
            else:
                f_lo, f_hi = _laplace_cdf(lo[k], b), _laplace_cdf(hi[k], b)
                v = f_lo + u * (f_hi - f_lo)
                out[:, k] = np.where(v < 0.5, b * np.log(2.0 * v), -b * np.log(2.0 * (1.0 - v)))
            out[:, k] = np.clip(out[:, k], lo[k], np.nextafter(hi[k], -np.inf))
        return out

    def moment_maxnorm(self, q):
        b, d = self.scale, self.dim

        def integrand(t):
            return q * t ** (q - 1.0) * -math.expm1(d * math.log1p(-math.exp(-t / b)))

        val, _ = integrate.quad(integrand, 0.0, np.inf, epsrel=1e-10, epsabs=0.0, limit=200)
        return float(val)

    def tail_maxnorm(self, t: float) -> float:
        """P(|X|_max >= t)."""
        if t <= 0:
            return 1.0
        return float(-math.expm1(self.dim * math.log1p(-math.exp(-t / self.scale))))

    def partial_moment_maxnorm(self, q: float, t: float) -> float:
        """E[|X|_max^q ; |X|_max >= t]."""
        b, d = self.scale, self.dim

        def integrand(s):
            return q * s ** (q - 1.0) * -math.expm1(d * math.log1p(-math.exp(-s / b)))

        rest, _ = integrate.quad(integrand, t, np.inf, epsrel=1e-10, epsabs=0.0, limit=200)
        return float(t**q * self.tail_maxnorm(t) + rest)

    def truncation_radius(self, eta: float) -> float:
        """Smallest ``t`` with P(|X|_max >= t) <= eta."""
        return float(-self.scale * math.log(-math.expm1(math.log1p(-eta) / self.dim)))

    def to_dict(self):
        return {"type": "ProductLaplace", "scale": self.scale, "dim": self.dim}


def measure_from_dict(data: dict) -> ModelMeasure:
    """Inverse of ``ModelMeasure.to_dict``."""
    kind = data.get("type")
    if kind == "UniformBox":
        return UniformBox(tuple(data["lower"]), tuple(data["sides"]))
    if kind == "PiecewiseConstantDensity":
        g = 2 ** int(data["level"])
        values = np.asarray(data["values"], dtype=float).reshape((g,) * int(data["dim"]))
        return PiecewiseConstantDensity(int(data["level"]), values)
    if kind == "TwoPoint":
        return TwoPoint(tuple(data["a"]), tuple(data["b"]), float(data.get("w", 0.5)))
    if kind == "Mixture":
        return Mixture(data["weights"], [measure_from_dict(c) for c in data["components"]])
    if kind == "ProductLaplace":
        return ProductLaplace(float(data["scale"]), int(data["dim"]))
    raise ValueError(f"unknown measure type {kind!r}")


def sample(m: ModelMeasure, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. draws from ``m``, reproducible from ``seed``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return np.empty((0, m.dim))
    return m.sample(n, make_rng(seed))


def box_mass(m: ModelMeasure, lower, upper) -> float:
    """Exact ``m([lower, upper))``."""
    return m.box_mass(lower, upper)


def moment_maxnorm(m: ModelMeasure, q: float) -> float:
    """``E |X|_max^q`` for ``X ~ m``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return m.moment_maxnorm(q)
