"""Catalog of the auxiliary proximity operators and projections.

These are the building blocks that appear alongside a divergence term in the
estimation problems: indicator projections (simplex, box, norm balls,
hyperplane), the weighted negative entropy, the squared distance to a point,
and the coordinatewise quotient penalty ``max(t/z, z/t)``.

Every entry knows how to evaluate itself (extended-real, with a membership
tolerance for the indicators), apply its prox, serialize to a plain dict,
and report interior margins for feasibility probes.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .lambertw import lambert_w_of_exp

__all__ = [
    "SimpleFn",
    "SimplexIndicator",
    "BoxIndicator",
    "BallIndicator",
    "HyperplaneIndicator",
    "NegEntropy",
    "SqDistance",
    "QuotientQ1",
    "prox_simple",
    "asymmetric_soft_threshold",
    "simple_fn_from_dict",
    "project_simplex",
    "project_l1_ball",
]

MEMBERSHIP_TOL = 1e-9


def asymmetric_soft_threshold(xi_bar, gamma):
    """``max(xi_bar - gamma, 0)``: prox of ``gamma * t`` on the half-line."""
    return np.maximum(np.asarray(xi_bar, dtype=float) - gamma, 0.0)


def project_simplex(y, radius=1.0):
    """Euclidean projection onto ``{x >= 0, sum(x) = radius}`` (sort-based)."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - radius
    idx = np.arange(1, y.size + 1)
    cond = u - css / idx > 0
    rho = int(np.max(np.nonzero(cond)[0])) + 1
    theta = css[rho - 1] / rho
    return np.maximum(y - theta, 0.0)


def project_l1_ball(d, radius):
    """Euclidean projection of ``d`` onto the l1 ball of given radius."""
    d = np.asarray(d, dtype=float)
    if np.sum(np.abs(d)) <= radius:
        return d.copy()
    mags = project_simplex(np.abs(d), radius)
    return np.sign(d) * mags


class SimpleFn:
    """Base class; subclasses provide value/prox/margins."""

    is_indicator = False

    def value(self, y, tol=MEMBERSHIP_TOL):
        raise NotImplementedError

    def prox(self, gamma, y):
        raise NotImplementedError

    def interior_margin(self, y):
        """Signed margin into the relative interior of the domain."""
        raise NotImplementedError

    def constraint_residual(self, y):
        """Distance-like violation of the constraint (0 for non-indicators)."""
        return 0.0

    def _check(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dimension,):
            raise ValueError(f"expected a vector of length {self.dimension}")
        return y

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class SimplexIndicator(SimpleFn):
    dimension: int
    radius: float = 1.0
    is_indicator = True

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("simplex radius must be positive")

    def value(self, y, tol=MEMBERSHIP_TOL):
        return 0.0 if self.constraint_residual(self._check(y)) <= tol else np.inf

    def prox(self, gamma, y):
        return project_simplex(self._check(y), self.radius)

    def constraint_residual(self, y):
        y = self._check(y)
        return max(abs(float(np.sum(y)) - self.radius), float(max(0.0, -np.min(y))))

    def interior_margin(self, y):
        y = self._check(y)
        if abs(float(np.sum(y)) - self.radius) > MEMBERSHIP_TOL:
            return -np.inf
        return float(np.min(y))

    def to_dict(self):
        return {"type": "simplex_indicator", "dimension": self.dimension, "radius": self.radius}


@dataclass(frozen=True)
class BoxIndicator(SimpleFn):
    dimension: int
    lo: float = 0.0
    hi: float = 1.0
    is_indicator = True

    def value(self, y, tol=MEMBERSHIP_TOL):
        return 0.0 if self.constraint_residual(self._check(y)) <= tol else np.inf

    def prox(self, gamma, y):
        return np.clip(self._check(y), self.lo, self.hi)

    def constraint_residual(self, y):
        y = self._check(y)
        return float(np.max(np.maximum(self.lo - y, y - self.hi), initial=0.0))

    def interior_margin(self, y):
        y = self._check(y)
        return float(np.min(np.minimum(y - self.lo, self.hi - y)))

    def to_dict(self):
        return {"type": "box_indicator", "dimension": self.dimension, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class BallIndicator(SimpleFn):
    center: np.ndarray
    radius: float
    norm: float = 2
    is_indicator = True

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", center)
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")
        if self.norm not in (1, 2, np.inf) and self.norm != "inf":
            raise ValueError("ball norm must be 1, 2, or inf")
        if self.norm == "inf":
            object.__setattr__(self, "norm", np.inf)

    @property
    def dimension(self):
        return self.center.size

    def _dist(self, y):
        d = y - self.center
        if self.norm == 1:
            return float(np.sum(np.abs(d)))
        if self.norm == 2:
            return float(np.linalg.norm(d))
        return float(np.max(np.abs(d)))

    def value(self, y, tol=MEMBERSHIP_TOL):
        return 0.0 if self.constraint_residual(self._check(y)) <= tol else np.inf

    def prox(self, gamma, y):
        y = self._check(y)
        d = y - self.center
        if self.norm == 2:
            nrm = np.linalg.norm(d)
            if nrm <= self.radius:
                return y.copy()
            return self.center + d * (self.radius / nrm)
        if self.norm == np.inf:
            return self.center + np.clip(d, -self.radius, self.radius)
        return self.center + project_l1_ball(d, self.radius)

    def constraint_residual(self, y):
        return max(0.0, self._dist(self._check(y)) - self.radius)

    def interior_margin(self, y):
        return self.radius - self._dist(self._check(y))

    def to_dict(self):
        norm = "inf" if self.norm == np.inf else int(self.norm)
        return {
            "type": "ball_indicator",
            "center": self.center.tolist(),
            "radius": self.radius,
            "norm": norm,
        }


@dataclass(frozen=True)
class HyperplaneIndicator(SimpleFn):
    normal: np.ndarray
    offset: float
    is_indicator = True

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=float)
        if np.all(normal == 0):
            raise ValueError("hyperplane normal must be nonzero")
        object.__setattr__(self, "normal", normal)

    @property
    def dimension(self):
        return self.normal.size

    def value(self, y, tol=MEMBERSHIP_TOL):
        return 0.0 if self.constraint_residual(self._check(y)) <= tol else np.inf

    def prox(self, gamma, y):
        y = self._check(y)
        a = self.normal
        return y + (self.offset - float(a @ y)) / float(a @ a) * a

    def constraint_residual(self, y):
        y = self._check(y)
        return abs(float(self.normal @ y) - self.offset) / float(np.linalg.norm(self.normal))

    def interior_margin(self, y):
        # An affine set is its own relative interior.
        return 0.0 if self.constraint_residual(self._check(y)) <= MEMBERSHIP_TOL else -np.inf

    def to_dict(self):
        return {"type": "hyperplane_indicator", "normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True)
class NegEntropy(SimpleFn):
    """Weighted negative entropy ``weight * sum(t log t)`` on ``t >= 0``."""

    dimension: int
    weight: float = 1.0

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError("entropy weight must be positive")

    def value(self, y, tol=MEMBERSHIP_TOL):
        y = self._check(y)
        if np.min(y) < -tol:
            return np.inf
        yc = np.maximum(y, 0.0)
        return self.weight * float(np.sum(xlogy(yc, yc)))

    def prox(self, gamma, y):
        y = self._check(y)
        c = gamma * self.weight
        # Coordinatewise solve of  c*(log t + 1) + t = y  via W(exp(.)).
        return c * lambert_w_of_exp(y / c - 1.0 - np.log(c))

    def interior_margin(self, y):
        return float(np.min(self._check(y)))

    def to_dict(self):
        return {"type": "neg_entropy", "dimension": self.dimension, "weight": self.weight}


@dataclass(frozen=True)
class SqDistance(SimpleFn):
    """Squared Euclidean distance ``||y - center||^2`` (note: no 1/2)."""

    center: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    @property
    def dimension(self):
        return self.center.size

    def value(self, y, tol=MEMBERSHIP_TOL):
        d = self._check(y) - self.center
        return float(d @ d)

    def prox(self, gamma, y):
        y = self._check(y)
        return (y + 2.0 * gamma * self.center) / (1.0 + 2.0 * gamma)

    def interior_margin(self, y):
        return np.inf

    def to_dict(self):
        return {"type": "sq_distance", "center": self.center.tolist()}


@dataclass(frozen=True)
class QuotientQ1(SimpleFn):
    """Coordinatewise ``max(t/z, z/t)`` against a positive reference ``z``."""

    reference: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.reference, dtype=float)
        if np.any(z <= 0):
            raise ValueError("quotient reference must be strictly positive entrywise")
        object.__setattr__(self, "reference", z)

    @property
    def dimension(self):
        return self.reference.size

    def value(self, y, tol=MEMBERSHIP_TOL):
        y = self._check(y)
        if np.any(y <= 0):
            return np.inf
        r = y / self.reference
        return float(np.sum(np.maximum(r, 1.0 / r)))

    def prox(self, gamma, y):
        y = self._check(y)
        z = self.reference
        kink = gamma / z
        out = np.where(y >= z + kink, y - kink, z)
        hyper = y <= z - kink
        if np.any(hyper):
            out = np.where(hyper, _quotient_hyperbolic_root(y, z, gamma), out)
        return out

    def interior_margin(self, y):
        return float(np.min(self._check(y)))

    def to_dict(self):
        return {"type": "quotient_q1", "reference": self.reference.tolist()}


def _quotient_hyperbolic_root(y, z, gamma):
    """Positive root of ``t^3 - y t^2 - gamma z = 0`` on ``(0, z]``.

    Safeguarded Newton with bisection fallback; the bracket is valid on the
    hyperbolic branch (the cubic is negative at 0+ and nonnegative at z).
    """
    lo = np.full_like(np.asarray(y, dtype=float), 1e-300)
    hi = np.array(z, dtype=float)
    t = np.array(z, dtype=float)
    for _ in range(120):
        h = (t - y) * t * t - gamma * z
        done = np.abs(h) <= 1e-13 * (np.abs(t) ** 3 + np.abs(y) * t * t + gamma * z)
        done = done | (hi - lo <= 4.0 * np.finfo(float).eps * hi)
        if np.all(done):
            break
        lo = np.where(~done & (h < 0), t, lo)
        hi = np.where(~done & (h > 0), t, hi)
        hp = (3.0 * t - 2.0 * y) * t
        with np.errstate(all="ignore"):
            newton = t - h / hp
        ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
        t = np.where(done, t, np.where(ok, newton, 0.5 * (lo + hi)))
    return t


def prox_simple(fn, gamma, y):
    """Prox of ``gamma * fn`` at ``y`` (projection for indicators)."""
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValueError("gamma must be strictly positive and finite")
    return fn.prox(gamma, y)


_REGISTRY = {
    "simplex_indicator": lambda d: SimplexIndicator(dimension=int(d["dimension"]), radius=float(d.get("radius", 1.0))),
    "box_indicator": lambda d: BoxIndicator(dimension=int(d["dimension"]), lo=float(d.get("lo", 0.0)), hi=float(d.get("hi", 1.0))),
    "ball_indicator": lambda d: BallIndicator(
        center=np.asarray(d["center"], dtype=float),
        radius=float(d["radius"]),
        norm=np.inf if d.get("norm", 2) in ("inf", np.inf) else int(d.get("norm", 2)),
    ),
    "hyperplane_indicator": lambda d: HyperplaneIndicator(normal=np.asarray(d["normal"], dtype=float), offset=float(d["offset"])),
    "neg_entropy": lambda d: NegEntropy(dimension=int(d["dimension"]), weight=float(d.get("weight", 1.0))),
    "sq_distance": lambda d: SqDistance(center=np.asarray(d["center"], dtype=float)),
    "quotient_q1": lambda d: QuotientQ1(reference=np.asarray(d["reference"], dtype=float)),
}


def simple_fn_from_dict(d):
    """Rebuild a catalog entry from its dict form (see ``to_dict``)."""
    kind = d.get("type")
    if kind not in _REGISTRY:
        raise ValueError(f"unknown simple function type {kind!r}")
    return _REGISTRY[kind](d)
