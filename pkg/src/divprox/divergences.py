"""Divergence definitions and the one-dimensional reduction machinery.

Each supported divergence is the perspective extension of a convex kernel
``phi`` on the positive half-line.  All the quantities needed to compute the
joint two-argument proximity operator are collected here per divergence:

* the extended-real perspective value ``Phi(upsilon, xi)``,
* the pair of auxiliary maps ``theta_minus(z) = phi'(1/z)`` and
  ``theta_plus(z) = phi(1/z) - phi'(1/z)/z``,
* the bracket endpoints ``chi_minus``/``chi_plus`` delimiting where the
  reduced objective is strictly convex,
* first and second derivatives of the reduced objective ``psi``,
* the overflow-safe test deciding whether the prox lands strictly inside the
  positive quadrant, and the boundary value it takes otherwise,
* the Fenchel conjugate of the restriction of ``phi`` to the nonnegative
  half-line (used for epigraphical projections).

All kernel methods are elementwise and accept ndarrays.
"""

import functools
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .lambertw import lambert_w_of_exp, log_lambert_w_of_exp

__all__ = ["DivergenceSpec", "KINDS", "perspective_value", "theta_pair", "conjugate_value"]

KINDS = ("kl", "jeffreys", "hellinger", "chi_square", "renyi", "i_alpha")

_ALIASES = {
    "kl": "kl",
    "kullback-leibler": "kl",
    "kullback_leibler": "kl",
    "jeffreys": "jeffreys",
    "jef": "jeffreys",
    "hellinger": "hellinger",
    "hel": "hellinger",
    "chi_square": "chi_square",
    "chi-square": "chi_square",
    "chi2": "chi_square",
    "chi": "chi_square",
    "renyi": "renyi",
    "i_alpha": "i_alpha",
    "ialpha": "i_alpha",
}

# Comparisons sitting exactly on a branch boundary (within this relative
# margin) are resolved to the boundary branch.
_TIE = 1e-14


@dataclass(frozen=True)
class DivergenceSpec:
    """Which divergence to use, with its exponent and linear-shift parameter.

    Parameters
    ----------
    kind : str
        One of ``kl``, ``jeffreys``, ``hellinger``, ``chi_square``,
        ``renyi``, ``i_alpha`` (a few common aliases are accepted).
    alpha : float, optional
        Exponent, required for ``renyi`` (``alpha > 1``) and ``i_alpha``
        (``0 < alpha < 1``); rejected for the other kinds.
    kappa : float
        Weight of the linear part of the integrand.  ``kappa = 1`` is the
        canonical divergence; other values are only meaningful for ``kl``
        and ``i_alpha`` (``kappa = 0`` gives the generalized-KL variant
        common in inverse problems).
    """

    kind: str
    alpha: float | None = None
    kappa: float = 1.0

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValueError(f"unknown divergence kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "renyi":
            if self.alpha is None or not self.alpha > 1:
                raise ValueError("renyi requires alpha > 1")
        elif kind == "i_alpha":
            if self.alpha is None or not 0 < self.alpha < 1:
                raise ValueError("i_alpha requires 0 < alpha < 1")
        elif self.alpha is not None:
            raise ValueError(f"{kind} does not take an alpha parameter")
        if self.kappa != 1.0 and kind not in ("kl", "i_alpha"):
            raise ValueError(f"{kind} does not take a kappa parameter")
        if not np.isfinite(self.kappa):
            raise ValueError("kappa must be finite")


def _strictly_less(lhs, rhs):
    """Elementwise ``lhs < rhs`` with ties (within 1e-14 relative) failing."""
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return lhs < rhs - _TIE * scale


class _Kernel:
    """Closed forms for one divergence; subclasses fill in the specifics."""

    # How the inner Newton iteration is started: at the lower bracket end
    # ("lo") or at the bracket midpoint ("mid").
    newton_init = "mid"
    # Whether Newton candidates are projected into the bracket instead of
    # being rejected outright when they step outside.
    clip_newton = False

    def psi_prime(self, vb, xb, g, z):
        tm, tp = self.thetas(z)
        return z * (vb / g - tm) + tp - xb / g


class _KL(_Kernel):
    newton_init = "lo"

    def value(self, u, x):
        u = np.asarray(u, dtype=float)
        x = np.asarray(x, dtype=float)
        interior = (u > 0) & (x > 0)
        axis = (u == 0) & (x >= 0)
        with np.errstate(all="ignore"):
            v = xlogy(u, u) - xlogy(u, x) + x - u
        out = np.full(np.broadcast(u, x).shape, np.inf)
        out = np.where(interior, v, out)
        out = np.where(axis, x, out)
        return out

    def thetas(self, z):
        with np.errstate(all="ignore"):
            return -np.log(z), 1.0 - 1.0 / z

    def chi_minus(self, vb, g):
        with np.errstate(over="ignore"):
            return np.exp(-vb / g)

    def chi_plus(self, xb, g):
        with np.errstate(all="ignore"):
            return np.where(xb < g, 1.0 / (1.0 - xb / g), np.inf)

    def branch(self, vb, xb, g):
        # exp(vb/g) > 1 - xb/g, compared in log domain when the right side
        # is positive.
        with np.errstate(all="ignore"):
            rhs = np.log1p(-xb / g)
        return np.where(xb >= g, True, _strictly_less(rhs, vb / g))

    def psi_second(self, vb, xb, g, z):
        return 1.0 + np.log(z) + vb / g + 1.0 / (z * z)

    def null_value(self, vb, xb, g):
        zero = np.zeros(np.broadcast(vb, xb).shape)
        return zero, zero.copy()

    def conjugate(self, zs):
        with np.errstate(over="ignore"):
            return np.exp(zs) - 1.0


class _Jeffreys(_Kernel):
    clip_newton = True

    def value(self, u, x):
        u = np.asarray(u, dtype=float)
        x = np.asarray(x, dtype=float)
        interior = (u > 0) & (x > 0)
        origin = (u == 0) & (x == 0)
        with np.errstate(all="ignore"):
            v = (u - x) * (np.log(np.where(interior, u, 1.0)) - np.log(np.where(interior, x, 1.0)))
        out = np.full(np.broadcast(u, x).shape, np.inf)
        out = np.where(interior, v, out)
        out = np.where(origin, 0.0, out)
        return out

    def thetas(self, z):
        with np.errstate(all="ignore"):
            lz = np.log(z)
            return -lz - z + 1.0, lz - 1.0 / z + 1.0

    def chi_minus(self, vb, g):
        return lambert_w_of_exp(1.0 - vb / g)

    def chi_plus(self, xb, g):
        with np.errstate(all="ignore"):
            w = lambert_w_of_exp(1.0 - xb / g)
            return np.where(w > 0, 1.0 / np.where(w > 0, w, 1.0), np.inf)

    def branch(self, vb, xb, g):
        # W(e^{1-vb/g}) * W(e^{1-xb/g}) < 1, i.e. the sum of the log factors
        # is negative; ln W(e^tau) = tau - W(e^tau) exactly.
        s = log_lambert_w_of_exp(1.0 - vb / g) + log_lambert_w_of_exp(1.0 - xb / g)
        return _strictly_less(s, np.zeros_like(s))

    def psi_second(self, vb, xb, g, z):
        return np.log(z) + vb / g + 2.0 * z + 1.0 / z + 1.0 / (z * z)

    def null_value(self, vb, xb, g):
        zero = np.zeros(np.broadcast(vb, xb).shape)
        return zero, zero.copy()

    def conjugate(self, zs):
        w = lambert_w_of_exp(1.0 - np.asarray(zs, dtype=float))
        with np.errstate(divide="ignore"):
            return w + 1.0 / w + zs - 2.0


class _Hellinger(_Kernel):
    def value(self, u, x):
        u = np.asarray(u, dtype=float)
        x = np.asarray(x, dtype=float)
        ok = (u >= 0) & (x >= 0)
        with np.errstate(invalid="ignore"):
            d = np.sqrt(np.where(ok, u, 0.0)) - np.sqrt(np.where(ok, x, 0.0))
        return np.where(ok, d * d, np.inf)

    def thetas(self, z):
        with np.errstate(all="ignore"):
            r = np.sqrt(z)
            return 1.0 - r, 1.0 - 1.0 / r

    def chi_minus(self, vb, g):
        t = 1.0 - vb / g
        return np.where(t > 0, t * t, 0.0)

    def chi_plus(self, xb, g):
        with np.errstate(all="ignore"):
            t = 1.0 - xb / g
            return np.where(t > 0, 1.0 / (t * t), np.inf)

    def branch(self, vb, xb, g):
        with np.errstate(over="ignore"):
            prod = (1.0 - vb / g) * (1.0 - xb / g)
        return np.where(vb >= g, True, _strictly_less(prod, np.ones_like(prod)))

    def psi_second(self, vb, xb, g, z):
        r = np.sqrt(z)
        return vb / g - 1.0 + 1.5 * r + 0.5 / (r * z)

    def null_value(self, vb, xb, g):
        zero = np.zeros(np.broadcast(vb, xb).shape)
        return zero, zero.copy()

    def conjugate(self, zs):
        zs = np.asarray(zs, dtype=float)
        with np.errstate(all="ignore"):
            v = zs / (1.0 - zs)
        return np.where(zs < 1.0, v, np.inf)


class _ChiSquare(_Kernel):
    def value(self, u, x):
        u = np.asarray(u, dtype=float)
        x = np.asarray(x, dtype=float)
        interior = (u >= 0) & (x > 0)
        origin = (u == 0) & (x == 0)
        with np.errstate(all="ignore"):
            d = u - x
            v = d * d / np.where(interior, x, 1.0)
        out = np.full(np.broadcast(u, x).shape, np.inf)
        out = np.where(interior, v, out)
        out = np.where(origin, 0.0, out)
        return out

    def thetas(self, z):
        with np.errstate(all="ignore"):
            return 2.0 * (1.0 / z - 1.0), 1.0 - 1.0 / (z * z)

    def chi_minus(self, vb, g):
        with np.errstate(all="ignore"):
            return np.where(vb > -2.0 * g, 2.0 / (2.0 + vb / g), np.inf)

    def chi_plus(self, xb, g):
        with np.errstate(all="ignore"):
            return np.where(xb < g, (1.0 - xb / g) ** -0.5, np.inf)

    def branch(self, vb, xb, g):
        with np.errstate(over="ignore"):
            thresh = -(vb + vb * vb / (4.0 * g))
        return _strictly_less(-vb / g, np.full_like(np.asarray(vb, dtype=float), 2.0)) & _strictly_less(
            thresh, xb
        )

    def psi_second(self, vb, xb, g, z):
        return 2.0 + vb / g + 2.0 / (z * z * z)

    def null_value(self, vb, xb, g):
        zero = np.zeros(np.broadcast(vb, xb).shape)
        return zero, np.maximum(np.broadcast_to(np.asarray(xb, dtype=float) - g, zero.shape), 0.0)

    def conjugate(self, zs):
        zs = np.asarray(zs, dtype=float)
        return np.where(zs >= -2.0, zs * (zs + 4.0) / 4.0, -1.0)


class _Renyi(_Kernel):
    def __init__(self, alpha):
        self.alpha = float(alpha)

    def value(self, u, x):
        a = self.alpha
        u = np.asarray(u, dtype=float)
        x = np.asarray(x, dtype=float)
        interior = (u >= 0) & (x > 0)
        origin = (u == 0) & (x == 0)
        with np.errstate(all="ignore"):
            v = np.where(interior, u, 0.0) ** a * np.where(interior, x, 1.0) ** (1.0 - a)
        out = np.full(np.broadcast(u, x).shape, np.inf)
        out = np.where(interior, v, out)
        out = np.where(origin, 0.0, out)
        return out

    def thetas(self, z):
        a = self.alpha
        with np.errstate(all="ignore"):
            return a * z ** (1.0 - a), (1.0 - a) * z**-a

    def chi_minus(self, vb, g):
        a = self.alpha
        with np.errstate(all="ignore"):
            return np.where(vb > 0, (g * a / np.where(vb > 0, vb, 1.0)) ** (1.0 / (a - 1.0)), np.inf)

    def chi_plus(self, xb, g):
        a = self.alpha
        with np.errstate(all="ignore"):
            neg = xb < 0
            return np.where(neg, (g * (a - 1.0) / np.where(neg, -xb, 1.0)) ** (1.0 / a), np.inf)

    def branch(self, vb, xb, g):
        a = self.alpha
        vb = np.asarray(vb, dtype=float)
        xb = np.asarray(xb, dtype=float)
        pos_u = _strictly_less(np.zeros_like(vb), vb)
        # For xb < 0 compare in log domain:
        # log(g)/(a-1) + log(-xb/(a-1)) < a/(a-1) * log(vb/a).
        with np.errstate(all="ignore"):
            lhs = np.log(g) / (a - 1.0) + np.log(np.where(xb < 0, -xb, 1.0) / (a - 1.0))
            rhs = a / (a - 1.0) * np.log(np.where(vb > 0, vb, 1.0) / a)
        return pos_u & np.where(xb >= 0, True, _strictly_less(lhs, rhs))

    def psi_second(self, vb, xb, g, z):
        a = self.alpha
        return vb / g + a * (a - 2.0) * z ** (1.0 - a) + a * (a - 1.0) * z ** (-1.0 - a)

    def null_value(self, vb, xb, g):
        zero = np.zeros(np.broadcast(vb, xb).shape)
        return zero, np.maximum(np.broadcast_to(np.asarray(xb, dtype=float), zero.shape), 0.0)

    def conjugate(self, zs):
        a = self.alpha
        zs = np.asarray(zs, dtype=float)
        with np.errstate(all="ignore"):
            v = (a - 1.0) * (np.where(zs >= 0, zs, 0.0) / a) ** (a / (a - 1.0))
        return np.where(zs >= 0, v, 0.0)


class _IAlpha(_Kernel):
    def __init__(self, alpha):
        self.alpha = float(alpha)

    def value(self, u, x):
        a = self.alpha
        u = np.asarray(u, dtype=float)
        x = np.asarray(x, dtype=float)
        ok = (u >= 0) & (x >= 0)
        with np.errstate(all="ignore"):
            geo = np.where(ok, u, 0.0) ** a * np.where(ok, x, 0.0) ** (1.0 - a)
        return np.where(ok, a * u + (1.0 - a) * x - geo, np.inf)

    def thetas(self, z):
        a = self.alpha
        with np.errstate(all="ignore"):
            return a * (1.0 - z ** (1.0 - a)), (1.0 - a) * (1.0 - z**-a)

    def chi_minus(self, vb, g):
        a = self.alpha
        t = 1.0 - vb / (g * a)
        with np.errstate(all="ignore"):
            return np.where(t > 0, np.where(t > 0, t, 1.0) ** (1.0 / (1.0 - a)), 0.0)

    def chi_plus(self, xb, g):
        a = self.alpha
        t = 1.0 - xb / (g * (1.0 - a))
        with np.errstate(all="ignore"):
            return np.where(t > 0, np.where(t > 0, t, 1.0) ** (-1.0 / a), np.inf)

    def branch(self, vb, xb, g):
        a = self.alpha
        vb = np.asarray(vb, dtype=float)
        xb = np.asarray(xb, dtype=float)
        t1 = 1.0 - vb / (g * a)
        lhs = 1.0 - xb / (g * (1.0 - a))
        with np.errstate(all="ignore"):
            log_cmp = _strictly_less(
                np.log(np.where(lhs > 0, lhs, 1.0)),
                -(a / (1.0 - a)) * np.log(np.where(t1 > 0, t1, 1.0)),
            )
        return np.where(t1 <= 0, True, np.where(lhs <= 0, True, log_cmp))

    def psi_second(self, vb, xb, g, z):
        a = self.alpha
        return vb / g - a + a * (2.0 - a) * z ** (1.0 - a) + a * (1.0 - a) * z ** (-1.0 - a)

    def null_value(self, vb, xb, g):
        zero = np.zeros(np.broadcast(vb, xb).shape)
        return zero, zero.copy()

    def conjugate(self, zs):
        a = self.alpha
        zs = np.asarray(zs, dtype=float)
        with np.errstate(all="ignore"):
            base = 1.0 - np.where(zs <= a, zs, a) / a
            v = (1.0 - a) * (base ** (a / (a - 1.0)) - 1.0)
        return np.where(zs <= a, v, np.inf)


@functools.lru_cache(maxsize=None)
def _kernel_cached(kind, alpha):
    if kind == "kl":
        return _KL()
    if kind == "jeffreys":
        return _Jeffreys()
    if kind == "hellinger":
        return _Hellinger()
    if kind == "chi_square":
        return _ChiSquare()
    if kind == "renyi":
        return _Renyi(alpha)
    return _IAlpha(alpha)


def kernel(spec):
    """Internal closed-form bundle for ``spec`` (kappa handled by callers)."""
    return _kernel_cached(spec.kind, spec.alpha)


def shifted_inputs(spec, vb, xb, gamma):
    """Translate inputs so the canonical prox realizes the kappa variant.

    Adding a linear term to the integrand shifts the prox argument; the
    shifts below reduce the ``kappa``-weighted KL and I_alpha variants to
    their canonical (``kappa = 1``) proximity operators.
    """
    if spec.kappa == 1.0:
        return vb, xb
    k = spec.kappa
    if spec.kind == "kl":
        return vb + gamma * (k - 1.0), xb - gamma * (k - 1.0)
    if spec.kind == "i_alpha":
        a = spec.alpha
        return vb + gamma * (1.0 - k) * a, xb + gamma * (1.0 - k) * (1.0 - a)
    raise ValueError(f"kappa != 1 is not defined for {spec.kind}")


def perspective_value(spec, upsilon, xi):
    """Extended-real value of the divergence integrand at ``(upsilon, xi)``.

    Total on the plane: returns ``+inf`` outside the domain, uses the
    ``0 * log(0) = 0`` convention, and on the ``xi = 0`` boundary takes the
    recession value.  Accepts scalars or ndarrays.
    """
    ker = kernel(spec)
    out = ker.value(upsilon, xi)
    if spec.kappa != 1.0:
        u = np.asarray(upsilon, dtype=float)
        x = np.asarray(xi, dtype=float)
        if spec.kind == "kl":
            shift = (spec.kappa - 1.0) * (x - u)
        else:
            a = spec.alpha
            shift = (spec.kappa - 1.0) * (a * u + (1.0 - a) * x)
        out = np.where(np.isfinite(out), out + shift, out)
    if np.ndim(upsilon) == 0 and np.ndim(xi) == 0:
        return float(out)
    return out


def theta_pair(spec, zeta):
    """The pair ``(theta_minus(zeta), theta_plus(zeta))`` for ``zeta > 0``.

    These are the two maps whose values at the inner root assemble the prox
    output; ``theta_minus`` is decreasing and ``theta_plus`` increasing.
    """
    z = np.asarray(zeta, dtype=float)
    if np.any(z <= 0):
        raise ValueError("zeta must be strictly positive")
    tm, tp = kernel(spec).thetas(z)
    if np.ndim(zeta) == 0:
        return float(tm), float(tp)
    return tm, tp


def conjugate_value(spec, zeta_star):
    """Fenchel conjugate of the divergence kernel restricted to ``[0, inf)``.

    Extended-real and total; the ``kappa`` variants shift the argument and
    subtract the matching constant.
    """
    ker = kernel(spec)
    zs = np.asarray(zeta_star, dtype=float)
    if spec.kappa != 1.0:
        k = spec.kappa
        if spec.kind == "kl":
            out = ker.conjugate(zs + (k - 1.0)) - (k - 1.0)
        else:
            a = spec.alpha
            out = ker.conjugate(zs - (k - 1.0) * a) - (k - 1.0) * (1.0 - a)
    else:
        out = ker.conjugate(zs)
    if np.ndim(zeta_star) == 0:
        return float(out)
    return out
