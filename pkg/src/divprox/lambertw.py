"""Principal-branch Lambert W function.

Two entry points are provided:

* :func:`lambert_w` evaluates ``W(x)`` for ``x >= -1/e``.
* :func:`lambert_w_of_exp` evaluates ``W(exp(tau))`` directly from ``tau``,
  i.e. it solves ``w + ln w = tau`` without ever forming ``exp(tau)``.  This
  is the overflow-safe form needed whenever the argument of W is an
  exponential whose exponent may be large in magnitude.

Both functions accept scalars or ndarrays and are elementwise.
"""

import numpy as np

__all__ = ["lambert_w", "lambert_w_of_exp"]

_NEG_INV_E = -0.36787944117144233
# Hoorfar-Hassani coefficient e/(e-1) bounding W(e^tau) from above for tau >= 1.
_HOORFAR_HI = 1.5819767068693265


def _halley_we(w, x, active):
    """One Halley step for f(w) = w*exp(w) - x, applied where ``active``."""
    with np.errstate(all="ignore"):
        ew = np.exp(w)
        f = w * ew - x
        wp1 = np.where(np.abs(w + 1.0) < 1e-300, 1e-300, w + 1.0)
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        bad = (denom == 0.0) | ~np.isfinite(denom)
        step = np.where(active & ~bad, f / np.where(bad, 1.0, denom), 0.0)
    return w - step, step


def lambert_w(x):
    """Principal branch W0 of the Lambert W function.

    Solves ``w * exp(w) = x`` for the branch with ``w >= -1``.

    Parameters
    ----------
    x : float or ndarray
        Argument(s), each ``>= -1/e``.

    Returns
    -------
    float or ndarray
        ``W0(x)``, accurate to about 1e-14 relative error.

    Raises
    ------
    ValueError
        If any argument lies below ``-1/e``.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < _NEG_INV_E - 1e-15) or np.any(np.isnan(x_arr)):
        raise ValueError("lambert_w requires x >= -1/e")
    x_arr = np.maximum(x_arr, _NEG_INV_E)

    w = np.empty_like(x_arr)

    # Branch-point series in p = sqrt(2(e*x + 1)).
    near = x_arr < -0.25
    if np.any(near):
        with np.errstate(all="ignore"):
            p = np.sqrt(np.maximum(2.0 * (np.e * np.where(near, x_arr, 0.0) + 1.0), 0.0))
            w_near = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))))
        w = np.where(near, w_near, w)

    # Asymptotic expansion for large arguments, log(1+x)-style start otherwise.
    big = x_arr > np.e
    if np.any(big):
        with np.errstate(invalid="ignore", divide="ignore"):
            l1 = np.log(np.where(big, x_arr, np.e))
            l2 = np.log(l1)
        w = np.where(big, l1 - l2 + l2 / l1, w)
    mid = ~near & ~big
    if np.any(mid):
        w = np.where(mid, np.log1p(np.maximum(x_arr, _NEG_INV_E)) * 0.7 + 1e-30, w)

    active = np.isfinite(x_arr) & (x_arr > _NEG_INV_E)
    for _ in range(80):
        if not np.any(active):
            break
        w, step = _halley_we(w, x_arr, active)
        active = active & (np.abs(step) > 1e-16 * (2.0 + np.abs(w)))
    w = np.where(np.isinf(x_arr), np.inf, w)
    w = np.where(x_arr == _NEG_INV_E, -1.0, w)
    w = np.maximum(w, -1.0)

    if np.isscalar(x) or np.ndim(x) == 0:
        return float(w)
    return w


def lambert_w_of_exp(tau):
    """Evaluate ``W(exp(tau))`` without forming ``exp(tau)``.

    Solves ``w + ln(w) = tau`` on ``w > 0``.  For ``tau >= 1`` the Newton
    iteration is started from the midpoint of the two-sided bound

        ``tau - ln(tau) + ln(tau)/(2 tau)  <=  W(e^tau)  <=
        tau - ln(tau) + (e/(e-1)) ln(tau)/tau``

    (tight, with equality only at ``tau = 1``), which keeps every
    intermediate quantity at the scale of ``tau`` itself.  For very negative
    ``tau`` the result underflows gracefully to ``exp(tau)``.

    Parameters
    ----------
    tau : float or ndarray
        Any finite value(s); ``+inf`` maps to ``+inf`` and ``-inf`` to 0.

    Returns
    -------
    float or ndarray
        ``W(exp(tau))`` to about 1e-14 relative accuracy.
    """
    t = np.asarray(tau, dtype=float)
    w = np.empty_like(t)

    hi_side = t >= 1.0
    if np.any(hi_side):
        ts = np.where(hi_side, t, 2.0)
        lt = np.log(ts)
        lo = ts - lt + 0.5 * lt / ts
        hi = ts - lt + _HOORFAR_HI * lt / ts
        w = np.where(hi_side, 0.5 * (lo + hi), w)
    if np.any(~hi_side):
        # w0 = exp(tau - exp(tau)) lies below the root; Newton then increases
        # monotonically (w + ln w - tau is concave).
        ts = np.where(~hi_side, t, 0.0)
        with np.errstate(over="ignore", under="ignore"):
            w0 = np.exp(ts - np.exp(ts))
        w = np.where(~hi_side, np.maximum(w0, 5e-324), w)

    # Below tau ~ -700 the root equals exp(tau) to far beyond double precision
    # (the correction factor is 1 - exp(tau) + O(exp(2 tau))).
    deep = t < -700.0
    active = np.isfinite(t) & ~deep & (w > 0.0) & np.isfinite(w)
    for _ in range(60):
        if not np.any(active):
            break
        wa = np.where(active, w, 1.0)
        g = wa + np.log(wa) - np.where(active, t, 1.0)
        step = g * wa / (wa + 1.0)
        w = np.where(active, np.maximum(wa - step, 0.25 * wa), w)
        active = active & (np.abs(step) > 1e-16 * np.abs(wa))

    with np.errstate(over="ignore", under="ignore"):
        if np.any(deep):
            w = np.where(deep, np.exp(np.where(deep, t, 0.0)), w)
        w = np.where(np.isfinite(t), w, np.where(t > 0, np.inf, 0.0))

    if np.isscalar(tau) or np.ndim(tau) == 0:
        return float(w)
    return w


def log_lambert_w_of_exp(tau):
    """Return ``ln W(exp(tau))`` using the exact identity ``ln w = tau - w``.

    Immune to underflow of ``W(exp(tau))`` itself, which makes it the right
    building block for products of Lambert factors compared in log domain.
    """
    t = np.asarray(tau, dtype=float)
    out = t - lambert_w_of_exp(t)
    if np.isscalar(tau) or np.ndim(tau) == 0:
        return float(out)
    return out
