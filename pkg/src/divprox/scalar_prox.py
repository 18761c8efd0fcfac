"""Joint two-argument proximity operators, one coordinate pair at a time.

The prox of every supported divergence reduces to a one-dimensional root
find: locate the unique zero of the reduced derivative ``psi'`` inside the
bracket ``(chi_minus, chi_plus)``, then assemble the output pair from the
``theta`` maps evaluated at the root.  A single safeguarded Newton iteration
(bracketed, with bisection fallback) serves all six divergences; the
internals are vectorized so that batches of coordinate pairs solve in
lockstep.
"""

from dataclasses import dataclass

import numpy as np

from .divergences import DivergenceSpec, kernel, shifted_inputs

__all__ = [
    "ScalarProxQuery",
    "ProxPair",
    "InnerSolveTrace",
    "SolverFailureError",
    "positive_branch",
    "chi_bounds",
    "psi_derivatives",
    "solve_inner",
    "prox_divergence",
    "prox_pairs",
    "prox_difference",
]

# Root-finder defaults: |psi'| <= max(ATOL, RTOL * |psi'' * zeta|), at most
# MAX_INNER_ITERATIONS Newton/bisection steps, geometric bracket expansion by
# EXPAND when chi_plus is infinite, and iterates clamped to CLAMP.
ATOL = 1e-12
RTOL = 1e-12
MAX_INNER_ITERATIONS = 200
EXPAND = 4.0
CLAMP = (1e-300, 1e300)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ScalarProxQuery:
    """One prox evaluation point: the input pair and the scale ``gamma``."""

    upsilon_bar: float
    xi_bar: float
    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError("gamma must be strictly positive and finite")
        if not (np.isfinite(self.upsilon_bar) and np.isfinite(self.xi_bar)):
            raise ValueError("prox inputs must be finite")


@dataclass(frozen=True)
class ProxPair:
    """Output of a two-argument prox; lies in the divergence domain."""

    upsilon: float
    xi: float

    def as_tuple(self):
        return (self.upsilon, self.xi)


@dataclass(frozen=True)
class InnerSolveTrace:
    """Certificate of one inner root find."""

    zeta_hat: float
    chi_minus: float
    chi_plus: float
    iterations: int
    residual: float


class SolverFailureError(RuntimeError):
    """Inner iteration cap exceeded; carries the best trace found."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


def positive_branch(spec, query):
    """Whether the prox of ``query`` lands strictly inside the open quadrant.

    Exact ties (within 1e-14 relative) resolve to the boundary branch.
    """
    vb, xb = shifted_inputs(spec, query.upsilon_bar, query.xi_bar, query.gamma)
    return bool(kernel(spec).branch(np.asarray(vb, dtype=float), np.asarray(xb, dtype=float), query.gamma))


def chi_bounds(spec, query):
    """The bracket ``(chi_minus, chi_plus)`` for the inner root, possibly infinite."""
    vb, xb = shifted_inputs(spec, query.upsilon_bar, query.xi_bar, query.gamma)
    ker = kernel(spec)
    cm = float(ker.chi_minus(np.asarray(vb, dtype=float), query.gamma))
    cp = float(ker.chi_plus(np.asarray(xb, dtype=float), query.gamma))
    return cm, cp


def psi_derivatives(spec, query, zeta):
    """First and second derivative of the reduced objective at ``zeta > 0``."""
    z = np.asarray(zeta, dtype=float)
    if np.any(z <= 0):
        raise ValueError("zeta must be strictly positive")
    vb, xb = shifted_inputs(spec, query.upsilon_bar, query.xi_bar, query.gamma)
    ker = kernel(spec)
    fp = ker.psi_prime(vb, xb, query.gamma, z)
    fpp = ker.psi_second(vb, xb, query.gamma, z)
    if np.ndim(zeta) == 0:
        return float(fp), float(fpp)
    return fp, fpp


def _solve_inner_arrays(spec, vb, xb, gamma, history=None):
    """Vectorized bracketed Newton for the inner root on branch-true inputs.

    Returns ``(zeta_hat, iterations, residual, converged)`` arrays.  When
    ``history`` is a list (scalar diagnostics), every iterate of the single
    lane is appended to it.
    """
    ker = kernel(spec)
    n = vb.shape[0]
    with np.errstate(all="ignore"):
        cm = ker.chi_minus(vb, gamma)
        cp = ker.chi_plus(xb, gamma)
        # The clamp window for iterates; brackets entirely outside it are
        # saturated and resolved at the nearest representable endpoint.
        sat_lo = cm >= CLAMP[1]
        sat_hi = cp <= CLAMP[0]
        lo = np.clip(cm, CLAMP[0], CLAMP[1])
        hi = np.where(np.isfinite(cp), np.minimum(cp, CLAMP[1]), np.nan)

        # Expand upward where the bracket is one-sided, starting from
        # max(2*chi_minus, 1) and growing geometrically until psi' > 0.
        open_top = ~np.isfinite(cp)
        if np.any(open_top):
            t = np.where(open_top, np.maximum(2.0 * lo, 1.0), 1.0)
            for _ in range(600):
                f = ker.psi_prime(vb, xb, gamma, t)
                grow = open_top & (f < 0.0) & (t < CLAMP[1])
                if not np.any(grow):
                    break
                lo = np.where(grow, np.maximum(lo, t), lo)
                t = np.where(grow, np.minimum(t * EXPAND, CLAMP[1]), t)
            hi = np.where(open_top, t, hi)
        hi = np.maximum(hi, lo * (1.0 + 4.0 * _EPS))

        inner_lo = lo * (1.0 + 2.0**-48)
        inner_hi = hi * (1.0 - 2.0**-48)
        f_lo = ker.psi_prime(vb, xb, gamma, inner_lo)
        f_hi = ker.psi_prime(vb, xb, gamma, inner_hi)

        wide = hi > 16.0 * lo
        mid0 = np.where(wide, np.sqrt(lo) * np.sqrt(hi), 0.5 * (lo + hi))
        if ker.newton_init == "lo":
            z = inner_lo.copy()
        else:
            z = mid0.copy()
        # Degenerate endpoints: the root sits at (or beyond) the clamped
        # bracket, so return the nudged endpoint directly.
        saturated = sat_lo | sat_hi | (~np.isfinite(cp) & (f_hi < 0.0) & (hi >= CLAMP[1]))
        at_lo = f_lo >= 0.0
        at_hi = f_hi <= 0.0
        z = np.where(at_lo, inner_lo, np.where(at_hi, inner_hi, z))
        z = np.where(sat_lo, CLAMP[1], np.where(sat_hi, CLAMP[0], z))
        done = at_lo | at_hi | saturated

        iters = np.zeros(n, dtype=int)
        for _ in range(MAX_INNER_ITERATIONS):
            if history is not None:
                history.append(float(z[0]))
            fp = ker.psi_prime(vb, xb, gamma, z)
            fpp = ker.psi_second(vb, xb, gamma, z)
            scale = np.abs(fpp * z)
            tol = np.where(np.isfinite(scale), ATOL + RTOL * scale, ATOL)
            done = done | (np.isfinite(fp) & (np.abs(fp) <= tol)) | (hi - lo <= 8.0 * _EPS * hi)
            active = ~done
            if not np.any(active):
                break
            lo = np.where(active & (fp < 0.0), z, lo)
            hi = np.where(active & (fp > 0.0), z, hi)
            newton = z - fp / fpp
            if ker.clip_newton:
                newton = np.clip(newton, lo * (1.0 + 2.0**-44), hi * (1.0 - 2.0**-44))
            inside = np.isfinite(newton) & (newton > lo) & (newton < hi) & (fpp > 0.0)
            f_cand = ker.psi_prime(vb, xb, gamma, np.where(inside, newton, z))
            # A Newton candidate must reduce |psi'| and make real progress:
            # either shrink the bracket's log-width by a quarter or cut the
            # residual by two orders of magnitude (endgame).  Geometric creep
            # away from a singular bracket end fails both and falls back to
            # bisection, which closes the bracket exponentially.
            log_lo, log_hi = np.log(lo), np.log(hi)
            cand_lo = np.where(f_cand < 0.0, newton, lo)
            cand_hi = np.where(f_cand > 0.0, newton, hi)
            width_ok = np.log(cand_hi) - np.log(cand_lo) <= 0.75 * (log_hi - log_lo)
            drastic = np.abs(f_cand) <= 1e-2 * np.abs(fp)
            accept = (
                inside
                & np.isfinite(f_cand)
                & (np.abs(f_cand) < 0.5 * np.abs(fp))
                & (width_ok | drastic)
            )
            wide = hi > 16.0 * lo
            mid = np.where(wide, np.sqrt(lo) * np.sqrt(hi), 0.5 * (lo + hi))
            z = np.where(active, np.where(accept, newton, mid), z)
            iters = iters + active

        resid = np.abs(ker.psi_prime(vb, xb, gamma, z))
        fpp = ker.psi_second(vb, xb, gamma, z)
        scale = np.abs(fpp * z)
        tol = np.where(np.isfinite(scale), ATOL + RTOL * scale, ATOL)
        converged = (resid <= tol) | (hi - lo <= 8.0 * _EPS * hi) | saturated
    return z, iters, resid, converged


def solve_inner(spec, query, history=None):
    """Solve the inner one-dimensional problem for a positive-branch query.

    Parameters
    ----------
    spec : DivergenceSpec
    query : ScalarProxQuery
        Must satisfy :func:`positive_branch`.
    history : list, optional
        If given, receives every iterate (diagnostic).

    Returns
    -------
    InnerSolveTrace

    Raises
    ------
    ValueError
        If the query is not on the positive branch.
    SolverFailureError
        If the iteration cap is exceeded without meeting the tolerance.
    """
    if not positive_branch(spec, query):
        raise ValueError("solve_inner requires a positive-branch query")
    vb, xb = shifted_inputs(spec, query.upsilon_bar, query.xi_bar, query.gamma)
    vb = np.asarray([vb], dtype=float)
    xb = np.asarray([xb], dtype=float)
    z, iters, resid, converged = _solve_inner_arrays(spec, vb, xb, query.gamma, history=history)
    cm, cp = chi_bounds(spec, query)
    trace = InnerSolveTrace(
        zeta_hat=float(z[0]),
        chi_minus=cm,
        chi_plus=cp,
        iterations=int(iters[0]),
        residual=float(resid[0]),
    )
    if not bool(converged[0]):
        raise SolverFailureError("inner Newton did not reach tolerance", trace)
    return trace


def _repair_domain(kind, u, x):
    """Clamp rounding spill-over back into the divergence domain."""
    u = np.maximum(u, 0.0)
    x = np.maximum(x, 0.0)
    if kind in ("kl", "chi_square", "renyi", "jeffreys"):
        u = np.where(x == 0.0, 0.0, u)
    if kind == "jeffreys":
        x = np.where(u == 0.0, 0.0, x)
    return u, x


def prox_pairs(spec, upsilon_bar, xi_bar, gamma):
    """Vectorized two-argument prox; ndarray in, ndarray out.

    Both branch dispatch and the inner Newton run in lockstep over all
    coordinate pairs.  Scalars are accepted and returned as floats.
    """
    scalar = np.ndim(upsilon_bar) == 0 and np.ndim(xi_bar) == 0
    vb0 = np.atleast_1d(np.asarray(upsilon_bar, dtype=float))
    xb0 = np.atleast_1d(np.asarray(xi_bar, dtype=float))
    if vb0.shape != xb0.shape:
        raise ValueError("input pair components must have matching shapes")
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValueError("gamma must be strictly positive and finite")
    vb, xb = shifted_inputs(spec, vb0, xb0, gamma)
    ker = kernel(spec)
    mask = ker.branch(vb, xb, gamma)
    u_out, x_out = ker.null_value(vb, xb, gamma)
    u_out = np.array(u_out, dtype=float)
    x_out = np.array(x_out, dtype=float)
    if np.any(mask):
        z, iters, resid, converged = _solve_inner_arrays(spec, vb[mask], xb[mask], gamma)
        if not np.all(converged):
            bad = int(np.flatnonzero(~converged)[0])
            trace = InnerSolveTrace(
                zeta_hat=float(z[bad]),
                chi_minus=float(ker.chi_minus(vb[mask][bad], gamma)),
                chi_plus=float(ker.chi_plus(xb[mask][bad], gamma)),
                iterations=int(iters[bad]),
                residual=float(resid[bad]),
            )
            raise SolverFailureError("inner Newton did not reach tolerance", trace)
        with np.errstate(all="ignore"):
            tm, tp = ker.thetas(z)
        u, x = _repair_domain(spec.kind, vb[mask] - gamma * tm, xb[mask] - gamma * tp)
        u_out[mask] = u
        x_out[mask] = x
    if scalar:
        return float(u_out[0]), float(x_out[0])
    return u_out, x_out


def prox_divergence(spec, query):
    """Two-argument prox of a scaled divergence integrand at one point.

    Returns the unique minimizer of ``gamma * Phi + half squared distance to
    the query pair``; on the boundary branch this is the closed-form
    boundary value of the corresponding divergence.
    """
    u, x = prox_pairs(spec, query.upsilon_bar, query.xi_bar, query.gamma)
    return ProxPair(u, x)


def prox_difference(prox_phi, nu_bar, xi_bar):
    """Prox of ``phi(nu - xi)`` restricted to the nonnegative quadrant.

    ``phi`` must be even, convex, and differentiable away from 0; it is
    supplied through ``prox_phi(point, weight)`` evaluating the prox of
    ``weight * phi`` (weights 1 and 2 are used).

    Returns a nonnegative pair.
    """
    s = nu_bar + xi_bar
    pi1 = prox_phi(nu_bar - xi_bar, 2.0)
    if abs(pi1) < s:
        return ProxPair(0.5 * (s + pi1), 0.5 * (s - pi1))
    pi2 = prox_phi(xi_bar, 1.0)
    if pi2 > 0 and pi2 >= s:
        return ProxPair(0.0, pi2)
    pi3 = prox_phi(nu_bar, 1.0)
    if pi3 > 0 and pi3 >= s:
        return ProxPair(pi3, 0.0)
    return ProxPair(0.0, 0.0)
