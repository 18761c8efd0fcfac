"""Brute-force reference computations used to cross-check the closed forms.

Nothing in here is needed at run time; the module exists so that tests can
compare fast implementations against slow, structurally independent ones:

* :func:`grid_prox_oracle` minimizes an arbitrary extended-real objective of
  two variables by exhaustive coarse search followed by derivative-free
  refinement: alternating golden-section coordinate sweeps, line searches
  along the crawl direction and the diagonal, and (on stall) a fan of
  angular probes that can leave boundary corners where the objective is not
  differentiable.
* :func:`finite_difference` is a centered difference quotient.
* :func:`cardano_cubic` returns the real roots of a cubic in closed form.

Objectives must be vectorized: called with ndarray coordinates, returning an
ndarray of values (``+inf`` allowed).
"""

import numpy as np

__all__ = ["grid_prox_oracle", "grid_prox_oracle_batch", "finite_difference", "cardano_cubic"]

_GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)


def _golden_batch(f, a, b, iters=60):
    """Vectorized golden-section minimization of f over [a, b] per lane.

    One objective evaluation per iteration; the retained interior point's
    value is carried over, exactly as in the scalar textbook scheme.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1 = f(x1)
    f2 = f(x2)
    for _ in range(iters):
        left = f1 < f2
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        new_x1 = b - _GOLDEN * (b - a)
        new_x2 = a + _GOLDEN * (b - a)
        probe = np.where(left, new_x1, new_x2)
        fp = f(probe)
        x1, x2, f1, f2 = (
            np.where(left, new_x1, x2),
            np.where(left, x1, new_x2),
            np.where(left, fp, f2),
            np.where(left, f1, fp),
        )
    mid = 0.5 * (a + b)
    return mid, f(mid)


def _coarse_grid_argmin(objective, lo, hi, step, max_block=2_000_000):
    """Exhaustive scan of one query's box on a regular grid."""
    nu = max(int(np.ceil((hi[0] - lo[0]) / step)) + 1, 2)
    nx = max(int(np.ceil((hi[1] - lo[1]) / step)) + 1, 2)
    us = np.linspace(lo[0], hi[0], nu)
    xs = np.linspace(lo[1], hi[1], nx)
    best_val = np.inf
    best = (lo[0], lo[1])
    rows_per_block = max(1, max_block // nx)
    for start in range(0, nu, rows_per_block):
        ub = us[start : start + rows_per_block]
        U, X = np.meshgrid(ub, xs, indexing="ij")
        vals = objective(U, X)
        k = int(np.argmin(vals))
        v = vals.flat[k]
        if v < best_val:
            best_val = v
            best = (U.flat[k], X.flat[k])
    return np.array(best), best_val


class _Refiner:
    """Lockstep derivative-free descent of a batch of 2-D convex objectives.

    ``objective(u, x, lane)`` receives flat coordinate arrays plus the index
    of the lane each entry belongs to, so stages may probe several points per
    lane at once.
    """

    def __init__(self, objective, pts, lo, hi):
        self.f = objective
        self.pts = np.array(pts, dtype=float)
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.lanes = np.arange(self.pts.shape[0])

    def _line_range(self, d):
        """Largest [t_lo, t_hi] keeping pts + t*d inside the box."""
        n = self.pts.shape[0]
        t_lo = np.full(n, -np.inf)
        t_hi = np.full(n, np.inf)
        for c in (0, 1):
            dc = d[:, c]
            with np.errstate(divide="ignore", invalid="ignore"):
                up = (self.hi[:, c] - self.pts[:, c]) / np.where(dc == 0, 1.0, dc)
                down = (self.lo[:, c] - self.pts[:, c]) / np.where(dc == 0, 1.0, dc)
            t_hi = np.minimum(t_hi, np.where(dc > 0, up, np.where(dc < 0, down, np.inf)))
            t_lo = np.maximum(t_lo, np.where(dc > 0, down, np.where(dc < 0, up, -np.inf)))
        dn = np.max(np.abs(d), axis=1)
        t_hi = np.clip(np.where(dn > 0, t_hi, 0.0), 0.0, 1e6)
        t_lo = np.clip(np.where(dn > 0, t_lo, 0.0), -1e6, 0.0)
        return t_lo, t_hi

    def line_search(self, d):
        """Golden search along per-lane direction d; returns move sizes."""
        t_lo, t_hi = self._line_range(d)

        def line_obj(t):
            return self.f(self.pts[:, 0] + t * d[:, 0], self.pts[:, 1] + t * d[:, 1], self.lanes)

        t_opt, f_line = _golden_batch(line_obj, t_lo, t_hi)
        f_here = self.f(self.pts[:, 0], self.pts[:, 1], self.lanes)
        take = f_line < f_here
        move = np.where(take, np.abs(t_opt) * np.max(np.abs(d), axis=1), 0.0)
        self.pts[:, 0] = np.where(take, self.pts[:, 0] + t_opt * d[:, 0], self.pts[:, 0])
        self.pts[:, 1] = np.where(take, self.pts[:, 1] + t_opt * d[:, 1], self.pts[:, 1])
        return move

    def sweep(self):
        """One alternating pass of per-coordinate golden minimization."""
        before = self.pts.copy()
        for c in (0, 1):
            other = self.pts[:, 1 - c]

            def slice_obj(t, _c=c, _other=other):
                if _c == 0:
                    return self.f(t, _other, self.lanes)
                return self.f(_other, t, self.lanes)

            t_opt, _ = _golden_batch(slice_obj, self.lo[:, c], self.hi[:, c])
            self.pts[:, c] = t_opt
        return np.max(np.abs(self.pts - before), axis=1), before

    def angular_probe(self, n_dirs=64):
        """Fan of direction probes; escapes nondifferentiable corner stalls.

        Coordinatewise minimality does not imply joint minimality when the
        objective has kinks along the axes (perspective-type integrands with
        finite recession slopes); a direction fan with a golden radius search
        detects the genuinely descending cone if there is one.
        """
        n = self.pts.shape[0]
        angles = (np.arange(n_dirs) + 0.5) * (0.5 * np.pi / n_dirs)
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
        f_here = self.f(self.pts[:, 0], self.pts[:, 1], self.lanes)

        # Flatten lanes x directions into one big golden run.
        P = np.repeat(self.pts, n_dirs, axis=0)
        H = np.repeat(self.hi, n_dirs, axis=0)
        D = np.tile(dirs, (n, 1))
        lane_of = np.repeat(self.lanes, n_dirs)
        t_hi = np.full(n * n_dirs, np.inf)
        for c in (0, 1):
            dc = D[:, c]
            with np.errstate(divide="ignore", invalid="ignore"):
                up = (H[:, c] - P[:, c]) / np.where(dc == 0, 1.0, dc)
            t_hi = np.minimum(t_hi, np.where(dc > 0, up, np.inf))
        t_hi = np.clip(t_hi, 0.0, 1e6)

        def ray_obj(t):
            return self.f(P[:, 0] + t * D[:, 0], P[:, 1] + t * D[:, 1], lane_of)

        t_opt, f_ray = _golden_batch(ray_obj, np.zeros(n * n_dirs), t_hi)
        f_ray = f_ray.reshape(n, n_dirs)
        t_opt = t_opt.reshape(n, n_dirs)
        k = np.argmin(f_ray, axis=1)
        rows = np.arange(n)
        improved = f_ray[rows, k] < f_here
        tk = np.where(improved, t_opt[rows, k], 0.0)
        self.pts[:, 0] += tk * dirs[k, 0]
        self.pts[:, 1] += tk * dirs[k, 1]
        return np.abs(tk)


def grid_prox_oracle_batch(objective, starts, lo, hi, refine_tol=1e-8, max_rounds=300):
    """Refine a batch of 2-D minimizations in lockstep.

    Parameters
    ----------
    objective : callable
        ``objective(u, x, lane)`` elementwise on same-shape flat arrays;
        ``lane`` maps every entry to the batch lane whose data it must be
        evaluated under (stages may probe several points per lane at once).
    starts : (n, 2) ndarray
        Starting points (typically coarse-grid argmins).
    lo, hi : (n, 2) ndarrays
        Per-lane box bounds.
    refine_tol : float
        Stop once no stage moves any lane by more than this amount.

    Returns
    -------
    (n, 2) ndarray of refined minimizers.
    """
    ref = _Refiner(objective, starts, lo, hi)
    for round_idx in range(max_rounds):
        sweep_move, before = ref.sweep()
        accel_move = ref.line_search(ref.pts - before)
        diag_move = ref.line_search(np.ones_like(ref.pts))
        stalled = (sweep_move < refine_tol) & (accel_move < refine_tol) & (diag_move < refine_tol)
        # The corner probe must not wait for every lane: lanes stalled at a
        # nondifferentiable corner would otherwise sit wrong while others
        # keep crawling.
        if np.all(stalled) or round_idx % 5 == 4:
            ang_move = ref.angular_probe()
            if np.all(stalled & (ang_move < refine_tol)):
                break
    return ref.pts


def grid_prox_oracle(objective, center, box=None, coarse_step=1e-3, refine_tol=1e-8):
    """Globally minimize a two-variable extended-real objective.

    Exhaustive evaluation on a regular coarse grid over the box, then
    derivative-free refinement (coordinate golden sweeps, direction and
    diagonal line searches, angular corner probes) down to ``refine_tol``.
    Deterministic; intended as the slow reference for prox computations.

    Parameters
    ----------
    objective : callable
        Vectorized objective ``objective(u, x)``; may return ``+inf``.
    center : pair of floats
        Used only to size the default box.
    box : ((lo_u, lo_x), (hi_u, hi_x)), optional
        Defaults to ``[0, max(4, 2*||center||)]`` in both coordinates.
    coarse_step : float
        Grid step of the exhaustive stage.
    refine_tol : float
        Refinement stopping threshold.

    Returns
    -------
    (u, x) tuple of floats.
    """
    center = np.asarray(center, dtype=float)
    if box is None:
        top = max(4.0, 2.0 * float(np.linalg.norm(center)))
        lo = np.zeros(2)
        hi = np.full(2, top)
    else:
        lo = np.asarray(box[0], dtype=float)
        hi = np.asarray(box[1], dtype=float)
    start, _ = _coarse_grid_argmin(objective, lo, hi, coarse_step)
    pts = grid_prox_oracle_batch(
        lambda u, x, lane: objective(u, x),
        start[None, :],
        lo[None, :],
        hi[None, :],
        refine_tol=refine_tol,
    )
    return float(pts[0, 0]), float(pts[0, 1])


def finite_difference(f, x, h=None):
    """Centered difference estimate of ``f'(x)``."""
    if h is None:
        h = 1e-6 * max(1.0, abs(x))
    return (f(x + h) - f(x - h)) / (2.0 * h)


def cardano_cubic(coefficients):
    """All real roots of ``a x^3 + b x^2 + c x + d``, sorted ascending.

    Closed-form (trigonometric/Cardano) evaluation; a degenerate leading
    coefficient is rejected.
    """
    a, b, c, d = (float(v) for v in coefficients)
    if a == 0.0:
        raise ValueError("leading coefficient must be nonzero")
    b, c, d = b / a, c / a, d / a
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    shift = -b / 3.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0:
        s = np.sqrt(disc)
        t = np.cbrt(-q / 2.0 + s) + np.cbrt(-q / 2.0 - s)
        roots = np.array([t + shift])
    elif disc == 0.0:
        if q == 0.0:
            roots = np.array([shift])
        else:
            t1 = 3.0 * q / p
            t2 = -3.0 * q / (2.0 * p)
            roots = np.array([t1 + shift, t2 + shift])
    else:
        r = np.sqrt(-(p**3) / 27.0)
        phi = np.arccos(np.clip(-q / (2.0 * r), -1.0, 1.0))
        m = 2.0 * np.sqrt(-p / 3.0)
        roots = m * np.cos((phi + 2.0 * np.pi * np.arange(3)) / 3.0) + shift

    # One Newton polish per root against the original cubic.
    for _ in range(3):
        f = ((roots + b) * roots + c) * roots + d
        fp = (3.0 * roots + 2.0 * b) * roots + c
        roots = np.where(fp != 0.0, roots - f / fp, roots)
    return np.sort(roots)
