"""Two parallel proximal solvers for divergence-plus-terms problems.

The problem class handled here minimizes, over x in R^N,

    D(Ax + u, Bx + v) + sum_s R_s(T_s x)

with ``D`` a separable divergence (possibly absent), ``A``, ``B`` real
matrices, and each ``R_s`` a catalog function composed with a matrix.

Two algorithms are provided:

* :func:`solve_ppxa_plus` -- a parallel proximal scheme that solves one
  linear system per iteration against the fixed weighted Gram sum (the
  weights also set the prox scales).
* :func:`solve_mlfbf` -- a primal-dual forward-backward-forward scheme with
  no linear solves; its step size is bounded by the inverse norm of the
  stacked linear map, estimated by power iteration.

Both treat every prox as exact and stop on the relative iterate change.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .divergences import perspective_value
from .vector_prox import VectorPair, prox_divergence_vector

__all__ = [
    "EmbeddedMatrix",
    "ProblemSpec",
    "SolverConfig",
    "SolveReport",
    "PreflightReport",
    "preflight",
    "operator_norm",
    "evaluate_objective",
    "solve_ppxa_plus",
    "solve_mlfbf",
]


class EmbeddedMatrix:
    """A matrix acting on a slice of a longer variable: ``[0  M  0]``.

    ``inner=None`` stands for the identity block.  Keeps the memory footprint
    of block designs like ``[A 0]`` and ``[0 I]`` at the inner matrix alone.
    """

    def __init__(self, inner, n_cols, offset, rows=None):
        self.inner = None if inner is None else np.asarray(inner, dtype=float)
        self.n_cols = int(n_cols)
        self.offset = int(offset)
        if self.inner is None:
            if rows is None:
                raise ValueError("identity block needs an explicit row count")
            self.rows = int(rows)
            self.block_cols = self.rows
        else:
            self.rows, self.block_cols = self.inner.shape
        if self.offset + self.block_cols > self.n_cols:
            raise ValueError("embedded block exceeds the variable length")

    @property
    def shape(self):
        return (self.rows, self.n_cols)

    def matvec(self, x):
        seg = x[self.offset : self.offset + self.block_cols]
        return seg.copy() if self.inner is None else self.inner @ seg

    def rmatvec(self, y):
        out = np.zeros(self.n_cols)
        out[self.offset : self.offset + self.block_cols] = (
            y if self.inner is None else self.inner.T @ y
        )
        return out

    def dense(self):
        out = np.zeros(self.shape)
        block = np.eye(self.rows) if self.inner is None else self.inner
        out[:, self.offset : self.offset + self.block_cols] = block
        return out


def _matvec(m, x):
    return m.matvec(x) if isinstance(m, EmbeddedMatrix) else m @ x


def _rmatvec(m, y):
    return m.rmatvec(y) if isinstance(m, EmbeddedMatrix) else m.T @ y


def _dense(m):
    return m.dense() if isinstance(m, EmbeddedMatrix) else np.asarray(m, dtype=float)


def operator_norm(matrix, tol=1e-10, max_iterations=500):
    """Largest singular value via power iteration on the normal map.

    Deterministic start vector; stops on relative change below ``tol`` or at
    the iteration cap.  An all-zero matrix has norm 0.
    """
    if isinstance(matrix, EmbeddedMatrix):
        return 1.0 if matrix.inner is None else operator_norm(matrix.inner, tol, max_iterations)
    m = np.asarray(matrix, dtype=float)
    if m.size == 0 or not np.any(m):
        return 0.0
    n = m.shape[1]
    v = np.ones(n) + 1e-4 * np.arange(n) / max(n - 1, 1)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iterations):
        w = m @ v
        z = m.T @ w
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return float(np.linalg.norm(w))
        v_new = z / nz
        sigma_new = float(np.linalg.norm(m @ v_new))
        if abs(sigma_new - sigma) <= tol * max(sigma_new, 1e-300):
            return sigma_new
        sigma = sigma_new
        v = v_new
    return sigma


@dataclass
class ProblemSpec:
    """A divergence term plus a list of simple terms under linear maps.

    ``divergence is None`` drops the divergence block entirely (pure
    composite-term problems); otherwise ``a``, ``b``, ``u``, ``v`` must be
    conformal with ``n_variables``.
    """

    divergence: object = None
    a: object = None
    b: object = None
    u: np.ndarray = None
    v: np.ndarray = None
    terms: list = field(default_factory=list)

    def __post_init__(self):
        if self.divergence is not None:
            if self.a is None or self.b is None:
                raise ValueError("divergence problems need both linear maps")
            pa, na = self.a.shape
            pb, nb = self.b.shape
            if pa != pb or na != nb:
                raise ValueError("divergence maps must share their shape")
            self.u = np.zeros(pa) if self.u is None else np.asarray(self.u, dtype=float)
            self.v = np.zeros(pb) if self.v is None else np.asarray(self.v, dtype=float)
            if self.u.shape != (pa,) or self.v.shape != (pa,):
                raise ValueError("shift vectors must have one entry per divergence row")
        n = self.n_variables
        for t, fn in self.terms:
            if t.shape[1] != n:
                raise ValueError("term matrices must act on the full variable")
            if t.shape[0] != fn.dimension:
                raise ValueError("term matrix rows must match the function dimension")

    @property
    def n_variables(self):
        if self.a is not None:
            return self.a.shape[1]
        if not self.terms:
            raise ValueError("empty problem")
        return self.terms[0][0].shape[1]

    @property
    def n_divergence_rows(self):
        return 0 if self.a is None else self.a.shape[0]


@dataclass
class SolverConfig:
    """Knobs shared by both solvers.

    ``weights`` are the per-block positive weights of the linear-solve
    scheme (entry 0 belongs to the divergence block).  ``relaxation`` is its
    constant relaxation factor in (0, 2).  ``step_fraction`` sets the
    forward-backward-forward step to ``step_fraction / beta``.  Stopping is
    on ``||x_{n+1} - x_n|| < stop_tol * ||x_n||``.
    """

    weights: tuple = None
    relaxation: float = 1.8
    step_fraction: float = 0.9
    max_iterations: int = 50000
    stop_tol: float = 1e-7
    record_trace: bool = False

    def __post_init__(self):
        if not 0 < self.relaxation < 2:
            raise ValueError("relaxation must lie in (0, 2)")
        if not 0 < self.step_fraction < 1:
            raise ValueError("step_fraction must lie in (0, 1)")
        if self.weights is not None and any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")


@dataclass
class SolveReport:
    """What a solve did and where it ended."""

    x_final: np.ndarray
    objective_trace: list
    residual_trace: list
    times_trace: list
    iterations: int
    stop_reason: str
    wall_time: float
    final_objective: float


@dataclass
class PreflightReport:
    """Diagnostics ahead of a solve; failures are warnings, not errors."""

    gram_invertible: bool
    strictly_feasible: bool
    feasible_point: np.ndarray = None
    divergence_margin: float = -np.inf
    term_margins: tuple = ()
    notes: str = ""


# Membership tolerance used when reporting solver objectives; looser than
# the raw evaluation default because iterates meet indicator constraints
# only up to the stopping tolerance.
REPORT_MEMBERSHIP_TOL = 1e-6


def evaluate_objective(problem, x, membership_tol=1e-9):
    """Extended-real objective value at ``x``.

    Indicator terms contribute 0 within ``membership_tol`` of their set and
    ``+inf`` otherwise; the divergence uses its boundary conventions.
    """
    x = np.asarray(x, dtype=float)
    total = 0.0
    if problem.divergence is not None:
        p = _matvec(problem.a, x) + problem.u
        q = _matvec(problem.b, x) + problem.v
        # Tiny negative spill-over within the membership tolerance is read
        # as exactly 0 so near-feasible iterates get finite values.
        p = np.where((p < 0) & (p >= -membership_tol), 0.0, p)
        q = np.where((q < 0) & (q >= -membership_tol), 0.0, q)
        vals = perspective_value(problem.divergence, p, q)
        total += float(np.sum(vals))
    for t, fn in problem.terms:
        total += float(fn.value(_matvec(t, x), tol=membership_tol))
    return total


def _gram_matrix(problem, weights):
    n = problem.n_variables
    g = np.zeros((n, n))
    if problem.divergence is not None:
        a = _dense(problem.a)
        b = _dense(problem.b)
        g += weights[0] * (a.T @ a + b.T @ b)
    for s, (t, fn) in enumerate(problem.terms):
        td = _dense(t)
        g += weights[s + 1] * (td.T @ td)
    return g


def _weights(problem, config):
    n_blocks = len(problem.terms) + 1
    if config.weights is None:
        return np.ones(n_blocks)
    w = np.asarray(config.weights, dtype=float)
    if w.shape != (n_blocks,):
        raise ValueError(f"expected {n_blocks} weights (divergence block first)")
    return w


_INTERIOR_TARGETS = {
    "SimplexIndicator": lambda fn: np.full(fn.dimension, fn.radius / fn.dimension),
    "BoxIndicator": lambda fn: np.full(fn.dimension, 0.5 * (fn.lo + fn.hi)),
    "BallIndicator": lambda fn: fn.center.copy(),
    "HyperplaneIndicator": lambda fn: fn.offset * fn.normal / float(fn.normal @ fn.normal),
    "NegEntropy": lambda fn: np.ones(fn.dimension),
    "QuotientQ1": lambda fn: fn.reference.copy(),
}


def preflight(problem):
    """Check solvability hints: Gram invertibility and strict feasibility.

    The Gram check attempts a Cholesky factorization of the unweighted Gram
    sum.  The feasibility probe is a heuristic: it assembles least-squares
    candidates aimed at interior targets of every term, polishes them with a
    few rounds of exact projections, and tests the strict-positivity margins
    of the divergence arguments together with relative-interior membership
    of every term.  A negative probe is a warning, not a proof.
    """
    n = problem.n_variables
    gram_ok = True
    try:
        g = _gram_matrix(problem, np.ones(len(problem.terms) + 1))
        scipy.linalg.cholesky(g + 0.0)
    except (scipy.linalg.LinAlgError, ValueError):
        gram_ok = False

    rows = []
    rhs = []
    if problem.divergence is not None:
        rows += [_dense(problem.a), _dense(problem.b)]
        rhs += [1.0 - problem.u, 1.0 - problem.v]
    for t, fn in problem.terms:
        target_fn = _INTERIOR_TARGETS.get(type(fn).__name__)
        if target_fn is None:
            continue
        rows.append(10.0 * _dense(t))
        rhs.append(10.0 * target_fn(fn))
    candidates = [np.zeros(n)]
    if rows:
        m = np.vstack(rows)
        r = np.concatenate(rhs)
        candidates.append(np.linalg.lstsq(m, r, rcond=None)[0])

    def polish(x):
        x = x.copy()
        for _ in range(25):
            for t, fn in problem.terms:
                if not fn.is_indicator:
                    continue
                td = _dense(t)
                y = td @ x
                proj = fn.prox(1.0, y)
                if np.allclose(proj, y, atol=1e-14):
                    continue
                delta = np.linalg.lstsq(td, proj - y, rcond=None)[0]
                x = x + delta
        return x

    best = None
    for cand in candidates:
        x = polish(cand)
        if problem.divergence is not None:
            div_margin = float(
                min(np.min(_matvec(problem.a, x) + problem.u), np.min(_matvec(problem.b, x) + problem.v))
            )
        else:
            div_margin = np.inf
        margins = tuple(float(fn.interior_margin(_matvec(t, x))) for t, fn in problem.terms)
        ok = div_margin > 1e-12 and all(m > 1e-12 or m == 0.0 for m in margins)
        cand_report = (ok, x, div_margin, margins)
        if best is None or (ok and not best[0]):
            best = cand_report
        if ok:
            break
    ok, x, div_margin, margins = best
    return PreflightReport(
        gram_invertible=gram_ok,
        strictly_feasible=ok,
        feasible_point=x if ok else None,
        divergence_margin=div_margin,
        term_margins=margins,
        notes="feasibility probe is heuristic; a negative result is inconclusive",
    )


def _finalize(x, obj_trace, res_trace, times, n_iter, reason, t0, problem):
    return SolveReport(
        x_final=x,
        objective_trace=obj_trace,
        residual_trace=res_trace,
        times_trace=times,
        iterations=n_iter,
        stop_reason=reason,
        wall_time=time.perf_counter() - t0,
        final_objective=evaluate_objective(problem, x, membership_tol=REPORT_MEMBERSHIP_TOL),
    )


def solve_ppxa_plus(problem, config=None, x0=None):
    """Parallel proximal solve with one Gram-system solve per iteration.

    All blocks' proxes evaluate independently per iteration at scales set by
    the block weights; iterates are relaxed by the constant factor of the
    config.  Requires the weighted Gram sum to be invertible (it is
    factorized once).
    """
    config = config or SolverConfig()
    w = _weights(problem, config)
    lam = config.relaxation
    n = problem.n_variables
    has_div = problem.divergence is not None

    gram = _gram_matrix(problem, w)
    try:
        cho = scipy.linalg.cho_factor(gram)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError("PPXA+ needs an invertible weighted Gram sum") from exc

    t_div = [np.zeros(problem.n_divergence_rows), np.zeros(problem.n_divergence_rows)]
    t_terms = [np.zeros(t.shape[0]) for t, _ in problem.terms]

    def gram_solve_from(r_div, r_terms):
        rhs = np.zeros(n)
        if has_div:
            rhs += w[0] * (_rmatvec(problem.a, r_div[0]) + _rmatvec(problem.b, r_div[1]))
        for s, (t, _) in enumerate(problem.terms):
            rhs += w[s + 1] * _rmatvec(t, r_terms[s])
        return scipy.linalg.cho_solve(cho, rhs)

    x = gram_solve_from(t_div, t_terms) if x0 is None else np.asarray(x0, dtype=float).copy()

    obj_trace, res_trace, times = [], [], []
    t0 = time.perf_counter()
    reason = "max_iterations"
    it = 0
    for it in range(1, config.max_iterations + 1):
        if has_div:
            pv = prox_divergence_vector(
                problem.divergence, 1.0 / w[0], problem.u, problem.v, (t_div[0], t_div[1])
            )
            r_div = [pv.p, pv.q]
        else:
            r_div = t_div
        r_terms = [fn.prox(1.0 / w[s + 1], t_terms[s]) for s, (t, fn) in enumerate(problem.terms)]
        y = gram_solve_from(r_div, r_terms)
        wvec = 2.0 * y - x
        if has_div:
            t_div[0] += lam * (_matvec(problem.a, wvec) - r_div[0])
            t_div[1] += lam * (_matvec(problem.b, wvec) - r_div[1])
        for s, (t, _) in enumerate(problem.terms):
            t_terms[s] += lam * (_matvec(t, wvec) - r_terms[s])
        x_new = x + lam * (y - x)

        resid = float(np.linalg.norm(x_new - x))
        res_trace.append(resid)
        if config.record_trace:
            obj_trace.append(evaluate_objective(problem, x_new, membership_tol=REPORT_MEMBERSHIP_TOL))
            times.append(time.perf_counter() - t0)
        x_norm = float(np.linalg.norm(x))
        x = x_new
        if x_norm > 0 and resid < config.stop_tol * x_norm:
            reason = "tolerance"
            break
    return _finalize(x, obj_trace, res_trace, times, it, reason, t0, problem)


def solve_mlfbf(problem, config=None, x0=None):
    """Primal-dual forward-backward-forward solve (no linear systems).

    The constant step size is ``step_fraction / beta`` (clipped to the
    admissible band), with ``beta`` the norm of the stacked linear map
    estimated by power iteration.  Dual prox steps go through the conjugate
    identity, so only the original proxes are ever evaluated.
    """
    config = config or SolverConfig()
    n = problem.n_variables
    has_div = problem.divergence is not None

    norms_sq = 0.0
    if has_div:
        norms_sq += operator_norm(problem.a) ** 2 + operator_norm(problem.b) ** 2
    for t, _ in problem.terms:
        norms_sq += operator_norm(t) ** 2
    beta = float(np.sqrt(norms_sq))
    if beta == 0.0:
        raise ValueError("the stacked linear map is zero")
    eps = 0.05 / (beta + 1.0)
    gamma = float(np.clip(config.step_fraction / beta, eps, (1.0 - eps) / beta))

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    t0v = np.zeros(problem.n_divergence_rows)
    t1v = np.zeros(problem.n_divergence_rows)
    t_terms = [np.zeros(t.shape[0]) for t, _ in problem.terms]

    obj_trace, res_trace, times = [], [], []
    t0 = time.perf_counter()
    reason = "max_iterations"
    it = 0
    for it in range(1, config.max_iterations + 1):
        grad = np.zeros(n)
        if has_div:
            grad += _rmatvec(problem.a, t0v) + _rmatvec(problem.b, t1v)
        for s, (t, _) in enumerate(problem.terms):
            grad += _rmatvec(t, t_terms[s])
        xh = x - gamma * grad

        if has_div:
            th0 = t0v + gamma * _matvec(problem.a, x)
            th1 = t1v + gamma * _matvec(problem.b, x)
            pv = prox_divergence_vector(
                problem.divergence, 1.0 / gamma, problem.u, problem.v, (th0 / gamma, th1 / gamma)
            )
            r0 = th0 - gamma * pv.p
            r1 = th1 - gamma * pv.q
            tt0 = r0 + gamma * _matvec(problem.a, xh)
            tt1 = r1 + gamma * _matvec(problem.b, xh)
            t0v = t0v - th0 + tt0
            t1v = t1v - th1 + tt1
        r_terms = []
        for s, (t, fn) in enumerate(problem.terms):
            th = t_terms[s] + gamma * _matvec(t, x)
            r = th - gamma * fn.prox(1.0 / gamma, th / gamma)
            tt = r + gamma * _matvec(t, xh)
            t_terms[s] = t_terms[s] - th + tt
            r_terms.append(r)

        back = np.zeros(n)
        if has_div:
            back += _rmatvec(problem.a, r0) + _rmatvec(problem.b, r1)
        for s, (t, _) in enumerate(problem.terms):
            back += _rmatvec(t, r_terms[s])
        xt = xh - gamma * back
        x_new = x - xh + xt

        resid = float(np.linalg.norm(x_new - x))
        res_trace.append(resid)
        if config.record_trace:
            obj_trace.append(evaluate_objective(problem, x_new, membership_tol=REPORT_MEMBERSHIP_TOL))
            times.append(time.perf_counter() - t0)
        x_norm = float(np.linalg.norm(x))
        x = x_new
        if x_norm > 0 and resid < config.stop_tol * x_norm:
            reason = "tolerance"
            break
    return _finalize(x, obj_trace, res_trace, times, it, reason, t0, problem)
