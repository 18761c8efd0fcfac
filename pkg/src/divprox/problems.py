"""Selectivity estimation: problem builders, metrics, and instances.

A selectivity instance couples a binary event-membership matrix ``A`` with
rough probability estimates ``z``; the task is to recover elementary
probabilities ``x`` on the simplex whose induced event probabilities ``Ax``
match ``z`` as well as possible.  Because ``Ax = z`` is typically
infeasible, four formulations are provided:

* ``proposed``    -- joint estimation of ``x`` and feasible probabilities
  ``y`` coupled through a divergence ``D(Ax, y)``, with ``y`` confined to a
  norm ball around ``z`` and an entropy penalty on ``x``;
* ``relaxed``     -- squared Euclidean misfit ``||Ax - z||^2`` plus entropy;
* ``relaxed-div`` -- divergence misfit ``D(Ax, z)`` plus entropy;
* ``two-step``    -- first minimize the summed quotient error over the
  simplex, then maximize entropy subject to the now-feasible affine
  constraints.

Solution quality is scored by the max-quotient ``Q_inf`` (worst-case
multiplicative error; 1 is perfect).
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .divergences import DivergenceSpec
from .simple_prox import (
    BallIndicator,
    HyperplaneIndicator,
    NegEntropy,
    QuotientQ1,
    SimplexIndicator,
    SqDistance,
)
from .solvers import EmbeddedMatrix, ProblemSpec, SolveReport, SolverConfig, solve_mlfbf, solve_ppxa_plus

__all__ = [
    "SelectivityInstance",
    "EstimationResult",
    "GridSearchResult",
    "paper_instance",
    "random_instance",
    "build_proposed",
    "build_relaxed_euclidean",
    "build_relaxed_divergence",
    "build_quotient_step",
    "build_entropy_baseline",
    "two_step_estimate",
    "estimate",
    "grid_search",
    "q_infinity",
    "q_one",
    "DEFAULT_LAMBDA_GRID",
    "DEFAULT_ETA_GRID",
]

DEFAULT_LAMBDA_GRID = tuple(10.0 ** np.linspace(-3.0, 1.0, 9))
DEFAULT_ETA_GRID = tuple(10.0 ** np.linspace(-2.0, 0.0, 8))

METHODS = ("proposed", "relaxed", "relaxed-div", "two-step")


@dataclass(frozen=True)
class SelectivityInstance:
    """Binary membership matrix, rough probabilities, and hyperparameters."""

    a: np.ndarray
    z: np.ndarray
    lam: float = None
    eta: float = None
    k: object = 2

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("membership matrix entries must be binary")
        if np.any(z < 0) or np.any(z > 1):
            raise ValueError("probability estimates must lie in [0, 1]")
        if a.shape[0] != z.size:
            raise ValueError("one probability estimate per matrix row required")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "z", z)

    @property
    def n(self):
        return self.a.shape[1]

    @property
    def p(self):
        return self.a.shape[0]


@dataclass
class EstimationResult:
    """One estimation run: the selectivities, the score, and the solve."""

    x: np.ndarray
    y: np.ndarray
    q_inf: float
    method: str
    report: SolveReport


@dataclass
class GridSearchResult:
    """Best hyperparameters found by exhaustive search."""

    lam: float
    eta: float
    q_inf: float
    result: EstimationResult
    table: list


def paper_instance():
    """The fixed low-dimensional benchmark instance (6 events, 7 atoms).

    The affine system ``Ax = z`` is infeasible over the nonnegative orthant,
    which is exactly the situation the joint formulations are built for.
    ``lam``/``eta`` are left unset for hyperparameter search.
    """
    a = np.array(
        [
            [1, 0, 1, 0, 1, 0, 1],
            [0, 1, 1, 0, 0, 1, 1],
            [0, 0, 0, 1, 1, 1, 1],
            [0, 0, 1, 0, 0, 0, 1],
            [0, 0, 1, 0, 1, 0, 1],
            [0, 0, 0, 0, 0, 1, 1],
        ],
        dtype=float,
    )
    z = np.array([0.2114, 0.6331, 0.6312, 0.5182, 0.9337, 0.0035])
    return SelectivityInstance(a=a, z=z)


def random_instance(n, seed):
    """Deterministic random instance with the fixed 7:6 column:row ratio.

    Bit-stream: a PCG64 generator seeded with ``seed`` first draws the
    binary matrix as i.i.d. fair coin flips, redrawing whole matrices until
    none of the rows or columns is all zero, then draws ``z`` componentwise
    uniform on (0, 1).
    """
    if n % 7 != 0 or n <= 0:
        raise ValueError("n must be a positive multiple of 7")
    p = 6 * n // 7
    rng = np.random.default_rng(seed)
    while True:
        a = (rng.random((p, n)) < 0.5).astype(float)
        if np.all(a.sum(axis=0) > 0) and np.all(a.sum(axis=1) > 0):
            break
    z = rng.random(p)
    return SelectivityInstance(a=a, z=z)


def _quotient(ratios):
    ratios = np.asarray(ratios, dtype=float)
    with np.errstate(divide="ignore"):
        vals = np.where(ratios > 0, np.maximum(ratios, 1.0 / ratios), np.inf)
    return vals


def q_infinity(ax, z):
    """Worst-case multiplicative error ``max_i max(r_i, 1/r_i)``, r = ax/z."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("reference probabilities must be strictly positive")
    return float(np.max(_quotient(np.asarray(ax, dtype=float) / z)))


def q_one(ax, z):
    """Summed multiplicative error ``sum_i max(r_i, 1/r_i)``, r = ax/z."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("reference probabilities must be strictly positive")
    return float(np.sum(_quotient(np.asarray(ax, dtype=float) / z)))


def _check_divergence(divergence):
    if divergence.kind == "renyi":
        warnings.warn(
            "this divergence favors sparse solutions and is excluded from the "
            "selectivity benchmark; proceeding anyway",
            stacklevel=3,
        )


def build_proposed(instance, divergence, lam=None, eta=None):
    """Joint problem over the stacked variable ``w = (x, y)``.

    The divergence couples ``Ax`` with ``y``; the entropy and simplex act on
    the ``x`` block and the norm ball on the ``y`` block.
    """
    _check_divergence(divergence)
    lam = instance.lam if lam is None else lam
    eta = instance.eta if eta is None else eta
    if lam is None or eta is None:
        raise ValueError("proposed problem needs both lam and eta")
    n, p = instance.n, instance.p
    total = n + p
    a_map = EmbeddedMatrix(instance.a, total, 0)
    b_map = EmbeddedMatrix(None, total, n, rows=p)
    x_sel = EmbeddedMatrix(None, total, 0, rows=n)
    y_sel = EmbeddedMatrix(None, total, n, rows=p)
    terms = [
        (x_sel, NegEntropy(n, weight=lam)),
        (x_sel, SimplexIndicator(n)),
        (y_sel, BallIndicator(center=instance.z, radius=eta, norm=instance.k)),
    ]
    return ProblemSpec(divergence=divergence, a=a_map, b=b_map, terms=terms)


def build_relaxed_euclidean(instance, lam=None):
    """Squared-distance relaxation on ``x`` alone (no feasible-probability block)."""
    lam = instance.lam if lam is None else lam
    if lam is None:
        raise ValueError("relaxed problem needs lam")
    n = instance.n
    eye = EmbeddedMatrix(None, n, 0, rows=n)
    terms = [
        (instance.a, SqDistance(center=instance.z)),
        (eye, NegEntropy(n, weight=lam)),
        (eye, SimplexIndicator(n)),
    ]
    return ProblemSpec(terms=terms)


def build_relaxed_divergence(instance, divergence, lam=None):
    """Divergence relaxation ``D(Ax, z)`` on ``x`` alone (``z`` held fixed)."""
    _check_divergence(divergence)
    lam = instance.lam if lam is None else lam
    if lam is None:
        raise ValueError("relaxed problem needs lam")
    n, p = instance.n, instance.p
    eye = EmbeddedMatrix(None, n, 0, rows=n)
    terms = [
        (eye, NegEntropy(n, weight=lam)),
        (eye, SimplexIndicator(n)),
    ]
    return ProblemSpec(
        divergence=divergence,
        a=instance.a,
        b=np.zeros((p, n)),
        u=np.zeros(p),
        v=instance.z.copy(),
        terms=terms,
    )


def build_quotient_step(instance):
    """Step one of the two-step method: quotient error over the simplex."""
    n = instance.n
    eye = EmbeddedMatrix(None, n, 0, rows=n)
    terms = [
        (instance.a, QuotientQ1(reference=instance.z)),
        (eye, SimplexIndicator(n)),
    ]
    return ProblemSpec(terms=terms)


def build_entropy_baseline(instance, z_target):
    """Entropy maximization under exact (feasible) affine constraints."""
    n = instance.n
    eye = EmbeddedMatrix(None, n, 0, rows=n)
    terms = [
        (eye, NegEntropy(n, weight=1.0)),
        (eye, SimplexIndicator(n)),
    ]
    for i in range(instance.p):
        terms.append((eye, HyperplaneIndicator(normal=instance.a[i], offset=float(z_target[i]))))
    return ProblemSpec(terms=terms)


def _solve(problem, solver, config):
    if solver == "ppxa+":
        return solve_ppxa_plus(problem, config)
    if solver == "mlfbf":
        return solve_mlfbf(problem, config)
    raise ValueError(f"unknown solver {solver!r}")


def two_step_estimate(instance, solver="mlfbf", config=None):
    """Quotient fit first, then entropy maximization at the fitted targets.

    The first solve picks ``x_hat`` minimizing the summed quotient error over
    the simplex; the second maximizes entropy subject to ``Ax = A x_hat``
    (feasible by construction) and the simplex.  The score is still taken
    against the original probability estimates.
    """
    config = config or SolverConfig()
    rep1 = _solve(build_quotient_step(instance), solver, config)
    x_hat = rep1.x_final
    z_hat = instance.a @ x_hat
    rep2 = _solve(build_entropy_baseline(instance, z_hat), solver, config)
    x = rep2.x_final
    return EstimationResult(
        x=x, y=None, q_inf=q_infinity(instance.a @ x, instance.z), method="two-step", report=rep2
    )


def estimate(instance, method, divergence=None, lam=None, eta=None, solver="mlfbf", config=None):
    """Run one formulation end to end and score it.

    Returns an :class:`EstimationResult`; for the joint formulation the
    feasible-probability block is reported as ``y``.
    """
    config = config or SolverConfig()
    if method == "two-step":
        return two_step_estimate(instance, solver=solver, config=config)
    if method == "proposed":
        problem = build_proposed(instance, divergence, lam=lam, eta=eta)
        report = _solve(problem, solver, config)
        n = instance.n
        x, y = report.x_final[:n], report.x_final[n:]
    elif method == "relaxed":
        problem = build_relaxed_euclidean(instance, lam=lam)
        report = _solve(problem, solver, config)
        x, y = report.x_final, None
    elif method == "relaxed-div":
        problem = build_relaxed_divergence(instance, divergence, lam=lam)
        report = _solve(problem, solver, config)
        x, y = report.x_final, None
    else:
        raise ValueError(f"unknown method {method!r}")
    return EstimationResult(
        x=x, y=y, q_inf=q_infinity(instance.a @ x, instance.z), method=method, report=report
    )


def grid_search(
    instance,
    divergence,
    lambda_grid=None,
    eta_grid=None,
    method="proposed",
    solver="mlfbf",
    config=None,
):
    """Exhaustive hyperparameter search returning the best quotient score.

    Ties resolve to the first grid entry in row-major (lam, eta) order.
    Methods without a ball radius ignore ``eta_grid``.
    """
    lams = tuple(DEFAULT_LAMBDA_GRID if lambda_grid is None else lambda_grid)
    if method in ("proposed",):
        etas = tuple(DEFAULT_ETA_GRID if eta_grid is None else eta_grid)
    else:
        etas = (None,)
    if not lams or not etas:
        raise ValueError("grids must be nonempty")
    best = None
    table = []
    for lam in lams:
        for eta in etas:
            res = estimate(
                instance, method, divergence=divergence, lam=lam, eta=eta, solver=solver, config=config
            )
            table.append((lam, eta, res.q_inf))
            if best is None or res.q_inf < best.q_inf:
                best = GridSearchResult(lam=lam, eta=eta, q_inf=res.q_inf, result=res, table=table)
    best.table = table
    return best
