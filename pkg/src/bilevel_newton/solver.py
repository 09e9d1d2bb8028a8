"""Globalized semismooth Newton iteration on the stationarity system.

One run keeps the penalty parameter fixed and iterates

    step:        solve W d = -Phi for a selected generalized-Jacobian
                 element W; accept d only if the merit-descent test
                 grad_Psi . d <= -beta * ||d||^t holds, otherwise fall
                 back to the steepest-descent direction -grad_Psi;
    line search: Armijo backtracking with ratio rho and slope fraction
                 sigma on the merit function Psi = 0.5*||Phi||^2;
    update:      zeta <- zeta + alpha d,

until ||Phi|| <= eps, the iteration cap, a merit-stationary point, or a
stalled line search.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import SingularMatrixError, lu_solve
from .problem import BilevelProblem, EvaluationError, evaluate_all
from .system import Iterate, ResidualVector, assemble_jacobian, assemble_residual

SOLVED = "Solved"
MERIT_STATIONARY = "MeritStationary"
MAX_ITER = "MaxIter"
LINE_SEARCH_STALL = "LineSearchStall"
EVALUATION_FAILED = "EvaluationFailed"

NEWTON = "Newton"
GRADIENT = "Gradient"


@dataclass(frozen=True)
class SolverConfig:
    """Algorithm parameters; defaults follow the reference protocol."""

    lam: float
    beta: float = 1e-8
    eps: float = 1e-8
    t: float = 2.1
    rho: float = 0.5
    sigma: float = 1e-4
    max_iter: int = 2000
    max_backtracks: int = 60
    kink_tol: float = 1e-12
    pivot_tol: float = 1e-12
    grad_stall_tol: float = 1e-12

    def __post_init__(self):
        checks = [
            (self.lam > 0, "lam must be > 0"),
            (self.beta > 0, "beta must be > 0"),
            (self.eps >= 0, "eps must be >= 0"),
            (self.t > 2, "t must be > 2"),
            (0 < self.rho < 1, "rho must be in (0, 1)"),
            (0 < self.sigma < 0.5, "sigma must be in (0, 0.5)"),
            (self.max_iter >= 0, "max_iter must be >= 0"),
            (self.max_backtracks >= 0, "max_backtracks must be >= 0"),
            (self.kink_tol > 0, "kink_tol must be > 0"),
            (self.pivot_tol >= 0, "pivot_tol must be >= 0"),
            (self.grad_stall_tol >= 0, "grad_stall_tol must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)


@dataclass(frozen=True)
class StepRecord:
    """Per-iteration record handed to a run() callback (used for audits)."""

    k: int
    zeta: Iterate
    direction: np.ndarray
    direction_type: str
    slope: float
    merit_before: float
    alpha: float
    backtracks: int


@dataclass
class SolveReport:
    """Trace and outcome of one run at a fixed penalty."""

    problem: str
    lam: float
    status: str
    iterations: int
    residual_norms: list[float]
    step_sizes: list[float]
    direction_types: list[str]
    final: Iterate
    final_residual_norm: float
    F: float
    f: float
    eoc: float | None
    wall_time: float
    error: str | None = None


@dataclass(frozen=True)
class LineSearchResult:
    alpha: float
    backtracks: int
    zeta_next: Iterate
    residual_next: ResidualVector


def eoc(residual_norms: list[float]) -> float | None:
    """Experimental order of convergence from the last three residual norms.

    Returns the larger of the two successive log-norm ratios, None when the
    history is too short or no ratio is defined, and math.inf when one of
    the trailing norms is exactly zero (to be presented as "exact").
    """
    if len(residual_norms) < 3:
        return None
    tail = residual_norms[-3:]
    if any(nrm == 0.0 for nrm in tail):
        return math.inf
    ratios = []
    for prev, cur in ((tail[0], tail[1]), (tail[1], tail[2])):
        denom = math.log(prev)
        if denom != 0.0:
            ratios.append(math.log(cur) / denom)
    return max(ratios) if ratios else None


def _direction(
    config: SolverConfig, W: np.ndarray, resid_vec: np.ndarray, grad: np.ndarray
) -> tuple[np.ndarray, str]:
    try:
        d = lu_solve(W, -resid_vec, config.pivot_tol)
    except SingularMatrixError:
        return -grad, GRADIENT
    if float(grad @ d) <= -config.beta * float(np.linalg.norm(d)) ** config.t:
        return d, NEWTON
    return -grad, GRADIENT


def step(
    problem: BilevelProblem,
    config: SolverConfig,
    zeta: Iterate,
    residual: ResidualVector | None = None,
) -> tuple[np.ndarray, str]:
    """Search direction at zeta: Newton when usable, else -grad_Psi."""
    r = residual if residual is not None else assemble_residual(problem, config.lam, zeta)
    W = assemble_jacobian(problem, config.lam, zeta, config.kink_tol)
    grad = W.mat.T @ r.vec
    return _direction(config, W.mat, r.vec, grad)


def _backtrack(
    problem: BilevelProblem,
    config: SolverConfig,
    zeta: Iterate,
    d: np.ndarray,
    merit0: float,
    slope: float,
) -> LineSearchResult | None:
    if slope >= 0:
        raise ValueError(f"line search needs a descent direction, slope={slope}")
    zeta_vec = zeta.to_vector()
    for s in range(config.max_backtracks + 1):
        alpha = config.rho**s
        trial = Iterate.from_vector(zeta_vec + alpha * d, problem.dims)
        r_trial = assemble_residual(problem, config.lam, trial)
        psi = 0.5 * r_trial.norm() ** 2
        if psi <= merit0 + config.sigma * alpha * slope:
            return LineSearchResult(alpha=alpha, backtracks=s, zeta_next=trial, residual_next=r_trial)
    return None


def line_search(
    problem: BilevelProblem, config: SolverConfig, zeta: Iterate, d: np.ndarray
) -> LineSearchResult | None:
    """Smallest-power Armijo backtracking along d; None signals a stall."""
    r = assemble_residual(problem, config.lam, zeta)
    W = assemble_jacobian(problem, config.lam, zeta, config.kink_tol)
    slope = float((W.mat.T @ r.vec) @ d)
    return _backtrack(problem, config, zeta, d, 0.5 * r.norm() ** 2, slope)


def run(
    problem: BilevelProblem,
    config: SolverConfig,
    zeta0: Iterate,
    callback: Callable[[StepRecord], None] | None = None,
) -> SolveReport:
    """Iterate from zeta0 until a termination status is reached."""
    start_time = time.perf_counter()
    norms: list[float] = []
    alphas: list[float] = []
    dtypes: list[str] = []
    zeta = zeta0
    status = None
    error = None

    try:
        resid = assemble_residual(problem, config.lam, zeta)
        norms.append(resid.norm())
        k = 0
        while True:
            if norms[-1] <= config.eps:
                status = SOLVED
                break
            if k >= config.max_iter:
                status = MAX_ITER
                break
            W = assemble_jacobian(problem, config.lam, zeta, config.kink_tol)
            grad = W.mat.T @ resid.vec
            if float(np.linalg.norm(grad)) <= config.grad_stall_tol:
                status = MERIT_STATIONARY
                break
            d, dtype = _direction(config, W.mat, resid.vec, grad)
            slope = float(grad @ d)
            merit0 = 0.5 * norms[-1] ** 2
            ls = _backtrack(problem, config, zeta, d, merit0, slope)
            if ls is None:
                status = LINE_SEARCH_STALL
                break
            if callback is not None:
                callback(StepRecord(
                    k=k, zeta=zeta, direction=d, direction_type=dtype, slope=slope,
                    merit_before=merit0, alpha=ls.alpha, backtracks=ls.backtracks,
                ))
            zeta = ls.zeta_next
            resid = ls.residual_next
            norms.append(resid.norm())
            alphas.append(ls.alpha)
            dtypes.append(dtype)
            k += 1
    except EvaluationError as exc:
        status = EVALUATION_FAILED
        error = str(exc)

    if norms:
        final_norm = norms[-1]
    else:
        final_norm = math.nan
    try:
        bundle = evaluate_all(problem, zeta.x, zeta.y)
        F_val, f_val = bundle.F, bundle.f
    except EvaluationError:
        F_val = f_val = math.nan

    return SolveReport(
        problem=problem.name,
        lam=config.lam,
        status=status,
        iterations=len(alphas),
        residual_norms=norms,
        step_sizes=alphas,
        direction_types=dtypes,
        final=zeta,
        final_residual_norm=final_norm,
        F=F_val,
        f=f_val,
        eoc=eoc(norms),
        wall_time=time.perf_counter() - start_time,
        error=error,
    )
