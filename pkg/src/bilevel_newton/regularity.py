"""Numerical regularity diagnostics at a candidate stationary point.

Checks the hypotheses under which the selected generalized Jacobian stays
nonsingular near a solution (and the Newton iteration converges fast):
index-set classification of the three complementarity blocks, linear
independence of active constraint gradients, strict complementarity of the
follower block, and a second-order condition on a reduced subspace of
feasible directions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .complementarity import KINK_A, KINK_B
from .linalg import null_space_basis, sym_eig_min
from .problem import BilevelProblem, evaluate_all
from .system import Iterate


class InconsistentPoint(ValueError):
    """The point is not approximately stationary: some pair fits no index class."""

    def __init__(self, flagged: list[tuple[str, int, float, float]]):
        self.flagged = flagged
        detail = "; ".join(
            f"{block}[{idx}]: constraint={c:.3e}, multiplier={mu:.3e}" for block, idx, c, mu in flagged
        )
        super().__init__(f"inconsistent complementarity pairs: {detail}")


@dataclass(frozen=True)
class BlockPartition:
    """eta: inactive & zero multiplier; nu: active & positive; theta: both zero."""

    eta: tuple[int, ...]
    theta: tuple[int, ...]
    nu: tuple[int, ...]

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(sorted(self.theta + self.nu))


@dataclass(frozen=True)
class IndexSetPartition:
    upper: BlockPartition    # (G(x,y), u)
    lower_y: BlockPartition  # (g(x,y), v)
    lower_z: BlockPartition  # (g(x,z), w)


@dataclass
class RegularityReport:
    partition: IndexSetPartition
    ulicq_holds: bool
    llicq_at_xy: bool
    llicq_at_xz: bool
    licq_margins: dict[str, float | None]
    lscc_holds: bool
    ssosc_min_eig: float
    ssosc_holds: bool
    ssosc_subspace_dim: int
    # informational variants of the second-order check
    ssosc_unperturbed_min_eig: float
    ssosc_augmented_min_eig: float


def _classify_block(
    name: str,
    cons: np.ndarray,
    mults: np.ndarray,
    active_tol: float,
    mult_tol: float,
    flagged: list,
) -> BlockPartition:
    eta, theta, nu = [], [], []
    for j, (c, mu) in enumerate(zip(cons, mults)):
        active = abs(c) <= active_tol
        if active and mu > mult_tol:
            nu.append(j)
        elif active and abs(mu) <= mult_tol:
            theta.append(j)
        elif c < -active_tol and abs(mu) <= mult_tol:
            eta.append(j)
        else:
            flagged.append((name, j, float(c), float(mu)))
    return BlockPartition(eta=tuple(eta), theta=tuple(theta), nu=tuple(nu))


def classify(
    problem: BilevelProblem,
    zeta: Iterate,
    active_tol: float = 1e-6,
    mult_tol: float = 1e-6,
) -> IndexSetPartition:
    """Partition every complementarity pair into eta / theta / nu.

    Raises InconsistentPoint when a pair fits none of the classes (violated
    constraint, negative multiplier, or positive multiplier on an inactive
    constraint), which signals that zeta is not approximately stationary.
    """
    if active_tol <= 0 or mult_tol <= 0:
        raise ValueError("tolerances must be positive")
    at_y = evaluate_all(problem, zeta.x, zeta.y)
    at_z = evaluate_all(problem, zeta.x, zeta.z)
    flagged: list[tuple[str, int, float, float]] = []
    upper = _classify_block("G", at_y.G, zeta.u, active_tol, mult_tol, flagged)
    lower_y = _classify_block("g(x,y)", at_y.g, zeta.v, active_tol, mult_tol, flagged)
    lower_z = _classify_block("g(x,z)", at_z.g, zeta.w, active_tol, mult_tol, flagged)
    if flagged:
        raise InconsistentPoint(flagged)
    return IndexSetPartition(upper=upper, lower_y=lower_y, lower_z=lower_z)


def _licq_families(
    problem: BilevelProblem, zeta: Iterate, partition: IndexSetPartition
) -> dict[str, np.ndarray]:
    """Active-gradient families as column matrices, one per condition."""
    n, m = problem.dims.n, problem.dims.m
    at_y = evaluate_all(problem, zeta.x, zeta.y)
    at_z = evaluate_all(problem, zeta.x, zeta.z)
    aU = list(partition.upper.active)
    aY = list(partition.lower_y.active)
    aZ = list(partition.lower_z.active)
    return {
        "ulicq": np.concatenate([at_y.dG[aU], at_y.dg[aY]], axis=0).T,
        "llicq_at_xy": at_y.dg[aY][:, n:].T if aY else np.zeros((m, 0)),
        "llicq_at_xz": at_z.dg[aZ][:, n:].T if aZ else np.zeros((m, 0)),
    }


def _independent(columns: np.ndarray, rank_tol: float) -> tuple[bool, float | None]:
    """(family linearly independent?, smallest singular value or None if empty)."""
    if columns.shape[1] == 0:
        return True, None
    nullity = null_space_basis(columns, rank_tol).shape[1]
    s = np.linalg.svd(columns, compute_uv=False)
    return nullity == 0, float(s[-1])


def check_licq(
    problem: BilevelProblem,
    zeta: Iterate,
    partition: IndexSetPartition,
    rank_tol: float = 1e-8,
) -> tuple[bool, bool, bool]:
    """Upper-level and lower-level linear independence of active gradients.

    The upper-level condition stacks full (x, y)-gradients of active G and
    active g at (x, y); each lower-level condition uses only the follower
    derivatives of active g, at (x, y) and at (x, z) respectively.  Empty
    families pass vacuously.
    """
    fams = _licq_families(problem, zeta, partition)
    return tuple(_independent(fams[k], rank_tol)[0] for k in ("ulicq", "llicq_at_xy", "llicq_at_xz"))


def check_lscc(partition: IndexSetPartition) -> bool:
    """Strict complementarity of the follower block: no theta index in (g(x,z), w)."""
    return len(partition.lower_z.theta) == 0


def ssosc_matrices(
    problem: BilevelProblem,
    zeta: Iterate,
    lam: float,
    partition: IndexSetPartition,
) -> tuple[np.ndarray, np.ndarray]:
    """Constraint matrix of the feasible-direction subspace and the quadratic form.

    Directions d = (d1, d2, d3) in R^{n+2m} satisfy C d = 0, where C stacks
    the (x, y)-gradients of nu-active constraints (upper block and g at
    (x, y)) and the (x, z)-gradients of nu-active g at (x, z).  The
    symmetric M realizes

        q(d) = (d1,d2)' H_lag (d1,d2) - lam * (d1,d3)' H_ell (d1,d3)

    with H_lag the upper-Lagrangian Hessian w.r.t. (x, y) and H_ell the
    follower-Lagrangian Hessian w.r.t. (x, z).
    """
    d = problem.dims
    n, m = d.n, d.m
    at_y = evaluate_all(problem, zeta.x, zeta.y)
    at_z = evaluate_all(problem, zeta.x, zeta.z)

    rows = []
    for i in partition.upper.nu:
        row = np.zeros(n + 2 * m)
        row[: n + m] = at_y.dG[i]
        rows.append(row)
    for j in partition.lower_y.nu:
        row = np.zeros(n + 2 * m)
        row[: n + m] = at_y.dg[j]
        rows.append(row)
    for j in partition.lower_z.nu:
        row = np.zeros(n + 2 * m)
        row[:n] = at_z.dg[j, :n]
        row[n + m:] = at_z.dg[j, n:]
        rows.append(row)
    C = np.array(rows) if rows else np.zeros((0, n + 2 * m))

    H_lag = at_y.d2F + np.tensordot(zeta.u, at_y.d2G, axes=1) \
        + np.tensordot(zeta.v, at_y.d2g, axes=1) + lam * at_y.d2f
    H_ell = at_z.d2f + np.tensordot(zeta.w, at_z.d2g, axes=1)

    M = np.zeros((n + 2 * m, n + 2 * m))
    M[:n, :n] = H_lag[:n, :n] - lam * H_ell[:n, :n]
    M[:n, n:n + m] = H_lag[:n, n:]
    M[n:n + m, :n] = H_lag[n:, :n]
    M[n:n + m, n:n + m] = H_lag[n:, n:]
    M[:n, n + m:] = -lam * H_ell[:n, n:]
    M[n + m:, :n] = -lam * H_ell[n:, :n]
    M[n + m:, n + m:] = -lam * H_ell[n:, n:]
    return C, M


_NS_TOL = 1e-10  # rank tolerance for the feasible-direction null space


def _reduced_min_eig(C: np.ndarray, M: np.ndarray, eig_tol: float) -> tuple[float, bool, int]:
    Z = null_space_basis(C, _NS_TOL)
    dim = Z.shape[1]
    if dim == 0:
        return math.inf, True, 0
    min_eig = sym_eig_min(Z.T @ M @ Z)
    return min_eig, min_eig > eig_tol, dim


def check_ssosc(
    problem: BilevelProblem,
    zeta: Iterate,
    lam: float,
    partition: IndexSetPartition,
    eig_tol: float = 1e-8,
) -> tuple[float, bool]:
    """Minimum eigenvalue of the reduced second-order form and its verdict.

    min_eig is +inf when the feasible-direction subspace is trivial; the
    condition then holds vacuously.
    """
    C, M = ssosc_matrices(problem, zeta, lam, partition)
    min_eig, holds, _ = _reduced_min_eig(C, M, eig_tol)
    return min_eig, holds


def _unperturbed_variant(problem: BilevelProblem, zeta: Iterate, lam: float, M: np.ndarray) -> np.ndarray:
    """Variant form for a follower feasible set with no leader coupling.

    The modified follower contribution decouples the (d1, d3) cross terms
    and flips the sign of the d3 curvature block.
    """
    n, m = problem.dims.n, problem.dims.m
    at_z = evaluate_all(problem, zeta.x, zeta.z)
    H_ell = at_z.d2f + np.tensordot(zeta.w, at_z.d2g, axes=1)
    M_star = M.copy()
    M_star[:n, n + m:] = 0.0
    M_star[n + m:, :n] = 0.0
    M_star[n + m:, n + m:] = lam * H_ell[n:, n:]
    return M_star


def diagnose(
    problem: BilevelProblem,
    zeta: Iterate,
    lam: float,
    active_tol: float = 1e-6,
    mult_tol: float = 1e-6,
    rank_tol: float = 1e-8,
    eig_tol: float = 1e-8,
) -> RegularityReport:
    """Full regularity report at a candidate point for a fixed penalty."""
    partition = classify(problem, zeta, active_tol, mult_tol)

    fams = _licq_families(problem, zeta, partition)
    ulicq, m_u = _independent(fams["ulicq"], rank_tol)
    llicq_xy, m_y = _independent(fams["llicq_at_xy"], rank_tol)
    llicq_xz, m_z = _independent(fams["llicq_at_xz"], rank_tol)

    C, M = ssosc_matrices(problem, zeta, lam, partition)
    min_eig, holds, dim = _reduced_min_eig(C, M, eig_tol)

    star_eig, _, _ = _reduced_min_eig(C, _unperturbed_variant(problem, zeta, lam, M), eig_tol)

    # Follower kink indices augment the form with -lam per index (the
    # symmetric kink element has -b/a = 1), so any kink forces failure.
    assert abs(-KINK_B / KINK_A - 1.0) < 1e-14
    n_kink = len(partition.lower_z.theta)
    if n_kink == 0:
        aug_eig = min_eig
    else:
        Z = null_space_basis(C, _NS_TOL)
        aug = np.zeros((dim + n_kink, dim + n_kink))
        aug[:dim, :dim] = Z.T @ M @ Z
        aug[dim:, dim:] = -lam * np.eye(n_kink)
        aug_eig = sym_eig_min(aug)

    return RegularityReport(
        partition=partition,
        ulicq_holds=ulicq,
        llicq_at_xy=llicq_xy,
        llicq_at_xz=llicq_xz,
        licq_margins={"ulicq": m_u, "llicq_at_xy": m_y, "llicq_at_xz": m_z},
        lscc_holds=check_lscc(partition),
        ssosc_min_eig=min_eig,
        ssosc_holds=holds,
        ssosc_subspace_dim=dim,
        ssosc_unperturbed_min_eig=star_eig,
        ssosc_augmented_min_eig=aug_eig,
    )
