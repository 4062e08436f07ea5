"""Penalized backfitting for the bivariate additive spline model.

The fitted model is y_i = f_1(x_i1) + f_2(x_i2) + e_i with each component a
spline B(x)'b_j, estimated by minimizing

    ||y - X_1 b_1 - X_2 b_2||^2 + lam_1 b_1' Q_m b_1 + lam_2 b_2' Q_m b_2.

Stages alternate the two penalized normal-equation solves (block Gauss-Seidel);
every solve is banded, and no n x n smoother matrix is ever formed.

A structural caveat that shapes several routines here: both design matrices
satisfy the partition of unity (rows sum to 1) and the difference penalty
ignores constants, so adding a constant to one component and subtracting it
from the other changes nothing.  The stacked normal-equation matrix is
therefore exactly singular for every lam >= 0, the minimizer is a line rather
than a point, and backfitting converges to the point on that line selected by
its initial value.  `joint_solve` detects this and raises SingularSystem;
`backfit` is well-defined because each half-step system is positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .bandmat import (
    BandedCholesky,
    NotPositiveDefiniteError,
    gram_banded,
    penalized_gram,
)
from .basis import DesignMatrix, SplineConfig, design_matrix, make_knots
from .penalty import PenaltyMatrix, penalty_matrix

__all__ = [
    "AdditiveDesign",
    "BackfitResult",
    "HessianReport",
    "NormalEquations",
    "SingularSystemError",
    "kn_rule",
    "lambda_rule",
    "build_design",
    "criterion",
    "backfit_stage",
    "backfit",
    "backfit_stages",
    "joint_solve",
    "univariate_penalized",
    "one_stage_pair",
    "predict",
    "center_component",
    "assemble_hessian",
    "hessian_check",
]


class SingularSystemError(Exception):
    """The stacked normal-equation matrix is not numerically positive definite."""


def kn_rule(n: int) -> int:
    """Default interval count K = round(2 n^{2/5})."""
    return int(round(2.0 * n ** 0.4))


def lambda_rule(n: int, num_intervals: int) -> float:
    """Default penalty weight 2 n^{2/5} / sqrt(K)."""
    return 2.0 * n ** 0.4 / np.sqrt(num_intervals)


@dataclass(frozen=True)
class AdditiveDesign:
    """Response, the two design matrices, penalty weights, and the penalty."""

    y: np.ndarray
    X1: DesignMatrix
    X2: DesignMatrix
    lambda1: float
    lambda2: float
    penalty: PenaltyMatrix

    def __post_init__(self) -> None:
        n = self.y.shape[0]
        if self.X1.rows != n or self.X2.rows != n:
            raise ValueError(
                f"row mismatch: y has {n}, X1 {self.X1.rows}, X2 {self.X2.rows}"
            )
        if self.X1.cols != self.X2.cols:
            raise ValueError("both components must use the same basis size")
        if self.penalty.size != self.X1.cols:
            raise ValueError(
                f"penalty size {self.penalty.size} != basis size {self.X1.cols}"
            )
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("penalty weights must be >= 0")

    @property
    def num_coef(self) -> int:
        return self.X1.cols


@dataclass
class BackfitResult:
    """Coefficients after backfitting plus convergence bookkeeping.

    `converged` is meaningful only for tolerance-based runs (`backfit`): it
    records that both the sup-norm coefficient change and the normal-equation
    residual sup-norm dropped to tol.  Fixed-stage runs (`backfit_stages`)
    report converged=False by construction.
    """

    b1: np.ndarray
    b2: np.ndarray
    stages: int
    converged: bool
    residual_norm: float
    history: list[tuple[np.ndarray, np.ndarray]] | None = None


def build_design(
    y,
    x1,
    x2,
    degree: int = 3,
    diff_order: int = 2,
    num_intervals: int | None = None,
    lambda1: float | None = None,
    lambda2: float | None = None,
) -> AdditiveDesign:
    """Assemble an AdditiveDesign from raw samples using the default rules."""
    y = np.asarray(y, dtype=float).ravel()
    n = y.shape[0]
    K = kn_rule(n) if num_intervals is None else int(num_intervals)
    cfg = make_knots(degree, K)
    lam_default = lambda_rule(n, K)
    return AdditiveDesign(
        y=y,
        X1=design_matrix(cfg, x1),
        X2=design_matrix(cfg, x2),
        lambda1=lam_default if lambda1 is None else float(lambda1),
        lambda2=lam_default if lambda2 is None else float(lambda2),
        penalty=penalty_matrix(diff_order, cfg.num_basis),
    )


class NormalEquations:
    """Factored per-component systems shared by sweeps, weights, and oracles.

    Holds the banded Cholesky factors of Lam_j = X_j'X_j + lam_j Q_m, the q x q
    cross-product C = X_1'X_2, and the right-hand sides u_j = X_j'y.
    """

    def __init__(self, design: AdditiveDesign):
        self.design = design
        Q = design.penalty
        self.gram1 = gram_banded(design.X1)
        self.gram2 = gram_banded(design.X2)
        self.lam_banded1 = penalized_gram(self.gram1, design.lambda1, Q)
        self.lam_banded2 = penalized_gram(self.gram2, design.lambda2, Q)
        self.L1 = BandedCholesky(self.lam_banded1)
        self.L2 = BandedCholesky(self.lam_banded2)
        self.C = design.X1.values.T @ design.X2.values
        self.u1 = design.X1.values.T @ design.y
        self.u2 = design.X2.values.T @ design.y
        self._lam_dense1 = self.lam_banded1.to_dense()
        self._lam_dense2 = self.lam_banded2.to_dense()

    def sweep(self, b2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        b1 = self.L1.solve(self.u1 - self.C @ b2)
        b2_new = self.L2.solve(self.u2 - self.C.T @ b1)
        return b1, b2_new

    def residual_norm(self, b1: np.ndarray, b2: np.ndarray) -> float:
        r1 = self._lam_dense1 @ b1 + self.C @ b2 - self.u1
        r2 = self.C.T @ b1 + self._lam_dense2 @ b2 - self.u2
        return float(max(np.abs(r1).max(), np.abs(r2).max()))

    def stacked_matrix(self) -> np.ndarray:
        q = self.design.num_coef
        A = np.empty((2 * q, 2 * q))
        A[:q, :q] = self._lam_dense1
        A[:q, q:] = self.C
        A[q:, :q] = self.C.T
        A[q:, q:] = self._lam_dense2
        return A


def criterion(design: AdditiveDesign, b1: np.ndarray, b2: np.ndarray) -> float:
    """Penalized least-squares objective at the given coefficients."""
    resid = design.y - design.X1.values @ b1 - design.X2.values @ b2
    return float(
        resid @ resid
        + design.lambda1 * design.penalty.quad_form(b1)
        + design.lambda2 * design.penalty.quad_form(b2)
    )


def backfit_stage(
    design: AdditiveDesign, b2_prev: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """One Gauss-Seidel sweep: update b1 against b2_prev, then b2 against b1."""
    return NormalEquations(design).sweep(np.asarray(b2_prev, dtype=float))


def _run(
    eq: NormalEquations,
    b2_init: np.ndarray | None,
    tol: float | None,
    max_stages: int,
    keep_history: bool,
) -> BackfitResult:
    q = eq.design.num_coef
    b2 = np.zeros(q) if b2_init is None else np.asarray(b2_init, dtype=float).copy()
    if b2.shape != (q,):
        raise ValueError(f"b2_init must have shape ({q},), got {b2.shape}")
    b1 = np.zeros(q)
    history: list[tuple[np.ndarray, np.ndarray]] | None = [] if keep_history else None
    converged = False
    stages = 0
    residual = np.inf
    for stage in range(1, max_stages + 1):
        b1_new, b2_new = eq.sweep(b2)
        change = max(
            float(np.abs(b1_new - b1).max()) if stage > 1 else np.inf,
            float(np.abs(b2_new - b2).max()),
        )
        b1, b2 = b1_new, b2_new
        stages = stage
        if history is not None:
            history.append((b1.copy(), b2.copy()))
        if tol is not None:
            residual = eq.residual_norm(b1, b2)
            if change <= tol and residual <= tol:
                converged = True
                break
    if tol is None or not np.isfinite(residual) or not converged:
        residual = eq.residual_norm(b1, b2)
    return BackfitResult(
        b1=b1,
        b2=b2,
        stages=stages,
        converged=converged,
        residual_norm=residual,
        history=history,
    )


def backfit(
    design: AdditiveDesign,
    b2_init: np.ndarray | None = None,
    tol: float = 1e-10,
    max_stages: int = 100,
    keep_history: bool = False,
) -> BackfitResult:
    """Iterate sweeps until coefficients and normal-equation residual settle.

    Stops when the sup-norm coefficient change and the normal-equation residual
    sup-norm are both <= tol; otherwise runs max_stages sweeps and returns with
    converged=False (the result is still usable -- non-convergence is a flag,
    not an exception).
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    return _run(NormalEquations(design), b2_init, tol, max_stages, keep_history)


def backfit_stages(
    design: AdditiveDesign,
    stages: int,
    b2_init: np.ndarray | None = None,
    keep_history: bool = False,
) -> BackfitResult:
    """Run exactly `stages` sweeps (the fixed-stage estimator)."""
    if stages < 1:
        raise ValueError("stages must be >= 1")
    return _run(NormalEquations(design), b2_init, None, stages, keep_history)


def joint_solve(design: AdditiveDesign) -> tuple[np.ndarray, np.ndarray]:
    """Solve the stacked 2q x 2q normal equations by dense Cholesky.

    Serves as the dense oracle for backfit.  The stacked matrix is verified to
    be numerically positive definite first (smallest eigenvalue above the
    rounding floor); otherwise SingularSystemError is raised.  With full bases
    on both components this always triggers, because shifting a constant
    between the components is an exact null direction -- see the module
    docstring.  Designs without that shared direction (e.g. one component
    absent, or bases not summing to one) solve normally.
    """
    eq = NormalEquations(design)
    A = eq.stacked_matrix()
    q = design.num_coef
    eigs = np.linalg.eigvalsh(A)
    floor = 2 * q * np.finfo(float).eps * max(abs(eigs[0]), abs(eigs[-1]))
    if eigs[0] <= floor:
        raise SingularSystemError(
            f"stacked system is numerically singular (min eig {eigs[0]:.3e}, "
            f"floor {floor:.3e}); with both full bases present the constant "
            "shift between components is an exact null direction"
        )
    try:
        c = scipy.linalg.cho_factor(A)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - guarded above
        raise SingularSystemError(str(exc)) from exc
    sol = scipy.linalg.cho_solve(c, np.concatenate([eq.u1, eq.u2]))
    return sol[:q], sol[q:]


def univariate_penalized(
    X: DesignMatrix, y: np.ndarray, lam: float, Q: PenaltyMatrix, x
):
    """Univariate penalized spline estimate B(x)'(X'X + lam Q)^{-1} X'y."""
    y = np.asarray(y, dtype=float).ravel()
    lam_band = penalized_gram(gram_banded(X), lam, Q)
    b = BandedCholesky(lam_band).solve(X.values.T @ y)
    rows = design_matrix(X.config, np.atleast_1d(np.asarray(x, dtype=float))).values
    out = rows @ b
    return float(out[0]) if np.isscalar(x) or np.ndim(x) == 0 else out


def one_stage_pair(design: AdditiveDesign, x1: float, x2: float) -> tuple[float, float]:
    """The two one-stage estimators evaluated at (x1, x2).

    First component: the univariate penalized fit of y on X1.  Second: the
    penalized fit of the first component's residual y - X1 (Lam_1^{-1} X1'y),
    i.e. the projector complement applied without materializing it.
    """
    eq = NormalEquations(design)
    b1 = eq.L1.solve(eq.u1)
    resid = design.y - design.X1.values @ b1
    b2 = eq.L2.solve(design.X2.values.T @ resid)
    r1 = design_matrix(design.X1.config, np.atleast_1d(float(x1))).values[0]
    r2 = design_matrix(design.X2.config, np.atleast_1d(float(x2))).values[0]
    return float(r1 @ b1), float(r2 @ b2)


def predict(result: BackfitResult, cfg: SplineConfig, x1, x2):
    """Evaluate the two fitted components and their sum at new points."""
    r1 = design_matrix(cfg, np.atleast_1d(np.asarray(x1, dtype=float))).values
    r2 = design_matrix(cfg, np.atleast_1d(np.asarray(x2, dtype=float))).values
    f1 = r1 @ result.b1
    f2 = r2 @ result.b2
    if np.ndim(x1) == 0 and np.ndim(x2) == 0:
        return float(f1[0]), float(f2[0]), float(f1[0] + f2[0])
    return f1, f2, f1 + f2


def center_component(
    result: BackfitResult, design: AdditiveDesign, j: int, x
):
    """Fitted component minus its average over the observed covariate values.

    The display convention: f_j(x) - mean_i f_j(x_ij).  Centering removes the
    arbitrary constant split between the two components.
    """
    if j not in (1, 2):
        raise ValueError(f"component index must be 1 or 2, got {j}")
    X = design.X1 if j == 1 else design.X2
    b = result.b1 if j == 1 else result.b2
    offset = float(np.mean(X.values @ b))
    rows = design_matrix(X.config, np.atleast_1d(np.asarray(x, dtype=float))).values
    vals = rows @ b - offset
    return float(vals[0]) if np.ndim(x) == 0 else vals


@dataclass(frozen=True)
class HessianReport:
    """Positive-definiteness diagnostic of the objective's Hessian split H1 + H2.

    `constant_shift_quadform` is the (normalized) quadratic form of the Hessian
    at the direction (1,...,1,-1,...,-1) that moves a constant from one
    component to the other; an exact zero there certifies the partition-of-unity
    null direction.
    """

    is_pd: bool
    min_eig: float
    constant_shift_quadform: float


def assemble_hessian(design: AdditiveDesign) -> np.ndarray:
    """H1 + H2: the Gram block matrix plus the block-diagonal penalty."""
    q = design.num_coef
    X1, X2 = design.X1.values, design.X2.values
    H = np.empty((2 * q, 2 * q))
    H[:q, :q] = X1.T @ X1 + design.lambda1 * design.penalty.values
    H[:q, q:] = X1.T @ X2
    H[q:, :q] = H[:q, q:].T
    H[q:, q:] = X2.T @ X2 + design.lambda2 * design.penalty.values
    return H


def hessian_check(design: AdditiveDesign) -> HessianReport:
    """Report whether the stacked Hessian is numerically positive definite."""
    H = assemble_hessian(design)
    q = design.num_coef
    eigs = np.linalg.eigvalsh(H)
    floor = 2 * q * np.finfo(float).eps * max(abs(eigs[0]), abs(eigs[-1]))
    chol_ok = True
    try:
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        chol_ok = False
    z = np.concatenate([np.ones(q), -np.ones(q)]) / np.sqrt(2 * q)
    return HessianReport(
        is_pd=bool(chol_ok and eigs[0] > floor),
        min_eig=float(eigs[0]),
        constant_shift_quadform=float(z @ H @ z),
    )
