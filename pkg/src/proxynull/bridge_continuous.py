"""Kernel estimation of the bridge function for continuous variables.

The bridge H(w, t) is the least-norm RKHS solution of the conditional
restriction E[phi(Y, t) - H(W, t) | X] = 0.  With training Gram matrices
K_W and K_X, the Tikhonov-regularized representer coefficients solve

    (K_W K_X K_W + n^2 lambda K_W) alpha_t = K_W K_X phi(y, t),

one right-hand side per grid point t (real and imaginary parts separately).
This is the stationarity condition of the V-statistic risk
sum_ij Delta_i Delta_j K_X[i,j] / n^2 + lambda ||H||^2 under the representer
expansion H = sum_i alpha_i k_W(w_i, .).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import (
    EstimationFailureError,
    IllConditionedSystemError,
    InvalidConfigError,
    InvalidInputError,
)
from .numerics import (
    ComplexVector,
    KernelConfig,
    cross_gram,
    gram_matrix,
    penalized_path_solver,
    solve_regularized_spd,
)

__all__ = [
    "BASES",
    "TGrid",
    "BridgeEstimate",
    "ResidualField",
    "phi",
    "phi_matrices",
    "fit",
    "select_lambda",
    "residuals",
    "cross_fit_residuals",
    "moment_weight_adjustment",
    "default_lambda_grid",
]

BASES = ("complex_exp", "sin", "cos", "identity")

#: relative certificate for the fitted linear systems
FIT_RTOL = 1e-7


@dataclass(frozen=True)
class TGrid:
    """Equi-distant positive grid of frequency indices."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise InvalidConfigError("t grid must be a nonempty vector")
        if np.any(pts <= 0):
            raise InvalidConfigError("t grid points must be positive")
        if pts.size > 1:
            steps = np.diff(pts)
            if np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > 1e-12:
                raise InvalidConfigError("t grid must be strictly increasing and equi-distant")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.size

    @classmethod
    def regular(cls, k: int, t_max: float) -> "TGrid":
        """K equi-distant points in (0, t_max]."""
        if k < 1 or t_max <= 0:
            raise InvalidConfigError("need k >= 1 and t_max > 0")
        return cls(np.linspace(t_max / k, t_max, k))


@dataclass(frozen=True)
class BridgeEstimate:
    """Fitted bridge: per-t representer coefficients over the training W points."""

    mode: str                      # "pmcr" or "mmr"
    t_grid: TGrid | None           # None in mmr mode
    alpha: ComplexVector           # (n, K) coefficient columns
    w_train: np.ndarray
    kernel_w: KernelConfig
    lam: float
    basis: str

    def n_train(self) -> int:
        return self.alpha.re.shape[0]

    def predict(self, w) -> ComplexVector:
        """H(w, t_k) for new points w, all grid columns at once."""
        kw = cross_gram(w, self.w_train, self.kernel_w)
        return ComplexVector(kw @ self.alpha.re, kw @ self.alpha.im)


@dataclass(frozen=True)
class ResidualField:
    """U_i(t_k) = phi(y_i, t_k) - H(w_i, t_k) over samples i and grid columns k."""

    values: ComplexVector          # (n, K)
    t_grid: TGrid | None
    basis: str

    @property
    def n(self) -> int:
        return self.values.re.shape[0]

    @property
    def n_t(self) -> int:
        return self.values.re.shape[1]


def phi(y, t: float, basis: str = "complex_exp") -> ComplexVector:
    """Test-function family evaluated at (y, t).

    complex_exp -> (cos ty, sin ty); sin -> (sin ty, 0); cos -> (cos ty, 0);
    identity -> (y, 0), the first-moment (MMR) mode.
    """
    yv = np.atleast_1d(np.asarray(y, dtype=float))
    if not np.all(np.isfinite(yv)) or not np.isfinite(t):
        raise InvalidInputError("phi inputs must be finite")
    if basis == "complex_exp":
        return ComplexVector(np.cos(t * yv), np.sin(t * yv))
    if basis == "sin":
        return ComplexVector(np.sin(t * yv), np.zeros_like(yv))
    if basis == "cos":
        return ComplexVector(np.cos(t * yv), np.zeros_like(yv))
    if basis == "identity":
        return ComplexVector(yv.copy(), np.zeros_like(yv))
    raise InvalidConfigError(f"unknown basis {basis!r}; expected one of {BASES}")


def phi_matrices(y: np.ndarray, t_grid: TGrid | None, basis: str) -> ComplexVector:
    """phi(y_i, t_k) as (n, K) re/im matrices; identity basis has one column."""
    y = np.asarray(y, dtype=float)
    if basis == "identity":
        return ComplexVector(y[:, None].copy(), np.zeros((y.size, 1)))
    if t_grid is None:
        raise InvalidConfigError(f"basis {basis!r} requires a t grid")
    ty = np.outer(y, t_grid.points)
    if basis == "complex_exp":
        return ComplexVector(np.cos(ty), np.sin(ty))
    if basis == "sin":
        return ComplexVector(np.sin(ty), np.zeros_like(ty))
    if basis == "cos":
        return ComplexVector(np.cos(ty), np.zeros_like(ty))
    raise InvalidConfigError(f"unknown basis {basis!r}; expected one of {BASES}")


def default_lambda_grid(num: int = 50, low: float = 4.9e-6, high: float = 0.25) -> np.ndarray:
    """Log-spaced regularization grid."""
    return np.geomspace(low, high, num)


def _conditioning_matrix(data: Dataset) -> np.ndarray:
    x = np.asarray(data.x, dtype=float)
    return x if x.ndim == 2 else x[:, None]


def _fit_arrays(
    x: np.ndarray,
    w: np.ndarray,
    phis: ComplexVector,
    lam: float,
    kernel_w: KernelConfig,
    kernel_x: KernelConfig,
) -> ComplexVector:
    """Solve the representer system for all phi columns at one lambda."""
    n = x.shape[0]
    Kw = gram_matrix(w, kernel_w)
    Kx = gram_matrix(x, kernel_x)
    A = Kw @ Kx @ Kw + (n * n * lam) * Kw
    A = 0.5 * (A + A.T)
    rhs = Kw @ (Kx @ np.concatenate([phis.re, phis.im], axis=1))
    try:
        sol = solve_regularized_spd(A, rhs)
    except IllConditionedSystemError as exc:
        raise EstimationFailureError(
            f"bridge system is singular at lambda={lam:.3e}: {exc}"
        ) from exc
    k = phis.re.shape[1]
    resid = np.max(np.abs(A @ sol.x - rhs))
    if resid > FIT_RTOL * (1.0 + np.max(np.abs(rhs))):
        raise EstimationFailureError(
            f"bridge system certificate failed: residual {resid:.3e}"
        )
    return ComplexVector(sol.x[:, :k], sol.x[:, k:])


def fit(
    data: Dataset,
    t_grid: TGrid | None,
    lam: float,
    kernel_w: KernelConfig,
    kernel_x: KernelConfig,
    basis: str = "complex_exp",
) -> BridgeEstimate:
    """Fit the regularized bridge on the full sample.

    ``basis="identity"`` gives the first-moment (MMR) mode; the t grid is
    ignored there and the estimate has a single coefficient column.
    """
    if lam <= 0 or not np.isfinite(lam):
        raise InvalidConfigError("lambda must be positive and finite")
    if data.n < 2:
        raise InvalidInputError("need at least 2 samples to fit")
    x = _conditioning_matrix(data)
    w = np.asarray(data.w, dtype=float)
    y = np.asarray(data.y, dtype=float)
    grid = None if basis == "identity" else t_grid
    phis = phi_matrices(y, grid, basis)
    alpha = _fit_arrays(x, w, phis, lam, kernel_w, kernel_x)
    return BridgeEstimate(
        mode="mmr" if basis == "identity" else "pmcr",
        t_grid=grid,
        alpha=alpha,
        w_train=w.copy(),
        kernel_w=kernel_w,
        lam=float(lam),
        basis=basis,
    )


def residuals(bridge: BridgeEstimate, data: Dataset) -> ResidualField:
    """phi(y_i, t_k) - H(w_i, t_k) on an arbitrary evaluation sample."""
    y = np.asarray(data.y, dtype=float)
    phis = phi_matrices(y, bridge.t_grid, bridge.basis)
    pred = bridge.predict(np.asarray(data.w, dtype=float))
    if pred.re.shape != phis.re.shape:
        raise InvalidInputError("bridge and data have incompatible shapes")
    return ResidualField(
        values=ComplexVector(phis.re - pred.re, phis.im - pred.im),
        t_grid=bridge.t_grid,
        basis=bridge.basis,
    )


def _fold_indices(n: int, folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    perm = rng.permutation(n)
    return [perm[f::folds] for f in range(folds)]


def select_lambda(
    data: Dataset,
    t_grid: TGrid | None,
    lambda_grid: np.ndarray,
    folds: int,
    kernel_w: KernelConfig,
    kernel_x: KernelConfig,
    basis: str,
    rng: np.random.Generator,
    risk_kernel: np.ndarray | None = None,
) -> float:
    """K-fold cross-validation over the regularization grid.

    Minimizes the held-out unpenalized V-statistic risk
    sum_{i,j in fold} Re[Delta_i conj(Delta_j)] R[i,j] / m^2, averaged over
    folds and grid columns, where R defaults to the Gram matrix of the
    conditioning variable (``risk_kernel`` lets the caller weight the risk by
    a different conditioning set, e.g. the (x, z) product kernel in the
    two-proxy mode).  Ties are broken toward the larger lambda.
    """
    lams = np.asarray(lambda_grid, dtype=float)
    if lams.size == 0 or np.any(lams <= 0):
        raise InvalidConfigError("lambda grid must be nonempty and positive")
    if folds < 2:
        raise InvalidConfigError("need at least 2 folds")
    order = np.argsort(lams)
    lams = lams[order]
    if data.n < 2 * folds:
        raise InvalidConfigError("sample too small for the requested folds")

    x = _conditioning_matrix(data)
    w = np.asarray(data.w, dtype=float)
    y = np.asarray(data.y, dtype=float)
    grid = None if basis == "identity" else t_grid
    phis = phi_matrices(y, grid, basis)
    P = np.concatenate([phis.re, phis.im], axis=1)
    k = phis.re.shape[1]

    risks = np.zeros(lams.size)
    for ho in _fold_indices(data.n, folds, rng):
        tr = np.setdiff1d(np.arange(data.n), ho)
        if ho.size == 0 or tr.size == 0:
            raise InvalidConfigError("empty cross-validation fold")
        m = ho.size
        n_tr = tr.size
        Kw = gram_matrix(w[tr], kernel_w)
        Kx = gram_matrix(x[tr], kernel_x)
        G = Kw @ Kx @ Kw
        rhs = Kw @ (Kx @ P[tr])
        solve_at = penalized_path_solver(G, Kw, rhs)
        K_cross = cross_gram(w[ho], w[tr], kernel_w)
        if risk_kernel is None:
            R_ho = gram_matrix(x[ho], kernel_x)
        else:
            R_ho = risk_kernel[np.ix_(ho, ho)]
        for i, lam in enumerate(lams):
            alpha = solve_at(n_tr * n_tr * lam)
            D = P[ho] - K_cross @ alpha
            risks[i] += float(np.sum(D * (R_ho @ D))) / (m * m)
    risks /= folds
    # average over t columns is implicit: the stacked columns just sum; the
    # argmin is unaffected by the 1/K factor
    best = 0
    for i in range(lams.size):
        if risks[i] <= risks[best]:
            best = i
    return float(lams[best])


def cross_fit_residuals(
    data: Dataset,
    t_grid: TGrid | None,
    lam: float,
    kernel_w: KernelConfig,
    kernel_x: KernelConfig,
    basis: str,
    folds: int,
    rng: np.random.Generator,
) -> ResidualField:
    """Out-of-fold residual field at a fixed lambda.

    Each fold's residuals come from a bridge fitted on the complementary
    folds, so the field never evaluates a bridge on its own training points.
    In-sample residuals of a kernel fit are nearly orthogonal to all smooth
    weight functions by construction (exact interpolation as lambda -> 0),
    which would destroy the finite-sample power of any moment test built on
    them; the held-out field keeps the restriction violations visible.
    """
    if folds < 2:
        raise InvalidConfigError("need at least 2 folds")
    x = _conditioning_matrix(data)
    w = np.asarray(data.w, dtype=float)
    y = np.asarray(data.y, dtype=float)
    grid = None if basis == "identity" else t_grid
    phis = phi_matrices(y, grid, basis)
    out_re = np.empty_like(phis.re)
    out_im = np.empty_like(phis.im)
    for ho in _fold_indices(data.n, folds, rng):
        tr = np.setdiff1d(np.arange(data.n), ho)
        sub = ComplexVector(phis.re[tr], phis.im[tr])
        alpha = _fit_arrays(x[tr], w[tr], sub, lam, kernel_w, kernel_x)
        K_cross = cross_gram(w[ho], w[tr], kernel_w)
        out_re[ho] = phis.re[ho] - K_cross @ alpha.re
        out_im[ho] = phis.im[ho] - K_cross @ alpha.im
    return ResidualField(values=ComplexVector(out_re, out_im), t_grid=grid, basis=basis)


def moment_weight_adjustment(
    data: Dataset,
    lam: float,
    kernel_w: KernelConfig,
    kernel_x: KernelConfig,
) -> np.ndarray:
    """Matrix M = I - L that removes weight components explainable by W.

    L = K_X K_W (K_W K_X K_W + n^2 lam K_W)^{-1} K_W maps sample values of a
    weight function m(x) to the fitted values of its best RKHS approximation
    by conditional moments of W-functions.  Testing with weights (I - L) m
    makes the statistic insensitive, to first order, to perturbations of the
    fitted bridge along any RKHS direction: for h = K_W beta,
    h^T (I - L) m = n^2 lam beta^T K_W A^{-1} K_W m -> 0 with lam.  The
    corrected process is exactly the recentred form whose null covariance the
    asymptotic theory describes, and its noncentrality keeps only the part of
    the restriction violation that no bridge could absorb.
    """
    x = _conditioning_matrix(data)
    w = np.asarray(data.w, dtype=float)
    n = data.n
    Kw = gram_matrix(w, kernel_w)
    Kx = gram_matrix(x, kernel_x)
    A = Kw @ Kx @ Kw + (n * n * lam) * Kw
    A = 0.5 * (A + A.T)
    sol = solve_regularized_spd(A, Kw)
    L = Kx @ (Kw @ sol.x)
    return np.eye(n) - L
