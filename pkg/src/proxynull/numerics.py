"""Dense kernel and linear-algebra primitives shared by the estimators.

Gram matrices are built with Gaussian kernels, scalar or product form for
multi-column inputs.  Regularized symmetric solves go through Cholesky with
jitter escalation and one step of iterative refinement, so the returned
solution always carries a verified residual bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh

from .errors import (
    DegenerateBandwidthError,
    IllConditionedSystemError,
    InvalidInputError,
)

__all__ = [
    "ComplexVector",
    "KernelConfig",
    "SolveResult",
    "gaussian_kernel",
    "gram_matrix",
    "cross_gram",
    "median_heuristic",
    "median_heuristic_columns",
    "solve_regularized_spd",
    "penalized_path_solver",
]

#: residual tolerance of solve_regularized_spd: ||A x - b||_inf <= RTOL * (1 + ||b||_inf)
SOLVE_RTOL = 1e-8


@dataclass(frozen=True)
class KernelConfig:
    """Gaussian kernel with a fixed bandwidth.

    ``bandwidth`` is a positive scalar for 1-d inputs, or a vector of
    per-column bandwidths for multi-column inputs (product kernel).
    """

    bandwidth: np.ndarray
    family: str = "gaussian"

    def __init__(self, bandwidth, family: str = "gaussian"):
        bw = np.atleast_1d(np.asarray(bandwidth, dtype=float))
        if family != "gaussian":
            raise InvalidInputError(f"unsupported kernel family: {family!r}")
        if bw.ndim != 1 or bw.size == 0 or not np.all(np.isfinite(bw)) or np.any(bw <= 0):
            raise InvalidInputError("kernel bandwidth must be positive and finite")
        object.__setattr__(self, "bandwidth", bw)
        object.__setattr__(self, "family", family)


@dataclass(frozen=True)
class ComplexVector:
    """Complex values stored as paired real vectors.

    All downstream statistics only need |z|^2 = re^2 + im^2 and real parts of
    products, so no complex dtype is used anywhere in the hot paths.
    """

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = np.asarray(self.re, dtype=float)
        im = np.asarray(self.im, dtype=float)
        if re.shape != im.shape:
            raise InvalidInputError("re and im must have identical shape")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    def __len__(self) -> int:
        return self.re.shape[0]

    def modulus_sq(self) -> np.ndarray:
        return self.re**2 + self.im**2


def _as_points(points) -> np.ndarray:
    """Coerce to (n, d) float array; 1-d input becomes a single column."""
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if p.ndim != 2:
        raise InvalidInputError("points must be a vector or a 2-d array")
    if not np.all(np.isfinite(p)):
        raise InvalidInputError("points contain non-finite values")
    return p


def gaussian_kernel(a, b, cfg: KernelConfig) -> float:
    """k(a, b) = prod_d exp(-(a_d - b_d)^2 / (2 bw_d^2)), in (0, 1]."""
    av = np.atleast_1d(np.asarray(a, dtype=float))
    bv = np.atleast_1d(np.asarray(b, dtype=float))
    if not (np.all(np.isfinite(av)) and np.all(np.isfinite(bv))):
        raise InvalidInputError("kernel inputs must be finite")
    if av.shape != bv.shape:
        raise InvalidInputError("kernel inputs must have matching shape")
    bw = np.broadcast_to(cfg.bandwidth, av.shape)
    z = (av - bv) / bw
    return float(np.exp(-0.5 * np.sum(z * z)))


def cross_gram(a, b, cfg: KernelConfig) -> np.ndarray:
    """Gram block K[i, j] = k(a_i, b_j) for Gaussian (product) kernels."""
    pa = _as_points(a)
    pb = _as_points(b)
    if pa.shape[1] != pb.shape[1]:
        raise InvalidInputError("point sets must share dimensionality")
    bw = np.broadcast_to(cfg.bandwidth, (pa.shape[1],))
    # sum of per-coordinate squared scaled differences; exactly symmetric
    # when a is b because (x - y)^2 == (y - x)^2 bitwise in IEEE arithmetic
    d2 = np.zeros((pa.shape[0], pb.shape[0]))
    for j in range(pa.shape[1]):
        diff = (pa[:, j, None] - pb[None, :, j]) / bw[j]
        d2 += diff * diff
    return np.exp(-0.5 * d2)


def gram_matrix(points, cfg: KernelConfig) -> np.ndarray:
    """Symmetric PSD Gram matrix of one point set."""
    return cross_gram(points, points, cfg)


def median_heuristic(points) -> float:
    """Median of pairwise distances |p_i - p_j| over i < j.

    Raises
    ------
    DegenerateBandwidthError
        If fewer than two distinct points, or the median distance is zero.
    """
    v = np.asarray(points, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("points contain non-finite values")
    if v.size < 2:
        raise InvalidInputError("median heuristic needs at least 2 points")
    iu, ju = np.triu_indices(v.size, k=1)
    med = float(np.median(np.abs(v[iu] - v[ju])))
    if med <= 0.0:
        raise DegenerateBandwidthError(
            "median pairwise distance is zero (too many identical points)"
        )
    return med


def median_heuristic_columns(points) -> np.ndarray:
    """Per-column median-heuristic bandwidths for a (n, d) point set."""
    p = _as_points(points)
    return np.array([median_heuristic(p[:, j]) for j in range(p.shape[1])])


@dataclass(frozen=True)
class SolveResult:
    """Solution of a regularized symmetric system plus the jitter applied."""

    x: np.ndarray
    jitter: float
    residual: float = field(default=0.0)


def _try_solve(A: np.ndarray, B: np.ndarray, jitter: float):
    n = A.shape[0]
    M = A if jitter == 0.0 else A + jitter * np.eye(n)
    try:
        c, low = cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None, np.inf
    X = cho_solve((c, low), B, check_finite=False)
    # one refinement step tightens the residual to near machine level even
    # for badly scaled systems
    R = B - M @ X
    X = X + cho_solve((c, low), R, check_finite=False)
    resid = float(np.max(np.abs(B - M @ X)))
    return X, resid


def solve_regularized_spd(A: np.ndarray, B: np.ndarray, jitter: float = 0.0) -> SolveResult:
    """Solve (A + jitter I) X = B for symmetric positive semidefinite A.

    Factorization is attempted at the requested jitter and escalated by
    factors of 10 up to ``1e-4 * trace(A)/n`` whenever Cholesky fails or the
    verified residual exceeds ``SOLVE_RTOL * (1 + ||B||_inf)``.

    Raises
    ------
    IllConditionedSystemError
        If no jitter level up to the cap produces an acceptable solve; the
        exception carries a condition-number estimate.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError("A must be square")
    if B.shape[0] != A.shape[0]:
        raise InvalidInputError("B row count must match the order of A")
    if jitter < 0:
        raise InvalidInputError("jitter must be nonnegative")
    n = A.shape[0]
    tol = SOLVE_RTOL * (1.0 + float(np.max(np.abs(B))) if B.size else 1.0)
    scale = float(np.trace(A)) / n if n else 1.0
    scale = scale if scale > 0 else 1.0

    ladder = [jitter]
    j = max(jitter, 1e-12 * scale)
    cap = 1e-4 * scale
    while j <= cap:
        j *= 10.0
        ladder.append(min(j, cap))
        if ladder[-1] == cap:
            break
    for jit in ladder:
        X, resid = _try_solve(A, B, jit)
        if X is not None and resid <= tol:
            return SolveResult(x=X, jitter=jit, residual=resid)
    cond = float(np.linalg.cond(A + ladder[-1] * np.eye(n)))
    raise IllConditionedSystemError(
        f"system remained ill-conditioned after jitter escalation to {ladder[-1]:.3e}",
        condition=cond,
    )


def penalized_path_solver(G: np.ndarray, M: np.ndarray, rhs: np.ndarray):
    """Factor the pencil (G, M) once so that (G + c M)^-1 rhs is cheap for many c.

    G must be symmetric PSD and M symmetric positive definite.  Returns a
    closure ``solve(c) -> X`` built from the generalized eigendecomposition
    G V = M V diag(mu), V^T M V = I, so each shift costs two dense products.
    """
    Gs = 0.5 * (G + G.T)
    Ms = 0.5 * (M + M.T)
    n = Ms.shape[0]
    # small ridge keeps the Cholesky inside eigh stable for near-singular M
    mu, V = eigh(Gs, Ms + 1e-10 * np.eye(n))
    mu = np.maximum(mu, 0.0)
    C = V.T @ rhs

    def solve(c: float) -> np.ndarray:
        return V @ (C / (mu + c)[:, None])

    return solve
