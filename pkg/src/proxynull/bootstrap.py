"""Residual-based wild bootstrap of the test statistics.

Each replicate multiplies the per-sample residual terms by i.i.d. two-point
weights with mean zero and unit variance, then evaluates the same
closed-form statistic on the weighted field.  The residual field is never
refitted inside the loop.  The multiplier stream comes from a counter-based
generator keyed by (seed, replicate, sample), so results are reproducible
at any parallelism level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .bridge_continuous import ResidualField
from .errors import InvalidConfigError, InvalidInputError
from .numerics import ComplexVector
from .teststats import StatisticValue, WeightMeasure, pairwise_weight_matrix

__all__ = [
    "KAPPA",
    "BootstrapConfig",
    "BootstrapResult",
    "multiplier_weights",
    "multiplier_matrix",
    "bootstrap_distribution",
    "decide",
]

#: golden ratio; the two-point multiplier law takes values 1-kappa and kappa
KAPPA = (1.0 + np.sqrt(5.0)) / 2.0

#: P(omega = 1 - kappa); the complement gets kappa
P_LOW = KAPPA / np.sqrt(5.0)


@dataclass(frozen=True)
class BootstrapConfig:
    replications: int = 500
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise InvalidConfigError("need at least 1 bootstrap replication")
        # alpha = 1.0 is allowed as a degenerate bound (0-quantile critical value)
        if not (0.0 < self.alpha <= 1.0):
            raise InvalidConfigError("alpha must lie in (0, 1]")


@dataclass(frozen=True)
class BootstrapResult:
    boot_stats: np.ndarray      # sorted ascending, length B
    critical_value: float
    p_value: float | None = None


def multiplier_weights(n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws of the golden-ratio two-point law (mean 0, variance 1)."""
    if n < 1:
        raise InvalidConfigError("need n >= 1 multipliers")
    u = rng.random(n)
    return np.where(u < P_LOW, 1.0 - KAPPA, KAPPA)


def multiplier_matrix(n: int, replications: int, seed: int) -> np.ndarray:
    """(n, replications) multiplier block from a Philox stream keyed by seed.

    Column b holds draws (seed, b, 0..n-1) of the counter-based stream, so a
    replicate's multipliers do not depend on how work is scheduled.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    u = rng.random((replications, n))
    return np.where(u < P_LOW, 1.0 - KAPPA, KAPPA).T


def _low_rank_factor(rho: np.ndarray) -> np.ndarray:
    """P with P^T P = rho via pivoted Cholesky (rank-revealing, PSD)."""
    c, piv, rank, info = lapack.dpstrf(rho, lower=1, tol=1e-14)
    if info < 0:
        raise InvalidInputError("pairwise weight matrix factorization failed")
    L = np.tril(c)[:, :rank]
    inverse_perm = np.argsort(piv - 1)
    return L[inverse_perm, :].T


def _continuous_boot(
    field: ComplexVector,
    projector: np.ndarray,
    weights: np.ndarray,
) -> np.ndarray:
    """max_t of per-replicate quadratic forms, already divided by n."""
    n, n_t = field.re.shape
    b = weights.shape[1]
    stats = np.zeros((n_t, b))
    for k in range(n_t):
        g = (projector * field.re[:, k][None, :]) @ weights
        stats[k] = np.einsum("ij,ij->j", g, g)
        g = (projector * field.im[:, k][None, :]) @ weights
        stats[k] += np.einsum("ij,ij->j", g, g)
    return stats.max(axis=0) / n


def _discrete_boot(
    field: ComplexVector,
    x_codes: np.ndarray,
    t_weights: np.ndarray,
    weights: np.ndarray,
) -> np.ndarray:
    """Grid-weighted sum over x levels of per-replicate group sums."""
    n = field.re.shape[0]
    b = weights.shape[1]
    out = np.zeros(b)
    for level in range(int(x_codes.max()) + 1):
        mask = x_codes == level
        g_re = field.re[mask].T @ weights[mask]
        g_im = field.im[mask].T @ weights[mask]
        out += t_weights @ (g_re**2 + g_im**2)
    return out / n


def bootstrap_distribution(
    field: ResidualField | ComplexVector,
    cond_points,
    measure: WeightMeasure,
    cfg: BootstrapConfig,
    mode: str = "continuous",
    adjustment: np.ndarray | None = None,
    x_codes: np.ndarray | None = None,
    t_weights: np.ndarray | None = None,
    weights: np.ndarray | None = None,
) -> BootstrapResult:
    """Bootstrap statistics and the (1-alpha) critical value (no p-value yet).

    Modes: ``continuous`` and ``two_proxy`` share the closed-form Gaussian
    integration (the conditioning points decide which); ``discrete`` sums
    multiplier-weighted per-sample terms within x levels.  ``weights`` lets
    tests inject a fixed multiplier block; production draws the Philox
    stream keyed by ``cfg.seed``.
    """
    values = field.values if isinstance(field, ResidualField) else field
    n = values.re.shape[0]
    if weights is None:
        weights = multiplier_matrix(n, cfg.replications, cfg.seed)
    elif weights.shape[0] != n:
        raise InvalidInputError("injected multiplier rows must match the sample size")

    if mode in ("continuous", "two_proxy"):
        rho = pairwise_weight_matrix(cond_points, measure)
        projector = _low_rank_factor(rho)
        if adjustment is not None:
            projector = projector @ adjustment.T
        boot = _continuous_boot(values, projector, weights)
    elif mode == "discrete":
        if x_codes is None or t_weights is None:
            raise InvalidConfigError("discrete mode needs x codes and t weights")
        boot = _discrete_boot(values, x_codes, t_weights, weights)
    else:
        raise InvalidConfigError(f"unknown bootstrap mode {mode!r}")

    boot = np.sort(boot)
    return BootstrapResult(
        boot_stats=boot,
        critical_value=_empirical_quantile(boot, cfg.alpha),
    )


def _empirical_quantile(sorted_stats: np.ndarray, alpha: float) -> float:
    """ceil((1-alpha) B)-th order statistic; 0 when the index degenerates."""
    b = sorted_stats.size
    k = int(np.ceil((1.0 - alpha) * b))
    if k <= 0:
        return 0.0
    return float(sorted_stats[k - 1])


def decide(observed: StatisticValue, boot: BootstrapResult, alpha: float):
    """Rejection decision and add-one p-value.

    Rejects when the observed statistic reaches the critical value
    (inclusive); p = (1 + #{b : boot_b >= observed}) / (B + 1).
    """
    if boot.boot_stats.size == 0:
        raise InvalidConfigError("empty bootstrap distribution")
    critical = _empirical_quantile(boot.boot_stats, alpha)
    p_value = float(
        (1 + np.sum(boot.boot_stats >= observed.delta)) / (boot.boot_stats.size + 1)
    )
    reject = bool(observed.delta >= critical)
    return BootstrapResult(
        boot_stats=boot.boot_stats,
        critical_value=critical,
        p_value=p_value,
    ), reject
