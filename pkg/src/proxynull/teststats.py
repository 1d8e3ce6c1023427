"""Test statistics assembled from residual fields.

The continuous statistic integrates |T_n(s, t)|^2 over the characteristic
weight index s in closed form: with m(c, s) = exp(i s c) and a centered
Gaussian measure of scale sigma_s,

    int |T_n(s, t)|^2 dmu(s)
        = (1/n) sum_ij Re[U_i(t) conj(U_j(t))] exp(-sigma_s^2 ||c_i - c_j||^2 / 2),

so no numerical quadrature is needed.  The discrete statistic aggregates
||T_n(t)||^2 over the grid with normalized Gaussian weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bridge_continuous import ResidualField, TGrid
from .bridge_discrete import CategoricalTable
from .errors import InvalidConfigError, InvalidInputError
from .numerics import ComplexVector

__all__ = [
    "WeightMeasure",
    "StatisticValue",
    "pairwise_weight_matrix",
    "s_integrated_square",
    "delta_continuous",
    "delta_discrete",
    "t_grid_weights",
]


@dataclass(frozen=True)
class WeightMeasure:
    """Centered Gaussian measure for the weight index."""

    scale: float = 2.0
    family: str = "gaussian"

    def __post_init__(self):
        if self.family != "gaussian":
            raise InvalidConfigError(f"unsupported weight measure family {self.family!r}")
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise InvalidConfigError("weight measure scale must be positive")


@dataclass(frozen=True)
class StatisticValue:
    """Aggregated statistic with its per-grid-point profile."""

    delta: float
    per_t: np.ndarray
    argmax_t: int


def _cond_array(cond_points) -> np.ndarray:
    c = np.asarray(cond_points, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    if c.ndim != 2:
        raise InvalidInputError("conditioning points must be a vector or 2-d array")
    if not np.all(np.isfinite(c)):
        raise InvalidInputError("conditioning points contain non-finite values")
    return c


def pairwise_weight_matrix(cond_points, measure: WeightMeasure) -> np.ndarray:
    """rho[i, j] = prod_d exp(-sigma_s^2 (c_id - c_jd)^2 / 2).

    Equals the integral of m(c_i, s) conj(m(c_j, s)) over the Gaussian weight
    measure; one factor per conditioning coordinate (x alone, or the (x, z)
    pair in the two-proxy mode).
    """
    c = _cond_array(cond_points)
    s2 = measure.scale**2
    d2 = np.zeros((c.shape[0], c.shape[0]))
    for j in range(c.shape[1]):
        diff = c[:, j, None] - c[None, :, j]
        d2 += diff * diff
    return np.exp(-0.5 * s2 * d2)


def s_integrated_square(
    residual_t: ComplexVector,
    cond_points,
    measure: WeightMeasure,
    rho: np.ndarray | None = None,
) -> float:
    """Closed form of int |T_n(s, t)|^2 dmu(s) for a single grid column.

    ``rho`` may carry a precomputed pairwise weight matrix to share across
    grid columns and bootstrap replicates.
    """
    n = len(residual_t)
    c = _cond_array(cond_points)
    if c.shape[0] != n:
        raise InvalidInputError("residual and conditioning lengths differ")
    if rho is None:
        rho = pairwise_weight_matrix(c, measure)
    re, im = residual_t.re, residual_t.im
    return float(re @ (rho @ re) + im @ (rho @ im)) / n


def delta_continuous(
    field: ResidualField,
    cond_points,
    measure: WeightMeasure,
    adjustment: np.ndarray | None = None,
) -> StatisticValue:
    """max over grid columns of the s-integrated squared residual process.

    ``adjustment`` (optional, n x n) replaces each residual column u by
    M^T u before the quadratic form; harness passes the moment-projection
    matrix here so that the statistic tests the component of the restriction
    no bridge perturbation could explain.
    """
    if field.n_t == 0:
        raise InvalidConfigError("empty residual field")
    rho = pairwise_weight_matrix(cond_points, measure)
    re = field.values.re
    im = field.values.im
    if adjustment is not None:
        re = adjustment.T @ re
        im = adjustment.T @ im
    per_t = (np.sum(re * (rho @ re), axis=0) + np.sum(im * (rho @ im), axis=0)) / field.n
    arg = int(np.argmax(per_t))
    return StatisticValue(delta=float(per_t[arg]), per_t=per_t, argmax_t=arg)


def t_grid_weights(t_grid: TGrid, measure: WeightMeasure) -> np.ndarray:
    """Normalized Gaussian-density quadrature weights on the t grid."""
    t = t_grid.points
    w = np.exp(-0.5 * (t / measure.scale) ** 2)
    return w / w.sum()


def delta_discrete(
    table: CategoricalTable,
    projected: ComplexVector,
    t_grid: TGrid,
    measure: WeightMeasure,
) -> StatisticValue:
    """Weighted grid aggregation of ||T_n(t)||^2 with T_n = sqrt(n) D (I-P) q_t."""
    if projected.re.shape[1] != len(t_grid):
        raise InvalidInputError("projected residual columns do not match the t grid")
    scale = np.sqrt(table.n) * table.d_hat[:, None]
    t_re = scale * projected.re
    t_im = scale * projected.im
    per_t = np.sum(t_re**2 + t_im**2, axis=0)
    weights = t_grid_weights(t_grid, measure)
    delta = float(weights @ per_t)
    return StatisticValue(delta=delta, per_t=per_t, argmax_t=int(np.argmax(per_t)))
