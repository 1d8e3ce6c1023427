"""Least-squares bridge estimation for categorical variables.

With empirical conditional frequencies Q[x, w] = P_hat(w | x) and
q[x, t] = mean of phi(y_i, t) over samples with x_i = x, the bridge vector
solves the normal equations H_t = (Q^T Q)^{-1} Q^T q_t, and the statistic's
ingredient is the projection residual (I - P) q_t with P the hat matrix of Q.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bridge_continuous import TGrid, phi_matrices
from .data import Dataset
from .errors import InsufficientDataError, InvalidInputError, RankDeficientError
from .numerics import ComplexVector

__all__ = [
    "CategoricalTable",
    "DiscreteBridge",
    "tabulate",
    "ols_bridge",
    "projected_residual",
    "residual_field_discrete",
]

#: relative singular-value cutoff declaring rank deficiency of Q
RANK_RTOL = 1e-10


def _codes(column: np.ndarray, declared=None):
    """Level labels by first appearance plus integer codes."""
    levels: list = []
    seen: dict = {}
    if declared is not None:
        for lab in declared:
            if lab in seen:
                raise InvalidInputError(f"duplicate declared level {lab!r}")
            seen[lab] = len(levels)
            levels.append(lab)
    codes = np.empty(len(column), dtype=np.intp)
    for i, v in enumerate(column):
        if v not in seen:
            if declared is not None:
                raise InvalidInputError(f"observed level {v!r} not in the declared support")
            seen[v] = len(levels)
            levels.append(v)
        codes[i] = seen[v]
    return levels, codes


@dataclass(frozen=True)
class CategoricalTable:
    """Empirical frequencies of (x, w) cells and per-x means of phi(y, t)."""

    x_levels: list
    w_levels: list
    q_hat: ComplexVector        # (|X|, K)
    Q_hat: np.ndarray           # (|X|, |W|), rows sum to 1
    d_hat: np.ndarray           # (|X|,), n(x)/n
    n: int
    x_codes: np.ndarray         # per-sample level index
    w_codes: np.ndarray
    basis: str


@dataclass(frozen=True)
class DiscreteBridge:
    """Per-grid-column bridge vectors over the W support."""

    H_t: ComplexVector          # (|W|, K)


def _y_values(y: np.ndarray) -> np.ndarray:
    """Numeric stand-ins for categorical outcome labels (first-appearance codes)."""
    if np.issubdtype(np.asarray(y).dtype, np.number):
        return np.asarray(y, dtype=float)
    _, codes = _codes(np.asarray(y, dtype=object))
    return codes.astype(float)


def tabulate(
    data: Dataset,
    t_grid: TGrid,
    basis: str = "complex_exp",
    x_support=None,
    w_support=None,
) -> CategoricalTable:
    """Cell-count ratios Q_hat, d_hat and conditional phi means q_hat.

    Levels are ordered by first appearance unless an explicit support is
    declared; a declared level with zero observations raises
    InsufficientDataError naming the level.
    """
    x_levels, x_codes = _codes(np.asarray(data.x, dtype=object).ravel(), x_support)
    w_levels, w_codes = _codes(np.asarray(data.w, dtype=object).ravel(), w_support)
    n = data.n
    nx, nw = len(x_levels), len(w_levels)
    counts_x = np.bincount(x_codes, minlength=nx).astype(float)
    if np.any(counts_x == 0):
        missing = x_levels[int(np.flatnonzero(counts_x == 0)[0])]
        raise InsufficientDataError(f"x level {missing!r} has no observations")
    counts_w = np.bincount(w_codes, minlength=nw)
    if np.any(counts_w == 0):
        missing = w_levels[int(np.flatnonzero(counts_w == 0)[0])]
        raise InsufficientDataError(f"w level {missing!r} has no observations")

    yv = _y_values(data.y)
    if basis == "indicator":
        y_levels, y_codes = _codes(np.asarray(data.y, dtype=object).ravel())
        k = len(y_levels)
        phis = ComplexVector(
            (y_codes[:, None] == np.arange(k)[None, :]).astype(float),
            np.zeros((n, k)),
        )
    else:
        phis = phi_matrices(yv, t_grid, basis)

    onehot_x = np.zeros((n, nx))
    onehot_x[np.arange(n), x_codes] = 1.0
    q_re = (onehot_x.T @ phis.re) / counts_x[:, None]
    q_im = (onehot_x.T @ phis.im) / counts_x[:, None]

    cell = np.zeros((nx, nw))
    np.add.at(cell, (x_codes, w_codes), 1.0)
    Q = cell / counts_x[:, None]

    return CategoricalTable(
        x_levels=x_levels,
        w_levels=w_levels,
        q_hat=ComplexVector(q_re, q_im),
        Q_hat=Q,
        d_hat=counts_x / n,
        n=n,
        x_codes=x_codes,
        w_codes=w_codes,
        basis=basis,
    )


def ols_bridge(table: CategoricalTable) -> DiscreteBridge:
    """H_t = (Q^T Q)^{-1} Q^T q_t, one column per grid point.

    Raises RankDeficientError (with the numerical rank) when the smallest
    singular value of Q falls below ``RANK_RTOL`` times the largest.
    """
    Q = table.Q_hat
    sv = np.linalg.svd(Q, compute_uv=False)
    rank = int(np.sum(sv > RANK_RTOL * sv[0]))
    if rank < Q.shape[1]:
        raise RankDeficientError(
            f"conditional frequency matrix has rank {rank} < {Q.shape[1]}", rank=rank
        )
    QtQ = Q.T @ Q
    H_re = np.linalg.solve(QtQ, Q.T @ table.q_hat.re)
    H_im = np.linalg.solve(QtQ, Q.T @ table.q_hat.im)
    resid = max(
        float(np.max(np.abs(QtQ @ H_re - Q.T @ table.q_hat.re))),
        float(np.max(np.abs(QtQ @ H_im - Q.T @ table.q_hat.im))),
    )
    if resid > 1e-10:
        raise RankDeficientError(f"normal equations residual {resid:.2e} too large", rank=rank)
    return DiscreteBridge(H_t=ComplexVector(H_re, H_im))


def projected_residual(table: CategoricalTable, bridge: DiscreteBridge) -> ComplexVector:
    """(I - P) q_t columns, orthogonal to the columns of Q by construction."""
    Q = table.Q_hat
    r_re = table.q_hat.re - Q @ bridge.H_t.re
    r_im = table.q_hat.im - Q @ bridge.H_t.im
    ortho = max(
        float(np.max(np.abs(Q.T @ r_re))),
        float(np.max(np.abs(Q.T @ r_im))),
    )
    if ortho > 1e-10:
        raise InvalidInputError(
            f"projected residual is not orthogonal to Q (max {ortho:.2e}); "
            "table and bridge are inconsistent"
        )
    return ComplexVector(r_re, r_im)


def residual_field_discrete(
    table: CategoricalTable,
    bridge: DiscreteBridge,
    data: Dataset,
    t_grid: TGrid,
) -> ComplexVector:
    """Per-sample residuals phi(y_i, t_k) - H_{t_k}[w_i] on an explicit grid."""
    yv = _y_values(np.asarray(data.y, dtype=object).ravel())
    if table.basis == "indicator":
        k = bridge.H_t.re.shape[1]
        _, y_codes = _codes(np.asarray(data.y, dtype=object).ravel())
        phis = ComplexVector(
            (y_codes[:, None] == np.arange(k)[None, :]).astype(float),
            np.zeros((data.n, k)),
        )
    else:
        phis = phi_matrices(yv, t_grid, table.basis)
    re = phis.re - bridge.H_t.re[table.w_codes, :]
    im = phis.im - bridge.H_t.im[table.w_codes, :]
    return ComplexVector(re, im)
