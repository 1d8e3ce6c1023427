"""Synthetic data generators and closed-form oracles.

Covers the linear-Gaussian family (with its analytic bridge, first-moment
solution, and solvability margin), the random nonlinear confounder model,
the categorical tables, the standardized two-proxy designs, and the
covariate-adjustment design.  All generators draw from an explicit
``numpy.random.Generator`` and are deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import CATEGORICAL, CONTINUOUS, Dataset
from .errors import (
    InvalidConfigError,
    InvalidInputError,
    NoSolutionError,
    UndefinedSolutionError,
)
from .numerics import ComplexVector

__all__ = [
    "LinearGaussianParams",
    "sample_linear_gaussian",
    "RandomScmConfig",
    "RandomScm",
    "draw_random_scm",
    "gen_random_scm",
    "DiscreteDGP",
    "miao_tables",
    "gen_discrete",
    "gen_two_proxy",
    "gen_covariate_adjustment",
    "AnalyticBridge",
    "analytic_bridge",
    "mmr_first_moment_solution",
    "SolvabilityResult",
    "solvability_linear_gaussian",
    "example1_solvability",
    "example1_threshold",
]


# ---------------------------------------------------------------------------
# linear-Gaussian family


@dataclass(frozen=True)
class LinearGaussianParams:
    """Structural coefficients of U -> X, U -> W, (U, X, W) -> Y.

    U = e_U, X = alpha_u U + alpha_0 + e_X, W = beta_u U + beta_0 + e_W,
    Y = gamma_u U + gamma_x X + gamma_w W + gamma_0 + e_Y, all noises
    standard normal.
    """

    alpha_u: float = 1.0
    alpha_0: float = 0.0
    beta_u: float = 1.0
    beta_0: float = 0.0
    gamma_u: float = 1.0
    gamma_x: float = 0.0
    gamma_w: float = 0.0
    gamma_0: float = 0.0

    def __post_init__(self):
        for name in ("alpha_u", "alpha_0", "beta_u", "beta_0",
                     "gamma_u", "gamma_x", "gamma_w", "gamma_0"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidConfigError(f"parameter {name} must be finite")


def sample_linear_gaussian(
    params: LinearGaussianParams, n: int, rng: np.random.Generator
) -> Dataset:
    if n < 1:
        raise InvalidConfigError("need n >= 1")
    u = rng.normal(size=n)
    x = params.alpha_u * u + params.alpha_0 + rng.normal(size=n)
    w = params.beta_u * u + params.beta_0 + rng.normal(size=n)
    y = (
        params.gamma_u * u
        + params.gamma_x * x
        + params.gamma_w * w
        + params.gamma_0
        + rng.normal(size=n)
    )
    return Dataset(x=x, y=y, w=w)


def _gaussian_conditionals(
    alpha_u, beta_u, gamma_u, gamma_x, gamma_w,
    alpha_0=0.0, beta_0=0.0, gamma_0=0.0,
    sx=1.0, sw=1.0, sy=1.0,
):
    """Conditional moments of W | X and Y | X in the linear-Gaussian model.

    Noise scales (sx, sw, sy) generalize the unit-variance model so that
    designs with pre-standardized variables fit the same algebra.
    """
    var_x = alpha_u**2 + sx**2
    var_w = beta_u**2 + sw**2
    cov_xw = alpha_u * beta_u
    cov_xy = gamma_u * alpha_u + gamma_x * var_x + gamma_w * cov_xw
    cov_wy = gamma_u * beta_u + gamma_x * cov_xw + gamma_w * var_w
    var_y = (
        gamma_u**2
        + gamma_x**2 * var_x
        + gamma_w**2 * var_w
        + 2 * gamma_u * gamma_x * alpha_u
        + 2 * gamma_u * gamma_w * beta_u
        + 2 * gamma_x * gamma_w * cov_xw
        + sy**2
    )
    mu_x = alpha_0
    mu_w = beta_0
    mu_y = gamma_u * 0.0 + gamma_x * mu_x + gamma_w * mu_w + gamma_0
    slope_w = cov_xw / var_x
    slope_y = cov_xy / var_x
    return {
        "slope_w": slope_w,
        "icept_w": mu_w - slope_w * mu_x,
        "var_w_given_x": var_w - cov_xw**2 / var_x,
        "slope_y": slope_y,
        "icept_y": mu_y - slope_y * mu_x,
        "var_y_given_x": var_y - cov_xy**2 / var_x,
    }


@dataclass(frozen=True)
class SolvabilityResult:
    solvable: bool
    margin: float


def _solvability_margin(cond) -> float:
    """sigma^2 of the candidate Gaussian bridge; a solution exists iff > 0."""
    if cond["slope_w"] == 0.0:
        raise UndefinedSolutionError("conditional slope of W on X is zero")
    ratio = cond["slope_y"] / cond["slope_w"]
    return cond["var_y_given_x"] - ratio**2 * cond["var_w_given_x"]


def solvability_linear_gaussian(params: LinearGaussianParams) -> SolvabilityResult:
    """Existence of a square-integrable bridge for these coefficients.

    The margin is the variance parameter of the Gaussian bridge implied by
    the conditional laws of W | X and Y | X; the integral equation has a
    solution exactly when it is positive.
    """
    if params.alpha_u * params.beta_u == 0.0:
        raise UndefinedSolutionError("alpha_u and beta_u must both be nonzero")
    cond = _gaussian_conditionals(
        params.alpha_u, params.beta_u, params.gamma_u,
        params.gamma_x, params.gamma_w,
        params.alpha_0, params.beta_0, params.gamma_0,
    )
    margin = _solvability_margin(cond)
    return SolvabilityResult(solvable=bool(margin > 0.0), margin=float(margin))


def example1_solvability(gamma_w: float) -> SolvabilityResult:
    """Solvability margin of the standardized two-proxy design.

    X and W are pre-standardized by their population scale sqrt(5) before Y
    is formed, which maps to the scaled-noise linear-Gaussian algebra with
    alpha_u = 2/sqrt(5), beta_u = -2/sqrt(5), unit X-coefficient, and noise
    scales 1/sqrt(5) on X and W.
    """
    s5 = np.sqrt(5.0)
    cond = _gaussian_conditionals(
        alpha_u=2.0 / s5, beta_u=-2.0 / s5, gamma_u=1.0,
        gamma_x=1.0, gamma_w=float(gamma_w),
        sx=1.0 / s5, sw=1.0 / s5, sy=1.0,
    )
    margin = _solvability_margin(cond)
    return SolvabilityResult(solvable=bool(margin > 0.0), margin=float(margin))


def example1_threshold() -> float:
    """gamma_w value at which the standardized design becomes solvable."""
    return float((-15.0 + 36.0 * np.sqrt(5.0)) / (72.0 + 16.0 * np.sqrt(5.0)))


@dataclass(frozen=True)
class AnalyticBridge:
    """Closed-form Gaussian bridge of the no-direct-effect linear model.

    h(w, y) is the normal density with mean ``intercept + slope * w`` and
    variance ``variance``; its frequency transform is
    H(w, t) = exp(i t (intercept + slope w) - t^2 variance / 2).
    """

    slope: float
    intercept: float
    variance: float

    def h(self, w, y):
        sd = np.sqrt(self.variance)
        z = (np.asarray(y, dtype=float) - self.intercept - self.slope * np.asarray(w, dtype=float)) / sd
        return np.exp(-0.5 * z * z) / (sd * np.sqrt(2 * np.pi))

    def transform(self, w, t) -> ComplexVector:
        """H(w, t) for broadcastable w and t."""
        w = np.asarray(w, dtype=float)
        t = np.asarray(t, dtype=float)
        mean = self.intercept + self.slope * w
        damp = np.exp(-0.5 * self.variance * t**2)
        return ComplexVector(damp * np.cos(t * mean), damp * np.sin(t * mean))

    def __call__(self, w, t) -> complex:
        v = self.transform(w, t)
        return complex(v.re, v.im)


def analytic_bridge(params: LinearGaussianParams) -> AnalyticBridge:
    """Exact bridge for the linear-Gaussian model without direct W or X effects.

    Requires gamma_x = gamma_w = 0.  The slope is the ratio of the
    U-conditional slopes gamma_u / beta_u and the variance 1 - (gamma_u/beta_u)^2;
    a nonpositive variance means no square-integrable solution exists.
    """
    if params.gamma_x != 0.0 or params.gamma_w != 0.0:
        raise InvalidConfigError("analytic bridge requires gamma_x = gamma_w = 0")
    if params.beta_u == 0.0:
        raise NoSolutionError("beta_u = 0 leaves W uninformative about U")
    slope = params.gamma_u / params.beta_u
    variance = 1.0 - slope**2
    if variance <= 0.0:
        raise NoSolutionError(
            f"bridge variance {variance:.4f} <= 0: no square-integrable solution"
        )
    intercept = params.gamma_0 - slope * params.beta_0
    return AnalyticBridge(slope=float(slope), intercept=float(intercept), variance=float(variance))


def mmr_first_moment_solution(params: LinearGaussianParams) -> tuple[float, float]:
    """(b_w, b_0) with E[Y - b_w W - b_0 | X] = 0 despite a direct X effect.

    Valid for gamma_w = 0; certifies that a first-moment restriction cannot
    separate this alternative from the null.
    """
    if params.gamma_w != 0.0:
        raise InvalidConfigError("first-moment solution requires gamma_w = 0")
    if params.alpha_u * params.beta_u == 0.0:
        raise UndefinedSolutionError("alpha_u and beta_u must both be nonzero")
    b_w = ((params.alpha_u**2 + 1.0) * params.gamma_x + params.gamma_u * params.alpha_u) / (
        params.beta_u * params.alpha_u
    )
    b_0 = params.gamma_0 + params.gamma_x * params.alpha_0 - b_w * params.beta_0
    return float(b_w), float(b_0)


# ---------------------------------------------------------------------------
# random nonlinear confounder model


FUNCTION_POOL = ("linear", "tanh", "sin", "sqrt")
NOISE_POOL = ("gaussian", "uniform", "exponential", "gamma")


def _apply_function(name: str, v: np.ndarray, coefficient: float) -> np.ndarray:
    if name == "linear":
        return coefficient * v
    if name == "tanh":
        return np.tanh(v)
    if name == "sin":
        return np.sin(v)
    if name == "sqrt":
        # signed square root keeps the map defined on all reals
        return np.sign(v) * np.sqrt(np.abs(v))
    raise InvalidConfigError(f"unknown function {name!r}")


def _draw_noise(name: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """Centered draws; variances are the families' natural values."""
    if name == "gaussian":
        return rng.normal(size=n)
    if name == "uniform":
        s = np.sqrt(3.0)
        return rng.uniform(-s, s, size=n)
    if name == "exponential":
        return rng.exponential(1.0, size=n) - 1.0
    if name == "gamma":
        return rng.gamma(2.0, 1.0, size=n) - 2.0
    raise InvalidConfigError(f"unknown noise family {name!r}")


@dataclass(frozen=True)
class RandomScmConfig:
    hypothesis: str = "h0"
    function_pool: tuple = FUNCTION_POOL
    noise_pool: tuple = NOISE_POOL
    seed: int = 0

    def __post_init__(self):
        if self.hypothesis not in ("h0", "h1"):
            raise InvalidConfigError("hypothesis must be 'h0' or 'h1'")
        if not self.function_pool or not self.noise_pool:
            raise InvalidConfigError("function and noise pools must be nonempty")
        for f in self.function_pool:
            if f not in FUNCTION_POOL:
                raise InvalidConfigError(f"unknown pool function {f!r}")
        for f in self.noise_pool:
            if f not in NOISE_POOL:
                raise InvalidConfigError(f"unknown noise family {f!r}")


@dataclass(frozen=True)
class RandomScm:
    """One drawn structure: per-node functions, noises, and edge coefficients.

    Effects combine additively across parents; linear edges carry a random
    coefficient with magnitude in [0.5, 1.5] and random sign, nonlinear pool
    functions are applied to the parent directly.
    """

    hypothesis: str
    functions: dict
    noises: dict
    coefficients: dict = field(default_factory=dict)

    def node_effect(self, node: str, parent: str, values: np.ndarray) -> np.ndarray:
        return _apply_function(
            self.functions[node], values, self.coefficients.get((node, parent), 1.0)
        )

    def sample(self, n: int, rng: np.random.Generator):
        """Drawn dataset plus the latent confounder column."""
        u = _draw_noise(self.noises["u"], n, rng)
        x = self.node_effect("x", "u", u) + _draw_noise(self.noises["x"], n, rng)
        w = self.node_effect("w", "u", u) + _draw_noise(self.noises["w"], n, rng)
        y = self.node_effect("y", "u", u)
        if self.hypothesis == "h1":
            y = y + self.node_effect("y", "x", x)
        y = y + _draw_noise(self.noises["y"], n, rng)
        return Dataset(x=x, y=y, w=w), u


def draw_random_scm(cfg: RandomScmConfig, rng: np.random.Generator) -> RandomScm:
    functions = {node: cfg.function_pool[rng.integers(len(cfg.function_pool))]
                 for node in ("u", "x", "w", "y")}
    noises = {node: cfg.noise_pool[rng.integers(len(cfg.noise_pool))]
              for node in ("u", "x", "w", "y")}
    coefficients = {}
    for node, parent in (("x", "u"), ("w", "u"), ("y", "u"), ("y", "x")):
        magnitude = rng.uniform(0.5, 1.5)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        coefficients[(node, parent)] = sign * magnitude
    return RandomScm(
        hypothesis=cfg.hypothesis,
        functions=functions,
        noises=noises,
        coefficients=coefficients,
    )


def gen_random_scm(cfg: RandomScmConfig, n: int) -> Dataset:
    """Draw one structure and one sample from it, both keyed by cfg.seed."""
    if n < 1:
        raise InvalidConfigError("need n >= 1")
    rng = np.random.default_rng(cfg.seed)
    scm = draw_random_scm(cfg, rng)
    data, _ = scm.sample(n, rng)
    return data


# ---------------------------------------------------------------------------
# categorical tables


@dataclass(frozen=True)
class DiscreteDGP:
    """Ancestral tables for X -> U -> (W, Y) with optional X -> Y."""

    p_x: np.ndarray                 # (|X|,)
    p_u_given_x: np.ndarray         # (|U|, |X|), columns sum to 1
    p_w_given_u: np.ndarray         # (|W|, |U|)
    p_y_given_ux: np.ndarray        # (|Y|, |U|, |X|); identical x-slices under H0

    def __post_init__(self):
        p_x = np.asarray(self.p_x, dtype=float)
        pu = np.asarray(self.p_u_given_x, dtype=float)
        pw = np.asarray(self.p_w_given_u, dtype=float)
        py = np.asarray(self.p_y_given_ux, dtype=float)
        def check_stochastic(arr, axis, name):
            if np.any(arr < 0):
                raise InvalidConfigError(f"{name} has negative entries")
            sums = arr.sum(axis=axis)
            if np.max(np.abs(sums - 1.0)) > 1e-12:
                raise InvalidConfigError(f"{name} columns must sum to 1")
        check_stochastic(p_x[None, :], 1, "p_x")
        check_stochastic(pu, 0, "p_u_given_x")
        check_stochastic(pw, 0, "p_w_given_u")
        check_stochastic(py, 0, "p_y_given_ux")
        if py.ndim != 3 or py.shape[2] != p_x.size or pu.shape[1] != p_x.size:
            raise InvalidConfigError("table shapes are inconsistent")
        object.__setattr__(self, "p_x", p_x)
        object.__setattr__(self, "p_u_given_x", pu)
        object.__setattr__(self, "p_w_given_u", pw)
        object.__setattr__(self, "p_y_given_ux", py)


def miao_tables(hypothesis: str = "h0") -> DiscreteDGP:
    """The benchmark categorical design with 3 x-levels, binary U and W."""
    p_x = np.array([0.3, 0.3, 0.4])
    p_u_given_x = np.array([[0.3, 0.6, 0.5], [0.7, 0.4, 0.5]])
    p_w_given_u = np.array([[0.8, 0.3], [0.2, 0.7]])
    if hypothesis == "h0":
        slice_ = np.array([[0.5, 0.4], [0.3, 0.5], [0.2, 0.1]])
        p_y = np.stack([slice_] * 3, axis=2)
    elif hypothesis == "h1":
        p_y = np.stack(
            [
                np.array([[0.5, 0.4], [0.3, 0.2], [0.2, 0.4]]),
                np.array([[0.4, 0.6], [0.2, 0.3], [0.4, 0.1]]),
                np.array([[0.3, 0.2], [0.4, 0.5], [0.3, 0.3]]),
            ],
            axis=2,
        )
    else:
        raise InvalidConfigError("hypothesis must be 'h0' or 'h1'")
    return DiscreteDGP(p_x=p_x, p_u_given_x=p_u_given_x, p_w_given_u=p_w_given_u, p_y_given_ux=p_y)


def _sample_categorical(p: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws of integer codes from one probability vector."""
    cum = np.cumsum(p)
    cum[-1] = 1.0
    return np.searchsorted(cum, rng.random(n), side="right")


def gen_discrete(dgp: DiscreteDGP, n: int, rng: np.random.Generator) -> Dataset:
    """Ancestral sampling X ~ p_x, U | X, W | U, Y | (U, X)."""
    if n < 1:
        raise InvalidConfigError("need n >= 1")
    x = _sample_categorical(dgp.p_x, n, rng)
    u = np.empty(n, dtype=np.intp)
    for j in range(dgp.p_x.size):
        mask = x == j
        u[mask] = _sample_categorical(dgp.p_u_given_x[:, j], int(mask.sum()), rng)
    w = np.empty(n, dtype=np.intp)
    for k in range(dgp.p_w_given_u.shape[1]):
        mask = u == k
        w[mask] = _sample_categorical(dgp.p_w_given_u[:, k], int(mask.sum()), rng)
    y = np.empty(n, dtype=np.intp)
    for j in range(dgp.p_x.size):
        for k in range(dgp.p_u_given_x.shape[0]):
            mask = (x == j) & (u == k)
            y[mask] = _sample_categorical(dgp.p_y_given_ux[:, k, j], int(mask.sum()), rng)
    kinds = {"x": CATEGORICAL, "y": CATEGORICAL, "w": CATEGORICAL, "z": CATEGORICAL}
    return Dataset(x=x, y=y, w=w, kinds=kinds)


# ---------------------------------------------------------------------------
# two-proxy and covariate designs


def gen_two_proxy(
    kind: str,
    gamma_w: float,
    n: int,
    rng: np.random.Generator,
    hypothesis: str = "h1",
) -> Dataset:
    """Standardized linear design or the nonlinear design with a second proxy.

    ``linear_example1`` standardizes X and W by their exact population scale
    sqrt(5) before Y is formed; Z mirrors the X equation with independent
    noise.  ``nonlinear_h3`` keeps the raw proxies; its W -> Y coefficient is
    fixed at 2 on W^2, so ``gamma_w`` is ignored there.
    """
    if n < 1:
        raise InvalidConfigError("need n >= 1")
    if hypothesis not in ("h0", "h1"):
        raise InvalidConfigError("hypothesis must be 'h0' or 'h1'")
    direct = 1.0 if hypothesis == "h1" else 0.0
    if kind == "linear_example1":
        s5 = np.sqrt(5.0)
        u = rng.normal(size=n)
        x = (2.0 * u + rng.normal(size=n)) / s5
        w = (-2.0 * u + rng.normal(size=n)) / s5
        z = (2.0 * u + rng.normal(size=n)) / s5
        y = direct * x + u + gamma_w * w + rng.normal(size=n)
        return Dataset(x=x, y=y, w=w, z=z)
    if kind == "nonlinear_h3":
        u = rng.normal(size=n)
        w = -2.0 * np.sin(u) + rng.normal(size=n)
        z = 2.0 * np.sin(u) + rng.normal(size=n)
        x = 2.0 * np.sin(u) + rng.normal(size=n)
        y = direct * x + np.sin(u) + 2.0 * w**2 + rng.normal(size=n)
        return Dataset(x=x, y=y, w=w, z=z)
    raise InvalidConfigError(f"unknown two-proxy design {kind!r}")


def gen_covariate_adjustment(
    hypothesis: str, n: int, rng: np.random.Generator
) -> Dataset:
    """Quadratic-confounder design with one observed covariate to adjust for."""
    if hypothesis not in ("h0", "h1"):
        raise InvalidConfigError("hypothesis must be 'h0' or 'h1'")
    delta = 1.0 if hypothesis == "h1" else 0.0
    u = rng.normal(size=n)
    v = rng.normal(size=n)
    x = 0.5 + u + 0.3 * u**2 + 0.5 * v + rng.normal(size=n)
    y = -1.0 + u + 0.4 * u**2 + v + delta * x + rng.normal(size=n)
    w = 1.0 + u + 0.5 * v + rng.normal(size=n)
    return Dataset(x=x, y=y, w=w, covariates=v[:, None])
