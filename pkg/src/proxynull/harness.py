"""End-to-end test pipeline and Monte-Carlo simulation campaigns."""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import bootstrap as bt
from . import bridge_continuous as bc
from . import bridge_discrete as bd
from . import scenarios as sc
from . import teststats as ts
from .data import CATEGORICAL, CONTINUOUS, Dataset
from .errors import InsufficientDataError, InvalidConfigError
from .numerics import KernelConfig, median_heuristic_columns

__all__ = [
    "MODES",
    "SCENARIOS",
    "TestConfig",
    "TestReport",
    "SimulationReport",
    "run_test",
    "run_simulation",
    "make_scenario_data",
]

MODES = ("continuous_single", "continuous_two_proxy", "discrete")

MIN_SAMPLES = 10


@dataclass(frozen=True)
class TestConfig:
    """All knobs of a single hypothesis test.

    ``lam=None`` selects the regularization by cross-validation over
    ``lambda_grid``; a float fixes it.  ``projection=True`` applies the
    moment-projection adjustment that removes the weight components a bridge
    perturbation could explain (see bridge_continuous.moment_weight_adjustment).
    """

    mode: str = "continuous_single"
    basis: str = "complex_exp"
    k: int = 100
    t_max: float = 3.0
    measure: ts.WeightMeasure = field(default_factory=ts.WeightMeasure)
    lam: float | None = None
    lambda_grid: tuple = tuple(bc.default_lambda_grid())
    cv_folds: int = 5
    replications: int = 500
    alpha: float = 0.05
    seed: int = 0
    standardize: bool = True
    projection: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.k < 1:
            raise InvalidConfigError("need k >= 1 grid points")
        if self.t_max <= 0:
            raise InvalidConfigError("t_max must be positive")
        if self.basis not in bc.BASES and self.basis != "indicator":
            raise InvalidConfigError(f"unknown basis {self.basis!r}")
        if self.basis == "indicator" and self.mode != "discrete":
            raise InvalidConfigError("the indicator basis applies to the discrete mode only")
        if not (0 < self.alpha <= 1):
            raise InvalidConfigError("alpha must lie in (0, 1]")
        if self.replications < 1:
            raise InvalidConfigError("need at least one bootstrap replication")


@dataclass(frozen=True)
class TestReport:
    statistic: ts.StatisticValue
    bootstrap: bt.BootstrapResult
    reject: bool
    p_value: float
    lam: float | None
    bandwidths: dict
    n: int
    mode: str
    seed: int
    config: dict
    timings_ms: dict

    def to_json_dict(self) -> dict:
        return {
            "version": 1,
            "mode": self.mode,
            "n": self.n,
            "statistic": self.statistic.delta,
            "argmax_t": self.statistic.argmax_t,
            "critical_value": self.bootstrap.critical_value,
            "p_value": self.p_value,
            "reject": self.reject,
            "lambda": self.lam,
            "bandwidths": self.bandwidths,
            "K": self.config["k"],
            "t_max": self.config["t_max"],
            "B": self.config["replications"],
            "alpha": self.config["alpha"],
            "sigma_s": self.config["sigma_s"],
            "basis": self.config["basis"],
            "seed": self.seed,
            "runtime_ms": self.timings_ms.get("total", 0.0),
        }


def _standardize(column: np.ndarray, name: str) -> np.ndarray:
    col = np.asarray(column, dtype=float)
    sd = col.std(axis=0)
    if np.any(sd == 0) or not np.all(np.isfinite(sd)):
        raise InsufficientDataError(f"column {name!r} is degenerate (zero variance)")
    return (col - col.mean(axis=0)) / sd


def _echo_config(cfg: TestConfig) -> dict:
    return {
        "mode": cfg.mode,
        "basis": cfg.basis,
        "k": cfg.k,
        "t_max": cfg.t_max,
        "sigma_s": cfg.measure.scale,
        "lambda_fixed": cfg.lam,
        "lambda_grid": [float(cfg.lambda_grid[0]), float(cfg.lambda_grid[-1]), len(cfg.lambda_grid)],
        "cv_folds": cfg.cv_folds,
        "replications": cfg.replications,
        "alpha": cfg.alpha,
        "standardize": cfg.standardize,
        "projection": cfg.projection,
    }


def _run_continuous(data: Dataset, cfg: TestConfig) -> TestReport:
    timings: dict = {}
    t_start = time.perf_counter()
    two_proxy = cfg.mode == "continuous_two_proxy"
    if two_proxy and data.z is None:
        raise InvalidConfigError("two-proxy mode requires a z column")
    for name in ("x", "y", "w") + (("z",) if two_proxy else ()):
        if data.kind(name) != CONTINUOUS:
            raise InvalidConfigError(f"column {name!r} must be continuous in mode {cfg.mode}")

    x = np.asarray(data.x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    w = np.asarray(data.w, dtype=float)[:, None]
    y = np.asarray(data.y, dtype=float)
    z = None if data.z is None else np.asarray(data.z, dtype=float)
    v = data.covariates

    if cfg.standardize:
        x = _standardize(x, "x")
        w = _standardize(w, "w")
        y = _standardize(y, "y")
        z = None if z is None else _standardize(z, "z")
        v = None if v is None else _standardize(v, "covariates")

    # observed covariates join both the conditioning set and the bridge input
    if v is not None:
        x = np.column_stack([x, v])
        w = np.column_stack([w, v])

    bw_x = median_heuristic_columns(x)
    bw_w = median_heuristic_columns(w)
    bandwidths = {"x": bw_x.tolist(), "w": bw_w.tolist()}
    kernel_x = KernelConfig(bw_x)
    kernel_w = KernelConfig(bw_w)

    cond = x if not two_proxy else np.column_stack([x, _as_col(z)])
    if two_proxy:
        bandwidths["z"] = median_heuristic_columns(_as_col(z)).tolist()

    grid = None if cfg.basis == "identity" else bc.TGrid.regular(cfg.k, cfg.t_max)
    work = Dataset(x=x, y=y, w=w[:, 0] if w.shape[1] == 1 else w, z=z)
    timings["setup"] = _ms(t_start)

    # risk weighting follows the restriction being tested: the conditioning
    # kernel alone for the single-proxy mode, the (x, z) product otherwise
    t0 = time.perf_counter()
    seedseq = np.random.SeedSequence(entropy=(cfg.seed, 0x5EED))
    cv_rng, fold_rng = [np.random.default_rng(s) for s in seedseq.spawn(2)]
    if cfg.lam is not None:
        lam = float(cfg.lam)
    else:
        risk_kernel = None
        if two_proxy:
            from .numerics import gram_matrix

            risk_kernel = gram_matrix(cond, KernelConfig(np.concatenate([bw_x, median_heuristic_columns(_as_col(z))])))
        lam = bc.select_lambda(
            work, grid, np.asarray(cfg.lambda_grid), cfg.cv_folds,
            kernel_w, kernel_x, cfg.basis, cv_rng, risk_kernel=risk_kernel,
        )
    timings["lambda"] = _ms(t0)

    t0 = time.perf_counter()
    fld = bc.cross_fit_residuals(
        work, grid, lam, kernel_w, kernel_x, cfg.basis, cfg.cv_folds, fold_rng
    )
    timings["residuals"] = _ms(t0)

    t0 = time.perf_counter()
    adjustment = None
    if cfg.projection:
        adjustment = bc.moment_weight_adjustment(work, lam, kernel_w, kernel_x)
    observed = ts.delta_continuous(fld, cond, cfg.measure, adjustment=adjustment)
    timings["statistic"] = _ms(t0)

    t0 = time.perf_counter()
    boot_seed = int(seedseq.spawn(1)[0].generate_state(1)[0])
    boot_cfg = bt.BootstrapConfig(replications=cfg.replications, alpha=cfg.alpha, seed=boot_seed)
    boot = bt.bootstrap_distribution(
        fld, cond, cfg.measure, boot_cfg,
        mode="two_proxy" if two_proxy else "continuous",
        adjustment=adjustment,
    )
    boot, reject = bt.decide(observed, boot, cfg.alpha)
    timings["bootstrap"] = _ms(t0)
    timings["total"] = _ms(t_start)

    return TestReport(
        statistic=observed,
        bootstrap=boot,
        reject=reject,
        p_value=float(boot.p_value),
        lam=lam,
        bandwidths=bandwidths,
        n=data.n,
        mode=cfg.mode,
        seed=cfg.seed,
        config=_echo_config(cfg),
        timings_ms=timings,
    )


def _run_discrete(data: Dataset, cfg: TestConfig) -> TestReport:
    timings: dict = {}
    t_start = time.perf_counter()
    for name in ("x", "y", "w"):
        if data.kind(name) != CATEGORICAL:
            raise InvalidConfigError(f"column {name!r} must be categorical in discrete mode")
    grid = bc.TGrid.regular(cfg.k, cfg.t_max)
    table = bd.tabulate(data, grid, basis=cfg.basis)
    bridge = bd.ols_bridge(table)
    projected = bd.projected_residual(table, bridge)
    observed = ts.delta_discrete(table, projected, grid, cfg.measure)
    timings["statistic"] = _ms(t_start)

    t0 = time.perf_counter()
    field = bd.residual_field_discrete(table, bridge, data, grid)
    t_weights = ts.t_grid_weights(grid, cfg.measure)
    if cfg.basis == "indicator":
        k = field.re.shape[1]
        t_weights = np.full(k, 1.0 / k)
    seedseq = np.random.SeedSequence(entropy=(cfg.seed, 0x5EED))
    boot_seed = int(seedseq.spawn(1)[0].generate_state(1)[0])
    boot_cfg = bt.BootstrapConfig(replications=cfg.replications, alpha=cfg.alpha, seed=boot_seed)
    boot = bt.bootstrap_distribution(
        field, None, cfg.measure, boot_cfg,
        mode="discrete", x_codes=table.x_codes, t_weights=t_weights,
    )
    boot, reject = bt.decide(observed, boot, cfg.alpha)
    timings["bootstrap"] = _ms(t0)
    timings["total"] = _ms(t_start)

    return TestReport(
        statistic=observed,
        bootstrap=boot,
        reject=reject,
        p_value=float(boot.p_value),
        lam=None,
        bandwidths={},
        n=data.n,
        mode=cfg.mode,
        seed=cfg.seed,
        config=_echo_config(cfg),
        timings_ms=timings,
    )


def run_test(data: Dataset, cfg: TestConfig) -> TestReport:
    """One complete test: estimation, statistic, bootstrap, decision."""
    if data.n < MIN_SAMPLES:
        raise InsufficientDataError(f"need at least {MIN_SAMPLES} samples, got {data.n}")
    if cfg.mode == "discrete":
        return _run_discrete(data, cfg)
    return _run_continuous(data, cfg)


def _as_col(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v if v.ndim == 2 else v[:, None]


def _ms(t0: float) -> float:
    return (time.perf_counter() - t0) * 1000.0


# ---------------------------------------------------------------------------
# simulation campaigns


SCENARIOS = (
    "sec611-h0",
    "sec611-h1",
    "sec612-h0",
    "sec612-h1",
    "example1",
    "example1-h0",
    "h3-nonlinear",
    "h3-nonlinear-h0",
    "b3-mmr",
    "h2-covariate-h0",
    "h2-covariate-h1",
)


def _scenario_hash(scenario: str) -> int:
    digest = hashlib.sha256(scenario.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def replicate_seed(master_seed: int, scenario: str, n: int, rep: int) -> int:
    """Stable per-replication seed, independent of scheduling and worker count."""
    ss = np.random.SeedSequence(entropy=(master_seed, _scenario_hash(scenario), n, rep))
    return int(ss.generate_state(1)[0])


def make_scenario_data(scenario: str, n: int, seed: int, gamma_w: float = 1.0) -> Dataset:
    """Fresh dataset for one replication of a named scenario."""
    rng = np.random.default_rng(seed)
    if scenario == "sec611-h0":
        return sc.gen_random_scm(sc.RandomScmConfig(hypothesis="h0", seed=seed), n)
    if scenario == "sec611-h1":
        return sc.gen_random_scm(sc.RandomScmConfig(hypothesis="h1", seed=seed), n)
    if scenario == "sec612-h0":
        return sc.gen_discrete(sc.miao_tables("h0"), n, rng)
    if scenario == "sec612-h1":
        return sc.gen_discrete(sc.miao_tables("h1"), n, rng)
    if scenario == "example1":
        return sc.gen_two_proxy("linear_example1", gamma_w, n, rng, hypothesis="h1")
    if scenario == "example1-h0":
        return sc.gen_two_proxy("linear_example1", gamma_w, n, rng, hypothesis="h0")
    if scenario == "h3-nonlinear":
        return sc.gen_two_proxy("nonlinear_h3", gamma_w, n, rng, hypothesis="h1")
    if scenario == "h3-nonlinear-h0":
        return sc.gen_two_proxy("nonlinear_h3", gamma_w, n, rng, hypothesis="h0")
    if scenario == "b3-mmr":
        params = sc.LinearGaussianParams(alpha_u=1, beta_u=1, gamma_u=1, gamma_x=1)
        return sc.sample_linear_gaussian(params, n, rng)
    if scenario == "h2-covariate-h0":
        return sc.gen_covariate_adjustment("h0", n, rng)
    if scenario == "h2-covariate-h1":
        return sc.gen_covariate_adjustment("h1", n, rng)
    raise InvalidConfigError(f"unknown scenario {scenario!r}; available: {', '.join(SCENARIOS)}")


def _wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    if trials == 0:
        return (0.0, 1.0)
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class SimulationReport:
    scenario: str
    n_values: tuple
    reps: int
    master_seed: int
    gamma_w: float
    config: dict
    records: tuple  # (n, rep, seed, p_value, reject)

    def rejection_rate(self, n: int) -> float:
        hits = [r for r in self.records if r[0] == n]
        return sum(1 for r in hits if r[4]) / len(hits)

    def summary(self) -> list[dict]:
        out = []
        for n in self.n_values:
            hits = [r for r in self.records if r[0] == n]
            k = sum(1 for r in hits if r[4])
            lo, hi = _wilson_interval(k, len(hits))
            rate = k / len(hits)
            out.append(
                {
                    "n": n,
                    "reps": len(hits),
                    "rejections": k,
                    "rate": rate,
                    "wilson_low": lo,
                    "wilson_high": hi,
                    "binomial_se": float(np.sqrt(rate * (1 - rate) / len(hits))),
                }
            )
        return out

    def to_json_dict(self) -> dict:
        return {
            "version": 1,
            "scenario": self.scenario,
            "gamma_w": self.gamma_w,
            "reps": self.reps,
            "master_seed": self.master_seed,
            "config": self.config,
            "summary": self.summary(),
            "records": [
                {"n": n, "rep": rep, "seed": seed, "p_value": p, "reject": rej}
                for (n, rep, seed, p, rej) in self.records
            ],
        }

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("scenario,n,rep,p_value,reject\n")
            for (n, rep, _seed, p, rej) in self.records:
                fh.write(f"{self.scenario},{n},{rep},{p},{int(rej)}\n")


def _one_replication(args):
    scenario, n, rep, seed, cfg, gamma_w = args
    data = make_scenario_data(scenario, n, seed, gamma_w=gamma_w)
    report = run_test(data, replace(cfg, seed=seed))
    return (n, rep, seed, report.p_value, report.reject)


def run_simulation(
    scenario: str,
    n_values,
    reps: int,
    cfg: TestConfig,
    master_seed: int = 0,
    gamma_w: float = 1.0,
    workers: int = 1,
) -> SimulationReport:
    """Rejection rates over fresh replications of a named scenario.

    Every (n, rep) cell generates its own dataset from a seed derived of
    (master_seed, scenario, n, rep), so reports are identical at any worker
    count and larger n never reuses smaller-n draws.
    """
    if reps < 1:
        raise InvalidConfigError("need reps >= 1")
    if scenario not in SCENARIOS:
        raise InvalidConfigError(f"unknown scenario {scenario!r}; available: {', '.join(SCENARIOS)}")
    n_values = tuple(int(v) for v in n_values)
    tasks = [
        (scenario, n, rep, replicate_seed(master_seed, scenario, n, rep), cfg, gamma_w)
        for n in n_values
        for rep in range(reps)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_one_replication, tasks))
    else:
        records = [_one_replication(t) for t in tasks]
    return SimulationReport(
        scenario=scenario,
        n_values=n_values,
        reps=reps,
        master_seed=master_seed,
        gamma_w=gamma_w,
        config=_echo_config(cfg),
        records=tuple(records),
    )
