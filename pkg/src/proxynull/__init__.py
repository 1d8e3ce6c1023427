"""Causal null hypothesis testing with negative-control proxies.

Tests H0: "X has no direct effect on Y given unmeasured confounders" from
observational samples of (X, Y, W) or (X, Y, W, Z), where W is a
negative-control outcome and Z a negative-control exposure.  A bridge
function linking the outcome to the proxy is estimated from a regularized
conditional-moment restriction; the test checks whether the residual
process is centered, with critical values from a wild bootstrap.
"""

from .bootstrap import BootstrapConfig, BootstrapResult, decide, multiplier_weights
from .bridge_continuous import (
    BridgeEstimate,
    ResidualField,
    TGrid,
    fit,
    phi,
    residuals,
    select_lambda,
)
from .bridge_discrete import (
    CategoricalTable,
    DiscreteBridge,
    ols_bridge,
    projected_residual,
    tabulate,
)
from .data import Dataset, load_csv
from .harness import (
    SCENARIOS,
    SimulationReport,
    TestConfig,
    TestReport,
    run_simulation,
    run_test,
)
from .numerics import ComplexVector, KernelConfig, gaussian_kernel, median_heuristic
from .teststats import StatisticValue, WeightMeasure, delta_continuous, delta_discrete

__version__ = "0.1.0"

__all__ = [
    "BootstrapConfig",
    "BootstrapResult",
    "BridgeEstimate",
    "CategoricalTable",
    "ComplexVector",
    "Dataset",
    "DiscreteBridge",
    "KernelConfig",
    "ResidualField",
    "SCENARIOS",
    "SimulationReport",
    "StatisticValue",
    "TGrid",
    "TestConfig",
    "TestReport",
    "WeightMeasure",
    "decide",
    "delta_continuous",
    "delta_discrete",
    "fit",
    "gaussian_kernel",
    "load_csv",
    "median_heuristic",
    "multiplier_weights",
    "ols_bridge",
    "phi",
    "projected_residual",
    "residuals",
    "run_simulation",
    "run_test",
    "select_lambda",
    "tabulate",
]
