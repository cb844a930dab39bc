"""Wi-Fi / LTE unlicensed-band coexistence evaluation toolkit.

Two engines over one system model: closed-form/quadrature expressions for
medium access probability, SINR coverage, density of successful
transmissions and rate coverage under five LTE coexistence mechanisms, and
an independent spatial Monte Carlo simulator that serves as their ground
truth.
"""

from .analytic import (
    AnalyticEngine,
    baseline_wifi_wifi,
    dst_async,
    dst_generic,
    dst_sync,
    map_tagged_ap_continuous,
    map_tagged_lbt_lower,
    map_tagged_lbt_same,
    map_typical_ap_continuous,
    map_typical_lbt_lower,
    map_typical_lbt_same,
    rate_cov_async,
    rate_cov_generic,
    rate_cov_sync,
    sinr_cov_lte_continuous,
    sinr_cov_lte_lbt_lower,
    sinr_cov_lte_lbt_same,
    sinr_cov_wifi_continuous,
    sinr_cov_wifi_lbt_lower,
    sinr_cov_wifi_lbt_same,
)
from .condmap import (
    cond_map_h1,
    cond_map_h1w_given_enb,
    cond_map_h2l,
    cond_map_h2w,
    cond_map_h3l,
    cond_map_h3w,
    cond_map_h4l,
    cond_map_h4w,
    cond_map_h5l,
    cond_map_h5w,
)
from .curves import MetricCurve, curves_from_csv, curves_to_csv, read_curves, write_curves
from .model import (
    CoexParams,
    Point2,
    Scenario,
    ScenarioKind,
    ZeroAirtimeError,
    nearest_distance_pdf,
    path_loss,
    rate_to_sinr_threshold,
)
from .montecarlo import (
    MonteCarloEngine,
    MonteCarloScenario,
    Realization,
    SimConfig,
    apply_mac_continuous,
    apply_mac_duty,
    apply_mac_lbt,
    conditional_map_oracle,
    empirical_sinr_coverage,
    interference_cdf_check,
    sample_realization,
)
from .quadrature import (
    QuadratureError,
    QuadratureSpec,
    c_func,
    func_m,
    func_u,
    func_v,
    laplace_interference_integral,
    n_func,
    sinr_kernel_integral,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
