"""Sequential and retrospective structural-break detection for time-series regressions."""
from .boundaries import Boundary, BoundaryKind, closed_form_crossing, robbins_check
from .critvals import BridgeSimConfig, crossing_probability, simulate_lambda
from .detectors import DetectorKind, DetectorPath, DetectorSpec, DetectorState
from .garch import GarchFit, GarchParams, garch_fit, standardized_residuals
from .linreg import Design, FitResult, ar1_design, hac_covariance, ols_fit, recursive_estimates, window_estimate
from .monitor import MonitorResult, decision_rule_ratio, run_monitor
from .montecarlo import DgpSpec, McReport, arl_distribution, empirical_power, empirical_size, power_curve, simulate_path
from .retro import BreakEstimate, bai_perron, retro_cusum_sq, single_break_ls, sup_f
from .timeseries import SampleSplit, TimeSeries, difference, load_csv, split

__version__ = "0.1.0"

__all__ = [
    "Boundary", "BoundaryKind", "closed_form_crossing", "robbins_check",
    "BridgeSimConfig", "crossing_probability", "simulate_lambda",
    "DetectorKind", "DetectorPath", "DetectorSpec", "DetectorState",
    "GarchFit", "GarchParams", "garch_fit", "standardized_residuals",
    "Design", "FitResult", "ar1_design", "hac_covariance", "ols_fit", "recursive_estimates", "window_estimate",
    "MonitorResult", "decision_rule_ratio", "run_monitor",
    "DgpSpec", "McReport", "arl_distribution", "empirical_power", "empirical_size", "power_curve", "simulate_path",
    "BreakEstimate", "bai_perron", "retro_cusum_sq", "single_break_ls", "sup_f",
    "SampleSplit", "TimeSeries", "difference", "load_csv", "split",
]
