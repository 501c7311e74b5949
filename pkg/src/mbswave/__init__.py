"""Joint design of spectrally masked OFDM sequences and mismatched receive
filters for cooperative multi-base-station sensing."""

from .baselines import BaselineKind, baseline_metrics, matched_filter
from .correlation import (
    CorrelationProfile,
    SidelobeMetrics,
    isl_full,
    isl_objective,
    metrics,
    profile,
    xcorr_direct,
    xcorr_fast,
)
from .model import Scenario, ScenarioError, load_scenario, random_phase_init, synthesize
from .solver import DesignResult, SolverState, solve

__version__ = "0.1.0"

__all__ = [
    "BaselineKind",
    "CorrelationProfile",
    "DesignResult",
    "Scenario",
    "ScenarioError",
    "SidelobeMetrics",
    "SolverState",
    "baseline_metrics",
    "isl_full",
    "isl_objective",
    "load_scenario",
    "matched_filter",
    "metrics",
    "profile",
    "random_phase_init",
    "solve",
    "synthesize",
    "xcorr_direct",
    "xcorr_fast",
]
