"""Simulation and analysis of moiré fringes in two-photon coincidence images."""

__version__ = "0.1.0"

from .analysis import (
    BeatEstimate,
    FitResult,
    NoBeatDetected,
    beat_from_spectrum,
    expected_beat_period,
    fit_envelope_cos2,
    fit_product_cos2,
)
from .engine import ExperimentConfig, ScanSchedule, SetupKind, coincidence_rate, klyshko_chain, run_scan
from .optics import Aperture, SamplingError, SpatialGrid, TransmissionMask, make_grating
from .photocount import CountingPlan, run_counting_scan
from .records import ScanRecord

__all__ = [
    "Aperture",
    "BeatEstimate",
    "CountingPlan",
    "ExperimentConfig",
    "FitResult",
    "NoBeatDetected",
    "SamplingError",
    "ScanRecord",
    "ScanSchedule",
    "SetupKind",
    "SpatialGrid",
    "TransmissionMask",
    "beat_from_spectrum",
    "coincidence_rate",
    "expected_beat_period",
    "fit_envelope_cos2",
    "fit_product_cos2",
    "klyshko_chain",
    "make_grating",
    "run_counting_scan",
    "run_scan",
]
