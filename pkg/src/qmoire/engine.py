"""Analytic coincidence-rate model for the two grating setups.

Pump-idler (setup 1): G1 sits in the pump, whose transverse profile reappears
in the signal-idler correlation magnified by the transfer scale ``sigma``; G2
sits in front of the idler detector. Signal-idler (setup 2): the idler
detector is treated as a point source in the advanced-wave picture, and the
signal-arm optics image G1 onto G2 and the product onto the signal detector
with 2f-2f relays of unit magnification.

In both cases the coincidence rate is the aperture average of the product of
the two (effective) grating transmissions in the plane where they overlap.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .optics import (
    Aperture,
    FieldGrid,
    SamplingError,
    SpatialGrid,
    TransmissionMask,
    energy,
    evaluate_mask,
    fresnel_propagate,
    ideal_image,
    mask_breakpoints,
    resample,
    scale_mask,
    shift_mask,
    thin_lens,
)
from .records import ScanRecord

MIN_SAMPLES_PER_PERIOD = 8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)


class SetupKind(str, enum.Enum):
    PUMP_IDLER = "pump_idler"
    SIGNAL_IDLER = "signal_idler"


@dataclass(frozen=True)
class ScanSchedule:
    """Simultaneous stepping of both gratings.

    Grating ``i`` sits at ``start_i + k * step_i`` at step ``k``.
    """

    n_steps: int
    step_g1: float
    step_g2: float
    start_g1: float = 0.0
    start_g2: float = 0.0

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")
        if self.n_steps > 1 and not self.step_g2 > 0:
            raise ValueError("step_g2 must be positive so scan positions increase")

    def displacements(self) -> tuple[np.ndarray, np.ndarray]:
        k = np.arange(self.n_steps)
        return self.start_g1 + k * self.step_g1, self.start_g2 + k * self.step_g2


@dataclass(frozen=True)
class ExperimentConfig:
    kind: SetupKind
    grating_1: TransmissionMask
    grating_2: TransmissionMask
    transfer_scale: float = 2.0
    pinhole_signal: Aperture = field(default_factory=lambda: Aperture(0.5))
    pinhole_idler: Aperture = field(default_factory=lambda: Aperture(0.5))
    lambda_pump: float = 425.0
    lambda_signal: float = 890.0
    lambda_idler: float = 810.0
    focal_length: float = 250.0
    region_halfwidth: float = 1.0
    grid: SpatialGrid = field(default_factory=lambda: SpatialGrid.centered(4096, 0.01))
    relay_sign: int = -1

    def __post_init__(self):
        object.__setattr__(self, "kind", SetupKind(self.kind))
        if not self.transfer_scale > 0:
            raise ValueError(f"transfer scale must be positive, got {self.transfer_scale}")
        for name in ("lambda_pump", "lambda_signal", "lambda_idler"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.focal_length == 0:
            raise ValueError("focal length must be nonzero")
        if not self.region_halfwidth > 0:
            raise ValueError("coincidence region half-width must be positive")
        if self.relay_sign not in (1, -1):
            raise ValueError("relay_sign must be +1 or -1")
        mismatch = abs(1 / self.lambda_pump - 1 / self.lambda_signal - 1 / self.lambda_idler)
        if mismatch > 0.01 / self.lambda_pump:
            warnings.warn(
                f"wavelengths {self.lambda_pump}/{self.lambda_signal}/{self.lambda_idler} nm "
                "violate photon energy conservation by more than 1%",
                stacklevel=3,
            )

    def with_grid(self, grid: SpatialGrid) -> "ExperimentConfig":
        return replace(self, grid=grid)


def effective_mask_setup1(config: ExperimentConfig) -> TransmissionMask:
    """G1 as seen by the correlations: the pump grating magnified by sigma."""
    if config.kind is not SetupKind.PUMP_IDLER:
        raise ValueError("effective_mask_setup1 requires a pump-idler configuration")
    return scale_mask(config.grating_1, config.transfer_scale)


@dataclass(frozen=True)
class KlyshkoChain:
    """Imaging maps of the signal-idler setup.

    ``g1_to_g2`` is the lateral magnification from the G1 plane onto G2 and
    ``product_to_detector`` from the G2 plane onto the signal detector. The
    Fresnel diagnostics are only filled in by ``mode="fresnel"``.
    """

    g1_to_g2: float
    product_to_detector: float
    mode: str = "ideal"
    g2_plane_correlation: Optional[float] = None
    detector_correlation: Optional[float] = None
    g2_plane_l2_error: Optional[float] = None
    detector_l2_error: Optional[float] = None
    energy_error: Optional[float] = None


def klyshko_chain(config: ExperimentConfig, mode: str = "ideal", source_waist: float = 0.03) -> KlyshkoChain:
    """Imaging map of the advanced-wave chain D2 -> L1 -> G1 -> L2 -> G2 -> L3 -> D1.

    In ``"fresnel"`` mode the chain is propagated explicitly on ``config.grid``:
    a Gaussian spot of waist ``source_waist`` at the idler pinhole, ``f`` to
    the collimating lens L1, ``2f`` to G1, then two 2f-2f single-lens relays
    (L2 onto G2, L3 onto the signal detector). Each relay is compared in
    intensity with :func:`ideal_image` at magnification -1.
    """
    if config.kind is not SetupKind.SIGNAL_IDLER:
        raise ValueError("klyshko_chain requires a signal-idler configuration")
    m = float(config.relay_sign)
    if mode == "ideal":
        return KlyshkoChain(m, m)
    if mode != "fresnel":
        raise ValueError(f"mode must be 'ideal' or 'fresnel', got {mode!r}")
    if config.relay_sign != -1:
        raise ValueError("a single-lens 2f-2f relay inverts; fresnel mode needs relay_sign=-1")

    f = config.focal_length
    g = config.grid
    x = g.coordinates
    lam = config.lambda_signal
    c0 = config.pinhole_idler.center
    source = FieldGrid(g, np.exp(-(((x - c0) / source_waist) ** 2)), lam)
    illumination = fresnel_propagate(thin_lens(fresnel_propagate(source, f), f), 2 * f)

    def relay(u: FieldGrid) -> FieldGrid:
        return fresnel_propagate(thin_lens(fresnel_propagate(u, 2 * f), f), 2 * f)

    def compare(numeric: FieldGrid, ideal: FieldGrid) -> tuple[float, float]:
        a, b = numeric.intensity, ideal.intensity
        return float(np.corrcoef(a, b)[0, 1]), float(np.linalg.norm(a - b) / np.linalg.norm(b))

    at_g1 = FieldGrid(g, illumination.amplitudes * np.sqrt(evaluate_mask(config.grating_1, x)), lam)
    at_g2 = relay(at_g1)
    ideal_g2 = resample(ideal_image(at_g1, -1.0), g)
    corr_g2, err_g2 = compare(at_g2, ideal_g2)

    t2 = np.sqrt(evaluate_mask(config.grating_2, x))
    product = FieldGrid(g, at_g2.amplitudes * t2, lam)
    at_det = relay(product)
    ideal_det = resample(ideal_image(FieldGrid(g, ideal_g2.amplitudes * t2, lam), -1.0), g)
    corr_det, err_det = compare(at_det, ideal_det)

    energy_error = max(
        abs(energy(at_g2) - energy(at_g1)) / energy(at_g1),
        abs(energy(at_det) - energy(product)) / energy(product),
    )
    return KlyshkoChain(m, m, "fresnel", corr_g2, corr_det, err_g2, err_det, energy_error)


def effective_g1(config: ExperimentConfig) -> tuple[TransmissionMask, float]:
    """G1 mapped into the overlap plane, and the factor mapping its displacement."""
    if config.kind is SetupKind.PUMP_IDLER:
        return effective_mask_setup1(config), config.transfer_scale
    m = klyshko_chain(config).g1_to_g2
    return scale_mask(config.grating_1, m), m


def detection_window(config: ExperimentConfig) -> tuple[float, float]:
    """Interval of the overlap plane seen by the detector pinhole and coincidence region."""
    if config.kind is SetupKind.PUMP_IDLER:
        lo, hi = config.pinhole_idler.edges
    else:
        m = klyshko_chain(config).product_to_detector
        hole = config.pinhole_signal
        lo, hi = sorted((hole.center / m - 0.5 * hole.diameter, hole.center / m + 0.5 * hole.diameter))
    lo = max(lo, -config.region_halfwidth)
    hi = min(hi, config.region_halfwidth)
    if not hi > lo:
        raise ValueError("detector pinhole does not overlap the coincidence region")
    g_lo, g_hi = config.grid.span
    if lo < g_lo or hi > g_hi:
        raise SamplingError("detection window extends beyond the spatial grid")
    return lo, hi


def _check_sampling(grid: SpatialGrid, *masks: TransmissionMask) -> None:
    for mask in masks:
        if mask.period is not None and mask.period < MIN_SAMPLES_PER_PERIOD * grid.pitch:
            raise SamplingError(
                f"grid pitch {grid.pitch} mm gives fewer than {MIN_SAMPLES_PER_PERIOD} "
                f"samples per {mask.period} mm period"
            )


def _window_quadrature(grid: SpatialGrid, lo: float, hi: float, breaks) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights on grid cells clipped to [lo, hi]."""
    x = grid.coordinates
    inner = x[(x > lo) & (x < hi)]
    edges = np.unique(np.concatenate([[lo, hi], inner, *breaks]))
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = (mid[:, None] + half[:, None] * _GL_NODES).ravel()
    weights = (half[:, None] * _GL_WEIGHTS).ravel()
    return nodes, weights


def coincidence_rate(config: ExperimentConfig, delta_g1: float, delta_g2: float) -> float:
    """Normalized coincidence rate with G1 displaced by ``delta_g1`` and G2 by ``delta_g2``.

    Computes the average of T1_eff(x - s) * T2(x - delta_g2) over the detection
    window, where T1_eff and s are G1 and its displacement mapped into the
    overlap plane. Two open masks give exactly 1.
    """
    t1, factor = effective_g1(config)
    t2 = config.grating_2
    _check_sampling(config.grid, t1, t2)
    lo, hi = detection_window(config)
    if t1.is_open and t2.is_open:
        return 1.0
    m1 = shift_mask(t1, factor * delta_g1)
    m2 = shift_mask(t2, delta_g2)
    nodes, weights = _window_quadrature(
        config.grid, lo, hi, (mask_breakpoints(m1, lo, hi), mask_breakpoints(m2, lo, hi))
    )
    integrand = evaluate_mask(m1, nodes) * evaluate_mask(m2, nodes)
    # clamp rounding so that 0 <= C <= 1 holds exactly
    return min(1.0, max(0.0, float(np.dot(weights, integrand) / weights.sum())))


def run_scan(config: ExperimentConfig, schedule: ScanSchedule) -> ScanRecord:
    """Analytic coincidence trace for a simultaneous grating scan.

    Sample ``k`` sits at the G2 displacement ``start_g2 + k * step_g2``.
    """
    d1, d2 = schedule.displacements()
    rates = np.array([coincidence_rate(config, a, b) for a, b in zip(d1, d2)])
    return ScanRecord(d2, rates, "analytic_rate", rates)
