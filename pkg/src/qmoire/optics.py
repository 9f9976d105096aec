"""1-D optics primitives: grids, intensity masks, apertures and propagation.

Lengths are in millimetres, wavelengths in nanometres. Every object here is an
immutable value and every operation returns a new object.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

__all__ = [
    "SamplingError",
    "SpatialGrid",
    "TransmissionMask",
    "Aperture",
    "FieldGrid",
    "make_grating",
    "open_mask",
    "evaluate_mask",
    "shift_mask",
    "scale_mask",
    "mask_breakpoints",
    "ideal_image",
    "fresnel_propagate",
    "thin_lens",
    "energy",
    "resample",
]

PROFILES = ("cosine_squared", "binary")
NM_TO_MM = 1e-6


class SamplingError(ValueError):
    """Raised when a grid is too coarse for the requested operation."""


@dataclass(frozen=True)
class SpatialGrid:
    n_points: int
    pitch: float
    origin: float = 0.0

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"n_points must be an integer >= 2, got {self.n_points}")
        if not self.pitch > 0:
            raise ValueError(f"pitch must be positive, got {self.pitch}")

    @classmethod
    def centered(cls, n_points: int = 4096, pitch: float = 0.01) -> "SpatialGrid":
        """FFT-style grid with coordinate 0 at index ``n_points // 2``."""
        return cls(n_points, pitch, -(n_points // 2) * pitch)

    @property
    def coordinates(self) -> np.ndarray:
        return self.origin + np.arange(self.n_points) * self.pitch

    @property
    def span(self) -> tuple[float, float]:
        return self.origin, self.origin + (self.n_points - 1) * self.pitch


@dataclass(frozen=True)
class TransmissionMask:
    """Intensity transmission of a 1-D grating or of free space.

    ``period=None`` is the open mask, T(x) = 1 everywhere. The cosine-squared
    profile is ``1 - c + c cos^2(pi (x - phase_offset) / period)``; the binary
    (Ronchi) profile is open on a fraction ``duty_cycle`` of each period,
    centred on ``phase_offset``, and transmits ``1 - c`` elsewhere.
    """

    period: Optional[float] = None
    phase_offset: float = 0.0
    profile: str = "cosine_squared"
    contrast: float = 1.0
    duty_cycle: float = 0.5

    def __post_init__(self):
        if self.period is not None and not (self.period > 0 and math.isfinite(self.period)):
            raise ValueError(f"grating period must be positive, got {self.period}")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}; expected one of {PROFILES}")
        if not 0.0 <= self.contrast <= 1.0:
            raise ValueError(f"contrast must lie in [0, 1], got {self.contrast}")
        if not 0.0 < self.duty_cycle < 1.0:
            raise ValueError(f"duty_cycle must lie in (0, 1), got {self.duty_cycle}")

    @property
    def is_open(self) -> bool:
        return self.period is None

    def __call__(self, x):
        return evaluate_mask(self, x)


@dataclass(frozen=True)
class Aperture:
    diameter: float
    center: float = 0.0

    def __post_init__(self):
        if not self.diameter > 0:
            raise ValueError(f"aperture diameter must be positive, got {self.diameter}")

    @property
    def edges(self) -> tuple[float, float]:
        half = 0.5 * self.diameter
        return self.center - half, self.center + half

    def __call__(self, x):
        return (np.abs(np.asarray(x, dtype=float) - self.center) <= 0.5 * self.diameter).astype(float)


@dataclass(frozen=True)
class FieldGrid:
    grid: SpatialGrid
    amplitudes: np.ndarray = field(repr=False)
    wavelength: float = 890.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n_points,):
            raise ValueError(
                f"amplitudes must have shape ({self.grid.n_points},), got {amps.shape}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("field amplitudes must be finite")
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def wavelength_mm(self) -> float:
        return self.wavelength * NM_TO_MM


def make_grating(
    period: Optional[float],
    phase_offset: float = 0.0,
    profile: str = "cosine_squared",
    contrast: float = 1.0,
    duty_cycle: float = 0.5,
) -> TransmissionMask:
    """Build a grating mask; ``period=None`` (or ``"open"``) gives the open mask."""
    if isinstance(period, str):
        if period != "open":
            raise ValueError(f"period must be a length or 'open', got {period!r}")
        period = None
    return TransmissionMask(period, phase_offset, profile, contrast, duty_cycle)


def open_mask() -> TransmissionMask:
    return TransmissionMask()


def evaluate_mask(mask: TransmissionMask, x):
    """Intensity transmission of ``mask`` at position(s) ``x`` (mm).

    Returns a float for scalar input and an array otherwise.
    """
    xs = np.asarray(x, dtype=float)
    if mask.is_open:
        out = np.ones_like(xs)
    else:
        u = (xs - mask.phase_offset) / mask.period
        if mask.profile == "cosine_squared":
            shape = np.cos(np.pi * u) ** 2
        else:
            shape = (np.abs(u - np.round(u)) <= 0.5 * mask.duty_cycle).astype(float)
        out = 1.0 - mask.contrast + mask.contrast * shape
    return float(out) if out.ndim == 0 else out


def shift_mask(mask: TransmissionMask, delta: float) -> TransmissionMask:
    """Translate the mask by ``delta``: shifted(x) == mask(x - delta)."""
    if mask.is_open:
        return mask
    return replace(mask, phase_offset=mask.phase_offset + delta)


def scale_mask(mask: TransmissionMask, magnification: float) -> TransmissionMask:
    """Magnify the mask: scaled(x) == mask(x / magnification).

    A negative magnification is an inverted image; the period scales by
    ``|magnification|`` and the phase offset by ``magnification``. Both
    profiles are symmetric about ``phase_offset`` so inversion only moves it.
    """
    if magnification == 0 or not math.isfinite(magnification):
        raise ValueError("magnification must be finite and nonzero")
    if mask.is_open:
        return mask
    return replace(
        mask,
        period=mask.period * abs(magnification),
        phase_offset=mask.phase_offset * magnification,
    )


def mask_breakpoints(mask: TransmissionMask, a: float, b: float) -> np.ndarray:
    """Positions in the open interval (a, b) where the mask is discontinuous."""
    if mask.is_open or mask.profile != "binary" or mask.contrast == 0:
        return np.empty(0)
    half = 0.5 * mask.duty_cycle
    j0 = math.floor((a - mask.phase_offset) / mask.period) - 1
    j1 = math.ceil((b - mask.phase_offset) / mask.period) + 1
    j = np.arange(j0, j1 + 1, dtype=float)
    pts = mask.phase_offset + mask.period * np.concatenate([j - half, j + half])
    return np.sort(pts[(pts > a) & (pts < b)])


def energy(field: FieldGrid) -> float:
    """Discrete power sum(|u|^2) * pitch."""
    return float(np.sum(field.intensity) * field.grid.pitch)


def ideal_image(field: FieldGrid, magnification: float) -> FieldGrid:
    """Geometric image with lateral magnification ``m``.

    The output is u(x / m) / sqrt(|m|) sampled on a grid of pitch
    ``|m| * pitch``; for negative ``m`` the sample order is reversed so the
    output grid still runs left to right. Power is conserved exactly.
    """
    m = magnification
    if m == 0 or not math.isfinite(m):
        raise ValueError("magnification must be finite and nonzero")
    g = field.grid
    lo, hi = g.span
    new_pitch = abs(m) * g.pitch
    amps = field.amplitudes / math.sqrt(abs(m))
    if m > 0:
        origin = m * lo
    else:
        origin = m * hi
        amps = amps[::-1]
    new_grid = SpatialGrid(g.n_points, new_pitch, origin)
    return FieldGrid(new_grid, amps.copy(), field.wavelength)


def fresnel_propagate(field: FieldGrid, distance: float) -> FieldGrid:
    """Paraxial free-space propagation by the transfer-function method.

    Uses H(f) = exp(-i pi lambda z f^2); the constant phase exp(ikz) is
    dropped. The method is only alias-free when
    ``pitch**2 * n_points >= lambda * |distance|``; otherwise a
    :class:`SamplingError` is raised rather than returning a wrapped field.
    """
    if distance == 0:
        return field
    g = field.grid
    lam = field.wavelength_mm
    if g.pitch**2 * g.n_points < lam * abs(distance):
        raise SamplingError(
            f"Fresnel transfer function undersampled: pitch^2*N = "
            f"{g.pitch**2 * g.n_points:.4g} mm^2 < lambda*z = {lam * abs(distance):.4g} mm^2"
        )
    fx = np.fft.fftfreq(g.n_points, d=g.pitch)
    transfer = np.exp(-1j * np.pi * lam * distance * fx**2)
    out = np.fft.ifft(np.fft.fft(field.amplitudes) * transfer)
    return FieldGrid(g, out, field.wavelength)


def thin_lens(field: FieldGrid, focal_length: float) -> FieldGrid:
    """Apply the thin-lens phase exp(-i pi x^2 / (lambda f)).

    ``focal_length=math.inf`` is accepted as "no lens".
    """
    if focal_length == 0:
        raise ValueError("focal length must be nonzero")
    if math.isinf(focal_length):
        return field
    x = field.grid.coordinates
    phase = np.exp(-1j * np.pi * x**2 / (field.wavelength_mm * focal_length))
    return FieldGrid(field.grid, field.amplitudes * phase, field.wavelength)


def resample(field: FieldGrid, grid: SpatialGrid, fill: complex = 0.0) -> FieldGrid:
    """Linearly interpolate ``field`` onto ``grid``; points outside get ``fill``."""
    src = field.grid.coordinates
    dst = grid.coordinates
    re = np.interp(dst, src, field.amplitudes.real, left=np.real(fill), right=np.real(fill))
    im = np.interp(dst, src, field.amplitudes.imag, left=np.imag(fill), right=np.imag(fill))
    return FieldGrid(grid, re + 1j * im, field.wavelength)
