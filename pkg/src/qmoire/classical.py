"""Classical moiré patterns: 2-D superposition images, scan lines, and the
aperture-averaged product profile used to cross-check the coincidence model.

The profile here is computed with its own quadrature (Richardson-extrapolated
trapezoid on a 10x oversampled grid) and never calls :mod:`qmoire.engine`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .optics import (
    Aperture,
    SamplingError,
    SpatialGrid,
    TransmissionMask,
    evaluate_mask,
    mask_breakpoints,
    scale_mask,
    shift_mask,
)
from .records import ScanRecord

MIN_PIXELS_PER_PERIOD = 4


@dataclass(frozen=True)
class ImageGrid:
    """Pixel-centre lattice; ``origin`` is the centre of pixel (0, 0) in mm."""

    width: int
    height: int
    pitch: float
    origin: Optional[tuple] = None

    def __post_init__(self):
        if self.width < 2 or self.height < 1:
            raise ValueError("image needs width >= 2 and height >= 1")
        if not self.pitch > 0:
            raise ValueError("pixel pitch must be positive")
        if self.origin is None:
            object.__setattr__(
                self,
                "origin",
                (-(self.width - 1) / 2 * self.pitch, -(self.height - 1) / 2 * self.pitch),
            )


@dataclass(frozen=True)
class PatternImage:
    width: int
    height: int
    pitch: float
    pixels: np.ndarray = field(repr=False)
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        px = np.array(self.pixels, dtype=float)
        if px.shape != (self.height, self.width):
            raise ValueError(f"pixels must have shape ({self.height}, {self.width}), got {px.shape}")
        if np.any(px < 0) or np.any(px > 1) or not np.all(np.isfinite(px)):
            raise ValueError("pixel intensities must lie in [0, 1]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + np.arange(self.width) * self.pitch

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + np.arange(self.height) * self.pitch


@dataclass(frozen=True)
class ScanLine:
    start: tuple
    direction: tuple
    length: float
    n_samples: int

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        norm = float(np.hypot(*d))
        if norm == 0:
            raise ValueError("scan direction must be nonzero")
        object.__setattr__(self, "direction", (d[0] / norm, d[1] / norm))
        if self.n_samples < 2:
            raise ValueError("a scan line needs at least two samples")
        if not self.length > 0:
            raise ValueError("scan line length must be positive")


def render_superposition(
    g1: TransmissionMask,
    g2: TransmissionMask,
    relative_angle: float = 0.0,
    grid2d: Optional[ImageGrid] = None,
) -> PatternImage:
    """Image of two superposed gratings.

    ``g1`` is modulated along x; ``g2`` along x rotated by ``relative_angle``
    (radians, in [0, pi/2]).
    """
    grid2d = grid2d or ImageGrid(1200, 200, 0.02)
    if not 0 <= relative_angle <= math.pi / 2:
        raise ValueError("relative_angle must lie in [0, pi/2]")
    for mask in (g1, g2):
        if mask.period is not None and mask.period < MIN_PIXELS_PER_PERIOD * grid2d.pitch:
            raise SamplingError(
                f"pixel pitch {grid2d.pitch} mm under-resolves the {mask.period} mm grating"
            )
    x = grid2d.origin[0] + np.arange(grid2d.width) * grid2d.pitch
    y = grid2d.origin[1] + np.arange(grid2d.height) * grid2d.pitch
    xx, yy = np.meshgrid(x, y)
    u2 = xx * math.cos(relative_angle) + yy * math.sin(relative_angle)
    pixels = evaluate_mask(g1, xx) * evaluate_mask(g2, u2)
    return PatternImage(grid2d.width, grid2d.height, grid2d.pitch, pixels, tuple(grid2d.origin))


def center_scanline(image: PatternImage) -> ScanLine:
    """Horizontal line through the middle row, one sample per pixel."""
    row = image.height // 2
    return ScanLine(
        (image.origin[0], image.origin[1] + row * image.pitch),
        (1.0, 0.0),
        (image.width - 1) * image.pitch,
        image.width,
    )


def extract_scanline(image: PatternImage, line: ScanLine) -> ScanRecord:
    """Bilinear samples of ``image`` along ``line``; positions are arc length in mm."""
    t = np.linspace(0.0, line.length, line.n_samples)
    px = line.start[0] + t * line.direction[0]
    py = line.start[1] + t * line.direction[1]
    j = (px - image.origin[0]) / image.pitch
    i = (py - image.origin[1]) / image.pitch
    eps = 1e-9
    if j.min() < -eps or j.max() > image.width - 1 + eps or i.min() < -eps or i.max() > image.height - 1 + eps:
        raise ValueError("scan line leaves the image")
    j = np.clip(j, 0, image.width - 1)
    i = np.clip(i, 0, image.height - 1)
    j0 = np.minimum(np.floor(j).astype(int), image.width - 2)
    fj = j - j0
    if image.height == 1:
        i0 = np.zeros_like(j0)
        fi = np.zeros_like(fj)
        p = np.vstack([image.pixels, image.pixels])
    else:
        i0 = np.minimum(np.floor(i).astype(int), image.height - 2)
        fi = i - i0
        p = image.pixels
    vals = (
        p[i0, j0] * (1 - fi) * (1 - fj)
        + p[i0, j0 + 1] * (1 - fi) * fj
        + p[i0 + 1, j0] * fi * (1 - fj)
        + p[i0 + 1, j0 + 1] * fi * fj
    )
    return ScanRecord(t, vals, "analytic_rate")


def _romberg_piece(fun, a: float, b: float, h: float) -> float:
    """Trapezoid on [a, b] at steps ~h, h/2, h/4, Richardson-extrapolated twice."""
    n = max(1, math.ceil((b - a) / h))
    t = []
    for k in (n, 2 * n, 4 * n):
        xs = np.linspace(a, b, k + 1)
        fx = fun(xs)
        t.append((b - a) / k * (fx.sum() - 0.5 * (fx[0] + fx[-1])))
    r1 = (4 * t[1] - t[0]) / 3
    r2 = (4 * t[2] - t[1]) / 3
    return (16 * r2 - r1) / 15


def _piece_integrand(m1: TransmissionMask, m2: TransmissionMask, mid: float):
    """Product on one continuous piece; binary masks are constant there, so they
    are read at the piece midpoint rather than at its (discontinuous) ends."""
    consts = 1.0
    smooth = []
    for m in (m1, m2):
        if m.profile == "binary" and not m.is_open:
            consts *= evaluate_mask(m, mid)
        else:
            smooth.append(m)

    def fun(xs):
        v = np.full(xs.shape, consts)
        for m in smooth:
            v = v * evaluate_mask(m, xs)
        return v

    return fun


def aperture_convolved_product(
    g1: TransmissionMask,
    g2: TransmissionMask,
    aperture: Aperture,
    grid: SpatialGrid,
    shifts,
    ratio: float = 1.0,
    *,
    g2_shifts=None,
    region_halfwidth: Optional[float] = None,
    oversample: int = 10,
) -> np.ndarray:
    """Aperture-averaged product profile P(s) of two 1-D gratings.

    P(s) is the mean over the aperture (clipped to ``|x| <= region_halfwidth``)
    of T1(x - s) * T2(x - ratio * s). ``g2_shifts`` replaces ``ratio * s``
    when the two displacement sequences are not proportional.
    """
    for mask in (g1, g2):
        if mask.period is not None and mask.period < 8 * grid.pitch:
            raise SamplingError(f"grid pitch {grid.pitch} mm too coarse for a {mask.period} mm period")
    a, b = aperture.edges
    if region_halfwidth is not None:
        a, b = max(a, -region_halfwidth), min(b, region_halfwidth)
    if not b > a:
        raise ValueError("aperture does not overlap the coincidence region")
    s1 = np.atleast_1d(np.asarray(shifts, dtype=float))
    s2 = ratio * s1 if g2_shifts is None else np.atleast_1d(np.asarray(g2_shifts, dtype=float))
    h = grid.pitch / oversample
    out = np.empty(s1.size)
    for k, (d1, d2) in enumerate(zip(s1, s2)):
        m1, m2 = shift_mask(g1, d1), shift_mask(g2, d2)
        cuts = np.unique(np.concatenate([[a, b], mask_breakpoints(m1, a, b), mask_breakpoints(m2, a, b)]))
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            total += _romberg_piece(_piece_integrand(m1, m2, 0.5 * (lo + hi)), lo, hi, h)
        out[k] = total / (b - a)
    return out


def oracle_trace(config, schedule) -> np.ndarray:
    """Classical counterpart of a coincidence scan, built from the setup geometry.

    Pump-idler: G1 magnified by the transfer scale, displacement likewise.
    Signal-idler: G1 imaged with the relay sign onto G2, the signal pinhole
    imaged back into the G2 plane.
    """
    k = np.arange(schedule.n_steps)
    d1 = schedule.start_g1 + k * schedule.step_g1
    d2 = schedule.start_g2 + k * schedule.step_g2
    if config.kind.value == "pump_idler":
        m = config.transfer_scale
        hole = config.pinhole_idler
    else:
        m = float(config.relay_sign)
        hole = Aperture(config.pinhole_signal.diameter, config.pinhole_signal.center * config.relay_sign)
    t1 = scale_mask(config.grating_1, m)
    return aperture_convolved_product(
        t1,
        config.grating_2,
        hole,
        config.grid,
        m * d1,
        g2_shifts=d2,
        region_halfwidth=config.region_halfwidth,
    )
