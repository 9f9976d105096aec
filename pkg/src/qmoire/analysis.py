"""Moiré beat arithmetic, cos^2 model fits and a periodogram beat estimator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .lsq import levenberg_marquardt
from .records import ScanRecord

PERIOD_BOUNDS = (0.1, 100.0)
MIN_FIT_POINTS = 8
MIN_SPECTRUM_POINTS = 16

PRODUCT = "product_cos2"
ENVELOPE = "envelope_cos2"


class NoBeatDetected(ValueError):
    """The periodogram holds no pair of significant spectral lines."""


def expected_beat_period(p1: float, p2: float) -> float:
    """Moiré beat period 1 / |1/p1 - 1/p2|; ``math.inf`` for equal periods.

    The arithmetic runs on the shortest decimal form of each period, so
    ``expected_beat_period(1.2, 1.6) == 4.8`` holds exactly.
    """
    if not (p1 > 0 and p2 > 0):
        raise ValueError(f"periods must be positive, got {p1}, {p2}")
    a, b = Fraction(repr(float(p1))), Fraction(repr(float(p2)))
    if a == b:
        return math.inf
    return float(1 / abs(1 / a - 1 / b))


def cos2(x, period, phase):
    return np.cos(np.pi * (np.asarray(x) - phase) / period) ** 2


def product_model(x, amplitude, offset, p1, p2, phi1, phi2):
    return offset + amplitude * cos2(x, p1, phi1) * cos2(x, p2, phi2)


def envelope_model(x, amplitude, offset, period, phase):
    return offset + amplitude * cos2(x, period, phase)


@dataclass(frozen=True)
class FitResult:
    model: str
    amplitude: float
    offset: float
    periods: tuple
    phases: tuple
    residual_norm: float
    converged: bool
    iterations: int
    identifiable: bool = True
    n_points: int = 0

    @property
    def p1(self) -> float:
        return self.periods[0]

    @property
    def p2(self) -> float:
        return self.periods[1]

    @property
    def period(self) -> float:
        return self.periods[0]

    @property
    def beat_period(self) -> float:
        if self.model == ENVELOPE:
            return self.period
        return expected_beat_period(self.p1, self.p2)

    def predict(self, x) -> np.ndarray:
        if self.model == PRODUCT:
            return product_model(x, self.amplitude, self.offset, *self.periods, *self.phases)
        return envelope_model(x, self.amplitude, self.offset, self.period, self.phases[0])

    def to_dict(self) -> dict:
        out = {
            "model": self.model,
            "amplitude": self.amplitude,
            "offset": self.offset,
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "identifiable": self.identifiable,
            "iterations": self.iterations,
            "n_points": self.n_points,
        }
        if self.model == PRODUCT:
            out.update(p1=self.p1, p2=self.p2, phase1=self.phases[0], phase2=self.phases[1])
            if self.identifiable:
                out["beat_period"] = self.beat_period
        else:
            out.update(period=self.period, phase=self.phases[0])
        return out


@dataclass(frozen=True)
class BeatEstimate:
    period: float
    interval: tuple
    frequency: float
    peak_frequencies: tuple = field(default=(), repr=False)


# --- spectral analysis ------------------------------------------------------


def _uniform_step(x: np.ndarray) -> float:
    dx = np.diff(x)
    step = float(dx.mean())
    if np.max(np.abs(dx - step)) > 1e-6 * step:
        raise ValueError("spectral analysis needs uniformly spaced positions")
    return step


def spectral_peaks(data: ScanRecord, significance: float = 0.99, rel_floor: float = 1e-2):
    """Significant lines of the Hann-windowed periodogram.

    Returns ``(frequencies, powers, bin_width)`` with frequencies refined by
    quadratic interpolation of the log power around each local maximum. A line
    is significant when it exceeds both ``rel_floor`` times the strongest
    line and the white-noise level at which the largest of all bins would be
    reached by chance with probability ``1 - significance``. The noise level
    is estimated from the median bin power.
    """
    x = data.positions
    y = np.asarray(data.values, dtype=float)
    n = x.size
    if n < MIN_SPECTRUM_POINTS:
        raise ValueError(f"need at least {MIN_SPECTRUM_POINTS} samples, got {n}")
    dx = _uniform_step(x)
    power = np.abs(np.fft.rfft((y - y.mean()) * np.hanning(n))) ** 2
    df = 1.0 / (n * dx)
    body = power[1:]
    if not np.any(body > 0):
        return np.empty(0), np.empty(0), df
    m = body.size
    noise = np.median(body) / math.log(2)
    threshold = max(
        noise * -math.log(1 - significance ** (1 / m)),
        rel_floor * body.max(),
    )
    k = np.arange(1, power.size - 1)
    is_peak = (power[k] > power[k - 1]) & (power[k] >= power[k + 1]) & (power[k] > threshold)
    freqs, pows = [], []
    for kk in k[is_peak]:
        a, b, c = np.log(power[kk - 1 : kk + 2] + 1e-300)
        denom = a - 2 * b + c
        delta = 0.5 * (a - c) / denom if denom < 0 else 0.0
        freqs.append((kk + delta) * df)
        pows.append(power[kk])
    return np.array(freqs), np.array(pows), df


def beat_from_spectrum(data: ScanRecord, significance: float = 0.99) -> BeatEstimate:
    """Slow moiré period from the lowest of at least two significant spectral lines.

    A single line (one grating, or a pure envelope) or noise alone raises
    :class:`NoBeatDetected`. The interval spans half a frequency bin either
    side of the refined line.
    """
    freqs, _, df = spectral_peaks(data, significance)
    if freqs.size < 2:
        raise NoBeatDetected("no beat detected: fewer than two significant spectral lines")
    f = float(freqs[0])
    hi = 1.0 / max(f - 0.5 * df, 1e-300)
    return BeatEstimate(1.0 / f, (1.0 / (f + 0.5 * df), hi), f, tuple(freqs))


def peak_spacing(data: ScanRecord, rel_height: float = 0.9) -> float:
    """Mean spacing of interior local maxima reaching ``rel_height`` of the maximum."""
    x, y = data.positions, np.asarray(data.values, dtype=float)
    k = np.arange(1, y.size - 1)
    top = y.max()
    sel = k[(y[k] > y[k - 1]) & (y[k] >= y[k + 1]) & (y[k] >= rel_height * top)]
    if sel.size < 2:
        raise ValueError("fewer than two large peaks in the trace")
    pos = []
    for kk in sel:
        a, b, c = y[kk - 1 : kk + 2]
        denom = a - 2 * b + c
        delta = 0.5 * (a - c) / denom if denom != 0 else 0.0
        pos.append(np.interp(kk + delta, np.arange(y.size), x))
    return float(np.mean(np.diff(pos)))


def decimate_envelope(data: ScanRecord, window: float) -> ScanRecord:
    """Keep the largest sample of each complete window of width ``window``."""
    if not window > 0:
        raise ValueError("window must be positive")
    x, y = data.positions, data.values
    x0 = x[0]
    bins = np.floor((x - x0) / window + 1e-9).astype(int)
    n_complete = int(np.floor((x[-1] - x0) / window + 1e-9))
    keep = []
    for b in range(max(n_complete, 1)):
        idx = np.flatnonzero(bins == b)
        if idx.size:
            keep.append(idx[np.argmax(y[idx])])
    keep = np.array(keep, dtype=int)
    return ScanRecord(x[keep], y[keep], data.kind, data.expected_rate[keep], data.steps[keep])


# --- fitting ----------------------------------------------------------------


def _degenerate(y: np.ndarray) -> bool:
    return float(np.ptp(y)) <= 1e-12 * max(float(np.max(np.abs(y))), 1e-300)


def _linear_scan(y, basis_a, basis_b=None):
    """Best (sse, amplitude, offset) for every candidate shape.

    Candidates are ``basis_a[i] * basis_b[j]`` (or ``basis_a[i]`` alone);
    for each, amplitude and offset are the closed-form linear least squares.
    """
    n = y.size
    ybar = y.mean()
    syy = float(np.sum((y - ybar) ** 2))
    if basis_b is None:
        sg = basis_a.sum(axis=1)
        sgy = basis_a @ y
        sgg = np.sum(basis_a**2, axis=1)
    else:
        sg = basis_a @ basis_b.T
        sgy = (basis_a * y) @ basis_b.T
        sgg = (basis_a**2) @ (basis_b**2).T
    cov = sgy - sg * ybar
    var = sgg - sg**2 / n
    with np.errstate(divide="ignore", invalid="ignore"):
        amp = np.where(var > 0, cov / var, 0.0)
        sse = np.where(var > 0, syy - cov**2 / var, syy)
    offset = ybar - amp * sg / n
    return sse, amp, offset


def _candidate_bank(x, period, span, n_periods, n_phases):
    ps = period * (1 + np.linspace(-span, span, n_periods))
    ps = np.clip(ps, *PERIOD_BOUNDS)
    frac = np.arange(n_phases) / n_phases
    pp = np.repeat(ps, n_phases)
    ph = (ps[:, None] * frac[None, :]).ravel()
    return pp, ph, cos2(x[None, :], pp[:, None], ph[:, None])


def _finish(model, params, x, y, result, n_per):
    amp, off = float(params[0]), float(params[1])
    if model == ENVELOPE and amp < 0:
        # B + A cos^2(u) == (B + A) - A cos^2(u + pi/2)
        params = params.copy()
        amp, off = -amp, off + amp
        params[3] += 0.5 * params[2]
    periods = tuple(float(p) for p in params[2 : 2 + n_per])
    phases = tuple(float(ph % p) for ph, p in zip(params[2 + n_per :], periods))
    if model == PRODUCT and periods[0] > periods[1]:
        # the product is symmetric in its two factors; report p1 <= p2
        periods, phases = periods[::-1], phases[::-1]
    ok = result.converged and bool(np.all(np.isfinite(params)))
    return FitResult(model, amp, off, periods, phases, math.sqrt(result.cost), ok, result.iterations, True, y.size)


def _not_identifiable(model, y, n_per, init_periods):
    periods = tuple(float(p) for p in init_periods) if init_periods is not None else (math.nan,) * n_per
    return FitResult(model, 0.0, float(np.mean(y)), periods, (0.0,) * n_per, 0.0, False, 0, False, y.size)


def _check_points(data: ScanRecord):
    if len(data) < MIN_FIT_POINTS:
        raise ValueError(f"need at least {MIN_FIT_POINTS} data points, got {len(data)}")
    return data.positions, np.asarray(data.values, dtype=float)


def _auto_product_periods(data: ScanRecord) -> Optional[tuple]:
    try:
        freqs, pows, _ = spectral_peaks(data)
    except ValueError:
        return None
    if freqs.size < 2:
        return None
    # The lowest of three or more lines is the beat; the grating lines are the strongest of the rest.
    cand_f, cand_p = (freqs[1:], pows[1:]) if freqs.size >= 3 else (freqs, pows)
    best = cand_f[np.argsort(cand_p)[::-1][:2]]
    return tuple(sorted(1.0 / best))


def fit_product_cos2(
    data: ScanRecord,
    periods: Optional[Sequence[float]] = None,
    phases: Optional[Sequence[float]] = None,
    *,
    period_bounds: tuple = PERIOD_BOUNDS,
    max_iter: int = 500,
    search_span: float = 0.12,
) -> FitResult:
    """Fit ``B + A cos^2(pi (x - phi1)/p1) cos^2(pi (x - phi2)/p2)``.

    Parameters
    ----------
    data : ScanRecord
        At least 8 samples.
    periods : (p1, p2), optional
        Initial grating periods. By default they come from the two strongest
        non-beat lines of the periodogram.
    phases : (phi1, phi2), optional
        Initial phases. Without them, periods within ``search_span`` of the
        initial values and phases over one period are searched on a coarse
        grid, solving amplitude and offset linearly for every candidate.

    Returns
    -------
    FitResult
        Periods are ordered ``p1 <= p2``. ``converged`` is False when the
        optimizer stalls or hits ``max_iter``; constant data give
        ``identifiable=False``.
    """
    x, y = _check_points(data)
    if periods is None:
        periods = _auto_product_periods(data)
    if _degenerate(y) or periods is None:
        return _not_identifiable(PRODUCT, y, 2, periods)
    p1, p2 = (float(p) for p in periods)
    if not (p1 > 0 and p2 > 0):
        raise ValueError("initial periods must be positive")

    if phases is not None:
        starts = []
        g = (cos2(x, p1, phases[0]) * cos2(x, p2, phases[1]))[None, :]
        _, amp, off = _linear_scan(y, g)
        starts.append([amp[0], off[0], p1, p2, phases[0], phases[1]])
    else:
        pa, fa, ba = _candidate_bank(x, p1, search_span, 25, 8)
        pb, fb, bb = _candidate_bank(x, p2, search_span, 25, 8)
        sse, amp, off = _linear_scan(y, ba, bb)
        order = np.argsort(sse, axis=None)[:3]
        starts = []
        for flat in order:
            i, j = np.unravel_index(flat, sse.shape)
            starts.append([amp[i, j], off[i, j], pa[i], pb[j], fa[i], fb[j]])

    lo = [-np.inf, -np.inf, period_bounds[0], period_bounds[0], -np.inf, -np.inf]
    hi = [np.inf, np.inf, period_bounds[1], period_bounds[1], np.inf, np.inf]

    def residual(q):
        return product_model(x, *q) - y

    best = None
    for s in starts:
        s = np.asarray(s, dtype=float)
        yscale = max(abs(s[0]), abs(s[1]), float(np.std(y)), 1e-300)
        scale = np.array([yscale, yscale, s[2], s[3], s[2], s[3]])
        res = levenberg_marquardt(residual, s, scale, lo, hi, max_iter=max_iter)
        if best is None or res.cost < best.cost:
            best = res
    return _finish(PRODUCT, best.x, x, y, best, 2)


def fit_envelope_cos2(
    data: ScanRecord,
    period: Optional[float] = None,
    phase: Optional[float] = None,
    *,
    fast_period: Optional[float] = None,
    period_bounds: tuple = PERIOD_BOUNDS,
    max_iter: int = 500,
    search_span: float = 0.12,
) -> FitResult:
    """Fit a single slow envelope ``B + A cos^2(pi (x - phi) / P)``.

    With ``fast_period`` the fit runs on the local maxima of consecutive
    windows of that width, so an unresolved fast modulation does not bias the
    envelope. ``period`` defaults to the lowest significant spectral line of
    the raw data.
    """
    _check_points(data)
    if period is None:
        try:
            freqs, _, _ = spectral_peaks(data)
            period = 1.0 / freqs[0] if freqs.size else None
        except ValueError:
            period = None
    if fast_period is not None:
        data = decimate_envelope(data, fast_period)
        x, y = _check_points(data)
    else:
        x, y = data.positions, np.asarray(data.values, dtype=float)
    if _degenerate(y) or period is None:
        return _not_identifiable(ENVELOPE, y, 1, None if period is None else (period,))
    period = float(period)
    if not period > 0:
        raise ValueError("initial period must be positive")

    if phase is not None:
        _, amp, off = _linear_scan(y, cos2(x, period, phase)[None, :])
        starts = [[amp[0], off[0], period, phase]]
    else:
        pp, ph, bank = _candidate_bank(x, period, search_span, 25, 16)
        sse, amp, off = _linear_scan(y, bank)
        starts = [[amp[i], off[i], pp[i], ph[i]] for i in np.argsort(sse)[:3]]

    lo = [-np.inf, -np.inf, period_bounds[0], -np.inf]
    hi = [np.inf, np.inf, period_bounds[1], np.inf]

    def residual(q):
        return envelope_model(x, *q) - y

    best = None
    for s in starts:
        s = np.asarray(s, dtype=float)
        yscale = max(abs(s[0]), abs(s[1]), float(np.std(y)), 1e-300)
        res = levenberg_marquardt(residual, s, [yscale, yscale, s[2], s[2]], lo, hi, max_iter=max_iter)
        if best is None or res.cost < best.cost:
            best = res
    return _finish(ENVELOPE, best.x, x, y, best, 1)
