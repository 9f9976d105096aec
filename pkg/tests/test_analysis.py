import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmoire.analysis import (
    ENVELOPE,
    PRODUCT,
    NoBeatDetected,
    beat_from_spectrum,
    decimate_envelope,
    envelope_model,
    expected_beat_period,
    fit_envelope_cos2,
    fit_product_cos2,
    peak_spacing,
    product_model,
)
from qmoire.engine import run_scan
from qmoire.lsq import levenberg_marquardt
from qmoire.records import ScanRecord


def record(x, y):
    return ScanRecord(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def phase_error(a, b, period):
    d = (b - a) % period
    return min(d, period - d)


# --- beat arithmetic --------------------------------------------------------


def test_beat_examples():
    assert expected_beat_period(1.2, 1.6) == 4.8
    assert expected_beat_period(1.6, 1.2) == 4.8
    assert expected_beat_period(0.8, 0.9) == 7.2
    assert math.isinf(expected_beat_period(0.7, 0.7))


@pytest.mark.parametrize("bad", [(0, 1), (-1, 1), (1, math.nan), (math.inf, 1)])
def test_beat_rejects_invalid(bad):
    with pytest.raises(ValueError):
        expected_beat_period(*bad)


@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_beat_formula(p1, p2):
    beat = expected_beat_period(p1, p2)
    if math.isinf(beat):
        assert repr(p1) == repr(p2)
    else:
        assert 1 / beat == pytest.approx(abs(1 / p1 - 1 / p2), rel=1e-9)


# --- product fit ------------------------------------------------------------

X = np.arange(481) * 0.05


def test_product_fit_noiseless():
    y = product_model(X, 1.0, 0.0, 1.2, 1.6, 0.0, 0.0)
    for init in [(1.08, 1.76), (1.32, 1.44), (1.2, 1.6)]:
        fit = fit_product_cos2(record(X, y), init)
        assert fit.converged and fit.model == PRODUCT
        assert fit.p1 == pytest.approx(1.2, rel=1e-6)
        assert fit.p2 == pytest.approx(1.6, rel=1e-6)
        assert fit.beat_period == pytest.approx(4.8, rel=1e-6)


def test_product_fit_auto_init():
    y = product_model(X, 1.3, 0.2, 1.2, 1.6, 0.1, 0.4)
    fit = fit_product_cos2(record(X, y))
    assert fit.p1 == pytest.approx(1.2, rel=1e-6)
    assert fit.p2 == pytest.approx(1.6, rel=1e-6)


def test_run_a_analytic(presets):
    p = presets["fig3a"]
    fit = fit_product_cos2(run_scan(p.config, p.schedule), (1.2, 1.6))
    assert fit.p1 == pytest.approx(1.2, rel=1e-3)
    assert fit.p2 == pytest.approx(1.6, rel=1e-3)


def test_constant_data_flagged():
    fit = fit_product_cos2(record(X, np.full(X.size, 0.3)), (1.2, 1.6))
    assert not fit.identifiable
    assert fit.offset == pytest.approx(0.3)
    fit = fit_envelope_cos2(record(X, np.zeros(X.size)), 7.0)
    assert not fit.identifiable


def test_too_few_points():
    with pytest.raises(ValueError):
        fit_product_cos2(record(np.arange(5.0), np.arange(5.0)), (1.2, 1.6))


def test_max_iter_reports_not_converged():
    y = product_model(X, 1.0, 0.0, 1.2, 1.6, 0.3, 0.1)
    fit = fit_product_cos2(record(X, y), (1.1, 1.7), (0.0, 0.0), max_iter=1)
    assert not fit.converged
    assert np.all(np.isfinite(fit.periods))


def noisy_trace():
    rng = np.random.default_rng(5)
    y = product_model(X, 1.0, 0.1, 1.2, 1.6, 0.2, 0.5)
    return y + rng.normal(0, 0.02, X.size)


def test_amplitude_scaling_invariance():
    y = noisy_trace()
    a = fit_product_cos2(record(X, y), (1.2, 1.6))
    c = 3.7
    b = fit_product_cos2(record(X, c * y), (1.2, 1.6))
    assert b.amplitude == pytest.approx(c * a.amplitude, rel=1e-9)
    assert b.offset == pytest.approx(c * a.offset, rel=1e-9)
    for pa, pb in zip(a.periods, b.periods):
        assert pb == pytest.approx(pa, rel=1e-9)
    for fa, fb, p in zip(a.phases, b.phases, a.periods):
        assert phase_error(fa, fb, p) <= 1e-9 * p


def test_translation_covariance():
    y = noisy_trace()
    a = fit_product_cos2(record(X, y), (1.2, 1.6))
    delta = 2.37
    b = fit_product_cos2(record(X + delta, y), (1.2, 1.6))
    for pa, pb in zip(a.periods, b.periods):
        assert pb == pytest.approx(pa, rel=1e-8)
    for fa, fb, p in zip(a.phases, b.phases, a.periods):
        assert phase_error(fa + delta, fb, p) <= 1e-7 * p


@st.composite
def product_instances(draw):
    p1 = draw(st.floats(0.6, 1.2))
    p2 = p1 * draw(st.floats(1.15, 1.6))
    return dict(
        amplitude=draw(st.floats(0.5, 2.0)),
        offset=draw(st.floats(0.05, 0.5)),
        periods=(p1, p2),
        phases=(draw(st.floats(0, 1)) * p1, draw(st.floats(0, 1)) * p2),
        init=(p1 * draw(st.floats(0.95, 1.05)), p2 * draw(st.floats(0.95, 1.05))),
    )


@settings(max_examples=100, deadline=None)
@given(product_instances())
def test_product_closure(t):
    y = product_model(X, t["amplitude"], t["offset"], *t["periods"], *t["phases"])
    fit = fit_product_cos2(record(X, y), t["init"])
    assert fit.converged
    assert fit.amplitude == pytest.approx(t["amplitude"], rel=1e-5)
    assert fit.offset == pytest.approx(t["offset"], rel=1e-5)
    for p, q, a, b in zip(t["periods"], fit.periods, t["phases"], fit.phases):
        assert q == pytest.approx(p, rel=1e-5)
        assert phase_error(a, b, p) <= 1e-5 * p


# --- envelope fit -----------------------------------------------------------


def test_envelope_fit_noiseless():
    x = np.arange(601) * 0.05
    y = envelope_model(x, 1.0, 0.2, 7.8, 1.1)
    fit = fit_envelope_cos2(record(x, y), 7.0)
    assert fit.converged and fit.model == ENVELOPE
    assert fit.period == pytest.approx(7.8, rel=1e-6)
    assert phase_error(1.1, fit.phases[0], 7.8) <= 1e-6 * 7.8


def test_envelope_zero_amplitude_flagged():
    x = np.arange(601) * 0.05
    fit = fit_envelope_cos2(record(x, envelope_model(x, 0.0, 0.4, 7.8, 0.0)), 7.0)
    assert not fit.identifiable


def test_envelope_negative_amplitude_canonical():
    x = np.arange(601) * 0.05
    y = 0.9 - 0.5 * np.cos(np.pi * (x - 0.3) / 7.8) ** 2
    fit = fit_envelope_cos2(record(x, y), 7.0)
    assert fit.amplitude == pytest.approx(0.5, rel=1e-6)
    assert fit.offset == pytest.approx(0.4, rel=1e-6)
    assert phase_error(0.3 + 3.9, fit.phases[0], 7.8) <= 1e-6


def test_run_b_envelope(presets):
    for name in ("fig3b", "fig5b"):
        p = presets[name]
        fit = fit_envelope_cos2(run_scan(p.config, p.schedule), 7.2, fast_period=0.9)
        assert fit.period == pytest.approx(7.2, rel=0.02)


def test_consistency_product_vs_envelope(presets):
    p = presets["fig3a"]
    trace = run_scan(p.config, p.schedule)
    product = fit_product_cos2(trace, (1.2, 1.6))
    envelope = fit_envelope_cos2(trace, 4.8, fast_period=1.6)
    assert envelope.period == pytest.approx(expected_beat_period(product.p1, product.p2), rel=0.02)


def test_decimate_envelope_windows():
    x = np.arange(101) * 0.1
    y = 1 + np.sin(x)
    env = decimate_envelope(record(x, y), 1.0)
    assert len(env) == 10
    assert env.values[0] == pytest.approx(np.max(y[:10]))
    with pytest.raises(ValueError):
        decimate_envelope(record(x, y), 0.0)


def test_peak_spacing(presets):
    p = presets["fig3a"]
    assert peak_spacing(run_scan(p.config, p.schedule)) == pytest.approx(4.8, rel=0.02)


# --- spectrum ---------------------------------------------------------------


def test_spectral_beat_product():
    x = np.arange(0, 48, 0.05)
    y = product_model(x, 1.0, 0.0, 1.2, 1.6, 0.0, 0.0)
    est = beat_from_spectrum(record(x, y))
    bin_width = 1 / (x.size * 0.05)
    assert abs(est.frequency - 1 / 4.8) <= bin_width
    assert est.interval[0] <= est.period <= est.interval[1]


def test_single_cosine_has_no_beat():
    x = np.arange(0, 48, 0.05)
    with pytest.raises(NoBeatDetected):
        beat_from_spectrum(record(x, 1 + np.cos(2 * np.pi * x / 1.2)))


def test_white_noise_false_alarm_rate():
    x = np.arange(256) * 0.05
    hits = 0
    for seed in range(1000):
        y = 10 + np.random.default_rng(seed).normal(size=x.size)
        try:
            beat_from_spectrum(record(x, y))
            hits += 1
        except NoBeatDetected:
            pass
    assert hits <= 10


def test_spectrum_input_checks():
    with pytest.raises(ValueError):
        beat_from_spectrum(record(np.arange(10.0), np.ones(10)))
    x = np.cumsum(np.linspace(0.05, 0.1, 64))
    with pytest.raises(ValueError):
        beat_from_spectrum(record(x, 1 + np.cos(x)))


# --- optimizer --------------------------------------------------------------


def test_lm_linear_problem():
    a = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]])
    b = np.array([1.0, 2.9, 5.1, 7.0])
    res = levenberg_marquardt(lambda q: a @ q - b, [0.0, 0.0], [1.0, 1.0])
    assert res.converged
    assert np.allclose(res.x, np.linalg.lstsq(a, b, rcond=None)[0], rtol=1e-8)


def test_lm_respects_bounds():
    res = levenberg_marquardt(lambda q: q - 5.0, [1.0], [1.0], lower=[0.0], upper=[2.0])
    assert res.x[0] == pytest.approx(2.0)
