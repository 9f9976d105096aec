import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import max_relative
from qmoire.analysis import beat_from_spectrum, fit_envelope_cos2, spectral_peaks
from qmoire.classical import (
    ImageGrid,
    PatternImage,
    ScanLine,
    aperture_convolved_product,
    center_scanline,
    extract_scanline,
    oracle_trace,
    render_superposition,
)
from qmoire.engine import run_scan
from qmoire.optics import Aperture, SamplingError, SpatialGrid, evaluate_mask, make_grating, open_mask

GRID = SpatialGrid.centered()


def test_open_masks_render_ones():
    img = render_superposition(open_mask(), open_mask(), 0.0, ImageGrid(64, 8, 0.05))
    assert np.all(img.pixels == 1.0)
    assert img.pixels.size == img.width * img.height


def test_separability():
    g1, g2 = make_grating(1.2, 0.1), make_grating(1.6, -0.2, contrast=0.7)
    img = render_superposition(g1, g2, 0.0, ImageGrid(400, 12, 0.02))
    expected = evaluate_mask(g1, img.x) * evaluate_mask(g2, img.x)
    assert np.max(np.abs(img.pixels - expected[None, :])) <= 1e-12


def test_beat_1p2_1p6():
    img = render_superposition(make_grating(1.2), make_grating(1.6))
    est = beat_from_spectrum(extract_scanline(img, center_scanline(img)))
    bin_width = 1 / (img.width * img.pitch)
    assert abs(est.frequency - 1 / 4.8) <= bin_width


def test_identical_gratings_have_no_beat():
    g = make_grating(1.2)
    img = render_superposition(g, g)
    row = extract_scanline(img, center_scanline(img))
    assert np.max(np.abs(row.values - evaluate_mask(g, img.x) ** 2)) <= 1e-12
    freqs, _, bin_width = spectral_peaks(row)
    # cos^4 has lines at 1/p and 2/p only; nothing below the grating line
    assert freqs.min() == pytest.approx(1 / 1.2, abs=bin_width)


def test_rotated_grating():
    g1, g2 = make_grating(1.2), make_grating(1.6)
    img = render_superposition(g1, g2, math.pi / 2, ImageGrid(100, 90, 0.05))
    expected = evaluate_mask(g1, img.x)[None, :] * evaluate_mask(g2, img.y)[:, None]
    assert np.max(np.abs(img.pixels - expected)) <= 1e-12


def test_render_errors():
    with pytest.raises(SamplingError):
        render_superposition(make_grating(0.07), open_mask(), 0.0, ImageGrid(64, 8, 0.02))
    with pytest.raises(ValueError):
        render_superposition(open_mask(), open_mask(), 2.0)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(0.3, 3),
    st.floats(0.3, 3),
    st.floats(0, 1),
    st.floats(0, 1),
    st.sampled_from(["cosine_squared", "binary"]),
    st.floats(0, math.pi / 2),
)
def test_render_range(p1, p2, c1, c2, profile, angle):
    img = render_superposition(
        make_grating(p1, contrast=c1, profile=profile), make_grating(p2, contrast=c2), angle, ImageGrid(40, 30, 0.05)
    )
    assert img.pixels.min() >= 0 and img.pixels.max() <= 1


def test_scanline_validation():
    with pytest.raises(ValueError):
        ScanLine((0, 0), (0, 0), 1.0, 5)
    with pytest.raises(ValueError):
        ScanLine((0, 0), (1, 0), 1.0, 1)
    line = ScanLine((0, 0), (3, 4), 1.0, 5)
    assert line.direction == pytest.approx((0.6, 0.8))


def test_horizontal_scanline_equals_product():
    g1, g2 = make_grating(1.2), make_grating(1.6)
    img = render_superposition(g1, g2)
    line = center_scanline(img)
    rec = extract_scanline(img, line)
    x = line.start[0] + rec.positions
    assert np.max(np.abs(rec.values - evaluate_mask(g1, x) * evaluate_mask(g2, x))) <= 1e-12


def test_constant_image_constant_scan():
    img = PatternImage(10, 6, 0.1, np.full((6, 10), 0.37))
    rec = extract_scanline(img, ScanLine((0.05, 0.1), (1, 0.3), 0.7, 9))
    assert np.allclose(rec.values, 0.37, rtol=0, atol=1e-15)


def test_scanline_outside_image():
    img = PatternImage(10, 6, 0.1, np.ones((6, 10)))
    with pytest.raises(ValueError):
        extract_scanline(img, ScanLine((0, 0), (1, 0), 5.0, 9))


def test_scanline_16mm_envelope():
    img = render_superposition(make_grating(0.8), make_grating(0.9))
    line = ScanLine((-8.0, 0.0), (1.0, 0.0), 16.0, 801)
    rec = extract_scanline(img, line)
    fit = fit_envelope_cos2(rec, 7.2, fast_period=0.9)
    assert fit.period == pytest.approx(7.2, rel=0.02)


def test_image_validation():
    with pytest.raises(ValueError):
        PatternImage(2, 1, 0.1, np.array([[0.0, 1.5]]))
    with pytest.raises(ValueError):
        PatternImage(3, 1, 0.1, np.array([[0.0, 1.0]]))


# --- aperture-averaged product ---------------------------------------------


def test_open_profile_is_one():
    out = aperture_convolved_product(open_mask(), open_mask(), Aperture(0.5), GRID, np.linspace(0, 3, 7))
    assert np.allclose(out, 1.0, rtol=0, atol=1e-14)


def test_point_aperture_is_pointwise_product():
    g1, g2 = make_grating(1.6, 0.1), make_grating(1.2)
    s = np.linspace(0, 4.8, 25)
    out = aperture_convolved_product(g1, g2, Aperture(1e-7, 0.2), GRID, s, ratio=1.0)
    expected = evaluate_mask(g1, 0.2 - s) * evaluate_mask(g2, 0.2 - s)
    assert np.max(np.abs(out - expected)) <= 1e-10


def test_run_a_oracle(presets):
    p = presets["fig3a"]
    s = 0.2 * np.arange(121)
    out = aperture_convolved_product(make_grating(1.6), make_grating(1.2), Aperture(0.5), GRID, s)
    assert max_relative(run_scan(p.config, p.schedule).values, out) <= 1e-9


def test_oracle_trace_matches_engine(presets):
    for p in presets.values():
        assert max_relative(run_scan(p.config, p.schedule).values, oracle_trace(p.config, p.schedule)) <= 1e-9


def test_profile_errors():
    with pytest.raises(SamplingError):
        aperture_convolved_product(make_grating(0.05), open_mask(), Aperture(0.5), GRID, [0.0])
    with pytest.raises(ValueError):
        aperture_convolved_product(open_mask(), open_mask(), Aperture(0.5, 3.0), GRID, [0.0], region_halfwidth=1.0)
