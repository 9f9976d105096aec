"""Run presets or config files end to end and write CSV, PGM and fit reports."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import (
    NoBeatDetected,
    beat_from_spectrum,
    expected_beat_period,
    fit_envelope_cos2,
    fit_product_cos2,
    peak_spacing,
)
from .classical import center_scanline, extract_scanline, render_superposition
from .config import RunPreset
from .engine import effective_g1, run_scan
from .io import atomic_write, write_csv, write_pgm
from .photocount import run_counting_scan
from .records import ScanRecord

FORMAT_VERSION = 1
MODES = ("analytic", "mc")


@dataclass(frozen=True)
class OutputBundle:
    data_paths: tuple = ()
    image_paths: tuple = ()
    report_path: Path = None
    format_version: int = FORMAT_VERSION
    report: dict = field(default_factory=dict, repr=False)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def analyse(record: ScanRecord, model: str, periods) -> dict:
    """Fit ``record`` with the requested model seeded by the known grating periods."""
    periods = [p for p in periods if p is not None]
    report: dict = {}
    if model == "product":
        fit = fit_product_cos2(record, sorted(periods) if len(periods) == 2 else None)
        try:
            report["peak_spacing"] = peak_spacing(record)
        except ValueError:
            pass
    elif model == "envelope":
        seed = expected_beat_period(*periods) if len(periods) == 2 else None
        seed = seed if seed is not None and math.isfinite(seed) else None
        fast = max(periods) if periods else None
        fit = fit_envelope_cos2(record, seed, fast_period=fast)
    else:
        raise ValueError(f"unknown fit model {model!r}")
    report["fit"] = {k: _json_value(v) for k, v in fit.to_dict().items()}
    if len(periods) == 2:
        report["expected_beat_period"] = _json_value(expected_beat_period(*periods))
    try:
        report["spectral_beat_period"] = beat_from_spectrum(record).period
    except (NoBeatDetected, ValueError):
        report["spectral_beat_period"] = None
    return report


def run_preset(preset: RunPreset, mode: str = "analytic", output_dir=".", workers: int = 1) -> OutputBundle:
    """Simulate ``preset``, write its data files and a JSON fit report.

    Scan presets write ``<name>_<mode>.csv``; render presets write
    ``<name>.pgm`` plus the centre scan line as ``<name>_centerline.csv``.
    Fit failures are recorded in the report, not raised.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    images = []
    if preset.render is not None:
        spec = preset.render
        image = render_superposition(spec.grating_1, spec.grating_2, spec.relative_angle, spec.grid2d)
        images.append(write_pgm(image, out / f"{preset.name}.pgm"))
        record = extract_scanline(image, center_scanline(image))
        data = write_csv(record, out / f"{preset.name}_centerline.csv")
        periods = (spec.grating_1.period, spec.grating_2.period)
    else:
        config = preset.config
        if mode == "analytic":
            record = run_scan(config, preset.schedule)
        else:
            record = run_counting_scan(config, preset.plan, workers=workers)
        data = write_csv(record, out / f"{preset.name}_{mode}.csv")
        periods = (effective_g1(config)[0].period, config.grating_2.period)

    report = {"format_version": FORMAT_VERSION, "preset": preset.name, "mode": mode, "model": preset.fit_model}
    report.update(analyse(record, preset.fit_model, periods))
    report_path = atomic_write(out / f"{preset.name}_fit.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    return OutputBundle((data,), tuple(images), report_path, FORMAT_VERSION, report)
