"""Flat ``key = value`` experiment files and the built-in figure presets.

Lengths are millimetres and wavelengths nanometres; no unit suffixes are
parsed. ``#`` starts a comment. Unknown or repeated keys are errors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .analysis import expected_beat_period
from .classical import ImageGrid
from .engine import ExperimentConfig, ScanSchedule, SetupKind, effective_g1
from .optics import PROFILES, Aperture, SpatialGrid, TransmissionMask, make_grating
from .photocount import CountingPlan


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every message found."""

    def __init__(self, problems, source: str = "<config>"):
        self.problems = list(problems)
        self.source = source
        super().__init__("\n".join(f"{source}: {p}" for p in self.problems))


def _float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _positive(text: str) -> float:
    v = _float(text)
    if not v > 0:
        raise ValueError("must be positive")
    return v


def _unit(text: str) -> float:
    v = _float(text)
    if not 0 <= v <= 1:
        raise ValueError("must lie in [0, 1]")
    return v


def _open_unit(text: str) -> float:
    v = _float(text)
    if not 0 < v < 1:
        raise ValueError("must lie in (0, 1)")
    return v


def _period(text: str):
    return "open" if text == "open" else _positive(text)


def _profile(text: str) -> str:
    if text not in PROFILES:
        raise ValueError(f"must be one of {', '.join(PROFILES)}")
    return text


def _setup(text: str) -> SetupKind:
    try:
        return SetupKind(text)
    except ValueError:
        raise ValueError("must be pump_idler or signal_idler") from None


def _count(text: str) -> int:
    v = int(text)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise ValueError("must be an unsigned 64-bit integer")
    return v


def _sign(text: str) -> int:
    v = int(text)
    if v not in (1, -1):
        raise ValueError("must be 1 or -1")
    return v


def _nonneg(text: str) -> float:
    v = _float(text)
    if v < 0:
        raise ValueError("must be nonnegative")
    return v


REQUIRED = object()

# key -> (parser, default)
KEYS: dict[str, tuple[Callable, object]] = {
    "setup": (_setup, REQUIRED),
    "g1.period": (_period, REQUIRED),
    "g1.profile": (_profile, "cosine_squared"),
    "g1.contrast": (_unit, 1.0),
    "g1.duty": (_open_unit, 0.5),
    "g1.phase": (_float, 0.0),
    "g2.period": (_period, REQUIRED),
    "g2.profile": (_profile, "cosine_squared"),
    "g2.contrast": (_unit, 1.0),
    "g2.duty": (_open_unit, 0.5),
    "g2.phase": (_float, 0.0),
    "sigma": (_positive, 2.0),
    "pinhole.diameter": (_positive, 0.5),
    "lambda.pump": (_positive, 425.0),
    "lambda.signal": (_positive, 890.0),
    "lambda.idler": (_positive, 810.0),
    "focal.length": (_positive, 250.0),
    "relay.sign": (_sign, -1),
    "scan.steps": (_count, REQUIRED),
    "scan.step.g1": (_float, REQUIRED),
    "scan.step.g2": (_float, REQUIRED),
    "scan.start.g1": (_float, 0.0),
    "scan.start.g2": (_float, 0.0),
    "mc.mean_pairs": (_positive, 1e4),
    "mc.seed": (_seed, 2004),
    "mc.background": (_nonneg, 0.0),
    "grid.pitch": (_positive, 0.01),
    "grid.points": (_count, 4096),
    "region.halfwidth": (_positive, 1.0),
}


@dataclass(frozen=True)
class RenderSpec:
    grating_1: TransmissionMask
    grating_2: TransmissionMask
    relative_angle: float = 0.0
    grid2d: ImageGrid = field(default_factory=lambda: ImageGrid(1200, 200, 0.02))


@dataclass(frozen=True)
class RunPreset:
    """A resolved experiment: either a grating scan or a classical render."""

    name: str
    config: Optional[ExperimentConfig] = None
    schedule: Optional[ScanSchedule] = None
    plan: Optional[CountingPlan] = None
    fit_model: str = "product"
    render: Optional[RenderSpec] = None
    values: dict = field(default_factory=dict, repr=False)


def parse_config_text(text: str, source: str = "<config>", name: str = "custom") -> RunPreset:
    problems = []
    values: dict = {}
    lines: dict = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {n}: expected key = value")
            continue
        key, _, val = (s.strip() for s in line.partition("="))
        if key not in KEYS:
            problems.append(f"line {n}: unknown key {key!r}")
            continue
        if key in values:
            problems.append(f"line {n}: duplicate key {key!r} (first set on line {lines[key]})")
            continue
        try:
            values[key] = KEYS[key][0](val)
            lines[key] = n
        except ValueError as exc:
            problems.append(f"line {n}: invalid value {val!r} for {key}: {exc}")
    missing = [k for k, (_, d) in KEYS.items() if d is REQUIRED and k not in values]
    if missing:
        problems.append("missing required keys: " + ", ".join(missing))
    if problems:
        raise ConfigError(problems, source)
    for k, (_, d) in KEYS.items():
        values.setdefault(k, d)

    def where(*keys):
        found = [lines[k] for k in keys if k in lines]
        return f"line {min(found)}" if found else "defaults"

    try:
        g1 = make_grating(values["g1.period"], values["g1.phase"], values["g1.profile"], values["g1.contrast"], values["g1.duty"])
        g2 = make_grating(values["g2.period"], values["g2.phase"], values["g2.profile"], values["g2.contrast"], values["g2.duty"])
    except ValueError as exc:
        raise ConfigError([f"{where('g1.period', 'g2.period')}: {exc}"], source) from None
    try:
        grid = SpatialGrid.centered(values["grid.points"], values["grid.pitch"])
    except ValueError as exc:
        raise ConfigError([f"{where('grid.points', 'grid.pitch')}: {exc}"], source) from None
    try:
        hole = Aperture(values["pinhole.diameter"])
        config = ExperimentConfig(
            kind=values["setup"],
            grating_1=g1,
            grating_2=g2,
            transfer_scale=values["sigma"],
            pinhole_signal=hole,
            pinhole_idler=hole,
            lambda_pump=values["lambda.pump"],
            lambda_signal=values["lambda.signal"],
            lambda_idler=values["lambda.idler"],
            focal_length=values["focal.length"],
            region_halfwidth=values["region.halfwidth"],
            grid=grid,
            relay_sign=values["relay.sign"],
        )
    except ValueError as exc:
        raise ConfigError([f"{where('setup', 'pinhole.diameter', 'relay.sign')}: {exc}"], source) from None
    try:
        schedule = ScanSchedule(
            values["scan.steps"],
            values["scan.step.g1"],
            values["scan.step.g2"],
            values["scan.start.g1"],
            values["scan.start.g2"],
        )
    except ValueError as exc:
        raise ConfigError([f"{where('scan.steps', 'scan.step.g1', 'scan.step.g2')}: {exc}"], source) from None
    plan = CountingPlan(schedule, values["mc.mean_pairs"], values["mc.seed"], values["mc.background"])
    return RunPreset(name, config, schedule, plan, default_fit_model(config), None, values)


def load_config(path) -> RunPreset:
    """Parse a UTF-8 ``key = value`` file into config, schedule and counting plan."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError([f"not valid UTF-8: {exc}"], str(path)) from None
    return parse_config_text(text, str(path))


def default_fit_model(config: ExperimentConfig) -> str:
    """Envelope fit once the beat is much slower than both gratings, else the product fit."""
    t1, _ = effective_g1(config)
    periods = [m.period for m in (t1, config.grating_2) if m.period is not None]
    if len(periods) < 2:
        return "product"
    beat = expected_beat_period(*periods)
    return "envelope" if beat > 5 * max(periods) else "product"


# Scan lengths are not reported; each preset covers five beat periods (fig3a/5a)
# or four (fig3b/5b). In the signal-idler setup G1 is stepped opposite to G2
# because the 2f-2f relay inverts its image.
PRESET_TEXT = {
    "fig3a": """
setup = pump_idler
g1.period = 0.8
g2.period = 1.2
sigma = 2
scan.steps = 121
scan.step.g1 = 0.1
scan.step.g2 = 0.2
""",
    "fig3b": """
setup = pump_idler
g1.period = 0.4
g2.period = 0.9
sigma = 2
scan.steps = 289
scan.step.g1 = 0.05
scan.step.g2 = 0.1
""",
    "fig5a": """
setup = signal_idler
g1.period = 1.6
g2.period = 1.2
scan.steps = 121
scan.step.g1 = -0.2
scan.step.g2 = 0.2
""",
    "fig5b": """
setup = signal_idler
g1.period = 0.8
g2.period = 0.9
scan.steps = 289
scan.step.g1 = -0.1
scan.step.g2 = 0.1
""",
}

RENDER_PRESETS = {
    "fig1a": (RenderSpec(make_grating(1.6), make_grating(1.2)), "product"),
    "fig1b": (RenderSpec(make_grating(0.8), make_grating(0.9)), "envelope"),
}

PRESET_NAMES = tuple(PRESET_TEXT) + tuple(RENDER_PRESETS)


def resolve_preset(name: str) -> RunPreset:
    if name in PRESET_TEXT:
        return parse_config_text(PRESET_TEXT[name], f"<preset {name}>", name)
    if name in RENDER_PRESETS:
        spec, model = RENDER_PRESETS[name]
        return RunPreset(name, fit_model=model, render=spec)
    raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
