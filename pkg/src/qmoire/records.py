"""Scan data container shared by the simulators, the fitters and the CSV writer."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

KINDS = ("analytic_rate", "counts")


@dataclass(frozen=True)
class ScanRecord:
    """Ordered samples of one scan.

    ``positions`` is the G2 displacement in mm and must be strictly
    increasing. ``values`` holds normalized coincidence rates
    (``kind="analytic_rate"``) or integer photocounts (``kind="counts"``).
    ``expected_rate`` is the analytic normalized rate at each step.
    """

    positions: np.ndarray
    values: np.ndarray
    kind: str = "analytic_rate"
    expected_rate: Optional[np.ndarray] = field(default=None, repr=False)
    steps: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        pos = np.array(self.positions, dtype=float)
        dtype = np.int64 if self.kind == "counts" else float
        vals = np.array(self.values, dtype=dtype)
        if pos.ndim != 1 or vals.shape != pos.shape:
            raise ValueError("positions and values must be 1-D arrays of equal length")
        if pos.size > 1 and not np.all(np.diff(pos) > 0):
            raise ValueError("positions must be strictly increasing")
        if np.any(vals < 0):
            raise ValueError("values must be nonnegative")
        expected = vals.astype(float) if self.expected_rate is None else np.array(self.expected_rate, dtype=float)
        steps = np.arange(pos.size) if self.steps is None else np.array(self.steps, dtype=np.int64)
        if expected.shape != pos.shape or steps.shape != pos.shape:
            raise ValueError("expected_rate and steps must match positions in length")
        for arr in (pos, vals, expected, steps):
            arr.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "expected_rate", expected)
        object.__setattr__(self, "steps", steps)

    def __len__(self) -> int:
        return self.positions.size

    def with_values(self, values, kind: Optional[str] = None) -> "ScanRecord":
        return ScanRecord(self.positions, values, kind or self.kind, self.expected_rate, self.steps)
