"""Photocount-regime Monte Carlo of a grating scan.

Each acquisition window generates a Poisson number of pairs; every pair lands
uniformly inside the detection window and survives both gratings with
probability T1_eff * T2. Every step draws from its own Philox stream keyed by
``(seed, step)``, so a scan is reproducible regardless of how steps are
scheduled across workers.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .engine import (
    ExperimentConfig,
    ScanSchedule,
    coincidence_rate,
    detection_window,
    effective_g1,
)
from .optics import evaluate_mask, shift_mask
from .records import ScanRecord


@dataclass(frozen=True)
class CountingPlan:
    schedule: ScanSchedule
    mean_pairs_per_step: float = 1e4
    seed: int = 0
    background: float = 0.0

    def __post_init__(self):
        if not self.mean_pairs_per_step > 0:
            raise ValueError("mean_pairs_per_step must be positive")
        if not 0 <= int(self.seed) < 2**64 or int(self.seed) != self.seed:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.background < 0:
            raise ValueError("background rate must be nonnegative")


def step_stream(seed: int, step: int) -> np.random.Generator:
    """Counter-based generator for one scan step."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(step),))))


def sample_step_counts(
    config: ExperimentConfig,
    delta_g1: float,
    delta_g2: float,
    mean_pairs: float,
    rng: np.random.Generator,
    background: float = 0.0,
) -> int:
    """Draw the coincidence count of one acquisition window.

    The expectation is ``mean_pairs * coincidence_rate(config, delta_g1,
    delta_g2) + background``.
    """
    if not mean_pairs > 0:
        raise ValueError("mean_pairs must be positive")
    t1, factor = effective_g1(config)
    m1 = shift_mask(t1, factor * delta_g1)
    m2 = shift_mask(config.grating_2, delta_g2)
    lo, hi = detection_window(config)

    n_pairs = rng.poisson(mean_pairs)
    x = rng.uniform(lo, hi, n_pairs)
    p = evaluate_mask(m1, x) * evaluate_mask(m2, x)
    if p.size and (p.min() < 0 or p.max() > 1):
        raise RuntimeError("mask transmission outside [0, 1]; acceptance probability invalid")
    count = int(np.count_nonzero(rng.random(n_pairs) < p))
    if background > 0:
        count += int(rng.poisson(background))
    return count


def run_counting_scan(config: ExperimentConfig, plan: CountingPlan, workers: int = 1) -> ScanRecord:
    """Simulated photocount scan; identical output for any ``workers``."""
    d1, d2 = plan.schedule.displacements()

    def one(k: int) -> tuple[int, float]:
        rng = step_stream(plan.seed, k)
        n = sample_step_counts(config, d1[k], d2[k], plan.mean_pairs_per_step, rng, plan.background)
        return n, coincidence_rate(config, d1[k], d2[k])

    steps = range(plan.schedule.n_steps)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, steps))
    else:
        results = [one(k) for k in steps]
    counts = np.array([r[0] for r in results], dtype=np.int64)
    expected = np.array([r[1] for r in results])
    return ScanRecord(d2, counts, "counts", expected)
