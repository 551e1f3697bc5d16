"""Shared fixtures.

The session-scoped fixtures at the bottom run the expensive sweeps once; the
acceptance tests share their results and check wall-clock budgets against the
recorded durations.
"""

import time

import pytest

from centisim.config import Config
from centisim.experiment import (
    SweepSpec,
    phase_offset_sweep,
    resolve_variant,
    resolve_variants,
    run_sweep,
)
from centisim.morphology import RobotModel


@pytest.fixture
def model():
    return RobotModel()


@pytest.fixture
def default_config():
    return Config()


@pytest.fixture(scope="session")
def phase_sweep_result():
    """Phase-offset sweep at the canonical amplitude, with its wall time."""
    t0 = time.perf_counter()
    table = phase_offset_sweep(RobotModel())
    return table, time.perf_counter() - t0


@pytest.fixture(scope="session")
def default_sweep_result():
    """The four-variant sweep over the default grid, with its wall time."""
    cfg = Config()
    base = cfg.to_model()
    spec = SweepSpec(
        grid=cfg.grid.to_grid(base.joint_limit),
        variants=resolve_variants(base, ("limbless", "short", "medium", "long")),
        omega=cfg.gait.omega_rad_s,
    )
    t0 = time.perf_counter()
    diagrams = run_sweep(spec)
    elapsed = time.perf_counter() - t0
    return {d.variant.name: d for d in diagrams}, elapsed


@pytest.fixture(scope="session")
def pair_sweep_result():
    """Default-grid sweeps for the reduced pair-count morphologies."""
    cfg = Config()
    base = cfg.to_model()
    variants = tuple(
        resolve_variant(base, {"name": f"medium{n}", "ratio_preset": "medium", "pair_count": n})
        for n in (2, 5)
    )
    spec = SweepSpec(
        grid=cfg.grid.to_grid(base.joint_limit),
        variants=variants,
        omega=cfg.gait.omega_rad_s,
    )
    diagrams = run_sweep(spec)
    return {d.variant.name: d for d in diagrams}
