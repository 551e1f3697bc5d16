"""Trial metrics against synthetic trajectories and closed-form geometry."""

import math

import numpy as np
import pytest

from centisim.gait import GaitParams
from centisim.metrics import (
    DEFAULT_BARRIER_RESOLUTION,
    EnergyProfile,
    MIN_BARRIER_RESOLUTION,
    RIGHTING_DWELL_CYCLES,
    RIGHTING_TOLERANCE,
    axial_rotation,
    compute_metrics,
    displacement_per_cycle,
    energy_barrier,
    is_righting_trial,
    righting_outcome,
)
from centisim.morphology import LegSpec, RobotModel, build_model
from centisim.simcore import TrialConfig, simulate

GAIT = GaitParams(0.0, 0.0)  # period 4 s carrier for synthetic trajectories


def synth(times, com, link_roll, model, initial_roll=0.0):
    from centisim.simcore import Trajectory

    times = np.asarray(times, dtype=float)
    n = len(times)
    return Trajectory(
        config=TrialConfig(model=model, gait=GAIT, initial_roll=initial_roll),
        times=times,
        com=np.asarray(com, dtype=float),
        link_roll=np.asarray(link_roll, dtype=float),
        contact_count=np.ones(n, dtype=np.int64),
        clamped_count=np.zeros(n, dtype=np.int64),
        collision=np.zeros(n, dtype=bool),
        rotations=np.broadcast_to(np.eye(3), (n, 3, 3)).copy(),
        translations=np.zeros((n, 3)),
    )


def linear_track(model, cycles_covered, bl_per_cycle, dt=0.05):
    period = GAIT.period
    times = np.arange(0.0, cycles_covered * period + dt / 2, dt)
    com = np.zeros((len(times), 3))
    com[:, 1] = bl_per_cycle * model.body_length * times / period
    rolls = np.zeros((len(times), 2))
    return synth(times, com, rolls, model)


def test_displacement_truncates_to_whole_cycles(model):
    traj = linear_track(model, cycles_covered=3.3, bl_per_cycle=0.5)
    assert displacement_per_cycle(traj) == pytest.approx(0.5, abs=1e-9)


def test_displacement_additivity(model):
    one = linear_track(model, cycles_covered=1.0, bl_per_cycle=0.37)
    three = linear_track(model, cycles_covered=3.0, bl_per_cycle=0.37)
    assert displacement_per_cycle(three) == pytest.approx(displacement_per_cycle(one), abs=1e-12)


def test_displacement_needs_a_whole_cycle(model):
    with pytest.raises(ValueError):
        displacement_per_cycle(linear_track(model, cycles_covered=0.9, bl_per_cycle=0.5))


def test_axial_rotation_of_rigid_roll(model):
    period = GAIT.period
    times = np.arange(0.0, 3 * period + 0.025, 0.05)
    rolls = np.tile(2 * math.pi * times[:, None] / period, (1, 2))
    traj = synth(times, np.zeros((len(times), 3)), rolls, model)
    per_cycle, rate = axial_rotation(traj)
    assert per_cycle == pytest.approx(2 * math.pi, abs=1e-9)
    assert rate == pytest.approx(GAIT.omega, abs=1e-9)
    assert rate == pytest.approx(per_cycle * GAIT.omega / (2 * math.pi), abs=1e-15)


def test_is_righting_trial(model):
    def cfg(roll):
        return TrialConfig(model=model, gait=GAIT, initial_roll=roll)

    assert is_righting_trial(cfg(math.pi))
    assert is_righting_trial(cfg(-math.pi))
    assert is_righting_trial(cfg(3 * math.pi))
    assert not is_righting_trial(cfg(0.0))
    assert not is_righting_trial(cfg(0.9 * math.pi))


def roll_series(model, segments, dt=0.05, total_cycles=4.0):
    """Piecewise-constant mean roll; segments are (start_cycle, value)."""
    period = GAIT.period
    times = np.arange(0.0, total_cycles * period + dt / 2, dt)
    rolls = np.empty((len(times), 1))
    value = segments[0][1]
    for k, t in enumerate(times):
        for start, seg_value in segments:
            if t >= start * period - 1e-12:
                value = seg_value
        rolls[k] = value
    return synth(times, np.zeros((len(times), 3)), rolls, model, initial_roll=math.pi)


def test_righting_detects_entry_and_dwell(model):
    traj = roll_series(model, [(0.0, math.pi), (1.0, 0.0)])
    righted, when = righting_outcome(traj)
    assert righted and when == pytest.approx(1.0, abs=1e-9)

    # a brief dip below tolerance does not count; the stable entry does
    blip = roll_series(model, [(0.0, math.pi), (1.0, 0.0), (1.125, math.pi), (1.5, 0.0)])
    righted, when = righting_outcome(blip)
    assert righted and when == pytest.approx(1.5, abs=1e-9)
    assert 0.125 * GAIT.period < RIGHTING_DWELL_CYCLES * GAIT.period


def test_righting_respects_deadline(model):
    late = roll_series(model, [(0.0, math.pi), (3.1, 0.0)])
    righted, when = righting_outcome(late)
    assert not righted and when is None


def test_righting_tolerance_is_inclusive(model):
    edge = roll_series(model, [(0.0, math.pi), (1.0, RIGHTING_TOLERANCE)])
    righted, when = righting_outcome(edge)
    assert righted and when == pytest.approx(1.0, abs=1e-9)


def test_never_upright(model):
    stuck = roll_series(model, [(0.0, math.pi)])
    assert righting_outcome(stuck) == (False, None)


def test_energy_profile_limbless_is_flat(model):
    profile = energy_barrier(model, np.zeros(18))
    np.testing.assert_allclose(profile.heights, model.link_radius, atol=1e-12)
    assert profile.barrier < 1e-9
    assert len(profile.angles) == DEFAULT_BARRIER_RESOLUTION
    np.testing.assert_allclose(np.diff(profile.angles),
                               2 * math.pi / DEFAULT_BARRIER_RESOLUTION, atol=1e-12)


def test_energy_profile_matches_closed_form():
    # straight body with ventral pegs: the tip sphere center sits r+L off the
    # axis and its radius hangs straight down regardless of roll, so the
    # height is max(r, (r+L)*cos(phi) + rho)
    length = 0.060593220338983046
    leg = LegSpec(length=length, attachment_modules=tuple(range(1, 10)))
    model = RobotModel(legs=leg)
    profile = energy_barrier(model, np.zeros(18))
    reach = model.link_radius + length
    expected = np.maximum(model.link_radius,
                          reach * np.cos(profile.angles) + leg.tip_radius)
    np.testing.assert_allclose(profile.heights, expected, atol=1e-9)
    assert profile.barrier == pytest.approx(length + leg.tip_radius, abs=1e-9)


def test_barrier_monotone_in_leg_length():
    previous = -1.0
    for length in (0.02, 0.04, 0.06, 0.08, 0.10):
        leg = LegSpec(length=length, attachment_modules=tuple(range(1, 10)))
        profile = energy_barrier(RobotModel(legs=leg), np.zeros(18))
        assert profile.barrier > previous
        previous = profile.barrier


def test_barrier_resolution_validation(model):
    with pytest.raises(ValueError):
        energy_barrier(model, np.zeros(18), resolution=MIN_BARRIER_RESOLUTION - 1)
    with pytest.raises(ValueError):
        energy_barrier(model, np.zeros(18), resolution=37)
    profile = energy_barrier(model, np.zeros(18), resolution=MIN_BARRIER_RESOLUTION)
    assert len(profile.angles) == MIN_BARRIER_RESOLUTION


def test_barrier_reads_path_maximum():
    angles = np.arange(36) * (2 * math.pi / 36)
    heights = np.full(36, 0.2)
    heights[6] = 1.3   # on the descent path
    heights[18] = 0.2  # the inverted start, angle pi
    heights[30] = 9.9  # beyond pi, not on the path
    profile = EnergyProfile(angles=angles, heights=heights, posture=np.zeros(18))
    assert profile.barrier == pytest.approx(1.1, abs=1e-12)


def test_compute_metrics_bundles_flags(model):
    traj = simulate(TrialConfig(model=model, gait=GAIT))
    m = compute_metrics(traj)
    assert m.displacement_bl_per_cycle == 0.0
    assert m.roll_per_cycle == 0.0
    assert m.roll_rate == 0.0
    assert m.righted is None and m.righting_time_cycles is None
    assert not (m.saturated or m.collision or m.unresolved)

    inverted = simulate(TrialConfig(model=model, gait=GAIT, initial_roll=math.pi))
    m2 = compute_metrics(inverted)
    assert m2.righted is False and m2.righting_time_cycles is None


def test_righting_through_rolling_gait():
    # the rolling gait turns the body continuously, so an inverted start must
    # pass through upright and the outcome detector must notice
    from centisim.gait import rolling_params

    model = build_model({})
    trial = TrialConfig(model=model, gait=rolling_params(math.pi / 3),
                        initial_roll=math.pi, perturbation_scale=0.0)
    m = compute_metrics(simulate(trial))
    assert m.righted is not None
