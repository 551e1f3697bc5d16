"""Trial metrics: displacement, axial rotation, righting, energy barriers.

Displacement and rotation are always evaluated over the largest whole number
of gait cycles contained in a trajectory, so transient partial cycles do not
skew per-cycle rates. The energy barrier is a purely geometric proxy: the
body is held rigid in a posture, rolled about its mean backbone axis in
fixed increments, and rested on the ground with the orientation locked; the
barrier is the climb in center-of-mass height required along the path from
upside down back to upright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import rotation_about_axis, wrap_angle
from .morphology import RobotModel, forward_kinematics
from .simcore import Trajectory, TrialConfig, mean_backbone_axis

RIGHTING_TOLERANCE = math.pi / 6
RIGHTING_DWELL_CYCLES = 0.25
RIGHTING_DEADLINE_CYCLES = 3.0
MIN_BARRIER_RESOLUTION = 36
DEFAULT_BARRIER_RESOLUTION = 72


@dataclass(frozen=True)
class TrialMetrics:
    """Scalar outcomes of one trial."""

    displacement_bl_per_cycle: float
    roll_per_cycle: float        # signed, radians per cycle
    roll_rate: float             # signed, radians per second
    righted: bool | None         # None outside righting trials
    righting_time_cycles: float | None
    saturated: bool
    collision: bool
    unresolved: bool


def _whole_cycle_end(traj: Trajectory) -> tuple[int, int]:
    """Sample index closing the last whole gait cycle, and the cycle count."""
    period = traj.period
    total = float(traj.times[-1])
    cycles = int(math.floor(total / period + 1e-9))
    if cycles < 1:
        raise ValueError(f"trajectory covers {total:.6g} s, less than one {period:.6g} s cycle")
    target = cycles * period
    idx = int(np.argmin(np.abs(traj.times - target)))
    return idx, cycles


def displacement_per_cycle(traj: Trajectory) -> float:
    """Net horizontal center-of-mass displacement in body lengths per cycle."""
    idx, cycles = _whole_cycle_end(traj)
    net = traj.com[idx, :2] - traj.com[0, :2]
    return float(np.hypot(*net)) / (traj.body_length * cycles)


def axial_rotation(traj: Trajectory) -> tuple[float, float]:
    """Mean net world roll of the body links.

    Returns (radians per cycle, radians per second); both signed, positive
    for right-handed rotation about the tail-to-head direction.
    """
    idx, cycles = _whole_cycle_end(traj)
    per_link = traj.link_roll[idx] - traj.link_roll[0]
    per_cycle = float(per_link.mean()) / cycles
    return per_cycle, per_cycle * traj.config.gait.omega / (2.0 * math.pi)


def is_righting_trial(config: TrialConfig) -> bool:
    """A trial counts as a righting trial when it starts fully inverted."""
    return abs(abs(wrap_angle(config.initial_roll)) - math.pi) < 1e-6


def righting_outcome(
    traj: Trajectory,
    tolerance: float = RIGHTING_TOLERANCE,
    deadline_cycles: float = RIGHTING_DEADLINE_CYCLES,
    dwell_cycles: float = RIGHTING_DWELL_CYCLES,
) -> tuple[bool, float | None]:
    """Decide whether the body righted itself and when.

    Righted means the mean link roll, taken modulo one turn, enters the
    upright band [-tolerance, tolerance] no later than the deadline and
    stays inside for at least the dwell time. Returns (righted,
    time_of_entry_in_cycles); the time is None when the body never rights.
    """
    period = traj.period
    upright = np.abs(wrap_angle(traj.mean_roll)) <= tolerance
    dwell = dwell_cycles * period
    deadline = deadline_cycles * period + 1e-9
    k = 0
    n = len(upright)
    while k < n:
        if not upright[k]:
            k += 1
            continue
        run_end = k
        while run_end + 1 < n and upright[run_end + 1]:
            run_end += 1
        entry_time = float(traj.times[k])
        held = float(traj.times[run_end]) - entry_time
        long_enough = held >= dwell - 1e-9
        # an upright run still open at the trajectory end must have shown the dwell
        if long_enough and entry_time <= deadline:
            return True, entry_time / period
        k = run_end + 1
    return False, None


@dataclass(eq=False)
class EnergyProfile:
    """Quasi-static resting height of the center of mass over roll angles."""

    angles: np.ndarray    # radians, uniform over [0, 2*pi)
    heights: np.ndarray   # meters
    posture: np.ndarray   # joint vector the profile was computed for

    @property
    def barrier(self) -> float:
        """Climb required along the righting path from roll pi to roll 0.

        The path descends the roll angle from pi to 0; the barrier is the
        highest center-of-mass height on that path minus the height at pi.
        """
        on_path = self.angles <= math.pi + 1e-12
        start_idx = int(np.argmin(np.abs(self.angles - math.pi)))
        return float(self.heights[on_path].max() - self.heights[start_idx])


def energy_barrier(
    model: RobotModel,
    posture,
    resolution: int = DEFAULT_BARRIER_RESOLUTION,
) -> EnergyProfile:
    """Roll-locked resting height profile of a rigid posture.

    The posture is rolled about its mean backbone axis through the center of
    mass in `resolution` uniform increments covering a full turn; at each
    angle the shape is dropped to ground contact with the orientation held
    fixed and the center-of-mass height recorded.
    """
    if resolution < MIN_BARRIER_RESOLUTION:
        raise ValueError(f"resolution must be at least {MIN_BARRIER_RESOLUTION}, got {resolution}")
    if resolution % 2:
        raise ValueError(f"resolution must be even so the inverted pose is on the grid, got {resolution}")
    posture = np.asarray(posture, dtype=float)
    shape = forward_kinematics(model, posture)
    axis = mean_backbone_axis(shape)
    rel = shape.cand_points - shape.com
    angles = np.arange(resolution) * (2.0 * math.pi / resolution)
    heights = np.empty(resolution)
    for i, angle in enumerate(angles):
        rot = rotation_about_axis(axis, angle)
        support = (rel @ rot.T)[:, 2] - shape.cand_radius
        heights[i] = -float(support.min())
    return EnergyProfile(angles=angles, heights=heights, posture=posture)


def compute_metrics(traj: Trajectory) -> TrialMetrics:
    """Bundle the standard per-trial metrics."""
    dx = displacement_per_cycle(traj)
    per_cycle, per_second = axial_rotation(traj)
    if is_righting_trial(traj.config):
        righted, when = righting_outcome(traj)
    else:
        righted, when = None, None
    return TrialMetrics(
        displacement_bl_per_cycle=dx,
        roll_per_cycle=per_cycle,
        roll_rate=per_second,
        righted=righted,
        righting_time_cycles=when,
        saturated=traj.saturated,
        collision=traj.any_collision,
        unresolved=traj.unresolved,
    )
