"""Joint-space gait generation for the module chain.

One parameter family covers both behaviors. Module i of N gets

    yaw_i(t)   = amp_yaw   * sin(omega * t + 2*pi*i*yaw_waves/N + phase_offset)
    pitch_i(t) = amp_pitch * sin(omega * t + 2*pi*i*pitch_waves/N)

so a pitch-leading phase offset of a quarter period with equal amplitudes and
zero wave numbers degenerates into the rolling gait, where every yaw joint
follows amp*sin(omega*t) and every pitch joint amp*cos(omega*t). Angles are
pure commands here: clamping against a joint limit is a policy the caller
applies via clamp_joints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_OMEGA = 2.0 * math.pi / 4.0  # one cycle per 4 s
DEFAULT_WAVE_NUMBER = 1.05  # canonical sidewinding spatial wave count
DEFAULT_TRIALS_PER_CELL = 5

#: phase offsets probed by the phase-offset sweep
PHASE_OFFSET_SET = (-math.pi / 2, -math.pi / 4, 0.0, math.pi / 4, math.pi / 2)


@dataclass(frozen=True)
class GaitParams:
    """Parameters of the unified traveling-wave gait."""

    amp_yaw: float
    amp_pitch: float
    omega: float = DEFAULT_OMEGA
    yaw_waves: float = 0.0
    pitch_waves: float = 0.0
    num_modules: int = 9
    phase_offset: float = 0.0

    def __post_init__(self):
        if self.amp_yaw < 0.0 or self.amp_pitch < 0.0:
            raise ValueError(f"amplitudes must be non-negative, got {self.amp_yaw}, {self.amp_pitch}")
        if self.omega <= 0.0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.num_modules < 1:
            raise ValueError(f"need at least one module, got {self.num_modules}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def with_num_modules(self, num_modules: int) -> "GaitParams":
        return GaitParams(
            self.amp_yaw, self.amp_pitch, self.omega,
            self.yaw_waves, self.pitch_waves, num_modules, self.phase_offset,
        )


def eval_gait(params: GaitParams, t: float, extra_phase=None) -> np.ndarray:
    """Joint vector at time t, ordered joint 1 .. joint 2N.

    extra_phase, when given, is added inside the sine per joint: either a
    scalar or an array of 2N per-joint phase shifts (used for the per-trial
    phase perturbation and for phase-advance checks).
    """
    n = params.num_modules
    modules = np.arange(1, n + 1)
    yaw_phase = params.omega * t + 2.0 * np.pi * modules * params.yaw_waves / n + params.phase_offset
    pitch_phase = params.omega * t + 2.0 * np.pi * modules * params.pitch_waves / n
    if extra_phase is not None:
        extra = np.asarray(extra_phase, dtype=float)
        if extra.ndim == 0:
            yaw_phase = yaw_phase + extra
            pitch_phase = pitch_phase + extra
        else:
            if extra.shape != (2 * n,):
                raise ValueError(f"expected {2 * n} per-joint phases, got shape {extra.shape}")
            yaw_phase = yaw_phase + extra[0::2]
            pitch_phase = pitch_phase + extra[1::2]
    out = np.empty(2 * n)
    out[0::2] = params.amp_yaw * np.sin(yaw_phase)
    out[1::2] = params.amp_pitch * np.sin(pitch_phase)
    return out


def rolling_gait(amp: float, omega: float, num_modules: int, t: float) -> np.ndarray:
    """Joint vector of the pure rolling gait at time t.

    Every yaw joint follows amp*sin(omega*t) and every pitch joint
    amp*cos(omega*t), bending the whole body into one arc whose bending
    plane precesses once per period.
    """
    if amp < 0.0:
        raise ValueError(f"amplitude must be non-negative, got {amp}")
    out = np.empty(2 * num_modules)
    out[0::2] = amp * math.sin(omega * t)
    out[1::2] = amp * math.cos(omega * t)
    return out


def rolling_params(amp: float, omega: float = DEFAULT_OMEGA, num_modules: int = 9) -> GaitParams:
    """GaitParams whose trajectory family equals the rolling gait.

    With equal amplitudes, zero wave numbers and a -pi/2 phase offset the
    unified family traces the same joint-space circle as rolling_gait, a
    quarter period ahead: eval_gait(params, t + period/4) reproduces
    rolling_gait(amp, omega, n, t) exactly.
    """
    return GaitParams(amp, amp, omega, 0.0, 0.0, num_modules, -math.pi / 2)


def clamp_joints(angles: np.ndarray, joint_limit: float):
    """Clamp a joint vector to [-joint_limit, joint_limit].

    Returns the clamped vector and the number of entries that hit the limit.
    """
    clipped = np.clip(angles, -joint_limit, joint_limit)
    return clipped, int(np.count_nonzero(clipped != angles))


@dataclass(frozen=True)
class ParameterGrid:
    """Rectangular sweep grid over pitch amplitude and wave number."""

    amp_pitch_values: tuple[float, ...]
    wave_number_values: tuple[float, ...]
    amp_yaw: float = math.pi / 4
    phase_offset: float = math.pi / 2
    trials_per_cell: int = DEFAULT_TRIALS_PER_CELL

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.amp_pitch_values), len(self.wave_number_values)

    @property
    def num_cells(self) -> int:
        return len(self.amp_pitch_values) * len(self.wave_number_values)

    def cells(self) -> list[tuple[float, float]]:
        """All (amp_pitch, wave_number) cells, row-major in amp_pitch."""
        return [(a, n) for a in self.amp_pitch_values for n in self.wave_number_values]


def make_grid(
    amp_pitch_start: float = math.pi / 12,
    amp_pitch_step: float = math.pi / 12,
    amp_pitch_count: int = 5,
    wave_number_start: float = 0.6,
    wave_number_step: float = 0.15,
    wave_number_count: int = 6,
    amp_yaw: float = math.pi / 4,
    phase_offset: float = math.pi / 2,
    trials_per_cell: int = DEFAULT_TRIALS_PER_CELL,
    joint_limit: float = math.pi / 2,
) -> ParameterGrid:
    """Build the sweep grid, rejecting amplitudes beyond the joint limit."""
    if amp_pitch_count < 1 or wave_number_count < 1:
        raise ValueError("grid needs at least one step per axis")
    if trials_per_cell < 1:
        raise ValueError(f"trials_per_cell must be at least 1, got {trials_per_cell}")
    if amp_pitch_start <= 0.0 or amp_pitch_step <= 0.0:
        raise ValueError("pitch amplitude start and step must be positive")
    amps = tuple(amp_pitch_start + k * amp_pitch_step for k in range(amp_pitch_count))
    waves = tuple(wave_number_start + k * wave_number_step for k in range(wave_number_count))
    if max(amps) > joint_limit:
        raise ValueError(
            f"largest pitch amplitude {max(amps):.6f} exceeds the joint limit {joint_limit:.6f}"
        )
    if amp_yaw > joint_limit:
        raise ValueError(f"yaw amplitude {amp_yaw:.6f} exceeds the joint limit {joint_limit:.6f}")
    return ParameterGrid(amps, waves, amp_yaw, phase_offset, trials_per_cell)


def phase_offset_set() -> tuple[float, ...]:
    """Phase offsets probed by the phase-offset sweep."""
    return PHASE_OFFSET_SET


def gait_config_dict(params: GaitParams) -> dict:
    """External-key mapping for sidecar metadata and configs."""
    return {
        "A_y_rad": params.amp_yaw,
        "A_p_rad": params.amp_pitch,
        "omega_rad_s": params.omega,
        "n_y": params.yaw_waves,
        "n_p": params.pitch_waves,
        "delta_d_rad": params.phase_offset,
    }
