"""Experiment harness: behavior regimes, parameter sweeps, aggregation.

A sweep runs repeated trials over a (pitch amplitude, wave number) grid for
one or more leg variants and reduces every grid cell to means, standard
errors and a behavior regime. The regime boundaries sit at 0.3 body lengths
per cycle of lateral displacement and 0.5 rad/s of axial rotation:

    in_place_spin        dX <  0.3 and |rate| >  0.5   (regime I)
    pure_sidewinding     dX >= 0.3 and |rate| <= 0.5   (regime II)
    rolling_sidewinding  dX >= 0.3 and |rate| >  0.5   (regime III)
    kinematic_saturation dX <  0.3 and |rate| <= 0.5   (regime IV)

Trial seeding is deterministic: each (cell, trial) pair hashes together with
the global seed into an independent perturbation seed, so a sweep reproduces
bit-identical results for any worker count or completion order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .gait import DEFAULT_WAVE_NUMBER, GaitParams, ParameterGrid, make_grid, phase_offset_set
from .metrics import TrialMetrics, compute_metrics
from .morphology import (
    DEFAULT_TIP_RADIUS,
    LegSpec,
    RobotModel,
    evenly_spaced_modules,
    leg_lengths_from_ratios,
)
from .simcore import DEFAULT_PERTURBATION_SCALE, TrialConfig, simulate

DISPLACEMENT_THRESHOLD = 0.3  # body lengths per cycle
SPIN_RATE_THRESHOLD = 0.5     # rad/s

TRIAL_CSV_COLUMNS = (
    "variant", "leg_len_m", "leg_pairs", "A_y", "A_p", "n", "delta_d", "omega", "seed",
    "dX_bl_cyc", "theta_rad_cyc", "theta_dot_rad_s", "righted", "righting_cycles",
    "saturated", "collision", "unresolved",
)

SUMMARY_CSV_COLUMNS = (
    "variant", "leg_len_m", "leg_pairs", "A_y", "A_p", "n", "delta_d", "omega", "trials",
    "mean_dX_bl_cyc", "sem_dX_bl_cyc", "mean_theta_dot_rad_s", "sem_theta_dot_rad_s",
    "regime", "n_saturated", "n_collision", "n_unresolved",
)

PHASE_CSV_COLUMNS = (
    "delta_d", "trials", "mean_dX_bl_cyc", "sem_dX_bl_cyc",
    "mean_theta_rad_cyc", "sem_theta_rad_cyc",
)


class RegimeLabel(Enum):
    """Behavior regime of a grid cell."""

    IN_PLACE_SPIN = "in_place_spin"
    PURE_SIDEWINDING = "pure_sidewinding"
    ROLLING_ASSISTED_SIDEWINDING = "rolling_assisted_sidewinding"
    KINEMATIC_SATURATION = "kinematic_saturation"

    @property
    def numeral(self) -> str:
        return _REGIME_NUMERALS[self]

    @property
    def spin_capable(self) -> bool:
        """Regimes whose axial rotation clears the spin threshold."""
        return self in (RegimeLabel.IN_PLACE_SPIN, RegimeLabel.ROLLING_ASSISTED_SIDEWINDING)


_REGIME_NUMERALS = {
    RegimeLabel.IN_PLACE_SPIN: "I",
    RegimeLabel.PURE_SIDEWINDING: "II",
    RegimeLabel.ROLLING_ASSISTED_SIDEWINDING: "III",
    RegimeLabel.KINEMATIC_SATURATION: "IV",
}


def classify_regime(displacement_bl_per_cycle: float, roll_rate: float) -> RegimeLabel:
    """Assign the behavior regime for a (displacement, spin rate) pair."""
    dx = float(displacement_bl_per_cycle)
    rate = float(roll_rate)
    if not (math.isfinite(dx) and math.isfinite(rate)):
        raise ValueError(f"non-finite metrics: dX={dx}, rate={rate}")
    spinning = abs(rate) > SPIN_RATE_THRESHOLD
    if dx < DISPLACEMENT_THRESHOLD:
        return RegimeLabel.IN_PLACE_SPIN if spinning else RegimeLabel.KINEMATIC_SATURATION
    return RegimeLabel.ROLLING_ASSISTED_SIDEWINDING if spinning else RegimeLabel.PURE_SIDEWINDING


def aggregate_stats(samples: Sequence[float]) -> tuple[float, float]:
    """Mean and standard error of the mean (sample standard deviation over
    sqrt(n)); a single sample has zero standard error."""
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot aggregate an empty sample set")
    mean = float(arr.mean())
    if arr.size == 1:
        return mean, 0.0
    return mean, float(arr.std(ddof=1) / math.sqrt(arr.size))


def trial_seed(global_seed: int, cell_index: int, trial_index: int) -> int:
    """Deterministic per-trial perturbation seed."""
    seq = np.random.SeedSequence([int(global_seed), int(cell_index), int(trial_index)])
    return int(seq.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Leg variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Variant:
    """A named morphology entering a sweep."""

    name: str
    model: RobotModel

    @property
    def leg_length(self) -> float:
        return 0.0 if self.model.legs is None else self.model.legs.length

    @property
    def leg_pairs(self) -> int:
        return 0 if self.model.legs is None else self.model.legs.pair_count


def resolve_variant(base: RobotModel, spec: str | Mapping) -> Variant:
    """Materialise a variant from a preset name or a mapping.

    String specs are "limbless" or a ratio preset name. Mapping specs accept
    name, length_m or ratio_preset, pair_count, attachment, splay_angle_rad
    and tip_radius_m.
    """
    limbless = replace(base, legs=None)
    if isinstance(spec, str):
        if spec == "limbless":
            return Variant("limbless", limbless)
        presets = leg_lengths_from_ratios(limbless)
        if spec not in presets:
            raise ValueError(f"unknown variant {spec!r}, expected 'limbless' or one of {sorted(presets)}")
        legs = LegSpec(
            length=presets[spec],
            attachment_modules=tuple(range(1, base.num_modules + 1)),
        )
        return Variant(spec, replace(base, legs=legs))
    spec = dict(spec)
    name = spec.pop("name", None)
    length = spec.pop("length_m", None)
    preset = spec.pop("ratio_preset", None)
    pair_count = spec.pop("pair_count", base.num_modules)
    attachment = spec.pop("attachment", "evenly_spaced")
    splay = spec.pop("splay_angle_rad", 0.0)
    tip_radius = spec.pop("tip_radius_m", None)
    if spec:
        raise ValueError(f"unknown variant key: {sorted(spec)[0]!r}")
    if (length is None) == (preset is None):
        raise ValueError("variant mapping needs exactly one of length_m or ratio_preset")
    if preset is not None:
        presets = leg_lengths_from_ratios(limbless)
        if preset not in presets:
            raise ValueError(f"unknown ratio preset {preset!r}")
        length = presets[preset]
    if attachment == "all":
        modules = tuple(range(1, base.num_modules + 1))
    elif attachment == "evenly_spaced":
        modules = evenly_spaced_modules(base.num_modules, int(pair_count))
    else:
        modules = tuple(int(m) for m in attachment)
    legs = LegSpec(
        length=float(length),
        attachment_modules=modules,
        splay_angle=float(splay),
        tip_radius=float(tip_radius) if tip_radius is not None else DEFAULT_TIP_RADIUS,
    )
    if name is None:
        name = preset if preset is not None else f"legs{len(modules)}x{length:.4f}"
    return Variant(str(name), replace(base, legs=legs))


def resolve_variants(base: RobotModel, specs: Iterable[str | Mapping]) -> tuple[Variant, ...]:
    variants = tuple(resolve_variant(base, s) for s in specs)
    names = [v.name for v in variants]
    if len(set(names)) != len(names):
        raise ValueError(f"variant names must be unique, got {names}")
    return variants


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """A full behavior-diagram experiment."""

    grid: ParameterGrid
    variants: tuple[Variant, ...]
    omega: float
    duration_cycles: int = 3
    timestep: float | None = None
    initial_roll: float = 0.0
    perturbation_scale: float = DEFAULT_PERTURBATION_SCALE
    global_seed: int = 0


@dataclass(frozen=True)
class TrialRecord:
    """One row of the per-trial results table."""

    variant: str
    leg_len_m: float
    leg_pairs: int
    amp_yaw: float
    amp_pitch: float
    wave_number: float
    phase_offset: float
    omega: float
    seed: int
    cell_index: int
    trial_index: int
    metrics: TrialMetrics


@dataclass(eq=False)
class BehaviorDiagram:
    """Aggregated sweep results for one variant."""

    variant: Variant
    amp_pitch_values: tuple[float, ...]
    wave_number_values: tuple[float, ...]
    mean_displacement: np.ndarray   # (n_amp, n_wave)
    sem_displacement: np.ndarray
    mean_spin_rate: np.ndarray
    sem_spin_rate: np.ndarray
    regimes: np.ndarray             # (n_amp, n_wave) of RegimeLabel
    saturated_counts: np.ndarray
    collision_counts: np.ndarray
    unresolved_counts: np.ndarray
    records: list[TrialRecord]

    def spin_capable_cells(self) -> int:
        return int(sum(r.spin_capable for r in self.regimes.flat))

    def collision_cell_fraction(self) -> float:
        return float(np.count_nonzero(self.collision_counts) / self.collision_counts.size)


def _run_sweep_trial(args) -> TrialRecord:
    variant, cell_index, trial_index, amp_pitch, wave_number, spec = args
    params = GaitParams(
        amp_yaw=spec.grid.amp_yaw,
        amp_pitch=amp_pitch,
        omega=spec.omega,
        yaw_waves=wave_number,
        pitch_waves=wave_number,
        num_modules=variant.model.num_modules,
        phase_offset=spec.grid.phase_offset,
    )
    seed = trial_seed(spec.global_seed, cell_index, trial_index)
    trial = TrialConfig(
        model=variant.model,
        gait=params,
        duration_cycles=spec.duration_cycles,
        timestep=spec.timestep,
        initial_roll=spec.initial_roll,
        perturbation_seed=seed,
        perturbation_scale=spec.perturbation_scale,
    )
    metrics = compute_metrics(simulate(trial))
    return TrialRecord(
        variant=variant.name,
        leg_len_m=variant.leg_length,
        leg_pairs=variant.leg_pairs,
        amp_yaw=params.amp_yaw,
        amp_pitch=amp_pitch,
        wave_number=wave_number,
        phase_offset=params.phase_offset,
        omega=params.omega,
        seed=seed,
        cell_index=cell_index,
        trial_index=trial_index,
        metrics=metrics,
    )


def run_sweep(spec: SweepSpec, workers: int = 1, progress=None) -> list[BehaviorDiagram]:
    """Run the full sweep and aggregate one diagram per variant.

    Tasks are laid out variant by variant, cell by cell, trial by trial; the
    result order and content are independent of the worker count. `progress`
    may be a callable taking (done, total).
    """
    grid = spec.grid
    cells = grid.cells()
    tasks = [
        (variant, cell_index, trial_index, amp_pitch, wave_number, spec)
        for variant in spec.variants
        for cell_index, (amp_pitch, wave_number) in enumerate(cells)
        for trial_index in range(grid.trials_per_cell)
    ]
    records: list[TrialRecord] = []
    if workers <= 1:
        for done, task in enumerate(tasks, start=1):
            records.append(_run_sweep_trial(task))
            if progress is not None:
                progress(done, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for done, record in enumerate(pool.map(_run_sweep_trial, tasks, chunksize=4), start=1):
                records.append(record)
                if progress is not None:
                    progress(done, len(tasks))

    diagrams = []
    per_variant = len(cells) * grid.trials_per_cell
    for v_idx, variant in enumerate(spec.variants):
        chunk = records[v_idx * per_variant : (v_idx + 1) * per_variant]
        diagrams.append(_aggregate_diagram(variant, grid, chunk))
    return diagrams


def _aggregate_diagram(variant: Variant, grid: ParameterGrid, records: list[TrialRecord]) -> BehaviorDiagram:
    n_amp, n_wave = grid.shape
    mean_dx = np.empty((n_amp, n_wave))
    sem_dx = np.empty((n_amp, n_wave))
    mean_rate = np.empty((n_amp, n_wave))
    sem_rate = np.empty((n_amp, n_wave))
    regimes = np.empty((n_amp, n_wave), dtype=object)
    saturated = np.zeros((n_amp, n_wave), dtype=int)
    collisions = np.zeros((n_amp, n_wave), dtype=int)
    unresolved = np.zeros((n_amp, n_wave), dtype=int)
    per_cell = grid.trials_per_cell
    for cell_index in range(grid.num_cells):
        i, j = divmod(cell_index, n_wave)
        chunk = records[cell_index * per_cell : (cell_index + 1) * per_cell]
        dxs = [r.metrics.displacement_bl_per_cycle for r in chunk]
        rates = [r.metrics.roll_rate for r in chunk]
        mean_dx[i, j], sem_dx[i, j] = aggregate_stats(dxs)
        mean_rate[i, j], sem_rate[i, j] = aggregate_stats(rates)
        regimes[i, j] = classify_regime(mean_dx[i, j], mean_rate[i, j])
        saturated[i, j] = sum(r.metrics.saturated for r in chunk)
        collisions[i, j] = sum(r.metrics.collision for r in chunk)
        unresolved[i, j] = sum(r.metrics.unresolved for r in chunk)
    return BehaviorDiagram(
        variant=variant,
        amp_pitch_values=grid.amp_pitch_values,
        wave_number_values=grid.wave_number_values,
        mean_displacement=mean_dx,
        sem_displacement=sem_dx,
        mean_spin_rate=mean_rate,
        sem_spin_rate=sem_rate,
        regimes=regimes,
        saturated_counts=saturated,
        collision_counts=collisions,
        unresolved_counts=unresolved,
        records=records,
    )


# ---------------------------------------------------------------------------
# Phase-offset sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseSweepRow:
    phase_offset: float
    trials: int
    mean_displacement: float
    sem_displacement: float
    mean_roll_per_cycle: float
    sem_roll_per_cycle: float


@dataclass(eq=False)
class PhaseSweepTable:
    amplitude: float
    wave_number: float
    rows: list[PhaseSweepRow]
    records: list[TrialRecord]


def phase_offset_sweep(
    model: RobotModel,
    amplitude: float = math.pi / 3,
    wave_number: float = DEFAULT_WAVE_NUMBER,
    omega: float | None = None,
    trials_per_offset: int = 5,
    duration_cycles: int = 3,
    timestep: float | None = None,
    perturbation_scale: float = DEFAULT_PERTURBATION_SCALE,
    global_seed: int = 0,
    workers: int = 1,
) -> PhaseSweepTable:
    """Probe the phase offset at equal yaw and pitch amplitudes.

    Runs trials at every offset in phase_offset_set(), holding both wave
    numbers at wave_number. The default keeps the canonical traveling wave
    so the offset is the only thing that varies; dropping wave_number to
    zero recovers the family that contains the pure rolling gait at an
    offset of -pi/2, but there the chain coils onto itself at large
    amplitudes and net roll no longer isolates the offset's effect.
    Aggregates displacement and signed roll per cycle with standard errors.
    """
    if omega is None:
        omega = GaitParams(0.0, 0.0).omega
    offsets = phase_offset_set()
    grid = ParameterGrid(
        amp_pitch_values=(amplitude,),
        wave_number_values=(wave_number,),
        amp_yaw=amplitude,
        phase_offset=0.0,
        trials_per_cell=trials_per_offset,
    )
    rows = []
    records: list[TrialRecord] = []
    for cell_index, offset in enumerate(offsets):
        variant = Variant("limbless" if model.legs is None else "base", model)
        spec = SweepSpec(
            grid=replace(grid, phase_offset=offset),
            variants=(variant,),
            omega=omega,
            duration_cycles=duration_cycles,
            timestep=timestep,
            perturbation_scale=perturbation_scale,
            global_seed=global_seed,
        )
        tasks = [
            (variant, cell_index, trial_index, amplitude, wave_number, spec)
            for trial_index in range(trials_per_offset)
        ]
        if workers <= 1:
            chunk = [_run_sweep_trial(t) for t in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                chunk = list(pool.map(_run_sweep_trial, tasks))
        records.extend(chunk)
        mean_dx, sem_dx = aggregate_stats([r.metrics.displacement_bl_per_cycle for r in chunk])
        mean_roll, sem_roll = aggregate_stats([r.metrics.roll_per_cycle for r in chunk])
        rows.append(
            PhaseSweepRow(
                phase_offset=offset,
                trials=trials_per_offset,
                mean_displacement=mean_dx,
                sem_displacement=sem_dx,
                mean_roll_per_cycle=mean_roll,
                sem_roll_per_cycle=sem_roll,
            )
        )
    return PhaseSweepTable(
        amplitude=amplitude, wave_number=wave_number, rows=rows, records=records
    )


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def _cell(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_trial_csv(records: Sequence[TrialRecord], path) -> None:
    """Per-trial results table, one row per trial in sweep order."""
    with open(str(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRIAL_CSV_COLUMNS) + "\n")
        for r in records:
            m = r.metrics
            row = (
                r.variant, r.leg_len_m, r.leg_pairs, r.amp_yaw, r.amp_pitch,
                r.wave_number, r.phase_offset, r.omega, r.seed,
                m.displacement_bl_per_cycle, m.roll_per_cycle, m.roll_rate,
                m.righted, m.righting_time_cycles,
                m.saturated, m.collision, m.unresolved,
            )
            fh.write(",".join(_cell(x) for x in row) + "\n")


def write_summary_csv(diagrams: Sequence[BehaviorDiagram], path) -> None:
    """Per-cell summary table across all diagrams."""
    with open(str(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(SUMMARY_CSV_COLUMNS) + "\n")
        for d in diagrams:
            n_wave = len(d.wave_number_values)
            amp_yaw = d.records[0].amp_yaw if d.records else float("nan")
            offset = d.records[0].phase_offset if d.records else float("nan")
            omega = d.records[0].omega if d.records else float("nan")
            trials = len(d.records) // max(1, d.regimes.size)
            for i, amp_pitch in enumerate(d.amp_pitch_values):
                for j, wave in enumerate(d.wave_number_values):
                    row = (
                        d.variant.name, d.variant.leg_length, d.variant.leg_pairs,
                        amp_yaw, amp_pitch, wave, offset, omega, trials,
                        d.mean_displacement[i, j], d.sem_displacement[i, j],
                        d.mean_spin_rate[i, j], d.sem_spin_rate[i, j],
                        d.regimes[i, j].value,
                        int(d.saturated_counts[i, j]), int(d.collision_counts[i, j]),
                        int(d.unresolved_counts[i, j]),
                    )
                    fh.write(",".join(_cell(x) for x in row) + "\n")


def write_phase_sweep_csv(table: PhaseSweepTable, path) -> None:
    with open(str(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(PHASE_CSV_COLUMNS) + "\n")
        for row in table.rows:
            cells = (
                row.phase_offset, row.trials,
                row.mean_displacement, row.sem_displacement,
                row.mean_roll_per_cycle, row.sem_roll_per_cycle,
            )
            fh.write(",".join(_cell(x) for x in cells) + "\n")
