"""Command line interface.

Five subcommands cover the full workflow: simulate (one trial), sweep (the
behavior diagram), phase-sweep (rolling emergence against the phase offset),
energy-barrier (reorientation height profiles) and validate-config. All of
them share --config/--set/--out/--seed/--workers handling.

Exit codes: 0 success, 2 configuration problem, 3 finished but at least one
trial raised a runtime flag (saturation, self-collision or an unresolved
support search), 4 output I/O failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiment, plots
from .config import (
    Config,
    ConfigError,
    apply_overrides,
    config_to_yaml,
    load_config,
    parse_config,
    serialize_config,
)
from .gait import DEFAULT_WAVE_NUMBER
from .experiment import (
    SweepSpec,
    TrialRecord,
    classify_regime,
    resolve_variants,
    write_phase_sweep_csv,
    write_summary_csv,
    write_trial_csv,
)
from .metrics import (
    DEFAULT_BARRIER_RESOLUTION,
    MIN_BARRIER_RESOLUTION,
    compute_metrics,
    energy_barrier,
    is_righting_trial,
)
from .simcore import save_trajectory, simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FLAGGED = 3
EXIT_IO = 4

ENERGY_VARIANTS = ("limbless", "short", "medium", "long")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="centisim",
        description="quasi-static locomotion experiments for an elongate modular robot",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=str, default=None, help="YAML configuration file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config entry, e.g. gait.n=1.2")
        p.add_argument("--out", type=str, default=None, help="output directory (default from config)")
        p.add_argument("--seed", type=int, default=None, help="override the random seed")
        p.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")

    p = sub.add_parser("simulate", help="run a single trial and report its metrics")
    common(p)
    p.add_argument("--per-link", action="store_true", help="also write per-link roll angles")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run the amplitude/wave-number sweep")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("phase-sweep", help="sweep the yaw-pitch phase offset at equal amplitudes")
    common(p)
    p.add_argument("--amplitude", type=float, default=math.pi / 3,
                   help="shared yaw and pitch amplitude in rad (default pi/3)")
    p.add_argument("--wave-number", type=float, default=DEFAULT_WAVE_NUMBER,
                   help="spatial wave count held fixed across offsets "
                        f"(default {DEFAULT_WAVE_NUMBER})")
    p.set_defaults(func=cmd_phase_sweep)

    p = sub.add_parser("energy-barrier", help="height profiles and barriers for the leg variants")
    common(p)
    p.add_argument("--resolution", type=int, default=DEFAULT_BARRIER_RESOLUTION,
                   help="even number of roll angles over a full turn (at least "
                        f"{MIN_BARRIER_RESOLUTION})")
    p.set_defaults(func=cmd_energy_barrier)

    p = sub.add_parser("validate-config", help="check a config file and print its full form")
    common(p)
    p.set_defaults(func=cmd_validate_config)

    return parser


def _load_config(args) -> Config:
    raw = serialize_config(load_config(args.config)) if args.config is not None else {}
    if args.overrides:
        raw = apply_overrides(raw, args.overrides)
    config = parse_config(raw)
    if args.seed is not None:
        config = replace(config, simulation=replace(config.simulation, seed=args.seed))
    return config


def _out_dir(args, config: Config) -> Path:
    directory = Path(args.out if args.out is not None else config.output.directory)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _flag_exit(records: list[TrialRecord]) -> int:
    for r in records:
        m = r.metrics
        if m.saturated or m.collision or m.unresolved:
            return EXIT_FLAGGED
    return EXIT_OK


def _progress(done: int, total: int) -> None:
    step = max(1, total // 10)
    if done % step == 0 or done == total:
        print(f"progress: {done}/{total} trials", file=sys.stderr, flush=True)


def cmd_simulate(args, config: Config) -> int:
    model = config.to_model()
    gait = config.to_gait_params()
    trial = config.to_trial(model=model, gait=gait)
    traj = simulate(trial)
    metrics = compute_metrics(traj)
    regime = classify_regime(metrics.displacement_bl_per_cycle, metrics.roll_rate)

    out = _out_dir(args, config)
    save_trajectory(traj, out / "trajectory.csv", per_link=args.per_link)
    record = TrialRecord(
        variant="config",
        leg_len_m=0.0 if model.legs is None else model.legs.length,
        leg_pairs=0 if model.legs is None else model.legs.pair_count,
        amp_yaw=gait.amp_yaw,
        amp_pitch=gait.amp_pitch,
        wave_number=gait.pitch_waves,
        phase_offset=gait.phase_offset,
        omega=gait.omega,
        seed=trial.perturbation_seed,
        cell_index=0,
        trial_index=0,
        metrics=metrics,
    )
    write_trial_csv([record], out / "trial_metrics.csv")
    plots.save_figure(plots.trajectory_figure(traj), out / "trajectory", config.output.formats)

    print(f"displacement: {metrics.displacement_bl_per_cycle:.4f} BL/cycle")
    print(f"axial rotation: {metrics.roll_per_cycle:.4f} rad/cycle ({metrics.roll_rate:.4f} rad/s)")
    print(f"regime: {regime.numeral} ({regime.value})")
    if is_righting_trial(trial):
        if metrics.righted:
            print(f"righted: yes, at {metrics.righting_time_cycles:.3f} cycles")
        else:
            print("righted: no")
    flags = [name for name, on in
             (("saturated", metrics.saturated), ("collision", metrics.collision),
              ("unresolved", metrics.unresolved)) if on]
    print(f"flags: {', '.join(flags) if flags else 'none'}")
    print(f"wrote {out}/trajectory.csv, {out}/trial_metrics.csv")
    return _flag_exit([record])


def cmd_sweep(args, config: Config) -> int:
    model = config.to_model()
    grid = config.grid.to_grid(joint_limit=model.joint_limit)
    variants = resolve_variants(model, config.grid.variants)
    spec = SweepSpec(
        grid=grid,
        variants=variants,
        omega=config.gait.omega_rad_s,
        duration_cycles=config.simulation.duration_cycles,
        timestep=config.simulation.timestep_s,
        initial_roll=config.simulation.initial_roll_rad,
        perturbation_scale=config.simulation.perturbation_scale_rad,
        global_seed=config.simulation.seed,
    )
    diagrams = experiment.run_sweep(spec, workers=args.workers, progress=_progress)

    out = _out_dir(args, config)
    records = [r for d in diagrams for r in d.records]
    write_trial_csv(records, out / "results.csv")
    write_summary_csv(diagrams, out / "summary.csv")
    for diagram in diagrams:
        name = diagram.variant.name
        plots.save_figure(plots.heatmap_figure(diagram, "displacement"),
                          out / f"{name}_displacement", config.output.formats)
        plots.save_figure(plots.heatmap_figure(diagram, "spin_rate"),
                          out / f"{name}_spin_rate", config.output.formats)
        plots.save_figure(plots.regime_figure(diagram),
                          out / f"{name}_regimes", config.output.formats)
        print(f"{name}: {diagram.spin_capable_cells()}/{diagram.regimes.size} spin-capable cells, "
              f"{diagram.collision_cell_fraction():.0%} of cells with collisions")
    print(f"wrote {out}/results.csv, {out}/summary.csv")
    return _flag_exit(records)


def cmd_phase_sweep(args, config: Config) -> int:
    model = replace(config.to_model(), legs=None)
    if args.amplitude <= 0.0 or args.amplitude > model.joint_limit:
        raise ConfigError(f"amplitude must be in (0, {model.joint_limit:.4f}], got {args.amplitude}")
    table = experiment.phase_offset_sweep(
        model,
        amplitude=args.amplitude,
        wave_number=args.wave_number,
        omega=config.gait.omega_rad_s,
        trials_per_offset=config.grid.trials_per_cell,
        duration_cycles=config.simulation.duration_cycles,
        timestep=config.simulation.timestep_s,
        perturbation_scale=config.simulation.perturbation_scale_rad,
        global_seed=config.simulation.seed,
        workers=args.workers,
    )
    out = _out_dir(args, config)
    write_phase_sweep_csv(table, out / "phase_sweep.csv")
    write_trial_csv(table.records, out / "phase_sweep_trials.csv")
    plots.save_figure(plots.phase_sweep_figure(table), out / "phase_sweep", config.output.formats)
    print("delta_d      dX(BL/cyc)      roll(rad/cyc)")
    for row in table.rows:
        print(f"{row.phase_offset:+7.4f}  {row.mean_displacement:7.4f} ± {row.sem_displacement:.4f}"
              f"  {row.mean_roll_per_cycle:+8.4f} ± {row.sem_roll_per_cycle:.4f}")
    print(f"wrote {out}/phase_sweep.csv")
    return _flag_exit(table.records)


def cmd_energy_barrier(args, config: Config) -> int:
    if args.resolution < MIN_BARRIER_RESOLUTION or args.resolution % 2:
        raise ConfigError(
            f"resolution must be an even number of at least {MIN_BARRIER_RESOLUTION}, "
            f"got {args.resolution}")
    model = config.to_model()
    variants = resolve_variants(model, ENERGY_VARIANTS)
    profiles = {}
    for variant in variants:
        posture = np.zeros(variant.model.num_joints)
        profiles[variant.name] = energy_barrier(variant.model, posture, resolution=args.resolution)

    out = _out_dir(args, config)
    _write_energy_csv(profiles, variants, out)
    plots.save_figure(plots.energy_profile_figure(profiles), out / "energy_profiles",
                      config.output.formats)
    for variant in variants:
        print(f"{variant.name}: barrier {profiles[variant.name].barrier:.6f} m")
    print(f"wrote {out}/energy_profiles.csv, {out}/energy_barriers.csv")
    return EXIT_OK


def _write_energy_csv(profiles, variants, out: Path) -> None:
    names = [v.name for v in variants]
    with open(out / "energy_profiles.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("angle_rad," + ",".join(f"height_{n}_m" for n in names) + "\n")
        angles = profiles[names[0]].angles
        for k, angle in enumerate(angles):
            row = [repr(float(angle))] + [repr(float(profiles[n].heights[k])) for n in names]
            fh.write(",".join(row) + "\n")
    with open(out / "energy_barriers.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("variant,leg_len_m,leg_pairs,barrier_m\n")
        for v in variants:
            fh.write(f"{v.name},{repr(float(v.leg_length))},{v.leg_pairs},"
                     f"{repr(float(profiles[v.name].barrier))}\n")


def cmd_validate_config(args, config: Config) -> int:
    sys.stdout.write(config_to_yaml(config))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        if args.workers < 1:
            raise ConfigError(f"--workers must be at least 1, got {args.workers}")
        return args.func(args, config)
    except ValueError as exc:  # ConfigError and validation errors from the library
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
