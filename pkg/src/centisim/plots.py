"""Figure rendering for sweep, phase and energy outputs.

Everything renders through the Agg backend straight to files, so the module
is safe to import on headless machines. Figures are deliberately plain:
one panel per quantity, colorbars for continuous fields, a discrete legend
for regime maps.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import ListedColormap
from matplotlib.patches import Patch

from .experiment import BehaviorDiagram, PhaseSweepTable, RegimeLabel
from .metrics import EnergyProfile
from .simcore import Trajectory

# stable ids inside SVG output, so repeated runs produce identical bytes
plt.rcParams["svg.hashsalt"] = "centisim"

REGIME_COLORS = {
    RegimeLabel.IN_PLACE_SPIN: "#d95f02",
    RegimeLabel.PURE_SIDEWINDING: "#1b9e77",
    RegimeLabel.ROLLING_ASSISTED_SIDEWINDING: "#7570b3",
    RegimeLabel.KINEMATIC_SATURATION: "#bdbdbd",
}


def save_figure(fig, base_path, formats: Sequence[str] = ("svg",)) -> list[str]:
    """Write the figure once per format next to base_path; returns the paths."""
    written = []
    for fmt in formats:
        path = f"{base_path}.{fmt}"
        fig.savefig(path, format=fmt, metadata=_stable_metadata(fmt))
        written.append(path)
    plt.close(fig)
    return written


def _stable_metadata(fmt: str) -> dict | None:
    if fmt == "svg":
        return {"Date": None}  # drop the timestamp, keep output reproducible
    return None


def _grid_axes(ax, diagram: BehaviorDiagram) -> None:
    waves = diagram.wave_number_values
    amps = diagram.amp_pitch_values
    ax.set_xticks(range(len(waves)), [f"{w:.2f}" for w in waves])
    ax.set_yticks(range(len(amps)), [f"{a:.3f}" for a in amps])
    ax.set_xlabel("wave number n")
    ax.set_ylabel("pitch amplitude (rad)")


def heatmap_figure(diagram: BehaviorDiagram, field: str = "displacement"):
    """Mean displacement or spin rate over the parameter grid."""
    if field == "displacement":
        data = diagram.mean_displacement
        label = "displacement (BL/cycle)"
    elif field == "spin_rate":
        data = diagram.mean_spin_rate
        label = "axial rotation rate (rad/s)"
    else:
        raise ValueError(f"unknown heatmap field {field!r}")
    fig, ax = plt.subplots(figsize=(6.0, 4.2), constrained_layout=True)
    image = ax.imshow(data, origin="lower", aspect="auto", cmap="viridis")
    _grid_axes(ax, diagram)
    ax.set_title(f"{diagram.variant.name}: {label}")
    fig.colorbar(image, ax=ax, label=label)
    return fig


def regime_figure(diagram: BehaviorDiagram):
    """Discrete regime map with one color per behavior."""
    order = list(RegimeLabel)
    index = {label: k for k, label in enumerate(order)}
    data = np.vectorize(index.__getitem__)(diagram.regimes)
    cmap = ListedColormap([REGIME_COLORS[label] for label in order])
    fig, ax = plt.subplots(figsize=(6.6, 4.2), constrained_layout=True)
    ax.imshow(data, origin="lower", aspect="auto", cmap=cmap, vmin=-0.5, vmax=len(order) - 0.5)
    _grid_axes(ax, diagram)
    ax.set_title(f"{diagram.variant.name}: behavior regimes")
    handles = [
        Patch(facecolor=REGIME_COLORS[label], label=f"{label.numeral}: {label.value}")
        for label in order
    ]
    ax.legend(handles=handles, loc="center left", bbox_to_anchor=(1.02, 0.5), fontsize=8)
    return fig


def phase_sweep_figure(table: PhaseSweepTable):
    """Displacement and signed roll per cycle against the phase offset."""
    offsets = [row.phase_offset for row in table.rows]
    labels = [f"{o / np.pi:+.2f}π" for o in offsets]
    x = np.arange(len(offsets))
    fig, (ax_dx, ax_roll) = plt.subplots(1, 2, figsize=(8.4, 3.6), constrained_layout=True)
    ax_dx.bar(x, [r.mean_displacement for r in table.rows],
              yerr=[r.sem_displacement for r in table.rows], capsize=3, color="#1b9e77")
    ax_dx.set_xticks(x, labels)
    ax_dx.set_xlabel("phase offset")
    ax_dx.set_ylabel("displacement (BL/cycle)")
    ax_roll.bar(x, [r.mean_roll_per_cycle for r in table.rows],
                yerr=[r.sem_roll_per_cycle for r in table.rows], capsize=3, color="#7570b3")
    ax_roll.axhline(0.0, color="black", linewidth=0.8)
    ax_roll.set_xticks(x, labels)
    ax_roll.set_xlabel("phase offset")
    ax_roll.set_ylabel("roll per cycle (rad)")
    fig.suptitle(f"phase offset sweep, amplitude {table.amplitude:.3f} rad")
    return fig


def energy_profile_figure(profiles: Mapping[str, EnergyProfile]):
    """Overlay of center-of-mass height against body roll angle."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0), constrained_layout=True)
    for name, profile in profiles.items():
        ax.plot(profile.angles, profile.heights, label=f"{name} (barrier {profile.barrier:.4f} m)")
    ax.axvline(np.pi, color="black", linewidth=0.8, linestyle="--")
    ax.set_xlabel("roll angle (rad)")
    ax.set_ylabel("center of mass height (m)")
    ax.set_title("reorientation height profiles")
    ax.legend(fontsize=8)
    return fig


def trajectory_figure(traj: Trajectory):
    """Planar center-of-mass path plus mean roll over time."""
    fig, (ax_path, ax_roll) = plt.subplots(1, 2, figsize=(8.4, 3.6), constrained_layout=True)
    com = traj.com
    ax_path.plot(com[:, 0], com[:, 1], color="#1b9e77")
    ax_path.plot(com[0, 0], com[0, 1], "o", color="black", markersize=4)
    ax_path.set_xlabel("x (m)")
    ax_path.set_ylabel("y (m)")
    ax_path.set_title("center of mass path")
    ax_path.set_aspect("equal", adjustable="datalim")
    cycles = traj.times * traj.config.gait.omega / (2.0 * np.pi)
    ax_roll.plot(cycles, traj.mean_roll, color="#7570b3")
    ax_roll.set_xlabel("time (cycles)")
    ax_roll.set_ylabel("mean roll (rad)")
    ax_roll.set_title("body roll")
    return fig
