"""Quasi-static contact simulation on flat rigid ground.

Inertia is ignored: at every step the body shape commanded by the gait is
re-placed on the ground by a three-stage update that mimics slow, friction-
dominated motion.

1. Slip minimisation. Contact points that supported the body in the previous
   step are treated as sticking. The new shape is moved by the planar rigid
   motion (x, y, heading) that minimises the summed squared horizontal slip
   of those points, found in closed form.
2. Vertical drop. The body is translated vertically until the lowest contact
   sphere touches the ground.
3. Support resolution. While the horizontal projection of the center of mass
   falls outside the convex hull of the contact points, the body tips about
   the hull boundary feature nearest that projection, rotating exactly far
   enough to bring the next contact sphere down to the ground. Each tip
   strictly lowers the center of mass, so the loop terminates; a safety cap
   marks the rare non-converging state as unresolved.

Contact geometry is evaluated analytically: every chain vertex carries a
sphere of the link radius and every leg tip a sphere of its tip radius, so a
straight chain rests at the same height for any roll angle instead of
clunking over sampling facets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .gait import GaitParams, clamp_joints, eval_gait, gait_config_dict
from .geometry import (
    Pose,
    convex_hull_2d,
    exterior_query_2d,
    planar_fit_2d,
    rot_z,
    rotate_pose_about_line,
    rotation_about_axis,
    translate_pose,
    wrap_angle,
)
from .morphology import (
    BodyShape,
    RobotModel,
    forward_kinematics,
    has_self_collision,
    morphology_config_dict,
)

#: vertical band below which a contact sphere counts as supporting, meters
CONTACT_BAND = 1e-3
#: ground penetration beyond this depth violates the contact model, meters
PENETRATION_TOL = 1e-6
#: slack for the center-of-mass-inside-hull stability test, meters
STABILITY_TOL = 1e-6
MAX_SUPPORT_ITERATIONS = 100
DEFAULT_STEPS_PER_CYCLE = 200
MIN_STEPS_PER_CYCLE = 50
DEFAULT_PERTURBATION_SCALE = 0.02

TRAJECTORY_COLUMNS = ("t", "com_x", "com_y", "com_z", "mean_roll", "contact_count", "clamped", "collision")


@dataclass(eq=False)
class ContactSet:
    """Contact candidates currently supporting the body."""

    ids: np.ndarray       # indices into the shape's candidate arrays
    points: np.ndarray    # (k, 3) world support points, z within the contact band
    labels: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(eq=False)
class WorldState:
    """Placement of the body at one instant."""

    pose: Pose
    time: float
    contact_set: ContactSet
    clamp_fraction: float


@dataclass(frozen=True)
class TrialConfig:
    """Everything needed to reproduce a single trial bit for bit."""

    model: RobotModel
    gait: GaitParams
    duration_cycles: int = 3
    timestep: float | None = None
    initial_roll: float = 0.0
    perturbation_seed: int = 0
    perturbation_scale: float = DEFAULT_PERTURBATION_SCALE
    origin_xy: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.model.num_modules != self.gait.num_modules:
            raise ValueError(
                f"model has {self.model.num_modules} modules but the gait drives {self.gait.num_modules}"
            )
        if self.duration_cycles < 1:
            raise ValueError(f"duration_cycles must be at least 1, got {self.duration_cycles}")
        if self.timestep is not None:
            if self.timestep <= 0.0:
                raise ValueError(f"timestep must be positive, got {self.timestep}")
            if self.timestep > self.gait.period / MIN_STEPS_PER_CYCLE:
                raise ValueError(
                    f"timestep {self.timestep:.6g} s is coarser than 1/{MIN_STEPS_PER_CYCLE} "
                    f"of the {self.gait.period:.6g} s gait period"
                )
        if self.perturbation_scale < 0.0:
            raise ValueError(f"perturbation_scale must be non-negative, got {self.perturbation_scale}")

    @property
    def resolved_timestep(self) -> float:
        if self.timestep is not None:
            return self.timestep
        return self.gait.period / DEFAULT_STEPS_PER_CYCLE


@dataclass(eq=False)
class Trajectory:
    """Recorded samples of one trial."""

    config: TrialConfig
    times: np.ndarray          # (s,)
    com: np.ndarray            # (s, 3) world center of mass
    link_roll: np.ndarray      # (s, num_links) unwrapped world roll per link
    contact_count: np.ndarray  # (s,)
    clamped_count: np.ndarray  # (s,) joints clamped at each sample
    collision: np.ndarray      # (s,) bool, self-collision at the sample
    rotations: np.ndarray      # (s, 3, 3) body-to-world rotations
    translations: np.ndarray   # (s, 3)
    contact_ids: list = field(default_factory=list)
    unresolved: bool = False

    @property
    def body_length(self) -> float:
        return self.config.model.body_length

    @property
    def period(self) -> float:
        return self.config.gait.period

    @property
    def mean_roll(self) -> np.ndarray:
        return self.link_roll.mean(axis=1)

    @property
    def clamp_fraction(self) -> float:
        total = self.clamped_count.sum()
        return float(total) / (len(self.times) * self.config.model.num_joints)

    @property
    def saturated(self) -> bool:
        return self.clamp_fraction >= 0.01

    @property
    def any_collision(self) -> bool:
        return bool(self.collision.any())

    def flags(self) -> dict[str, bool]:
        return {
            "saturated": self.saturated,
            "collision": self.any_collision,
            "unresolved": self.unresolved,
        }


# ---------------------------------------------------------------------------
# Contact queries
# ---------------------------------------------------------------------------


def support_heights(shape: BodyShape, pose: Pose):
    """World candidate centers and the height of each sphere above ground."""
    centers = pose.apply(shape.cand_points)
    return centers, centers[:, 2] - shape.cand_radius


def contact_detect(shape: BodyShape, pose: Pose, band: float = CONTACT_BAND) -> ContactSet:
    """Contact candidates whose sphere bottoms are within `band` of the ground."""
    centers, heights = support_heights(shape, pose)
    ids = np.nonzero(heights < band)[0]
    points = centers[ids].copy()
    points[:, 2] = heights[ids]
    return ContactSet(ids=ids, points=points, labels=tuple(shape.cand_labels[i] for i in ids))


def drop_to_ground(shape: BodyShape, pose: Pose) -> Pose:
    """Translate vertically until the lowest contact sphere touches z = 0."""
    _, heights = support_heights(shape, pose)
    return translate_pose(pose, np.array([0.0, 0.0, -float(heights.min())]))


def resolve_planar_motion(prev_contacts: ContactSet, new_shape: BodyShape, pose: Pose):
    """Slip-minimising planar motion for the previous contacts on a new shape.

    Returns (dx, dy, dyaw) of the world-frame motion p' = R(dyaw) p + d that
    moves the new shape's instances of the previously supporting candidates
    as close as possible to their previous world positions, by least squares.
    A single persisting contact pins translation only and leaves dyaw = 0.
    """
    if len(prev_contacts) == 0:
        raise ValueError("cannot register planar motion without previous contacts")
    predicted = pose.apply(new_shape.cand_points[prev_contacts.ids])[:, :2]
    return planar_fit_2d(predicted, prev_contacts.points[:, :2])


def apply_planar_motion(pose: Pose, motion) -> Pose:
    dx, dy, dyaw = motion
    rot = rot_z(dyaw)
    return Pose(rot @ pose.rotation, rot @ pose.translation + np.array([dx, dy, 0.0]))


# ---------------------------------------------------------------------------
# Support resolution
# ---------------------------------------------------------------------------


def _tipping_axis(hull: np.ndarray, com_xy: np.ndarray):
    """World-frame tipping line (point, unit axis) for an unstable placement."""
    dist, closest, edge_dir = exterior_query_2d(hull, com_xy)
    if dist <= STABILITY_TOL:
        return None
    if edge_dir is not None:
        axis2 = edge_dir / np.hypot(*edge_dir)
    else:
        radial = com_xy - closest
        axis2 = np.array([-radial[1], radial[0]]) / np.hypot(*radial)
    point = np.array([closest[0], closest[1], 0.0])
    axis = np.array([axis2[0], axis2[1], 0.0])
    return point, axis


def resolve_support(
    shape: BodyShape,
    pose: Pose,
    max_iterations: int = MAX_SUPPORT_ITERATIONS,
    trace: list | None = None,
):
    """Tip the body about its support boundary until it rests statically.

    Returns (pose, resolved). The center-of-mass height is strictly
    non-increasing over iterations; `trace`, when given, collects it. An
    unresolved placement after the iteration cap is reported, not raised.
    """
    for _ in range(max_iterations):
        centers, heights = support_heights(shape, pose)
        min_height = float(heights.min())
        if min_height > CONTACT_BAND or min_height < -PENETRATION_TOL:
            # not resting on the plane yet; drop before judging stability
            pose = translate_pose(pose, np.array([0.0, 0.0, -min_height]))
            centers[:, 2] -= min_height
            heights = heights - min_height
        in_contact = heights < CONTACT_BAND
        com_world = pose.apply(shape.com)
        if trace is not None:
            trace.append(float(com_world[2]))
        hull = convex_hull_2d(centers[in_contact, :2])
        found = _tipping_axis(hull, com_world[:2])
        if found is None:
            return pose, True
        point, axis = found

        # orient the axis so positive rotation lowers the center of mass
        descent = np.cross(axis, com_world - point)[2]
        if descent > 0.0:
            axis = -axis
            descent = -descent
        if descent >= -1e-12:
            return pose, False  # balanced knife edge, no descending rotation

        angle = _first_touch_angle(centers, shape.cand_radius, in_contact, point, axis, com_world - point)
        if angle is None or angle <= 1e-12:
            return pose, False
        pose = rotate_pose_about_line(pose, point, axis, angle)
        pose = drop_to_ground(shape, pose)  # numerical cleanup
    return pose, False


def _first_touch_angle(centers, radii, in_contact, point, axis, com_rel):
    """Smallest tip rotation that grounds a new candidate sphere.

    Rotating about the horizontal line (point, axis), the height of a sphere
    center follows a*cos(phi) + b*sin(phi). The first positive root of
    height = radius over the airborne candidates bounds the tip; the angle
    is additionally capped where the center of mass bottoms out.
    """
    rel = centers[~in_contact] - point
    if not len(rel):
        return None
    a = rel[:, 2]
    b = np.cross(np.broadcast_to(axis, rel.shape), rel)[:, 2]
    rho = radii[~in_contact]
    amp = np.hypot(a, b)
    reachable = amp > rho + 1e-15
    if not np.any(reachable):
        return None
    a, b, rho, amp = a[reachable], b[reachable], rho[reachable], amp[reachable]
    phase = np.arctan2(b, a)
    spread = np.arccos(np.clip(rho / amp, -1.0, 1.0))
    twopi = 2.0 * np.pi
    roots = np.concatenate([(phase - spread) % twopi, (phase + spread) % twopi])
    roots = roots[roots > 1e-12]
    if not len(roots):
        return None
    angle = float(roots.min())

    # cap at the angle where the center of mass stops descending
    com_b = float(np.cross(axis, com_rel)[2])
    com_phase = math.atan2(com_b, float(com_rel[2]))
    com_cap = (com_phase + math.pi) % twopi
    if com_cap > 1e-12:
        angle = min(angle, com_cap)
    return angle


# ---------------------------------------------------------------------------
# Placement and rolling measurement
# ---------------------------------------------------------------------------


def mean_backbone_axis(shape: BodyShape) -> np.ndarray:
    """Unit mean backbone direction, tail to head.

    The length-weighted mean of the link tangents equals the end-to-end
    vector; a principal axis of the chain vertices covers shapes that close
    on themselves.
    """
    span = shape.nodes[-1] - shape.nodes[0]
    norm = np.linalg.norm(span)
    if norm > 1e-6 * float(shape.link_lengths.sum()):
        return span / norm
    centered = shape.nodes - shape.nodes.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    axis = vt[0]
    if axis @ span < 0.0 or (norm == 0.0 and axis[0] < 0.0):
        axis = -axis
    return axis


def initial_placement(
    shape: BodyShape,
    initial_roll: float = 0.0,
    origin_xy: tuple[float, float] = (0.0, 0.0),
) -> WorldState:
    """Rest the body on the ground, rolled about its mean backbone axis.

    The center of mass starts above origin_xy; the shape is rolled by
    initial_roll about the mean backbone axis through the center of mass,
    dropped, and support-resolved.
    """
    state, _ = _place(shape, initial_roll, origin_xy)
    return state


def _place(shape: BodyShape, initial_roll: float, origin_xy):
    axis = mean_backbone_axis(shape)
    rot = rotation_about_axis(axis, initial_roll)
    translation = np.array([origin_xy[0], origin_xy[1], 0.0]) - rot @ shape.com
    pose = drop_to_ground(shape, Pose(rot, translation))
    pose, resolved = resolve_support(shape, pose)
    state = WorldState(pose=pose, time=0.0, contact_set=contact_detect(shape, pose), clamp_fraction=0.0)
    return state, resolved


def link_rolls_raw(shape: BodyShape, pose: Pose) -> np.ndarray:
    """Per-link world roll angle in [-pi, pi).

    The roll of a link is the signed angle of its dorsal direction about the
    link tangent, measured from the world vertical projected perpendicular
    to the tangent. Upright is 0, fully inverted is -pi (equivalently pi).
    For a near-vertical tangent the world +x axis replaces the vertical as
    the reference.
    """
    frames = pose.rotation @ shape.link_rot  # (L, 3, 3)
    tangent = frames[:, :, 0]
    dorsal = frames[:, :, 2]
    ref = -tangent * tangent[:, 2:3]
    ref[:, 2] += 1.0  # z_world minus its tangential component
    norms = np.linalg.norm(ref, axis=1)
    vertical = norms < 1e-9
    if np.any(vertical):
        fallback = np.array([1.0, 0.0, 0.0]) - tangent[vertical] * tangent[vertical, 0:1]
        ref[vertical] = fallback
        norms = np.linalg.norm(ref, axis=1)
    ref /= norms[:, None]
    sin_term = np.einsum("ij,ij->i", tangent, np.cross(ref, dorsal))
    cos_term = np.einsum("ij,ij->i", ref, dorsal)
    return np.arctan2(sin_term, cos_term)


# ---------------------------------------------------------------------------
# Trial loop
# ---------------------------------------------------------------------------


def simulate(trial: TrialConfig) -> Trajectory:
    """Run one quasi-static trial.

    The per-joint phase perturbation is drawn once from perturbation_seed,
    so identical configurations reproduce identical trajectories. Clamp
    events, self-collisions and unresolved support states are recorded but
    do not abort the trial.
    """
    model, params = trial.model, trial.gait
    dt = trial.resolved_timestep
    n_steps = int(round(trial.duration_cycles * params.period / dt))
    rng = np.random.default_rng(trial.perturbation_seed)
    jitter = rng.uniform(-trial.perturbation_scale, trial.perturbation_scale, model.num_joints)

    times = np.arange(n_steps + 1) * dt
    n_links = model.num_links
    com = np.empty((n_steps + 1, 3))
    rolls = np.empty((n_steps + 1, n_links))
    contact_count = np.empty(n_steps + 1, dtype=np.int64)
    clamped_count = np.empty(n_steps + 1, dtype=np.int64)
    collision = np.zeros(n_steps + 1, dtype=bool)
    rotations = np.empty((n_steps + 1, 3, 3))
    translations = np.empty((n_steps + 1, 3))
    contact_ids: list[np.ndarray] = []
    unresolved = False

    def commanded_shape(t: float):
        angles, n_clamped = clamp_joints(eval_gait(params, t, jitter), model.joint_limit)
        return forward_kinematics(model, angles), n_clamped

    shape, n_clamped = commanded_shape(0.0)
    state, resolved = _place(shape, trial.initial_roll, trial.origin_xy)
    unresolved |= not resolved
    pose = state.pose
    contacts = state.contact_set

    raw = link_rolls_raw(shape, pose)
    rolls[0] = trial.initial_roll + wrap_angle(raw - trial.initial_roll)
    prev_raw = raw
    com[0] = pose.apply(shape.com)
    contact_count[0] = len(contacts)
    clamped_count[0] = n_clamped
    collision[0] = has_self_collision(shape, model)
    rotations[0] = pose.rotation
    translations[0] = pose.translation
    contact_ids.append(contacts.ids.copy())

    for k in range(1, n_steps + 1):
        shape, n_clamped = commanded_shape(times[k])
        pose = apply_planar_motion(pose, resolve_planar_motion(contacts, shape, pose))
        pose = drop_to_ground(shape, pose)
        pose, resolved = resolve_support(shape, pose)
        unresolved |= not resolved
        contacts = contact_detect(shape, pose)

        raw = link_rolls_raw(shape, pose)
        rolls[k] = rolls[k - 1] + wrap_angle(raw - prev_raw)
        prev_raw = raw
        com[k] = pose.apply(shape.com)
        contact_count[k] = len(contacts)
        clamped_count[k] = n_clamped
        collision[k] = has_self_collision(shape, model)
        rotations[k] = pose.rotation
        translations[k] = pose.translation
        contact_ids.append(contacts.ids.copy())

    return Trajectory(
        config=trial,
        times=times,
        com=com,
        link_roll=rolls,
        contact_count=contact_count,
        clamped_count=clamped_count,
        collision=collision,
        rotations=rotations,
        translations=translations,
        contact_ids=contact_ids,
        unresolved=unresolved,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _csv_float(x) -> str:
    """Shortest exact decimal form of a float for CSV cells."""
    return repr(float(x))


def trial_config_dict(trial: TrialConfig) -> dict:
    """Plain mapping that reproduces the trial, for sidecar metadata."""
    return {
        "morphology": morphology_config_dict(trial.model),
        "gait": gait_config_dict(trial.gait),
        "simulation": {
            "timestep_s": trial.resolved_timestep,
            "duration_cycles": trial.duration_cycles,
            "initial_roll_rad": trial.initial_roll,
            "perturbation_scale_rad": trial.perturbation_scale,
            "seed": trial.perturbation_seed,
            "origin_xy_m": list(trial.origin_xy),
        },
    }


def save_trajectory(traj: Trajectory, path, per_link: bool = False) -> None:
    """Write a trajectory CSV plus a sidecar metadata file.

    The main CSV holds one row per sample with the columns
    t, com_x, com_y, com_z, mean_roll, contact_count, clamped, collision.
    With per_link=True a second CSV with the per-link unwrapped roll angles
    is written next to it, and the sidecar <path>.meta.yaml echoes the full
    trial configuration.
    """
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    path = str(path)
    mean_roll = traj.mean_roll
    fmt = _csv_float
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for k in range(len(traj.times)):
            fh.write(
                f"{fmt(traj.times[k])},{fmt(traj.com[k, 0])},{fmt(traj.com[k, 1])},{fmt(traj.com[k, 2])},"
                f"{fmt(mean_roll[k])},{traj.contact_count[k]},{traj.clamped_count[k]},"
                f"{int(traj.collision[k])}\n"
            )
    if per_link:
        stem, dot, _ = path.rpartition(".")
        link_path = (stem if dot else path) + "_links.csv"
        n_links = traj.link_roll.shape[1]
        with open(link_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t," + ",".join(f"roll_link{i}" for i in range(n_links)) + "\n")
            for k in range(len(traj.times)):
                fh.write(fmt(traj.times[k]) + "," + ",".join(fmt(v) for v in traj.link_roll[k]) + "\n")
    meta = dict(trial_config_dict(traj.config))
    meta["flags"] = traj.flags()
    with open(path + ".meta.yaml", "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(meta, fh, sort_keys=True)
