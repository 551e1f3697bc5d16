"""Robot morphology: module chain, legs, forward kinematics, self-collision.

The robot is a serial chain of `num_modules` bi-axial modules. Joints are
labeled 1..2N from the tail: odd joints are yaw (about body +z), even joints
are pitch (about body +y), and module i owns joints 2i-1 and 2i. Both axes of
a module intersect at a single point, so consecutive module origins sit one
`link_length` apart along the backbone, with a tail link before module 1 and
a head link after module N. In the body frame the zero configuration lays the
backbone along +x with the dorsal side facing +z.

The capsule cross-section has radius `link_radius`, i.e. half the body
segment width. Legs are rigid pegs fixed to the ventral face at their
module's origin, mirrored left/right about the sagittal plane by the splay
angle, with a contact sphere of `tip_radius` at the tip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .geometry import rot_y, rot_z, segment_segment_distance

#: leg-length presets as used for the standard leg sets: body length over
#: 13.8 (short), body length over 11.8 (medium), 1.2 x module spacing (long)
SHORT_LEG_BODY_RATIO = 13.8
MEDIUM_LEG_BODY_RATIO = 11.8
LONG_LEG_SPACING_FACTOR = 1.2

DEFAULT_NUM_MODULES = 9
DEFAULT_LINK_LENGTH = 0.0715
DEFAULT_LINK_RADIUS = 0.0253
DEFAULT_LINK_MASS = 0.109
DEFAULT_JOINT_LIMIT = math.pi / 2
DEFAULT_TIP_RADIUS = 0.005

LEG_ATTACHMENT_POLICIES = ("all", "evenly_spaced")


@dataclass(frozen=True)
class LegSpec:
    """One set of mirrored leg pairs.

    length:             peg length in meters from the ventral surface to the tip
    attachment_modules: 1-based module indices carrying a pair, ascending
    splay_angle:        outward tilt from straight ventral, radians
    tip_radius:         radius of the contact sphere at the tip, meters
    """

    length: float
    attachment_modules: tuple[int, ...]
    splay_angle: float = 0.0
    tip_radius: float = DEFAULT_TIP_RADIUS

    @property
    def pair_count(self) -> int:
        return len(self.attachment_modules)

    def __post_init__(self):
        if self.length <= 0.0:
            raise ValueError(f"leg length must be positive, got {self.length}")
        if self.tip_radius <= 0.0:
            raise ValueError(f"leg tip radius must be positive, got {self.tip_radius}")
        if not self.attachment_modules:
            raise ValueError("leg set needs at least one attachment module")
        mods = tuple(int(m) for m in self.attachment_modules)
        if len(set(mods)) != len(mods):
            raise ValueError(f"duplicate leg attachment modules: {mods}")
        if list(mods) != sorted(mods):
            raise ValueError(f"leg attachment modules must be ascending: {mods}")
        object.__setattr__(self, "attachment_modules", mods)


@dataclass(frozen=True)
class RobotModel:
    """Geometric and mass description of the module chain."""

    num_modules: int = DEFAULT_NUM_MODULES
    link_length: float = DEFAULT_LINK_LENGTH
    link_radius: float = DEFAULT_LINK_RADIUS
    link_mass: float = DEFAULT_LINK_MASS
    head_tail_length: float = DEFAULT_LINK_LENGTH
    joint_limit: float = DEFAULT_JOINT_LIMIT
    legs: LegSpec | None = None

    def __post_init__(self):
        if self.num_modules < 1:
            raise ValueError(f"need at least one module, got {self.num_modules}")
        for name in ("link_length", "link_radius", "link_mass", "head_tail_length"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.joint_limit <= math.pi:
            raise ValueError(f"joint_limit must be in (0, pi], got {self.joint_limit}")
        if self.legs is not None:
            bad = [m for m in self.legs.attachment_modules if not 1 <= m <= self.num_modules]
            if bad:
                raise ValueError(
                    f"leg attachment modules {bad} outside the valid range 1..{self.num_modules}"
                )

    @property
    def num_joints(self) -> int:
        return 2 * self.num_modules

    @property
    def num_links(self) -> int:
        # tail link + one link per inter-module gap + head link
        return self.num_modules + 1

    @property
    def body_length(self) -> float:
        return (self.num_modules - 1) * self.link_length + 2.0 * self.head_tail_length

    def joint_axis(self, joint: int) -> str:
        """Axis of a 1-based joint index: odd joints yaw, even joints pitch."""
        if not 1 <= joint <= self.num_joints:
            raise ValueError(f"joint index {joint} outside 1..{self.num_joints}")
        return "yaw" if joint % 2 == 1 else "pitch"

    def module_of_joint(self, joint: int) -> int:
        """1-based module owning a 1-based joint index."""
        if not 1 <= joint <= self.num_joints:
            raise ValueError(f"joint index {joint} outside 1..{self.num_joints}")
        return (joint + 1) // 2


@dataclass(eq=False)
class BodyShape:
    """Forward-kinematics result in the body frame.

    nodes:        (num_links + 1, 3) chain vertices from tail tip to head tip
    link_rot:     (num_links, 3, 3) orientation of each link frame; column 0
                  is the link tangent, column 2 the dorsal direction
    link_lengths: (num_links,)
    com:          (3,) center of mass of the uniform per-link point masses
    cand_points:  (n_cand, 3) contact sphere centers: every chain vertex
                  followed by every leg tip
    cand_radius:  (n_cand,) sphere radius per candidate
    cand_labels:  names matching cand_points rows
    leg_segments: (n_legs, 2, 3) root and tip per leg, empty when limbless
    """

    nodes: np.ndarray
    link_rot: np.ndarray
    link_lengths: np.ndarray
    com: np.ndarray
    cand_points: np.ndarray
    cand_radius: np.ndarray
    cand_labels: tuple[str, ...]
    leg_segments: np.ndarray
    leg_labels: tuple[str, ...]

    @property
    def link_frames(self):
        """Iterator of (rotation, origin) per link, origin at the link start."""
        return zip(self.link_rot, self.nodes[:-1])


@lru_cache(maxsize=128)
def _link_lengths(model: RobotModel) -> np.ndarray:
    lengths = np.full(model.num_links, model.link_length)
    lengths[0] = model.head_tail_length
    lengths[-1] = model.head_tail_length
    return lengths


@lru_cache(maxsize=128)
def _candidate_layout(model: RobotModel):
    """Labels and radii for the contact candidates of a model."""
    labels = ["tail"]
    labels += [f"m{i}" for i in range(1, model.num_modules + 1)]
    labels.append("head")
    radii = [model.link_radius] * (model.num_links + 1)
    leg_labels = []
    if model.legs is not None:
        for m in model.legs.attachment_modules:
            for side in ("L", "R"):
                leg_labels.append(f"leg{m}{side}")
                radii.append(model.legs.tip_radius)
    return tuple(labels), tuple(leg_labels), np.array(radii)


def build_model(config: Mapping | None = None) -> RobotModel:
    """Build a RobotModel from a morphology configuration mapping.

    Recognised keys: num_modules, link_length_m, link_radius_m, link_mass_kg,
    head_tail_length_m, joint_limit_rad, and an optional legs mapping with
    length_m or ratio_preset (one of short/medium/long), pair_count,
    attachment ("all", "evenly_spaced", or an explicit module list),
    splay_angle_rad and tip_radius_m. Unknown keys are rejected.
    """
    config = dict(config or {})
    legs_cfg = config.pop("legs", None)
    known = {
        "num_modules": "num_modules",
        "link_length_m": "link_length",
        "link_radius_m": "link_radius",
        "link_mass_kg": "link_mass",
        "head_tail_length_m": "head_tail_length",
        "joint_limit_rad": "joint_limit",
    }
    kwargs = {}
    for key, value in config.items():
        if key not in known:
            raise ValueError(f"unknown morphology key: {key!r}")
        kwargs[known[key]] = value
    base = RobotModel(**kwargs)
    if legs_cfg is None:
        return base
    return RobotModel(**{**{f: getattr(base, f) for f in known.values()}, "legs": _legs_from_config(base, legs_cfg)})


def _legs_from_config(base: RobotModel, legs_cfg: Mapping) -> LegSpec:
    legs_cfg = dict(legs_cfg)
    length = legs_cfg.pop("length_m", None)
    preset = legs_cfg.pop("ratio_preset", None)
    pair_count = legs_cfg.pop("pair_count", None)
    attachment = legs_cfg.pop("attachment", "evenly_spaced")
    splay = legs_cfg.pop("splay_angle_rad", 0.0)
    tip_radius = legs_cfg.pop("tip_radius_m", DEFAULT_TIP_RADIUS)
    if legs_cfg:
        raise ValueError(f"unknown legs key: {sorted(legs_cfg)[0]!r}")
    if (length is None) == (preset is None):
        raise ValueError("legs need exactly one of length_m or ratio_preset")
    if preset is not None:
        presets = leg_lengths_from_ratios(base)
        if preset not in presets:
            raise ValueError(f"unknown leg ratio preset {preset!r}, expected one of {sorted(presets)}")
        length = presets[preset]
    if isinstance(attachment, str):
        if attachment not in LEG_ATTACHMENT_POLICIES:
            raise ValueError(f"unknown leg attachment policy {attachment!r}")
        if attachment == "all":
            modules = tuple(range(1, base.num_modules + 1))
            if pair_count is not None and pair_count != len(modules):
                raise ValueError(
                    f"pair_count {pair_count} conflicts with attachment 'all' on {base.num_modules} modules"
                )
        else:
            if pair_count is None:
                pair_count = base.num_modules
            modules = evenly_spaced_modules(base.num_modules, int(pair_count))
    else:
        modules = tuple(int(m) for m in attachment)
        if pair_count is not None and pair_count != len(modules):
            raise ValueError(f"pair_count {pair_count} conflicts with explicit attachment list {modules}")
    return LegSpec(length=float(length), attachment_modules=modules, splay_angle=float(splay), tip_radius=float(tip_radius))


def evenly_spaced_modules(num_modules: int, pair_count: int) -> tuple[int, ...]:
    """Spread pair_count attachment sites evenly over modules 1..num_modules."""
    if not 1 <= pair_count <= num_modules:
        raise ValueError(f"pair_count {pair_count} outside 1..{num_modules}")
    if pair_count == 1:
        return ((num_modules + 1) // 2,)
    picks = np.rint(np.linspace(1, num_modules, pair_count)).astype(int)
    if len(set(picks.tolist())) != pair_count:
        raise ValueError(f"cannot spread {pair_count} pairs over {num_modules} modules without repeats")
    return tuple(int(p) for p in picks)


def leg_lengths_from_ratios(model: RobotModel) -> dict[str, float]:
    """Standard leg lengths for a model: short, medium and long presets."""
    return {
        "short": model.body_length / SHORT_LEG_BODY_RATIO,
        "medium": model.body_length / MEDIUM_LEG_BODY_RATIO,
        "long": LONG_LEG_SPACING_FACTOR * model.link_length,
    }


def forward_kinematics(model: RobotModel, joints: Sequence[float]) -> BodyShape:
    """Pose the chain for a joint vector, in the body frame.

    joints holds 2N angles ordered joint 1 .. joint 2N; entry 2i-2 is the yaw
    and entry 2i-1 the pitch of module i. Angles beyond the joint limit are
    rejected with the offending 1-based joint index.
    """
    q = np.asarray(joints, dtype=float)
    if q.shape != (model.num_joints,):
        raise ValueError(f"expected {model.num_joints} joint angles, got shape {q.shape}")
    over = np.nonzero(np.abs(q) > model.joint_limit + 1e-12)[0]
    if over.size:
        raise ValueError(
            f"joint {over[0] + 1} angle {q[over[0]]:.6f} exceeds the joint limit {model.joint_limit:.6f}"
        )
    yaw = q[0::2]
    pitch = q[1::2]
    lengths = _link_lengths(model)
    n_links = model.num_links

    nodes = np.empty((n_links + 1, 3))
    rots = np.empty((n_links, 3, 3))
    r = np.eye(3)
    p = np.zeros(3)
    nodes[0] = p
    rots[0] = r
    for m in range(model.num_modules):
        p = p + lengths[m] * r[:, 0]
        r = r @ rot_z(yaw[m]) @ rot_y(pitch[m])
        nodes[m + 1] = p
        rots[m + 1] = r
    nodes[n_links] = p + lengths[-1] * r[:, 0]

    centers = 0.5 * (nodes[:-1] + nodes[1:])
    com = centers.mean(axis=0)  # uniform link masses, massless legs

    labels, leg_labels, radii = _candidate_layout(model)
    if model.legs is None:
        leg_segments = np.empty((0, 2, 3))
        cand_points = nodes
    else:
        spec = model.legs
        sin_s, cos_s = math.sin(spec.splay_angle), math.cos(spec.splay_angle)
        root_local = np.array([0.0, 0.0, -model.link_radius])
        tip_local = {
            "L": root_local + spec.length * np.array([0.0, sin_s, -cos_s]),
            "R": root_local + spec.length * np.array([0.0, -sin_s, -cos_s]),
        }
        leg_segments = np.empty((2 * spec.pair_count, 2, 3))
        k = 0
        for m in spec.attachment_modules:
            rot, origin = rots[m], nodes[m]
            root = origin + rot @ root_local
            for side in ("L", "R"):
                leg_segments[k, 0] = root
                leg_segments[k, 1] = origin + rot @ tip_local[side]
                k += 1
        cand_points = np.vstack([nodes, leg_segments[:, 1]])

    return BodyShape(
        nodes=nodes,
        link_rot=rots,
        link_lengths=lengths,
        com=com,
        cand_points=cand_points,
        cand_radius=radii,
        cand_labels=labels + leg_labels,
        leg_segments=leg_segments,
        leg_labels=leg_labels,
    )


@lru_cache(maxsize=128)
def collision_pair_indices(model: RobotModel):
    """Index pairs of body segments eligible for self-collision checks.

    Segments are the chain links followed by the legs. Excluded pairs:
    links sharing a chain vertex, a leg against the two links meeting at its
    attachment vertex (the root sits on their surface), and the mirrored
    pair of one module (coincident roots).
    """
    n_links = model.num_links
    labels = [f"link{i}" for i in range(n_links)]
    owner = []  # attachment vertex per leg segment
    if model.legs is not None:
        for m in model.legs.attachment_modules:
            for side in ("L", "R"):
                labels.append(f"leg{m}{side}")
                owner.append(m)
    n_seg = len(labels)
    first, second = [], []
    for i in range(n_seg):
        for j in range(i + 1, n_seg):
            if j < n_links:
                if j - i == 1:
                    continue  # adjacent links share a vertex
            elif i < n_links:
                m = owner[j - n_links]
                if i in (m - 1, m):
                    continue  # leg root lies on the surface of these links
            else:
                if owner[i - n_links] == owner[j - n_links]:
                    continue  # mirrored pair of one module
            first.append(i)
            second.append(j)
    radii = np.full(n_seg, model.link_radius)
    if model.legs is not None:
        radii[n_links:] = model.legs.tip_radius
    return np.array(first), np.array(second), tuple(labels), radii


def _segment_array(shape: BodyShape) -> np.ndarray:
    links = np.stack([shape.nodes[:-1], shape.nodes[1:]], axis=1)
    if len(shape.leg_segments):
        return np.vstack([links, shape.leg_segments])
    return links


def self_collision(shape: BodyShape, model: RobotModel) -> list[tuple[str, str, float, float]]:
    """Non-adjacent body segments closer than the sum of their radii.

    Returns (label_a, label_b, distance, limit) per offending pair, where
    limit is the sum of the two capsule radii. An empty list means the
    posture is collision-free.
    """
    first, second, labels, radii = collision_pair_indices(model)
    if not len(first):
        return []
    segs = _segment_array(shape)
    dists = segment_segment_distance(
        segs[first, 0], segs[first, 1], segs[second, 0], segs[second, 1]
    )
    limits = radii[first] + radii[second]
    hits = np.nonzero(dists < limits)[0]
    return [
        (labels[first[k]], labels[second[k]], float(dists[k]), float(limits[k]))
        for k in hits
    ]


def has_self_collision(shape: BodyShape, model: RobotModel) -> bool:
    """Fast boolean variant of self_collision."""
    first, second, _, radii = collision_pair_indices(model)
    if not len(first):
        return False
    segs = _segment_array(shape)
    dists = segment_segment_distance(
        segs[first, 0], segs[first, 1], segs[second, 0], segs[second, 1]
    )
    return bool(np.any(dists < radii[first] + radii[second]))


def morphology_config_dict(model: RobotModel) -> dict:
    """External-key mapping that build_model would accept back."""
    out = {
        "num_modules": model.num_modules,
        "link_length_m": model.link_length,
        "link_radius_m": model.link_radius,
        "link_mass_kg": model.link_mass,
        "head_tail_length_m": model.head_tail_length,
        "joint_limit_rad": model.joint_limit,
    }
    if model.legs is not None:
        out["legs"] = {
            "length_m": model.legs.length,
            "attachment": list(model.legs.attachment_modules),
            "splay_angle_rad": model.legs.splay_angle,
            "tip_radius_m": model.legs.tip_radius,
        }
    return out
