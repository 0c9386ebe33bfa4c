"""Synthetic multi-view articulated motion with controllable style.

An 11-joint stick figure is animated by sinusoidal joint-angle programs and
observed by a ring of pinhole cameras. This is the ground-truth substitute for
real multi-camera recordings: every quantity that the geometry should be
invariant to (camera placement, intrinsics, subject placement) is known.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from enum import Enum

import numpy as np

from .geometry import CameraModel, JOINTS, project_points
from .style import Label

ACTIONS = ("walk", "kick", "throw", "sit_down", "stand_up")

# segment lengths in metres
PELVIS_HALF = 0.10
TORSO = 0.50
SHOULDER_HALF = 0.19
HEAD = 0.25
UPPER_ARM = 0.30
FOREARM = 0.28
THIGH = 0.45
SHIN = 0.45
GROUND_Z = -(THIGH + SHIN)


class Action(str, Enum):
    WALK = "walk"
    KICK = "kick"
    THROW = "throw"
    SIT_DOWN = "sit_down"
    STAND_UP = "stand_up"


@dataclass(frozen=True)
class StyleParams:
    """Joint-angle amplitudes are in radians, noise in pixels."""

    arm_swing: float = 0.40
    leg_swing: float = 0.45
    elbow_flex: float = 0.40
    knee_flex: float = 0.60
    frequency: float = 2.0
    torso_sway: float = 0.08
    arm_phase: float = 0.0
    knee_phase: float = 0.5
    noise_sigma: float = 0.0

    def __post_init__(self):
        for name in ("arm_swing", "leg_swing", "elbow_flex", "knee_flex", "torso_sway", "noise_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")

    def as_array(self):
        return np.array([getattr(self, f.name) for f in fields(self)])


# Shape parameters varied per subject and per instance; noise is not a style.
JITTERED = ("arm_swing", "leg_swing", "elbow_flex", "knee_flex", "frequency", "torso_sway")
PHASES = ("arm_phase", "knee_phase")

# Idiosyncratic parameters vary more between people than the class-linked ones,
# so the leading variance direction of a population is not the class axis.
JITTER_SCALE = {"knee_flex": 2.5, "frequency": 1.5}
MAX_RELATIVE_JITTER = 0.9

DEFAULT_BASES = {
    Label.FEMALE: StyleParams(arm_swing=0.25, torso_sway=0.15, elbow_flex=0.25, leg_swing=0.40),
    Label.MALE: StyleParams(arm_swing=0.55, torso_sway=0.04, elbow_flex=0.55, leg_swing=0.48),
}


@dataclass(frozen=True)
class SyntheticSequence:
    action: str
    world: np.ndarray  # (frames, 11, 3)
    images: tuple  # per camera, (frames, 11, 2)
    cameras: tuple
    label: Label | None = None
    params: StyleParams | None = None


@dataclass(frozen=True)
class PopulationMember:
    subject: int
    instance: int
    label: Label
    params: StyleParams


def _rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def _rot_y(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def _rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def look_at(center, target, up=(0.0, 0.0, 1.0)):
    """World-to-camera rotation with x right, y down, z forward."""
    forward = np.asarray(target, float) - np.asarray(center, float)
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, up)
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    return np.vstack([right, down, forward])


def make_camera_ring(count, radius=5.0, height=1.0, focal=1000.0, seed=0):
    """`count` cameras evenly spaced on a horizontal circle, all aimed at the origin.

    Focal lengths are jittered within +-10% per camera (seeded) so that
    invariance to intrinsics is exercised, not only to viewpoint.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if not radius > 0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng(seed)
    jitter = rng.uniform(-0.1, 0.1, size=count)
    cams = []
    for k in range(count):
        az = 2 * np.pi * k / count
        c = np.array([radius * np.cos(az), radius * np.sin(az), height])
        f = focal * (1 + jitter[k])
        K = np.array([[f, 0, 500.0], [0, f, 500.0], [0, 0, 1]])
        cams.append(CameraModel.from_parameters(K, look_at(c, np.zeros(3)), c))
    return cams


def _limb(length, pitch, roll=0.0):
    """Segment hanging down, rotated forward by `pitch` and sideways by `roll`."""
    return length * np.stack(
        [np.sin(pitch) * np.cos(roll), np.sin(roll) * np.ones_like(pitch), -np.cos(pitch) * np.cos(roll)],
        axis=-1,
    )


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3 - 2 * u)


def _angles(action, s: StyleParams, u):
    """Joint-angle programs as functions of normalized time u in [0, 1]."""
    w = 2 * np.pi * s.frequency * u
    z = np.zeros_like(u)
    a = dict(
        lean=z, roll=z, twist=z, bob=z, advance=z,
        hip_l=z, hip_r=z, knee_l=z, knee_r=z,
        sho_l=z, sho_r=z, abd_l=z, abd_r=z, elb_l=z, elb_r=z,
    )
    if action == "walk":
        a.update(
            hip_l=s.leg_swing * np.sin(w),
            hip_r=-s.leg_swing * np.sin(w),
            knee_l=s.knee_flex * 0.5 * (1 + np.sin(w + s.knee_phase + np.pi / 2)),
            knee_r=s.knee_flex * 0.5 * (1 - np.sin(w + s.knee_phase + np.pi / 2)),
            sho_l=-s.arm_swing * np.sin(w + s.arm_phase),
            sho_r=s.arm_swing * np.sin(w + s.arm_phase),
            elb_l=s.elbow_flex * 0.5 * (1 - np.sin(w + s.arm_phase)),
            elb_r=s.elbow_flex * 0.5 * (1 + np.sin(w + s.arm_phase)),
            abd_l=z + 0.1, abd_r=z - 0.1,
            roll=s.torso_sway * np.sin(w),
            twist=0.5 * s.torso_sway * np.cos(w),
            bob=0.02 * np.cos(2 * w),
            advance=4 * THIGH * np.sin(s.leg_swing) * s.frequency * u,
        )
    elif action == "kick":
        b = np.sin(np.pi * u) ** 2
        a.update(
            hip_r=2.2 * s.leg_swing * b - 0.3 * s.leg_swing * np.sin(2 * np.pi * u),
            knee_r=s.knee_flex * np.sin(np.pi * u) * (1 - b) + 0.1,
            hip_l=-0.2 * s.leg_swing * b,
            knee_l=0.2 * s.knee_flex * b,
            sho_l=s.arm_swing * b,
            sho_r=-s.arm_swing * b,
            abd_l=0.3 * s.arm_swing * b + 0.1, abd_r=-0.3 * s.arm_swing * b - 0.1,
            elb_l=s.elbow_flex * (0.5 + 0.5 * b), elb_r=s.elbow_flex * (0.5 + 0.5 * b),
            lean=-0.8 * s.torso_sway * b,
            roll=s.torso_sway * np.sin(w + s.arm_phase),
        )
    elif action == "throw":
        g = _smoothstep(u)
        a.update(
            sho_r=-2.0 * s.arm_swing + 4.0 * s.arm_swing * g + 0.8 * np.sin(np.pi * g),
            elb_r=s.elbow_flex * (1.5 - g),
            abd_r=-0.3 - 0.3 * np.sin(np.pi * g),
            sho_l=s.arm_swing * (1 - 2 * g),
            elb_l=0.6 * s.elbow_flex + z,
            abd_l=0.2 + z,
            twist=2.0 * s.torso_sway * np.sin(np.pi * (g - 0.5)),
            roll=s.torso_sway * np.sin(w),
            hip_l=s.leg_swing * np.sin(np.pi * g),
            knee_l=0.5 * s.knee_flex * np.sin(np.pi * g),
            hip_r=-0.3 * s.leg_swing * g,
            lean=0.5 * s.torso_sway * np.sin(np.pi * g),
        )
    elif action in ("sit_down", "stand_up"):
        uu = u if action == "sit_down" else 1 - u
        g = _smoothstep(uu ** (1.0 + 0.2 * (s.frequency - 2.0)))
        a.update(
            hip_l=g * (1.2 + 0.5 * s.leg_swing), hip_r=g * (1.2 + 0.5 * s.leg_swing),
            knee_l=g * (1.4 + 0.3 * s.knee_flex), knee_r=g * (1.4 + 0.3 * s.knee_flex),
            lean=(3.0 * s.torso_sway + 0.2) * np.sin(np.pi * g) + 0.2 * g,
            sho_l=s.arm_swing * np.sin(np.pi * g) + 0.3 * g,
            sho_r=s.arm_swing * np.sin(np.pi * g + s.arm_phase) + 0.3 * g,
            elb_l=s.elbow_flex * g, elb_r=s.elbow_flex * g,
            abd_l=z + 0.15, abd_r=z - 0.15,
            roll=0.5 * s.torso_sway * np.sin(w),
        )
    else:
        raise ValueError(f"unknown action {action!r}")
    return {k: np.broadcast_to(v, u.shape).astype(float) for k, v in a.items()}


def body_poses(action, style: StyleParams, frames):
    """World-free 11-joint poses (frames, 11, 3) in the body frame
    (x forward, y left, z up, pelvis centre at the origin when standing)."""
    u = np.linspace(0.0, 1.0, frames)
    a = _angles(action, style, u)
    out = np.zeros((frames, len(JOINTS), 3))
    for f in range(frames):
        rt = _rot_z(a["twist"][f]) @ _rot_x(a["roll"][f]) @ _rot_y(a["lean"][f])
        rp = _rot_z(0.3 * a["twist"][f]) @ _rot_x(-0.5 * a["roll"][f])
        pelvis = np.array([a["advance"][f], 0.0, a["bob"][f]])
        neck = pelvis + rt @ [0, 0, TORSO]
        joints = {"head": neck + rt @ [0, 0, HEAD]}
        for side, sign in (("l", 1.0), ("r", -1.0)):
            sho = neck + rt @ [0, sign * SHOULDER_HALF, 0]
            pitch = a[f"sho_{side}"][f]
            abd = a[f"abd_{side}"][f]
            elb = sho + rt @ _limb(UPPER_ARM, pitch, abd)
            hand = elb + rt @ _limb(FOREARM, pitch + a[f"elb_{side}"][f], abd)
            hip = pelvis + rp @ [0, sign * PELVIS_HALF, 0]
            hp = a[f"hip_{side}"][f]
            knee = hip + rp @ _limb(THIGH, hp)
            foot = knee + rp @ _limb(SHIN, hp - a[f"knee_{side}"][f])
            joints.update({f"{side}_shoulder": sho, f"{side}_elbow": elb, f"{side}_hand": hand,
                           f"{side}_knee": knee, f"{side}_foot": foot})
        out[f] = [joints[j] for j in JOINTS]
    # keep the lowest foot on the ground in every frame
    lowest = out[:, [JOINTS.index("l_foot"), JOINTS.index("r_foot")], 2].min(axis=1)
    out[:, :, 2] += (GROUND_Z - lowest)[:, None]
    return out


def place(poses, yaw, offset, scale=1.0):
    """Apply a similarity transform: scale, rotate about z, translate."""
    R = _rot_z(yaw)
    return scale * poses @ R.T + np.asarray(offset, dtype=float)


def generate_sequence(action, style: StyleParams, frames, seed, cameras=None, label=None):
    """Animate one performance, place it in the world and project it.

    The subject is put at a seeded random position and heading. Image noise
    (style.noise_sigma, pixels) is drawn from the same seed.
    """
    action = Action(action).value
    if frames < 2:
        raise ValueError("frames must be >= 2")
    rng = np.random.default_rng(seed)
    yaw = rng.uniform(0, 2 * np.pi)
    offset = np.append(rng.uniform(-0.5, 0.5, size=2), 0.0)
    world = place(body_poses(action, style, frames), yaw, offset)
    if action == "walk":
        # centre the walking path on the placement point
        world -= 0.5 * (world[-1].mean(axis=0) - world[0].mean(axis=0)) * [1, 1, 0]
    cameras = tuple(cameras) if cameras is not None else tuple(make_camera_ring(5))
    images = []
    for cam in cameras:
        img = project_points(cam, world)
        if style.noise_sigma > 0:
            img = img + rng.normal(0.0, style.noise_sigma, size=img.shape)
        images.append(img)
    return SyntheticSequence(action, world, tuple(images), cameras, label, style)


def _jitter(params: StyleParams, rng, frac):
    if frac == 0:
        return params
    changes = {}
    for n in JITTERED:
        rel = min(frac * JITTER_SCALE.get(n, 1.0), MAX_RELATIVE_JITTER)
        changes[n] = getattr(params, n) * (1 + rel * rng.uniform(-1, 1))
    changes.update({n: getattr(params, n) + frac * rng.uniform(-1, 1) for n in PHASES})
    return replace(params, **changes)


def make_style_population(bases=None, subjects=6, instances=3, jitter=0.15, seed=0,
                          instance_ratio=0.25):
    """Labelled style parameters: `subjects` per class, `instances` per subject.

    Subject parameters are the class base perturbed by a relative `jitter`;
    each instance adds a further perturbation of `instance_ratio * jitter`.
    Subject ids are consecutive, 1-based, class by class in label order.
    """
    bases = DEFAULT_BASES if bases is None else bases
    if subjects < 1 or instances < 1:
        raise ValueError("subjects and instances must be >= 1")
    if not 0 <= jitter < 1:
        raise ValueError("jitter must be in [0, 1)")
    rng = np.random.default_rng(seed)
    members = []
    sid = 0
    for label in sorted(bases):
        for _ in range(subjects):
            sid += 1
            subject_params = _jitter(bases[label], rng, jitter)
            for inst in range(1, instances + 1):
                p = _jitter(subject_params, rng, instance_ratio * jitter)
                members.append(PopulationMember(sid, inst, Label(label), p))
    return members
