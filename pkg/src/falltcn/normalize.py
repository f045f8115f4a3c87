"""Pose canonicalization: root-centering, Frobenius scaling and the
two-bone rotation that sends the hip-spine bone to +z and the shoulder
line to +x.

All math here is f64; callers downcast afterwards if they want f32 tensors.
"""

from dataclasses import dataclass

import numpy as np

from . import joints
from .errors import DegeneratePoseError, UnderdeterminedRotationError

_EPS = 1e-12


@dataclass(frozen=True)
class NormalizationConfig:
    """Skeleton indices driving normalize_3d. Defaults follow the 25-joint
    Kinect ordering; the shoulder bone is taken right minus left."""

    root: int = joints.SPINE_BASE
    hip: int = joints.SPINE_BASE
    spine: int = joints.SPINE_SHOULDER
    left_shoulder: int = joints.SHOULDER_LEFT
    right_shoulder: int = joints.SHOULDER_RIGHT


DEFAULT_CONFIG = NormalizationConfig()


def center_to_root(pose, root_index):
    """Translate so the root joint sits at the origin. Works for (J, 2) and (J, 3)."""
    pose = np.asarray(pose, dtype=np.float64)
    return pose - pose[root_index]


def frobenius_scale(pose):
    """Scale to unit Frobenius norm; returns (scaled pose, original norm)."""
    pose = np.asarray(pose, dtype=np.float64)
    norm = float(np.sqrt((pose ** 2).sum()))
    if norm < _EPS:
        raise DegeneratePoseError("all-zero pose cannot be scaled")
    return pose / norm, norm


def _rodrigues(axis, angle):
    x, y, z = axis
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def align_rotation(pose, hip_idx=None, spine_idx=None,
                   lshoulder_idx=None, rshoulder_idx=None, config=None):
    """Rotation mapping the hip->spine bone to +z, then the left->right
    shoulder direction (projected to xy) to +x. Returns a proper 3x3 rotation."""
    cfg = config or DEFAULT_CONFIG
    hip_idx = cfg.hip if hip_idx is None else hip_idx
    spine_idx = cfg.spine if spine_idx is None else spine_idx
    lshoulder_idx = cfg.left_shoulder if lshoulder_idx is None else lshoulder_idx
    rshoulder_idx = cfg.right_shoulder if rshoulder_idx is None else rshoulder_idx

    pose = np.asarray(pose, dtype=np.float64)
    bone = pose[spine_idx] - pose[hip_idx]
    blen = np.linalg.norm(bone)
    if blen < _EPS:
        raise DegeneratePoseError("zero-length spine bone")
    v = bone / blen

    z = np.array([0.0, 0.0, 1.0])
    axis = np.cross(v, z)
    s = np.linalg.norm(axis)
    c = float(v @ z)
    if s < _EPS:
        # parallel or antiparallel to z; antiparallel flips about x
        r1 = np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    else:
        r1 = _rodrigues(axis / s, np.arctan2(s, c))

    w = r1 @ (pose[rshoulder_idx] - pose[lshoulder_idx])
    if np.hypot(w[0], w[1]) < 1e-9:
        raise UnderdeterminedRotationError(
            "shoulder bone collinear with the spine axis"
        )
    phi = -np.arctan2(w[1], w[0])
    r2 = np.array([
        [np.cos(phi), -np.sin(phi), 0.0],
        [np.sin(phi), np.cos(phi), 0.0],
        [0.0, 0.0, 1.0],
    ])
    return r2 @ r1


def normalize_2d(pose, root_index=None, config=None):
    """Center to root then Frobenius-scale a (J, 2) pose."""
    cfg = config or DEFAULT_CONFIG
    root = cfg.root if root_index is None else root_index
    centered = center_to_root(pose, root)
    scaled, _ = frobenius_scale(centered)
    return scaled


def normalize_3d(pose, config=None):
    """Full canonicalization of a (J, 3) pose: center, scale, rotate.

    Invariant under rotation, translation and positive uniform scaling of
    the input; idempotent."""
    cfg = config or DEFAULT_CONFIG
    centered = center_to_root(pose, cfg.root)
    scaled, _ = frobenius_scale(centered)
    rot = align_rotation(scaled, config=cfg)
    return scaled @ rot.T
