"""Skeleton sequences: Kinect ".skeleton" text parsing, filtering, joint
subsetting, fixed-length padding, synthetic data generation and the binary
sequence cache.
"""

import math
import re
import struct
from dataclasses import dataclass, replace

import numpy as np

from . import joints as J
from .errors import (
    DataError,
    SequenceLengthError,
    SkeletonFormatError,
    SkeletonParseError,
)

FALL_ACTION_ID = 43
CAMERA_ANGLES = (-45, 0, 45)

# Camera id (from the SsssCcccPpppRrrrAaaa filename convention) to horizontal
# angle in degrees. Overridable where filenames are interpreted.
DEFAULT_CAMERA_ANGLE_MAP = {1: 0, 2: 45, 3: -45}


@dataclass
class FramePose:
    """One frame: (J, 3) camera-space joints in meters, optional (J, 2) pixel joints."""

    joints3d: np.ndarray
    joints2d: np.ndarray | None = None


@dataclass
class SkeletonSequence:
    frames: list
    action_label: int = 0
    camera_angle: int = 0
    subject_id: int = 0
    exclusion: str | None = None
    name: str = ""

    def __len__(self):
        return len(self.frames)

    @property
    def num_joints(self):
        return self.frames[0].joints3d.shape[0] if self.frames else 0


@dataclass
class FixedSequence:
    """Tensorized fixed-length sequence: data (3J, T) f32, row 3*j+axis."""

    data: np.ndarray
    label: int

    @property
    def num_joints(self):
        return self.data.shape[0] // 3

    @property
    def length(self):
        return self.data.shape[1]


_FILENAME_RE = re.compile(r"S(\d{3})C(\d{3})P(\d{3})R(\d{3})A(\d{3})")


def parse_ntu_filename(name, camera_angle_map=None):
    """Extract (camera_angle, subject_id, action_label) from an NTU-style name."""
    m = _FILENAME_RE.search(name)
    if not m:
        raise DataError(f"cannot read metadata from filename {name!r}")
    cam_map = camera_angle_map or DEFAULT_CAMERA_ANGLE_MAP
    camera = int(m.group(2))
    if camera not in cam_map:
        raise DataError(f"{name!r}: camera id {camera} not in {sorted(cam_map)}")
    return cam_map[camera], int(m.group(3)), int(m.group(5))


class _LineReader:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self, what):
        if self.pos >= len(self.lines):
            raise SkeletonParseError(f"unexpected end of file, expected {what}",
                                     line=self.pos + 1)
        self.pos += 1
        return self.lines[self.pos - 1].strip()

    def next_int(self, what):
        raw = self.next(what)
        try:
            return int(raw)
        except ValueError:
            raise SkeletonParseError(f"expected integer {what}, got {raw!r}",
                                     line=self.pos) from None


def parse_ntu_skeleton(text, action_label=0, camera_angle=0, subject_id=0,
                       name=""):
    """Parse one ".skeleton" file into a SkeletonSequence.

    Frames with zero bodies, or any frame with more than one body, mark the
    sequence for exclusion (``exclusion`` set) while still returning the
    first-body frames that could be read. Malformed content raises.
    """
    rd = _LineReader(text)
    frame_count = rd.next_int("frame count")
    if frame_count < 1:
        raise SkeletonFormatError(f"frame count must be positive, got {frame_count}")
    frames = []
    exclusion = None
    for fi in range(frame_count):
        body_count = rd.next_int(f"body count of frame {fi}")
        if body_count == 0:
            exclusion = exclusion or "missing_pose"
            continue
        if body_count > 1:
            exclusion = exclusion or "multi_person"
        for bi in range(body_count):
            info = rd.next(f"body info of frame {fi}").split()
            if len(info) != 10:
                raise SkeletonParseError(
                    f"body info line needs 10 fields, got {len(info)}", line=rd.pos)
            joint_count = rd.next_int(f"joint count of frame {fi}")
            if joint_count != J.NUM_JOINTS:
                raise SkeletonFormatError(
                    f"line {rd.pos}: joint count {joint_count} != {J.NUM_JOINTS}")
            p3 = np.empty((J.NUM_JOINTS, 3))
            p2 = np.empty((J.NUM_JOINTS, 2))
            for ji in range(joint_count):
                fields = rd.next(f"joint {ji} of frame {fi}").split()
                if len(fields) != 12:
                    raise SkeletonParseError(
                        f"joint line needs 12 fields, got {len(fields)}", line=rd.pos)
                try:
                    vals = [float(v) for v in fields[:7]]
                except ValueError:
                    raise SkeletonParseError("non-numeric joint field", line=rd.pos) from None
                if not all(math.isfinite(v) for v in vals):
                    raise SkeletonParseError("non-finite joint coordinate", line=rd.pos)
                p3[ji] = vals[0:3]
                p2[ji] = vals[5:7]
            if bi == 0:
                frames.append(FramePose(p3, p2))
    if not frames:
        raise SkeletonFormatError("no usable frames in file")
    return SkeletonSequence(frames, action_label=action_label,
                            camera_angle=camera_angle, subject_id=subject_id,
                            exclusion=exclusion, name=name)


def serialize_ntu_skeleton(seq):
    """Render a single-body sequence back into the ".skeleton" text layout."""
    out = [str(len(seq.frames))]
    for frame in seq.frames:
        out.append("1")
        out.append(f"{seq.subject_id} 0 0 0 0 0 0 0 0 2")
        out.append(str(frame.joints3d.shape[0]))
        for ji in range(frame.joints3d.shape[0]):
            x, y, z = frame.joints3d[ji]
            if frame.joints2d is not None:
                cu, cv = frame.joints2d[ji]
            else:
                cu = cv = 0.0
            out.append(
                f"{x:.7f} {y:.7f} {z:.7f} 0 0 {cu:.7f} {cv:.7f} 0 0 0 0 2"
            )
    return "\n".join(out) + "\n"


def has_origin_joint(seq, tol=0.0):
    """True if any joint sits exactly at the origin (the missing-joint sentinel)."""
    for frame in seq.frames:
        norms = np.abs(frame.joints3d).sum(axis=1)
        if np.any(norms <= tol):
            return True
    return False


def filter_usable(sequences):
    """Split into (usable, excluded) per the dataset-cleaning conventions."""
    usable, excluded = [], []
    for seq in sequences:
        if seq.exclusion is not None:
            excluded.append(seq)
        elif not seq.frames:
            excluded.append(replace(seq, exclusion="empty"))
        elif has_origin_joint(seq):
            excluded.append(replace(seq, exclusion="missing_joint"))
        else:
            usable.append(seq)
    return usable, excluded


def select_joints(seq, joint_set):
    """Keep only the joints of ``joint_set``, order preserved."""
    idx = list(joint_set.indices)
    frames = [
        FramePose(
            f.joints3d[idx].copy(),
            f.joints2d[idx].copy() if f.joints2d is not None else None,
        )
        for f in seq.frames
    ]
    return replace(seq, frames=frames)


def pad_to_length(seq, length=300, fall_action=FALL_ACTION_ID):
    """Tensorize to exactly ``length`` frames, replicating the final frame.

    Label is 1 iff the action is the falling class."""
    n = len(seq.frames)
    if n == 0:
        raise SequenceLengthError("cannot pad an empty sequence")
    if n > length:
        raise SequenceLengthError(
            f"sequence has {n} frames, longer than the {length}-frame budget; "
            "refusing to truncate")
    nj = seq.num_joints
    data = np.empty((3 * nj, length), dtype=np.float32)
    for t in range(n):
        data[:, t] = seq.frames[t].joints3d.reshape(-1)
    if n < length:
        data[:, n:] = data[:, n - 1][:, None]
    return FixedSequence(data=data, label=int(seq.action_label == fall_action))


def split_by_camera(dataset):
    """Train on the 0 and +45 degree cameras, test on -45."""
    train, test = [], []
    for seq in dataset:
        if seq.camera_angle not in CAMERA_ANGLES:
            raise DataError(
                f"camera angle {seq.camera_angle} not in {CAMERA_ANGLES}")
        (test if seq.camera_angle == -45 else train).append(seq)
    return train, test


# ---------------------------------------------------------------------------
# Synthetic sequences

def _template_skeleton():
    """Standing 25-joint skeleton, z up, meters, roughly anatomical."""
    t = np.zeros((25, 3))
    t[J.SPINE_BASE] = (0.00, 0.00, 1.00)
    t[J.SPINE_MID] = (0.00, 0.00, 1.22)
    t[J.NECK] = (0.00, 0.00, 1.50)
    t[J.HEAD] = (0.00, 0.02, 1.67)
    t[J.SPINE_SHOULDER] = (0.00, 0.00, 1.42)
    for side, sgn in ((("LEFT"), -1.0), (("RIGHT"), 1.0)):
        t[getattr(J, f"SHOULDER_{side}")] = (sgn * 0.19, 0.00, 1.43)
        t[getattr(J, f"ELBOW_{side}")] = (sgn * 0.24, 0.01, 1.17)
        t[getattr(J, f"WRIST_{side}")] = (sgn * 0.26, 0.02, 0.93)
        t[getattr(J, f"HAND_{side}")] = (sgn * 0.27, 0.03, 0.85)
        t[getattr(J, f"HANDTIP_{side}")] = (sgn * 0.275, 0.035, 0.80)
        t[getattr(J, f"THUMB_{side}")] = (sgn * 0.24, 0.06, 0.88)
        t[getattr(J, f"HIP_{side}")] = (sgn * 0.10, 0.00, 0.96)
        t[getattr(J, f"KNEE_{side}")] = (sgn * 0.11, 0.01, 0.52)
        t[getattr(J, f"ANKLE_{side}")] = (sgn * 0.12, 0.00, 0.09)
        t[getattr(J, f"FOOT_{side}")] = (sgn * 0.13, 0.11, 0.04)
    return t


def _project_2d(p3):
    # fixed pinhole, person a few meters in front, depth axis = y
    depth = p3[:, 1] + 3.0
    u = 1000.0 * p3[:, 0] / depth + 960.0
    v = 540.0 - 1000.0 * (p3[:, 2] - 1.0) / depth
    return np.stack([u, v], axis=1)


def synth_generate(rng_seed, n_sequences, fall_fraction, length_range=(40, 120),
                   non_fall_action=8):
    """Deterministic synthetic dataset: falls animate standing-to-lying,
    non-falls oscillate around standing. Labels come from the action id."""
    if not 0.0 <= fall_fraction <= 1.0:
        raise DataError(f"fall_fraction must be in [0, 1], got {fall_fraction}")
    rng = np.random.default_rng(rng_seed)
    template = _template_skeleton()
    n_falls = round(n_sequences * fall_fraction)
    sequences = []
    for si in range(n_sequences):
        is_fall = si < n_falls
        n_frames = int(rng.integers(length_range[0], length_range[1] + 1))
        phase = rng.uniform(0, 2 * np.pi)
        offset = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3), 0.0])
        frames = []
        pivot = np.array([0.0, 0.0, 0.06])
        for t in range(n_frames):
            pose = template.copy()
            sway = 0.02 * np.sin(0.35 * t + phase)
            pose[:, 0] += sway
            # arm/leg swing, opposite phases
            swing = 0.05 * np.sin(0.5 * t + phase)
            for jj in (J.ELBOW_LEFT, J.WRIST_LEFT, J.HAND_LEFT, J.KNEE_RIGHT,
                       J.ANKLE_RIGHT):
                pose[jj, 1] += swing
            for jj in (J.ELBOW_RIGHT, J.WRIST_RIGHT, J.HAND_RIGHT, J.KNEE_LEFT,
                       J.ANKLE_LEFT):
                pose[jj, 1] -= swing
            if is_fall:
                # tip forward about a horizontal axis through the feet,
                # easing from upright to lying
                frac = min(1.0, max(0.0, (t / max(n_frames - 1, 1) - 0.2) / 0.6))
                angle = (np.pi / 2) * (3 * frac ** 2 - 2 * frac ** 3)
                c, s = np.cos(angle), np.sin(angle)
                rot = np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
                pose = (pose - pivot) @ rot.T + pivot
            pose += offset
            pose += rng.normal(0.0, 0.004, size=pose.shape)
            frames.append(FramePose(pose, _project_2d(pose)))
        sequences.append(SkeletonSequence(
            frames=frames,
            action_label=FALL_ACTION_ID if is_fall else non_fall_action,
            camera_angle=CAMERA_ANGLES[si % 3],
            subject_id=1 + int(rng.integers(0, 40)),
            name=f"synthetic_{si:04d}",
        ))
    return sequences


# ---------------------------------------------------------------------------
# Binary sequence cache

CACHE_MAGIC = b"FTCN"
CACHE_VERSION = 1


def write_cache(path, records, num_joints, length):
    """records: iterable of FixedSequence, all (3*num_joints, length)."""
    records = list(records)
    with open(path, "wb") as f:
        f.write(CACHE_MAGIC)
        f.write(struct.pack("<HHHI", CACHE_VERSION, num_joints, length, len(records)))
        for rec in records:
            if rec.data.shape != (3 * num_joints, length):
                raise DataError(
                    f"cache record shape {rec.data.shape} != {(3 * num_joints, length)}")
            f.write(struct.pack("<B", rec.label))
            f.write(np.ascontiguousarray(rec.data, dtype="<f4").tobytes())


def read_cache(path):
    """Returns (num_joints, length, data (N, 3J, T) f32, labels (N,) int)."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != CACHE_MAGIC:
        raise DataError(f"{path}: bad cache magic {raw[:4]!r}")
    version, nj, length, count = struct.unpack_from("<HHHI", raw, 4)
    if version != CACHE_VERSION:
        raise DataError(f"{path}: unsupported cache version {version}")
    off = 14
    rec_bytes = 1 + 4 * 3 * nj * length
    if len(raw) != off + count * rec_bytes:
        raise DataError(f"{path}: cache size mismatch")
    data = np.empty((count, 3 * nj, length), dtype=np.float32)
    labels = np.empty(count, dtype=np.int64)
    for i in range(count):
        labels[i] = raw[off]
        off += 1
        data[i] = np.frombuffer(raw, dtype="<f4", count=3 * nj * length,
                                offset=off).reshape(3 * nj, length)
        off += 4 * 3 * nj * length
    return nj, length, data, labels
