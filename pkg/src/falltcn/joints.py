"""Joint indexing for the 25-joint Kinect v2 skeleton and the reduced subsets."""

from dataclasses import dataclass

from .errors import ConfigError

NUM_JOINTS = 25

# Kinect v2 / NTU ordering.
SPINE_BASE = 0
SPINE_MID = 1
NECK = 2
HEAD = 3
SHOULDER_LEFT = 4
ELBOW_LEFT = 5
WRIST_LEFT = 6
HAND_LEFT = 7
SHOULDER_RIGHT = 8
ELBOW_RIGHT = 9
WRIST_RIGHT = 10
HAND_RIGHT = 11
HIP_LEFT = 12
KNEE_LEFT = 13
ANKLE_LEFT = 14
FOOT_LEFT = 15
HIP_RIGHT = 16
KNEE_RIGHT = 17
ANKLE_RIGHT = 18
FOOT_RIGHT = 19
SPINE_SHOULDER = 20
HANDTIP_LEFT = 21
THUMB_LEFT = 22
HANDTIP_RIGHT = 23
THUMB_RIGHT = 24

JOINT_NAMES = [
    "spine_base", "spine_mid", "neck", "head",
    "shoulder_left", "elbow_left", "wrist_left", "hand_left",
    "shoulder_right", "elbow_right", "wrist_right", "hand_right",
    "hip_left", "knee_left", "ankle_left", "foot_left",
    "hip_right", "knee_right", "ankle_right", "foot_right",
    "spine_shoulder",
    "handtip_left", "thumb_left", "handtip_right", "thumb_right",
]


@dataclass(frozen=True)
class JointSet:
    """A named subset of the 25-joint skeleton, indices sorted ascending."""

    name: str
    indices: tuple

    def __post_init__(self):
        idx = self.indices
        if len(set(idx)) != len(idx):
            raise ConfigError(f"joint set {self.name}: duplicate indices")
        if any(i < 0 or i >= NUM_JOINTS for i in idx):
            raise ConfigError(f"joint set {self.name}: index out of range [0, {NUM_JOINTS})")
        if tuple(sorted(idx)) != tuple(idx):
            raise ConfigError(f"joint set {self.name}: indices must be sorted")

    @property
    def size(self):
        return len(self.indices)


FULL25 = JointSet("Full25", tuple(range(NUM_JOINTS)))

# Drops hands, hand tips, thumbs, feet and the mid spine.
MID16 = JointSet(
    "Mid16",
    tuple(
        i for i in range(NUM_JOINTS)
        if i not in (HAND_LEFT, HAND_RIGHT, HANDTIP_LEFT, HANDTIP_RIGHT,
                     THUMB_LEFT, THUMB_RIGHT, FOOT_LEFT, FOOT_RIGHT, SPINE_MID)
    ),
)

CORE8 = JointSet(
    "Core8",
    tuple(sorted((SPINE_BASE, NECK, HEAD, SHOULDER_LEFT, SHOULDER_RIGHT,
                  HIP_LEFT, HIP_RIGHT, SPINE_SHOULDER))),
)

JOINT_SETS = {"Full25": FULL25, "Mid16": MID16, "Core8": CORE8}


def joint_set(name):
    try:
        return JOINT_SETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown joint set {name!r}; expected one of {sorted(JOINT_SETS)}"
        ) from None
