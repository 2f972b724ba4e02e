"""Core data model: per-frame keypoints, labels, and labeled sequences.

Frames carry exactly 18 joints in the fixed COCO-18 order below (the
OpenPose BODY_18 convention), so any COCO-trained pose estimator can feed
the pipeline. Joints the estimator missed are stored with ``valid=False``
and the (0, 0) sentinel coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnknownLabel

NUM_KEYPOINTS = 18
VECTOR_SIZE = 2 * NUM_KEYPOINTS

# Index order is load-bearing: dataset files, flattened vectors and the
# synthetic generator all rely on it.
COCO18_NAMES = (
    "nose",            # 0
    "neck",            # 1
    "right_shoulder",  # 2
    "right_elbow",     # 3
    "right_wrist",     # 4
    "left_shoulder",   # 5
    "left_elbow",      # 6
    "left_wrist",      # 7
    "right_hip",       # 8
    "right_knee",      # 9
    "right_ankle",     # 10
    "left_hip",        # 11
    "left_knee",       # 12
    "left_ankle",      # 13
    "right_eye",       # 14
    "left_eye",        # 15
    "right_ear",       # 16
    "left_ear",        # 17
)

COCO18_INDEX = {name: i for i, name in enumerate(COCO18_NAMES)}

# Default 7-class action label map; dataset files may carry their own.
DEFAULT_LABEL_MAP = ("wave", "walk", "stand", "fall", "kick", "sit", "others")


@dataclass(frozen=True)
class Keypoint:
    """One joint in pixel coordinates with a detection flag."""

    x: float
    y: float
    valid: bool = True

    def __post_init__(self):
        if not self.valid and (self.x != 0.0 or self.y != 0.0):
            raise ValueError(
                f"invalid keypoint must use the (0, 0) sentinel, got ({self.x}, {self.y})"
            )

    @classmethod
    def missing(cls) -> "Keypoint":
        return cls(0.0, 0.0, valid=False)


@dataclass(frozen=True)
class PoseFrame:
    """One frame's 18 keypoints plus the source image dimensions."""

    keypoints: tuple[Keypoint, ...]
    width: float
    height: float

    def __post_init__(self):
        if len(self.keypoints) != NUM_KEYPOINTS:
            raise ValueError(f"expected {NUM_KEYPOINTS} keypoints, got {len(self.keypoints)}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image dimensions must be positive, got {self.width}x{self.height}")
        for i, kp in enumerate(self.keypoints):
            if kp.valid and not (0 <= kp.x <= self.width and 0 <= kp.y <= self.height):
                raise ValueError(
                    f"keypoint {i} ({COCO18_NAMES[i]}) at ({kp.x}, {kp.y}) lies outside "
                    f"the {self.width}x{self.height} image"
                )


@dataclass(frozen=True)
class ActionLabel:
    """A class index paired with its name from the active label map."""

    index: int
    name: str


@dataclass
class SampleSequence:
    """An ordered run of flattened keypoint vectors, optionally labeled.

    ``vectors`` is a (T, 36) float64 array, one row per frame in source
    order. Unlabeled sequences (``label=None``) are inference input.
    """

    vectors: np.ndarray
    label: ActionLabel | None = None

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[1] != VECTOR_SIZE:
            raise ValueError(f"expected a (T, {VECTOR_SIZE}) array, got {self.vectors.shape}")
        if self.vectors.shape[0] < 1:
            raise ValueError("a sequence needs at least one frame")

    def __len__(self) -> int:
        return self.vectors.shape[0]


def count_valid(frame: PoseFrame) -> int:
    """Number of keypoints the pose estimator actually detected."""
    return sum(1 for kp in frame.keypoints if kp.valid)


def flatten(frame: PoseFrame) -> np.ndarray:
    """Flatten a frame to the 36-entry [x0, y0, x1, y1, ...] vector.

    Invalid keypoints contribute their (0, 0) sentinel.
    """
    vec = np.zeros(VECTOR_SIZE, dtype=np.float64)
    for i, kp in enumerate(frame.keypoints):
        vec[2 * i] = kp.x
        vec[2 * i + 1] = kp.y
    return vec


def label_from_name(label_map, name: str) -> ActionLabel:
    """Resolve a class name against a label map."""
    try:
        return ActionLabel(index=list(label_map).index(name), name=name)
    except ValueError:
        raise UnknownLabel(f"label {name!r} is not in the label map {list(label_map)}") from None


def label_from_index(label_map, index: int) -> ActionLabel:
    """Resolve a class index against a label map."""
    label_map = list(label_map)
    if not 0 <= index < len(label_map):
        raise UnknownLabel(f"class index {index} out of range for {len(label_map)} classes")
    return ActionLabel(index=index, name=label_map[index])
