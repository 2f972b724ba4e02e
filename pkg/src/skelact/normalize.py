"""Two-step keypoint normalization: centroid centering, then scaling.

Each valid joint (x, y) becomes ((x - cx) / width, (y - cy) / height),
where (cx, cy) is the mean of the valid joints. Centering removes the
person's absolute position in the image; dividing by the image dimensions
puts every coordinate strictly inside (-1, 1). Missing joints keep their
(0, 0) sentinel in the output, and the validity mask on the frame remains
the source of truth for which zeros are real.

``center=False`` gives the scale-only variant used as an ablation: divide
by the image dimensions but keep absolute positions.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ZeroValidKeypoints
from .keypoints import VECTOR_SIZE, PoseFrame, count_valid


class Centroid(NamedTuple):
    x_bar: float
    y_bar: float


class NormalizedFrame(NamedTuple):
    """A flattened normalized frame plus a degenerate marker.

    ``degenerate`` is True when the frame had no valid keypoints; the
    vector is then all zeros so streaming consumers never stall.
    """

    vector: np.ndarray
    degenerate: bool


def centroid(frame: PoseFrame) -> Centroid:
    """Mean position of the valid keypoints.

    The sum runs over valid joints only; (0, 0) sentinels do not drag the
    mean toward the origin.
    """
    n_valid = count_valid(frame)
    if n_valid == 0:
        raise ZeroValidKeypoints("cannot take the centroid of a frame with no valid keypoints")
    sx = sum(kp.x for kp in frame.keypoints if kp.valid)
    sy = sum(kp.y for kp in frame.keypoints if kp.valid)
    return Centroid(sx / n_valid, sy / n_valid)


def normalize_frame(frame: PoseFrame, center: bool = True) -> NormalizedFrame:
    """Normalize one frame into a 36-entry vector.

    Valid joints map to ((x - cx) / w, (y - cy) / h); invalid joints emit
    (0, 0). A frame with no valid joints yields the all-zero vector and is
    flagged degenerate rather than rejected.
    """
    vec = np.zeros(VECTOR_SIZE, dtype=np.float64)
    if count_valid(frame) == 0:
        return NormalizedFrame(vec, degenerate=True)
    if center:
        cx, cy = centroid(frame)
    else:
        cx, cy = 0.0, 0.0
    for i, kp in enumerate(frame.keypoints):
        if kp.valid:
            vec[2 * i] = (kp.x - cx) / frame.width
            vec[2 * i + 1] = (kp.y - cy) / frame.height
    return NormalizedFrame(vec, degenerate=False)


def normalize_sequence(frames: list[PoseFrame], center: bool = True) -> list[np.ndarray]:
    """Normalize frames one by one, preserving order."""
    if not frames:
        raise ValueError("cannot normalize an empty frame sequence")
    return [normalize_frame(f, center=center).vector for f in frames]
