"""Window classification, streaming prediction, and video-level aggregation.

A video's label is decided by dropping windows whose predicted action is
static (standing around tells you nothing about the clip's theme) and
keeping the dynamic action with the longest consecutive run of window
predictions. When every window is static, the most frequent static label
wins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grunet import GruNetwork, forward, softmax
from .keypoints import ActionLabel, PoseFrame, SampleSequence
from .normalize import normalize_frame
from .sampler import StreamWindow

DEFAULT_STATIC_NAMES = ("stand", "sit", "others")

AGGREGATE_MODES = ("longest_run", "total_count", "mean_prob")


@dataclass
class WindowPrediction:
    label: ActionLabel
    probabilities: np.ndarray
    window_end_index: int = -1


def resolve_static_set(label_map, names=None) -> frozenset[str]:
    """Static label names restricted to (and validated against) a label map.

    With ``names=None``, takes the default static names that exist in the
    map. Explicit names must all be in the map.
    """
    label_map = list(label_map)
    if names is None:
        return frozenset(n for n in DEFAULT_STATIC_NAMES if n in label_map)
    names = frozenset(names)
    unknown = names - set(label_map)
    if unknown:
        raise ValueError(f"static labels {sorted(unknown)} are not in the label map {label_map}")
    return names


def classify_window(
    net: GruNetwork, seq: SampleSequence, label_map, window_end_index: int = -1
) -> WindowPrediction:
    """Eval-mode forward plus softmax; argmax breaks ties toward index 0."""
    logits, _ = forward(net, seq, mode="eval")
    probs = softmax(logits)
    index = int(np.argmax(probs))
    return WindowPrediction(
        label=ActionLabel(index=index, name=list(label_map)[index]),
        probabilities=probs,
        window_end_index=window_end_index,
    )


class StreamRunner:
    """Frame-by-frame inference over one feed.

    Each frame is normalized and pushed into the bounded window; once the
    window first fills, a prediction is emitted on that push and then on
    every ``emit_stride``-th push after it. Frames with no valid keypoints
    still enter the window (as zero vectors) so timing stays aligned with
    the feed. ``emit_stride=capacity`` gives drain-and-refill behavior.
    """

    def __init__(
        self,
        net: GruNetwork,
        label_map,
        capacity: int,
        interval: int,
        emit_stride: int = 1,
        center: bool = True,
    ):
        if emit_stride < 1:
            raise ValueError(f"emit_stride must be >= 1, got {emit_stride}")
        self.net = net
        self.label_map = list(label_map)
        self.window = StreamWindow(capacity=capacity, interval=interval)
        self.emit_stride = emit_stride
        self.center = center
        self._pushed = 0

    def step(self, frame: PoseFrame) -> WindowPrediction | None:
        """Consume one frame; returns a prediction when an emission is due."""
        self.window.push(normalize_frame(frame, center=self.center).vector)
        self._pushed += 1
        if self._pushed < self.window.capacity:
            return None
        if (self._pushed - self.window.capacity) % self.emit_stride != 0:
            return None
        return classify_window(
            self.net, self.window.emit(), self.label_map, window_end_index=self._pushed - 1
        )

    def replay(self, frames) -> list[WindowPrediction]:
        """Run a whole clip through ``step`` and gather the emissions."""
        out = []
        for frame in frames:
            pred = self.step(frame)
            if pred is not None:
                out.append(pred)
        return out


def _runs(predictions: list[WindowPrediction]):
    """Consecutive runs of identical labels as (start, length, label)."""
    runs = []
    start = 0
    for i in range(1, len(predictions) + 1):
        if i == len(predictions) or predictions[i].label.index != predictions[start].label.index:
            runs.append((start, i - start, predictions[start].label))
            start = i
    return runs


def aggregate_video(
    predictions: list[WindowPrediction],
    static,
    mode: str = "longest_run",
) -> ActionLabel:
    """Reduce a clip's window predictions to one video-level label.

    ``longest_run`` (default): the dynamic label with the longest
    consecutive run; run-length ties go to the earlier run.
    ``total_count``: the dynamic label with the most windows overall; ties
    go to the label seen earlier.
    ``mean_prob``: among dynamic labels that won at least one window, the
    one with the highest mean probability across all windows.

    With no dynamic window at all, the most frequent static label wins
    (ties toward the smallest class index). The result is always a label
    that actually appears in the predictions.
    """
    if not predictions:
        raise ValueError("cannot aggregate an empty prediction list")
    if mode not in AGGREGATE_MODES:
        raise ValueError(f"mode must be one of {AGGREGATE_MODES}, got {mode!r}")
    static = frozenset(static)

    dynamic = [p for p in predictions if p.label.name not in static]
    if not dynamic:
        by_index: dict[int, tuple[int, ActionLabel]] = {}
        for p in predictions:
            count, _ = by_index.get(p.label.index, (0, p.label))
            by_index[p.label.index] = (count + 1, p.label)
        best_index = max(by_index, key=lambda i: (by_index[i][0], -i))
        return by_index[best_index][1]

    if mode == "longest_run":
        best = None
        for start, length, label in _runs(predictions):
            if label.name in static:
                continue
            if best is None or length > best[0]:
                best = (length, start, label)
        return best[2]

    if mode == "total_count":
        counts: dict[int, list] = {}
        for pos, p in enumerate(dynamic):
            entry = counts.setdefault(p.label.index, [0, pos, p.label])
            entry[0] += 1
        best_entry = max(counts.values(), key=lambda e: (e[0], -e[1]))
        return best_entry[2]

    # mean_prob: candidates are dynamic labels that won at least one window
    mean_probs = np.mean([p.probabilities for p in predictions], axis=0)
    candidates = {p.label.index: p.label for p in dynamic}
    best_index = max(sorted(candidates), key=lambda i: mean_probs[i])
    return candidates[best_index]
