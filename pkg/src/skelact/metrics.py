"""Accuracy and confusion-matrix bookkeeping.

Rows index the true label, columns the predicted label.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMatrix, UnknownLabel
from .keypoints import ActionLabel


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (C, C) ints, counts[truth][prediction]
    label_map: list[str]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class MetricsReport:
    confusion: ConfusionMatrix
    accuracy: float
    per_class: list[float | None]


def _index_of(label, label_map) -> int:
    if isinstance(label, ActionLabel):
        label = label.name
    if isinstance(label, str):
        if label not in label_map:
            raise UnknownLabel(f"label {label!r} is not in the label map {label_map}")
        return label_map.index(label)
    index = int(label)
    if not 0 <= index < len(label_map):
        raise UnknownLabel(f"class index {index} out of range for {len(label_map)} classes")
    return index


def confusion(pairs, label_map) -> ConfusionMatrix:
    """Count (truth, prediction) pairs into a C x C matrix.

    Pairs may use ActionLabel, name, or index interchangeably.
    """
    label_map = list(label_map)
    counts = np.zeros((len(label_map), len(label_map)), dtype=np.int64)
    for truth, pred in pairs:
        counts[_index_of(truth, label_map)][_index_of(pred, label_map)] += 1
    return ConfusionMatrix(counts=counts, label_map=label_map)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise EmptyMatrix("accuracy is undefined for an empty confusion matrix")
    return float(np.trace(cm.counts)) / cm.total


def per_class_accuracy(cm: ConfusionMatrix) -> list[float | None]:
    """Diagonal over row sum per class; None where a class has no truth rows."""
    out: list[float | None] = []
    for i in range(len(cm.label_map)):
        row = int(cm.counts[i].sum())
        out.append(float(cm.counts[i][i]) / row if row > 0 else None)
    return out


def build_report(pairs, label_map) -> MetricsReport:
    cm = confusion(pairs, label_map)
    return MetricsReport(confusion=cm, accuracy=accuracy(cm), per_class=per_class_accuracy(cm))


def report_to_dict(report: MetricsReport) -> dict:
    """JSON-ready form of a report."""
    return {
        "accuracy": report.accuracy,
        "per_class_accuracy": {
            name: acc for name, acc in zip(report.confusion.label_map, report.per_class)
        },
        "label_map": list(report.confusion.label_map),
        "confusion": report.confusion.counts.tolist(),
    }


def confusion_to_csv(cm: ConfusionMatrix) -> str:
    """CSV rendering: header row of predicted labels, one row per true label."""
    buf = io.StringIO()
    buf.write("label," + ",".join(cm.label_map) + "\n")
    for name, row in zip(cm.label_map, cm.counts):
        buf.write(name + "," + ",".join(str(int(v)) for v in row) + "\n")
    return buf.getvalue()
