"""Supervised training loop and clip-level evaluation.

Training preprocesses each clip (normalize, then interval-split, so one
clip yields ``interval`` labeled sequences), then runs mini-batch gradient
descent with per-sample backpropagation through time. Batches only mix
sequences of identical length, which keeps the loop free of padding and
masking. The returned parameters come from the epoch with the best
validation accuracy (ties go to the earlier epoch; with no validation
split, the final epoch).

Everything is deterministic under the config seed: the clip split, the
parameter init, per-epoch shuffles and per-sample dropout draws. Epoch e
derives its random stream from (seed, e), so training twice as long never
changes the earlier epochs.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .datasetio import Clip, Dataset
from .errors import EmptyResult, TooFewClips
from .grunet import (
    DEFAULT_DROPOUT,
    DEFAULT_HIDDEN,
    GruNetwork,
    Gradients,
    backward,
    forward,
    init_params,
    param_items,
    softmax_cross_entropy,
    zero_gradients,
)
from .inference import aggregate_video, classify_window, resolve_static_set
from .keypoints import VECTOR_SIZE, SampleSequence
from .metrics import MetricsReport, build_report
from .normalize import normalize_sequence
from .sampler import IntervalConfig, split_by_interval


@dataclass
class TrainConfig:
    epochs: int = 60
    learning_rate: float = 1e-3
    optimizer: str = "adam"  # or "sgd"
    batch_size: int = 16
    interval: IntervalConfig = field(default_factory=IntervalConfig)
    dropout_rates: tuple[float, ...] = DEFAULT_DROPOUT
    hidden_dim: int = DEFAULT_HIDDEN
    seed: int = 0
    fractions: tuple[float, float, float] = (0.7, 0.15, 0.15)
    center: bool = True  # False: scale-only normalization (ablation)
    class_weights: bool = False

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        if len(self.fractions) != 3 or any(f < 0 for f in self.fractions):
            raise ValueError("fractions must be three non-negative numbers")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1, got {sum(self.fractions)}")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_accuracy: float | None


def history_to_jsonl(history: list[EpochStats]) -> str:
    """One JSON record per epoch, ready for plotting tools."""
    lines = []
    for rec in history:
        lines.append(
            json.dumps(
                {
                    "epoch": rec.epoch,
                    "train_loss": rec.train_loss,
                    "train_accuracy": rec.train_accuracy,
                    "val_accuracy": rec.val_accuracy,
                }
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# dataset splitting

def _largest_remainder(n: int, fractions) -> list[int]:
    """Integer allocation of n items; remainder ties go to earlier parts."""
    quotas = [n * f for f in fractions]
    counts = [int(q) for q in quotas]
    remainders = [q - c for q, c in zip(quotas, counts)]
    order = sorted(range(len(fractions)), key=lambda i: (-remainders[i], i))
    for i in range(n - sum(counts)):
        counts[order[i % len(order)]] += 1
    return counts


def split_dataset(dataset: Dataset, fractions, seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministic, class-stratified clip-level split.

    Splitting whole clips keeps every interval-sampled sequence from one
    clip inside a single partition, so no clip leaks across partitions.
    """
    fractions = tuple(fractions)
    nonzero = sum(1 for f in fractions if f > 0)
    rng = np.random.default_rng(seed)

    by_class: dict[int, list[Clip]] = {}
    for clip in dataset.clips:
        by_class.setdefault(clip.label.index, []).append(clip)

    parts: tuple[list[Clip], ...] = ([], [], [])
    for index in sorted(by_class):
        clips = by_class[index]
        if len(clips) < nonzero:
            raise TooFewClips(
                f"class {clips[0].label.name!r} has {len(clips)} clips but the split "
                f"needs at least {nonzero}"
            )
        order = rng.permutation(len(clips))
        shuffled = [clips[i] for i in order]
        counts = _largest_remainder(len(clips), fractions)
        pos = 0
        for p, count in enumerate(counts):
            parts[p].extend(shuffled[pos : pos + count])
            pos += count

    return tuple(Dataset(label_map=list(dataset.label_map), clips=part) for part in parts)


# ---------------------------------------------------------------------------
# preprocessing

def clip_sequences(clip: Clip, interval_cfg: IntervalConfig, center: bool = True) -> list[SampleSequence]:
    """Normalize a clip and split it into labeled training sequences."""
    vectors = normalize_sequence(clip.frames, center=center)
    try:
        return split_by_interval(vectors, interval_cfg, label=clip.label)
    except EmptyResult as exc:
        raise EmptyResult(f"clip {clip.clip_id!r}: {exc}") from None


def _dataset_sequences(dataset: Dataset, interval_cfg: IntervalConfig, center: bool) -> list[SampleSequence]:
    seqs = []
    for clip in dataset.clips:
        seqs.extend(clip_sequences(clip, interval_cfg, center=center))
    return seqs


# ---------------------------------------------------------------------------
# optimizers

class Adam:
    """Adam with bias correction; state keyed by parameter name."""

    def __init__(self, net: GruNetwork, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p) for name, p in param_items(net)}
        self.v = {name: np.zeros_like(p) for name, p in param_items(net)}

    def step(self, net: GruNetwork, grads: Gradients) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for (name, p), (_, g) in zip(param_items(net), param_items(grads)):
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


class Sgd:
    def __init__(self, net: GruNetwork, lr: float):
        self.lr = lr

    def step(self, net: GruNetwork, grads: Gradients) -> None:
        for (_, p), (_, g) in zip(param_items(net), param_items(grads)):
            p -= self.lr * g


# ---------------------------------------------------------------------------
# training

def _make_batches(seqs: list[SampleSequence], batch_size: int, rng) -> list[list[int]]:
    """Shuffled batches of sequence indices, each batch one exact length."""
    by_len: dict[int, list[int]] = {}
    for i, seq in enumerate(seqs):
        by_len.setdefault(len(seq), []).append(i)
    batches = []
    for length in sorted(by_len):
        indices = by_len[length]
        order = rng.permutation(len(indices))
        shuffled = [indices[i] for i in order]
        for start in range(0, len(shuffled), batch_size):
            batches.append(shuffled[start : start + batch_size])
    batch_order = rng.permutation(len(batches))
    return [batches[i] for i in batch_order]


def _sequence_accuracy(net: GruNetwork, seqs: list[SampleSequence]) -> float | None:
    if not seqs:
        return None
    correct = 0
    for seq in seqs:
        logits, _ = forward(net, seq, mode="eval")
        if int(np.argmax(logits)) == seq.label.index:
            correct += 1
    return correct / len(seqs)


def train(dataset: Dataset, cfg: TrainConfig) -> tuple[GruNetwork, list[EpochStats]]:
    """Train a classifier on the dataset's training partition.

    Splits the dataset (clip-level, stratified, seeded by cfg.seed), then
    optimizes cross-entropy for cfg.epochs epochs. Gradients accumulate in
    sample-index order within a batch and are averaged before each
    optimizer step.
    """
    if len(dataset.label_map) < 2:
        raise ValueError("training needs at least 2 classes in the label map")
    if not dataset.clips:
        raise ValueError("training needs a non-empty dataset")

    train_ds, val_ds, _ = split_dataset(dataset, cfg.fractions, cfg.seed)
    train_seqs = _dataset_sequences(train_ds, cfg.interval, cfg.center)
    val_seqs = _dataset_sequences(val_ds, cfg.interval, cfg.center) if val_ds.clips else []

    net = init_params(
        num_classes=len(dataset.label_map),
        input_dim=VECTOR_SIZE,
        hidden_dim=cfg.hidden_dim,
        dropout_rates=cfg.dropout_rates,
        seed=cfg.seed,
    )
    if cfg.epochs == 0:
        return net, []

    weights = np.ones(len(dataset.label_map))
    if cfg.class_weights:
        counts = np.zeros(len(dataset.label_map))
        for seq in train_seqs:
            counts[seq.label.index] += 1
        present = counts > 0
        weights[present] = len(train_seqs) / (present.sum() * counts[present])

    optimizer = Adam(net, cfg.learning_rate) if cfg.optimizer == "adam" else Sgd(net, cfg.learning_rate)

    history: list[EpochStats] = []
    best: tuple[float, GruNetwork] | None = None
    for epoch in range(cfg.epochs):
        rng = np.random.default_rng((cfg.seed, epoch))
        loss_sum = 0.0
        correct = 0
        for batch in _make_batches(train_seqs, cfg.batch_size, rng):
            grads_sum = zero_gradients(net)
            for i in batch:
                seq = train_seqs[i]
                dropout_seed = int(rng.integers(0, 2**63 - 1))
                logits, cache = forward(net, seq, mode="train", rng_seed=dropout_seed)
                loss, dlogits = softmax_cross_entropy(logits, seq.label)
                w = weights[seq.label.index]
                loss_sum += w * loss
                correct += int(np.argmax(logits)) == seq.label.index
                grads = backward(net, cache, w * dlogits)
                for (_, acc), (_, g) in zip(param_items(grads_sum), param_items(grads)):
                    acc += g
            for _, acc in param_items(grads_sum):
                acc /= len(batch)
            optimizer.step(net, grads_sum)

        val_acc = _sequence_accuracy(net, val_seqs)
        history.append(
            EpochStats(
                epoch=epoch,
                train_loss=loss_sum / len(train_seqs),
                train_accuracy=correct / len(train_seqs),
                val_accuracy=val_acc,
            )
        )
        if val_acc is not None and (best is None or val_acc > best[0]):
            best = (val_acc, copy.deepcopy(net))

    if best is not None:
        net = best[1]
    return net, history


def evaluate(
    net: GruNetwork,
    dataset: Dataset,
    interval_cfg: IntervalConfig,
    center: bool = True,
    static=None,
    aggregate_mode: str = "longest_run",
) -> MetricsReport:
    """Clip-level metrics: classify each clip's sequences, then aggregate.

    Each clip is normalized, interval-split, classified window by window,
    and reduced to one label by the video aggregation rule; the report
    compares that label against the clip's ground truth.
    """
    if static is None:
        static = resolve_static_set(dataset.label_map)
    pairs = []
    for clip in dataset.clips:
        seqs = clip_sequences(clip, interval_cfg, center=center)
        preds = [
            classify_window(
                net,
                seq,
                dataset.label_map,
                window_end_index=j + interval_cfg.interval * (len(seq) - 1),
            )
            for j, seq in enumerate(seqs)
        ]
        video = aggregate_video(preds, static, mode=aggregate_mode)
        pairs.append((clip.label, video))
    return build_report(pairs, dataset.label_map)
