"""Dataset and model files, plus the deterministic synthetic dataset generator.

Dataset file (JSON, format_version 1):

    {
      "format_version": 1,
      "label_map": ["wave", "fall", ...],          # ordered class names
      "clips": [
        {
          "clip_id": "wave_000",
          "label_name": "wave",                     # must be in label_map
          "width": 640, "height": 480,              # image size, > 0
          "frames": [ [[x, y, valid], ... 18 per frame ], ... ]
        }, ...
      ]
    }

Each frame holds exactly 18 [x, y, valid] triples in the fixed COCO-18
joint order. The valid flag may be omitted ([x, y]), in which case a
(0, 0) pair is read as a missing joint. Clips need at least one frame.

Model file (JSON, format_version 1):

    {
      "format_version": 1,
      "dims": {"input": 36, "hidden": 64, "classes": 4, "layers": 3},
      "label_map": [...],                           # classes == len(label_map)
      "dropout_rates": [r0, r1, r2, r3],
      "normalization": "center_scale" | "scale_only",
      "params": { "layers.0.W_r": [flat floats], ..., "head_W": [...], "head_b": [...] }
    }

Parameters appear in the fixed order: per layer W_r, W_z, W_h, U_r, U_z,
U_h, b_r, b_z, b_h, then head_W, head_b; matrices are flattened row-major.
Floats serialize at full precision (repr round-trip), so save/load is
bit-exact and re-saving a loaded file reproduces it byte for byte.

``normalization`` records the preprocessing the model was trained with so
evaluation and streaming reproduce it without extra flags.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, SchemaError, VersionError
from .grunet import NUM_LAYERS, GruLayerParams, GruNetwork, param_items
from .keypoints import (
    NUM_KEYPOINTS,
    ActionLabel,
    Keypoint,
    PoseFrame,
    label_from_name,
)

DATASET_VERSION = 1
MODEL_VERSION = 1

NORM_CENTER_SCALE = "center_scale"
NORM_SCALE_ONLY = "scale_only"

SYNTH_CLASSES = ("wave", "fall", "walk", "stand")


@dataclass
class Clip:
    clip_id: str
    label: ActionLabel
    frames: list[PoseFrame]

    @property
    def width(self) -> float:
        return self.frames[0].width

    @property
    def height(self) -> float:
        return self.frames[0].height


@dataclass
class Dataset:
    label_map: list[str]
    clips: list[Clip]


@dataclass
class ModelBundle:
    """A network together with the metadata needed to run it."""

    net: GruNetwork
    label_map: list[str]
    normalization: str = NORM_CENTER_SCALE


# ---------------------------------------------------------------------------
# dataset files

def _read_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top level must be a JSON object")
    return doc


def _check_version(doc: dict, expected: int, path) -> None:
    version = doc.get("format_version")
    if version != expected:
        raise VersionError(f"{path}: unsupported format_version {version!r}, expected {expected}")


def load_dataset(path) -> Dataset:
    """Read and validate a dataset file."""
    doc = _read_json(path)
    _check_version(doc, DATASET_VERSION, path)

    label_map = doc.get("label_map")
    if not isinstance(label_map, list) or not label_map or len(set(label_map)) != len(label_map):
        raise SchemaError(f"{path}: label_map must be a non-empty list of unique names")
    clips_doc = doc.get("clips")
    if not isinstance(clips_doc, list):
        raise SchemaError(f"{path}: clips must be a list")

    clips = []
    for c, clip_doc in enumerate(clips_doc):
        clip_id = clip_doc.get("clip_id", f"<clip {c}>")
        label_name = clip_doc.get("label_name")
        if label_name not in label_map:
            raise SchemaError(f"{path}: clip {clip_id}: label {label_name!r} not in label_map")
        width = clip_doc.get("width")
        height = clip_doc.get("height")
        if not isinstance(width, (int, float)) or not isinstance(height, (int, float)) \
                or width <= 0 or height <= 0:
            raise SchemaError(f"{path}: clip {clip_id}: width/height must be positive numbers")
        frames_doc = clip_doc.get("frames")
        if not isinstance(frames_doc, list) or not frames_doc:
            raise SchemaError(f"{path}: clip {clip_id}: needs at least one frame")

        frames = []
        for f, triples in enumerate(frames_doc):
            if not isinstance(triples, list) or len(triples) != NUM_KEYPOINTS:
                n = len(triples) if isinstance(triples, list) else "non-list"
                raise SchemaError(
                    f"{path}: clip {clip_id} frame {f}: expected {NUM_KEYPOINTS} "
                    f"keypoint triples, got {n}"
                )
            keypoints = []
            for k, triple in enumerate(triples):
                if not isinstance(triple, list) or len(triple) not in (2, 3):
                    raise SchemaError(
                        f"{path}: clip {clip_id} frame {f} keypoint {k}: "
                        f"expected [x, y] or [x, y, valid]"
                    )
                x, y = float(triple[0]), float(triple[1])
                if len(triple) == 3:
                    valid = bool(triple[2])
                else:
                    valid = not (x == 0.0 and y == 0.0)
                if valid:
                    keypoints.append(Keypoint(x, y, valid=True))
                else:
                    keypoints.append(Keypoint.missing())
            try:
                frames.append(PoseFrame(tuple(keypoints), float(width), float(height)))
            except ValueError as exc:
                raise SchemaError(f"{path}: clip {clip_id} frame {f}: {exc}") from None
        clips.append(Clip(clip_id=str(clip_id), label=label_from_name(label_map, label_name), frames=frames))

    return Dataset(label_map=list(label_map), clips=clips)


def save_dataset(dataset: Dataset, path) -> None:
    """Write a dataset file in canonical form (one clip per line)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write('{\n"format_version": %d,\n' % DATASET_VERSION)
        fh.write('"label_map": %s,\n' % json.dumps(dataset.label_map))
        fh.write('"clips": [\n')
        for c, clip in enumerate(dataset.clips):
            frames = [
                [[kp.x, kp.y, kp.valid] for kp in frame.keypoints]
                for frame in clip.frames
            ]
            clip_doc = {
                "clip_id": clip.clip_id,
                "label_name": clip.label.name,
                "width": clip.width,
                "height": clip.height,
                "frames": frames,
            }
            tail = "," if c + 1 < len(dataset.clips) else ""
            fh.write(json.dumps(clip_doc, separators=(",", ":")) + tail + "\n")
        fh.write("]\n}\n")


# ---------------------------------------------------------------------------
# model files

def _expected_shapes(input_dim: int, hidden: int, classes: int) -> dict[str, tuple]:
    shapes = {}
    in_dim = input_dim
    for l in range(NUM_LAYERS):
        for gate in ("r", "z", "h"):
            shapes[f"layers.{l}.W_{gate}"] = (hidden, in_dim)
            shapes[f"layers.{l}.U_{gate}"] = (hidden, hidden)
            shapes[f"layers.{l}.b_{gate}"] = (hidden,)
        in_dim = hidden
    shapes["head_W"] = (classes, hidden)
    shapes["head_b"] = (classes,)
    return shapes


def save_model(bundle: ModelBundle, path) -> None:
    """Write a model file in canonical form (one tensor per line)."""
    net = bundle.net
    with open(path, "w", encoding="utf-8") as fh:
        fh.write('{\n"format_version": %d,\n' % MODEL_VERSION)
        fh.write(
            '"dims": {"input": %d, "hidden": %d, "classes": %d, "layers": %d},\n'
            % (net.input_dim, net.hidden_dim, net.num_classes, NUM_LAYERS)
        )
        fh.write('"label_map": %s,\n' % json.dumps(list(bundle.label_map)))
        fh.write('"dropout_rates": %s,\n' % json.dumps(list(net.dropout_rates)))
        fh.write('"normalization": %s,\n' % json.dumps(bundle.normalization))
        fh.write('"params": {\n')
        items = param_items(net)
        for i, (name, arr) in enumerate(items):
            tail = "," if i + 1 < len(items) else ""
            fh.write('"%s": %s%s\n' % (name, json.dumps(arr.ravel().tolist()), tail))
        fh.write("}\n}\n")


def load_model(path) -> ModelBundle:
    """Read and validate a model file; the round trip is bit-exact."""
    doc = _read_json(path)
    _check_version(doc, MODEL_VERSION, path)

    dims = doc.get("dims")
    if not isinstance(dims, dict):
        raise SchemaError(f"{path}: missing dims object")
    try:
        input_dim = int(dims["input"])
        hidden = int(dims["hidden"])
        classes = int(dims["classes"])
        layer_count = int(dims["layers"])
    except (KeyError, TypeError, ValueError):
        raise SchemaError(f"{path}: dims must carry integer input/hidden/classes/layers") from None
    if layer_count != NUM_LAYERS:
        raise SchemaError(f"{path}: expected {NUM_LAYERS} layers, file declares {layer_count}")
    if min(input_dim, hidden, classes) < 1:
        raise SchemaError(f"{path}: dims must be positive")

    label_map = doc.get("label_map")
    if not isinstance(label_map, list) or len(label_map) != classes:
        raise SchemaError(f"{path}: label_map must list exactly {classes} class names")
    dropout_rates = doc.get("dropout_rates")
    if not isinstance(dropout_rates, list) or len(dropout_rates) != 4:
        raise SchemaError(f"{path}: dropout_rates must list 4 rates")
    normalization = doc.get("normalization")
    if normalization not in (NORM_CENTER_SCALE, NORM_SCALE_ONLY):
        raise SchemaError(f"{path}: normalization must be {NORM_CENTER_SCALE!r} or {NORM_SCALE_ONLY!r}")

    params_doc = doc.get("params")
    if not isinstance(params_doc, dict):
        raise SchemaError(f"{path}: missing params object")
    shapes = _expected_shapes(input_dim, hidden, classes)
    tensors = {}
    for name, shape in shapes.items():
        flat = params_doc.get(name)
        want = int(np.prod(shape))
        if not isinstance(flat, list) or len(flat) != want:
            got = len(flat) if isinstance(flat, list) else "missing"
            raise SchemaError(f"{path}: params[{name!r}]: expected {want} values, got {got}")
        tensors[name] = np.array(flat, dtype=np.float64).reshape(shape)

    layers = []
    for l in range(NUM_LAYERS):
        layers.append(
            GruLayerParams(
                **{f: tensors[f"layers.{l}.{f}"] for f in
                   ("W_r", "W_z", "W_h", "U_r", "U_z", "U_h", "b_r", "b_z", "b_h")}
            )
        )
    net = GruNetwork(
        layers=layers,
        head_W=tensors["head_W"],
        head_b=tensors["head_b"],
        dropout_rates=tuple(float(r) for r in dropout_rates),
    )
    return ModelBundle(net=net, label_map=[str(n) for n in label_map], normalization=str(normalization))


# ---------------------------------------------------------------------------
# synthetic skeleton motion

# Canonical standing skeleton on a 640x480 canvas, COCO-18 order, y down.
_BASE_SKELETON = np.array(
    [
        [320.0, 140.0],  # nose
        [320.0, 172.0],  # neck
        [296.0, 176.0],  # right_shoulder
        [288.0, 216.0],  # right_elbow
        [284.0, 252.0],  # right_wrist
        [344.0, 176.0],  # left_shoulder
        [352.0, 216.0],  # left_elbow
        [356.0, 252.0],  # left_wrist
        [306.0, 262.0],  # right_hip
        [302.0, 322.0],  # right_knee
        [300.0, 378.0],  # right_ankle
        [334.0, 262.0],  # left_hip
        [338.0, 322.0],  # left_knee
        [340.0, 378.0],  # left_ankle
        [312.0, 132.0],  # right_eye
        [328.0, 132.0],  # left_eye
        [304.0, 140.0],  # right_ear
        [336.0, 140.0],  # left_ear
    ]
)

_L_WRIST, _R_WRIST = 7, 4
_L_KNEE, _R_KNEE = 12, 9
_L_ANKLE, _R_ANKLE = 13, 10


def _wave_clip(T: int, rng) -> np.ndarray:
    """Left wrist raised, its y oscillating sinusoidally (two full cycles)."""
    pts = np.repeat(_BASE_SKELETON[None, :, :], T, axis=0)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    t = np.arange(T)
    pts[:, _L_WRIST, 1] += -60.0 + 40.0 * np.sin(2.0 * math.pi * 2.0 * t / T + phase)
    return pts


def _walk_clip(T: int, rng) -> np.ndarray:
    """Whole skeleton drifts in x while legs and arms swing in anti-phase.

    The stride widens the average stance, so even the time-averaged pose
    differs from standing.
    """
    pts = np.repeat(_BASE_SKELETON[None, :, :], T, axis=0)
    speed = rng.uniform(1.5, 3.5) * rng.choice([-1.0, 1.0])
    phase = rng.uniform(0.0, 2.0 * math.pi)
    t = np.arange(T)
    drift = speed * (t - (T - 1) / 2.0)
    pts[:, :, 0] += drift[:, None]
    swing = np.sin(2.0 * math.pi * 2.0 * t / T + phase)
    pts[:, _L_ANKLE, 0] += 16.0 + 18.0 * swing
    pts[:, _R_ANKLE, 0] -= 16.0 + 18.0 * swing
    pts[:, _L_KNEE, 0] += 8.0 + 9.0 * swing
    pts[:, _R_KNEE, 0] -= 8.0 + 9.0 * swing
    pts[:, _L_WRIST, 0] -= 12.0 * swing
    pts[:, _R_WRIST, 0] += 12.0 * swing
    return pts


def _fall_clip(T: int, rng) -> np.ndarray:
    """Body tips over about the ankles and sinks over the clip.

    The tip-over speed varies per clip but the side is fixed, keeping the
    class unimodal in pose space.
    """
    rate = rng.uniform(0.85, 1.0)
    pivot = (_BASE_SKELETON[_L_ANKLE] + _BASE_SKELETON[_R_ANKLE]) / 2.0
    pts = np.empty((T, NUM_KEYPOINTS, 2))
    for t in range(T):
        p = t / (T - 1) if T > 1 else 0.0
        theta = math.radians(60.0) * rate * p * p  # accelerating tip-over
        c, s = math.cos(theta), math.sin(theta)
        rel = _BASE_SKELETON - pivot
        rotated = np.column_stack([c * rel[:, 0] - s * rel[:, 1], s * rel[:, 0] + c * rel[:, 1]])
        pts[t] = pivot + rotated
        pts[t, :, 1] += 30.0 * p
    return pts


def _stand_clip(T: int, rng) -> np.ndarray:
    return np.repeat(_BASE_SKELETON[None, :, :], T, axis=0)


_MOTIONS = {
    "wave": _wave_clip,
    "walk": _walk_clip,
    "fall": _fall_clip,
    "stand": _stand_clip,
}


def generate_synthetic(
    classes=SYNTH_CLASSES,
    clips_per_class: int = 50,
    frames_per_clip: int = 40,
    noise_sigma: float = 2.0,
    seed: int = 7,
    width: float = 640.0,
    height: float = 480.0,
) -> Dataset:
    """Deterministic synthetic skeleton-motion dataset.

    Every clip gets a random global translation (so pipelines that fail to
    remove absolute position pay for it), Gaussian jitter on every
    coordinate, and per-clip motion randomness (wave phase, walk speed and
    direction, fall side). Coordinates are clipped to the canvas.
    """
    classes = list(classes)
    if not classes:
        raise ValueError("need at least one class")
    for name in classes:
        if name not in _MOTIONS:
            raise ValueError(f"unknown synthetic class {name!r}; choose from {sorted(_MOTIONS)}")
    if clips_per_class < 1 or frames_per_clip < 1:
        raise ValueError("clips_per_class and frames_per_clip must be positive")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")

    rng = np.random.default_rng(seed)
    clips = []
    for name in classes:
        label = label_from_name(classes, name)
        for i in range(clips_per_class):
            tx = rng.uniform(-100.0, 100.0)
            ty = rng.uniform(-50.0, 50.0)
            pts = _MOTIONS[name](frames_per_clip, rng)
            pts = pts + np.array([tx, ty])
            if noise_sigma > 0:
                pts = pts + rng.normal(0.0, noise_sigma, size=pts.shape)
            pts[:, :, 0] = np.clip(pts[:, :, 0], 0.0, width)
            pts[:, :, 1] = np.clip(pts[:, :, 1], 0.0, height)
            frames = [
                PoseFrame(
                    tuple(Keypoint(float(x), float(y)) for x, y in frame_pts),
                    width,
                    height,
                )
                for frame_pts in pts
            ]
            clips.append(Clip(clip_id=f"{name}_{i:03d}", label=label, frames=frames))
    return Dataset(label_map=classes, clips=clips)
