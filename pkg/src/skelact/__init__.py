"""Skeleton-sequence human action recognition.

Pipeline: 18-keypoint frames are normalized (centroid centering plus
scaling by image size), interval-sampled into labeled sequences, and fed
to a from-scratch 3-layer GRU classifier; streaming inference runs a
bounded window over a frame feed and aggregates window predictions into a
video-level action.
"""

from .errors import (
    DimensionMismatch,
    EmptyMatrix,
    EmptyResult,
    ParseError,
    SchemaError,
    SkelactError,
    StaleCache,
    TooFewClips,
    UnknownLabel,
    VersionError,
    ZeroValidKeypoints,
)
from .keypoints import (
    COCO18_NAMES,
    DEFAULT_LABEL_MAP,
    ActionLabel,
    Keypoint,
    PoseFrame,
    SampleSequence,
    count_valid,
    flatten,
    label_from_index,
    label_from_name,
)
from .normalize import Centroid, NormalizedFrame, centroid, normalize_frame, normalize_sequence
from .sampler import IntervalConfig, StreamWindow, split_by_interval
from .grunet import (
    GruLayerParams,
    GruNetwork,
    Gradients,
    backward,
    forward,
    gru_cell_forward,
    init_params,
    softmax,
    softmax_cross_entropy,
)
from .metrics import ConfusionMatrix, MetricsReport, accuracy, confusion, per_class_accuracy
from .datasetio import (
    Clip,
    Dataset,
    ModelBundle,
    generate_synthetic,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
)
from .trainer import TrainConfig, EpochStats, evaluate, split_dataset, train
from .inference import (
    StreamRunner,
    WindowPrediction,
    aggregate_video,
    classify_window,
    resolve_static_set,
)

__version__ = "0.1.0"
