"""Command-line entry point.

Commands: synth, train, eval, infer, stream, ablate. Every option resolves
as flag > environment variable SKELACT_<FLAG> > built-in default, and every
command is deterministic given its flags. Data goes to stdout, errors to
stderr with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

from . import datasetio, trainer
from .errors import SkelactError
from .inference import StreamRunner, aggregate_video, classify_window, resolve_static_set
from .metrics import confusion_to_csv, report_to_dict
from .sampler import IntervalConfig
from .trainer import TrainConfig

_TRUE_STRINGS = ("1", "true", "yes", "on")
_FALSE_STRINGS = ("0", "false", "no", "off")

DEFAULTS = {
    "classes": "wave,fall,walk,stand",
    "clips_per_class": 50,
    "frames": 40,
    "noise": 2.0,
    "synth_seed": 7,
    "epochs": 60,
    "interval": 4,
    "lr": 1e-3,
    "batch": 16,
    "seed": 0,
    "capacity": 50,
    "stream_interval": 10,
    "emit_stride": 1,
}


def _bool_env(text: str) -> bool:
    low = text.strip().lower()
    if low in _TRUE_STRINGS:
        return True
    if low in _FALSE_STRINGS:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


class _Resolver:
    """Applies the flag > SKELACT_<FLAG> env > default precedence."""

    def __init__(self, parser: argparse.ArgumentParser, args: argparse.Namespace):
        self.parser = parser
        self.args = args

    def get(self, name: str, default=None, cast=str, required: bool = False):
        value = getattr(self.args, name)
        if value is None:
            env = os.environ.get("SKELACT_" + name.upper())
            if env is not None:
                try:
                    value = _bool_env(env) if cast is bool else cast(env)
                except ValueError as exc:
                    self.parser.error(f"SKELACT_{name.upper()}: {exc}")
            else:
                value = default
        if required and value is None:
            flag = "--" + name.replace("_", "-")
            self.parser.error(f"missing {flag} (or SKELACT_{name.upper()})")
        return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skelact",
        description="Skeleton-sequence action recognition: synthesize data, train, evaluate, stream.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a deterministic synthetic dataset")
    p.add_argument("--out", help="output dataset path (required)")
    p.add_argument("--classes", help=f"comma-separated class names [default {DEFAULTS['classes']}]")
    p.add_argument("--clips-per-class", type=int, dest="clips_per_class",
                   help=f"clips per class [default {DEFAULTS['clips_per_class']}]")
    p.add_argument("--frames", type=int, help=f"frames per clip [default {DEFAULTS['frames']}]")
    p.add_argument("--noise", type=float, help=f"coordinate jitter sigma [default {DEFAULTS['noise']}]")
    p.add_argument("--seed", type=int, help=f"generator seed [default {DEFAULTS['synth_seed']}]")

    p = sub.add_parser("train", help="train a classifier and write a model file")
    p.add_argument("--data", help="dataset path (required)")
    p.add_argument("--out-model", dest="out_model", help="model output path (required)")
    p.add_argument("--epochs", type=int, help=f"training epochs [default {DEFAULTS['epochs']}]")
    p.add_argument("--interval", type=int, help=f"sampling interval [default {DEFAULTS['interval']}]")
    p.add_argument("--lr", type=float, help=f"learning rate [default {DEFAULTS['lr']}]")
    p.add_argument("--batch", type=int, help=f"batch size [default {DEFAULTS['batch']}]")
    p.add_argument("--seed", type=int, help=f"training seed [default {DEFAULTS['seed']}]")
    p.add_argument("--no-norm", dest="no_norm", action="store_true", default=None,
                   help="scale by image size only; skip centroid centering")
    p.add_argument("--dense-baseline", dest="dense_baseline", action="store_true", default=None,
                   help="dense sampling baseline: forces interval 1 and --no-norm")

    p = sub.add_parser("eval", help="evaluate a model on a dataset, clip by clip")
    p.add_argument("--data", help="dataset path (required)")
    p.add_argument("--model", help="model path (required)")
    p.add_argument("--interval", type=int, help=f"sampling interval [default {DEFAULTS['interval']}]")
    p.add_argument("--out-report", dest="out_report",
                   help="report base path; writes <base>.json and <base>.csv (required)")

    p = sub.add_parser("infer", help="print the aggregated action label for one clip")
    p.add_argument("--model", help="model path (required)")
    p.add_argument("--clip", help="path to a dataset file holding exactly one clip (required)")

    p = sub.add_parser("stream", help="replay a clip frame by frame, printing JSON records")
    p.add_argument("--model", help="model path (required)")
    p.add_argument("--data", help="dataset path; the first clip is streamed (required)")
    p.add_argument("--capacity", type=int, help=f"queue capacity [default {DEFAULTS['capacity']}]")
    p.add_argument("--interval", type=int,
                   help=f"stride inside the queue [default {DEFAULTS['stream_interval']}]")
    p.add_argument("--emit-stride", type=int, dest="emit_stride",
                   help=f"pushes between emissions once full [default {DEFAULTS['emit_stride']}]")

    p = sub.add_parser("ablate", help="train and score the three sampling/normalization variants")
    p.add_argument("--data", help="dataset path (required)")
    p.add_argument("--seed", type=int, help=f"shared seed for all three runs [default {DEFAULTS['seed']}]")

    return parser


def _history_path(model_path: str) -> Path:
    return Path(model_path).with_suffix(".history.jsonl")


def _cmd_synth(opt: _Resolver) -> int:
    out = opt.get("out", required=True)
    classes = [c.strip() for c in opt.get("classes", DEFAULTS["classes"]).split(",") if c.strip()]
    dataset = datasetio.generate_synthetic(
        classes=classes,
        clips_per_class=opt.get("clips_per_class", DEFAULTS["clips_per_class"], int),
        frames_per_clip=opt.get("frames", DEFAULTS["frames"], int),
        noise_sigma=opt.get("noise", DEFAULTS["noise"], float),
        seed=opt.get("seed", DEFAULTS["synth_seed"], int),
    )
    datasetio.save_dataset(dataset, out)
    print(f"wrote {len(dataset.clips)} clips ({len(classes)} classes) to {out}")
    return 0


def _train_config(opt: _Resolver) -> TrainConfig:
    interval = opt.get("interval", None, int)
    dense = bool(opt.get("dense_baseline", False, bool))
    no_norm = bool(opt.get("no_norm", False, bool))
    if dense:
        if interval is not None and interval != 1:
            opt.parser.error("--dense-baseline forces interval 1; drop --interval or set it to 1")
        interval = 1
        no_norm = True
    elif interval is None:
        interval = DEFAULTS["interval"]
    return TrainConfig(
        epochs=opt.get("epochs", DEFAULTS["epochs"], int),
        learning_rate=opt.get("lr", DEFAULTS["lr"], float),
        batch_size=opt.get("batch", DEFAULTS["batch"], int),
        interval=IntervalConfig(interval=interval),
        seed=opt.get("seed", DEFAULTS["seed"], int),
        center=not no_norm,
    )


def _cmd_train(opt: _Resolver) -> int:
    data = opt.get("data", required=True)
    out_model = opt.get("out_model", required=True)
    cfg = _train_config(opt)
    dataset = datasetio.load_dataset(data)
    net, history = trainer.train(dataset, cfg)
    normalization = datasetio.NORM_CENTER_SCALE if cfg.center else datasetio.NORM_SCALE_ONLY
    datasetio.save_model(
        datasetio.ModelBundle(net=net, label_map=dataset.label_map, normalization=normalization),
        out_model,
    )
    history_path = _history_path(out_model)
    with open(history_path, "w", encoding="utf-8") as fh:
        fh.write(trainer.history_to_jsonl(history))
    if history:
        best = max(
            (rec.val_accuracy for rec in history if rec.val_accuracy is not None), default=None
        )
        final = history[-1]
        line = f"trained {cfg.epochs} epochs: final train_acc {final.train_accuracy:.3f}"
        if best is not None:
            line += f", best val_acc {best:.3f}"
        print(line)
    else:
        print("trained 0 epochs: wrote initial parameters")
    print(f"model: {out_model}\nhistory: {history_path}")
    return 0


def _load_bundle(opt: _Resolver, flag: str = "model") -> datasetio.ModelBundle:
    return datasetio.load_model(opt.get(flag, required=True))


def _check_label_map(bundle: datasetio.ModelBundle, dataset: datasetio.Dataset) -> None:
    if list(dataset.label_map) != list(bundle.label_map):
        raise SkelactError(
            f"dataset label map {dataset.label_map} does not match model label map "
            f"{bundle.label_map}"
        )


def _cmd_eval(opt: _Resolver) -> int:
    dataset = datasetio.load_dataset(opt.get("data", required=True))
    bundle = _load_bundle(opt)
    _check_label_map(bundle, dataset)
    report = trainer.evaluate(
        bundle.net,
        dataset,
        IntervalConfig(interval=opt.get("interval", DEFAULTS["interval"], int)),
        center=bundle.normalization == datasetio.NORM_CENTER_SCALE,
    )
    base = re.sub(r"\.(json|csv)$", "", opt.get("out_report", required=True))
    json_path, csv_path = base + ".json", base + ".csv"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
        fh.write("\n")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(confusion_to_csv(report.confusion))
    print(f"accuracy {report.accuracy:.4f} over {report.confusion.total} clips")
    print(f"report: {json_path}, {csv_path}")
    return 0


def _cmd_infer(opt: _Resolver) -> int:
    bundle = _load_bundle(opt)
    dataset = datasetio.load_dataset(opt.get("clip", required=True))
    if len(dataset.clips) != 1:
        raise SkelactError(
            f"infer expects a file with exactly one clip, got {len(dataset.clips)}"
        )
    clip = dataset.clips[0]
    center = bundle.normalization == datasetio.NORM_CENTER_SCALE
    seqs = trainer.clip_sequences(clip, IntervalConfig(interval=DEFAULTS["interval"]), center=center)
    preds = [classify_window(bundle.net, seq, bundle.label_map) for seq in seqs]
    label = aggregate_video(preds, resolve_static_set(bundle.label_map))
    print(label.name)
    return 0


def _cmd_stream(opt: _Resolver) -> int:
    bundle = _load_bundle(opt)
    dataset = datasetio.load_dataset(opt.get("data", required=True))
    if not dataset.clips:
        raise SkelactError("dataset has no clips to stream")
    clip = dataset.clips[0]
    runner = StreamRunner(
        bundle.net,
        bundle.label_map,
        capacity=opt.get("capacity", DEFAULTS["capacity"], int),
        interval=opt.get("interval", DEFAULTS["stream_interval"], int),
        emit_stride=opt.get("emit_stride", DEFAULTS["emit_stride"], int),
        center=bundle.normalization == datasetio.NORM_CENTER_SCALE,
    )
    predictions = []
    for frame in clip.frames:
        pred = runner.step(frame)
        if pred is not None:
            predictions.append(pred)
            print(
                json.dumps(
                    {
                        "frame_index": pred.window_end_index,
                        "label": pred.label.name,
                        "probabilities": pred.probabilities.tolist(),
                    }
                )
            )
    if predictions:
        video = aggregate_video(predictions, resolve_static_set(bundle.label_map))
        print(json.dumps({"video_label": video.name}))
    else:
        print(json.dumps({"video_label": None}))
    return 0


ABLATE_CONFIGS = (
    ("dense-baseline", 1, False),
    ("sampling-only", None, False),
    ("sampling+norm", None, True),
)


def _cmd_ablate(opt: _Resolver) -> int:
    dataset = datasetio.load_dataset(opt.get("data", required=True))
    seed = opt.get("seed", DEFAULTS["seed"], int)
    _, _, test_ds = trainer.split_dataset(dataset, (0.7, 0.15, 0.15), seed)
    print(f"{'config':<16} {'test_accuracy':>13}")
    for name, interval, center in ABLATE_CONFIGS:
        k = interval if interval is not None else DEFAULTS["interval"]
        cfg = TrainConfig(seed=seed, interval=IntervalConfig(interval=k), center=center)
        net, _ = trainer.train(dataset, cfg)
        report = trainer.evaluate(net, test_ds, cfg.interval, center=center)
        print(f"{name:<16} {report.accuracy:>13.4f}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "infer": _cmd_infer,
    "stream": _cmd_stream,
    "ablate": _cmd_ablate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    opt = _Resolver(parser, args)
    try:
        return _COMMANDS[args.command](opt)
    except (SkelactError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
