"""
Argument parsing. Every option defaults to None on the command line so the
loader can tell explicit flags apart from TOML, environment and built-in values.
"""
import argparse
from typing import Any, Dict

from config.config import (
    BATCH_SIZE,
    DEFAULT_CHANNELS,
    DEFAULT_INPUT_SIZE,
    DEFAULT_LOG_LEVEL,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_WINDOW,
    FLANK_BONUS,
    LEARNING_RATE,
    LIMB_REACH_WIDTHS,
    MAX_EPOCHS,
    MOMENTUM,
    N_SAMPLES,
    N_TRACES,
    PEAK_BAND_FRACTION,
    SCENES_PER_ELEMENT,
    TRACE_SPACING,
    TRAIN_FRACTION,
    WEIGHT_DECAY,
)
from utils.helpers import format_size

COMMANDS = ["synth", "dataset", "train", "eval", "sweep", "detect", "gradcheck", "replay"]

COMMON_DEFAULTS = {
    "config": None,
    "out": DEFAULT_OUTPUT_DIR,
    "seed": 0,
    "deterministic": True,
    "workers": 1,
    "log_level": DEFAULT_LOG_LEVEL,
}

WINDOW_DEFAULTS = {
    "window": format_size(DEFAULT_WINDOW),
    "allow_custom_window": False,
    "stride": None,
    "normalize": "scale",
    "denoise": False,
    "peak_band": PEAK_BAND_FRACTION,
    "reach_widths": LIMB_REACH_WIDTHS,
}

TRAIN_DEFAULTS = {
    "net": "tranet",
    "input": None,
    "epochs": MAX_EPOCHS,
    "lr": LEARNING_RATE,
    "momentum": MOMENTUM,
    "weight_decay": WEIGHT_DECAY,
    "batch_size": BATCH_SIZE,
    "lr_decay": None,
    "dtype": "float64",
    "train_fraction": TRAIN_FRACTION,
}

COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "synth": {
        "element": "all",
        "count": SCENES_PER_ELEMENT,
        "noise": None,
        "direct_wave": True,
        "n_traces": N_TRACES,
        "n_samples": N_SAMPLES,
        "trace_spacing": TRACE_SPACING,
    },
    "dataset": {
        **WINDOW_DEFAULTS,
        "scans": None,
        "element": "all",
        "input": format_size(DEFAULT_INPUT_SIZE),
        "channels": DEFAULT_CHANNELS,
        "augment": False,
        "other_ratio": None,
    },
    "train": {**TRAIN_DEFAULTS, "dataset": None},
    "eval": {"checkpoint": None, "dataset": None, "batch_size": BATCH_SIZE},
    "sweep": {
        **{key: value for key, value in TRAIN_DEFAULTS.items() if key != "net"},
        "allow_custom_window": False,
        "scans": None,
        "nets": "tranet",
        "windows": "all",
        "seeds": "1,2,3",
        "elements": False,
        "corpus": "mixed",
        "channels": DEFAULT_CHANNELS,
        "augment": False,
        "other_ratio": None,
    },
    "detect": {
        **WINDOW_DEFAULTS,
        "scans": None,
        "checkpoint": None,
        "oracle": False,
        "tolerance": None,
        "flank_bonus": FLANK_BONUS,
        "batch_size": BATCH_SIZE,
    },
    "gradcheck": {"configs": 20},
    "replay": {"manifest": None},
}


def defaults_for(command: str) -> Dict[str, Any]:
    return {**COMMON_DEFAULTS, **COMMAND_DEFAULTS[command]}


def _flag(parser, *names, **kwargs):
    kwargs.setdefault("default", None)
    parser.add_argument(*names, **kwargs)


def _common(parser):
    _flag(parser, "--config", help="TOML config file ([common] plus one table per subcommand)")
    _flag(parser, "--out", help="Output directory (created if missing)")
    _flag(parser, "--seed", type=int, help="Root seed for every random stream")
    _flag(parser, "--deterministic", action=argparse.BooleanOptionalAction,
          help="Single-threaded, fixed-order reductions (default on)")
    _flag(parser, "--workers", type=int, help="Worker threads when not deterministic")
    _flag(parser, "--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")


def _window(parser, stride: bool = True):
    _flag(parser, "--window", help="Window size WxH (preset: 120x30, 150x50, 200x80, 250x100)")
    _flag(parser, "--allow-custom-window", dest="allow_custom_window", action=argparse.BooleanOptionalAction)
    if stride:
        _flag(parser, "--stride", help="Stride WxH (default: a fraction of the window)")
    _flag(parser, "--normalize", choices=["scale", "minmax"])
    _flag(parser, "--denoise", action=argparse.BooleanOptionalAction, help="3x3 Gaussian blur of each scan")
    _flag(parser, "--peak-band", dest="peak_band", type=float, help="Central band fraction for Peak")
    _flag(parser, "--reach-widths", dest="reach_widths", type=float, help="Left/Right reach in window widths")


def _training(parser):
    _flag(parser, "--input", help="Network input size WxH")
    _flag(parser, "--epochs", type=int)
    _flag(parser, "--lr", type=float, help="Learning rate")
    _flag(parser, "--momentum", type=float)
    _flag(parser, "--weight-decay", dest="weight_decay", type=float)
    _flag(parser, "--batch-size", dest="batch_size", type=int)
    _flag(parser, "--lr-decay", dest="lr_decay", help="FACTOR,EVERY_N_EPOCHS")
    _flag(parser, "--dtype", choices=["float32", "float64"])
    _flag(parser, "--train-fraction", dest="train_fraction", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rebarscan", description="Rebar detection in GPR B-scans")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="Render synthetic B-scans with ground-truth manifests")
    _common(synth)
    _flag(synth, "--element", choices=["all", "column", "wall", "slab"])
    _flag(synth, "--count", type=int, help="Scenes per element")
    _flag(synth, "--noise", type=float, help="Noise sigma as a fraction of peak amplitude (default: per element)")
    _flag(synth, "--direct-wave", dest="direct_wave", action=argparse.BooleanOptionalAction)
    _flag(synth, "--n-traces", dest="n_traces", type=int)
    _flag(synth, "--n-samples", dest="n_samples", type=int)
    _flag(synth, "--trace-spacing", dest="trace_spacing", type=float, help="Metres between traces")

    dataset = sub.add_parser("dataset", help="Split scans into labelled windows")
    _common(dataset)
    _window(dataset)
    _flag(dataset, "--scans", help="Directory of PGM scans and JSON manifests")
    _flag(dataset, "--element", choices=["all", "column", "wall", "slab"])
    _flag(dataset, "--input", help="Resized window size WxH")
    _flag(dataset, "--channels", type=int, choices=[1, 3])
    _flag(dataset, "--augment", action=argparse.BooleanOptionalAction, help="Append horizontally flipped copies")
    _flag(dataset, "--other-ratio", dest="other_ratio", type=float,
          help="Keep at most this many Other windows per window of the largest other class")

    train = sub.add_parser("train", help="Train a network on a dataset directory")
    _common(train)
    _training(train)
    _flag(train, "--net", help="tranet, tranet-trad, alexnet or alexnet-sN")
    _flag(train, "--dataset", help="Dataset directory")

    evaluate = sub.add_parser("eval", help="Evaluate a checkpoint on a dataset directory")
    _common(evaluate)
    _flag(evaluate, "--checkpoint", help="RBSC checkpoint file")
    _flag(evaluate, "--dataset", help="Dataset directory")
    _flag(evaluate, "--batch-size", dest="batch_size", type=int)

    sweep = sub.add_parser("sweep", help="Network x window x corpus x seed experiment")
    _common(sweep)
    _training(sweep)
    _flag(sweep, "--scans", help="Directory of PGM scans and JSON manifests")
    _flag(sweep, "--nets", help="Comma-separated network names")
    _flag(sweep, "--windows", help="'all' or comma-separated WxH sizes")
    _flag(sweep, "--allow-custom-window", dest="allow_custom_window", action=argparse.BooleanOptionalAction)
    _flag(sweep, "--seeds", help="Comma-separated seeds")
    _flag(sweep, "--elements", action=argparse.BooleanOptionalAction,
          help="One corpus per element kind and an elements.csv comparison")
    _flag(sweep, "--corpus", choices=["mixed", "column", "wall", "slab"])
    _flag(sweep, "--channels", type=int, choices=[1, 3])
    _flag(sweep, "--augment", action=argparse.BooleanOptionalAction)
    _flag(sweep, "--other-ratio", dest="other_ratio", type=float,
          help="Subsample Other windows of every dataset (see dataset --other-ratio)")

    detect = sub.add_parser("detect", help="Locate rebar apexes in scans")
    _common(detect)
    _window(detect)
    _flag(detect, "--scans", help="Directory of PGM scans and JSON manifests")
    _flag(detect, "--checkpoint", help="RBSC checkpoint file")
    _flag(detect, "--oracle", action=argparse.BooleanOptionalAction,
          help="Use ground-truth window labels instead of a network")
    _flag(detect, "--tolerance", type=float, help="Match tolerance in pixels (default: half the window width)")
    _flag(detect, "--flank-bonus", dest="flank_bonus", type=float)
    _flag(detect, "--batch-size", dest="batch_size", type=int)

    gradcheck = sub.add_parser("gradcheck", help="Finite-difference check of every layer")
    _common(gradcheck)
    _flag(gradcheck, "--configs", type=int, help="Random configurations per layer kind")

    replay = sub.add_parser("replay", help="Re-run a subcommand from its run_manifest.json")
    _flag(replay, "manifest", help="Path to run_manifest.json")
    _flag(replay, "--out", help="Write the replay somewhere else")
    return parser
