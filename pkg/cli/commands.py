"""
Subcommand handlers. Each takes the fully resolved options namespace, writes
its run manifest before any heavy work and returns an exit code.
"""
import os
import sys
from collections import defaultdict
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from config.config import DEFAULT_LOG_LEVEL, DETECT_STRIDE_FRACTION, ELEMENT_KINDS, STRIDE_FRACTION
from config.loader import load_env, load_toml, resolve_options
from cli.gradcheck import cmd_gradcheck
from cli.manifest import read_run_manifest, replay_options, start_run
from cli.parser import build_parser, defaults_for
from detector.classify import classify_windows, oracle_label_map
from detector.experiments import sweep_window_sizes, element_corpora
from detector.localize import localize_rebar, score_detections
from detector.reports import (
    write_detection_summary,
    write_detections_csv,
    write_element_csv,
    write_run_report,
    write_sweep_csv,
)
from gprsynth.io import list_manifests, load_scan_image, read_manifest, write_bscan
from gprsynth.render import render_bscan
from gprsynth.scene import preset_scene
from netdef.builders import build_network
from netdef.checkpoint import load_checkpoint, save_checkpoint
from trainer.loop import train
from trainer.metrics import evaluate, write_metrics_csv
from trainer.schemas import TrainConfig, make_train_config
from utils.errors import DatasetError, InvalidParameterError, RebarScanError, ShapeMismatchError, error_family
from utils.helpers import derive_seed, format_size, parse_int_list, parse_name_list, parse_size
from utils.logger import configure_logging, log_error, log_info
from utils.validators import validate_inside
from windowing.dataset import build_dataset, default_stride, load_dataset, save_dataset
from windowing.labeling import LabelThresholds
from windowing.presets import get_preset, parse_window_list


# -------------------------------------------------
# OPTION HELPERS
# -------------------------------------------------

def _require(value, flag: str):
    if value is None or value == "":
        raise InvalidParameterError(f"{flag} is required")
    return value


def _size(text: Optional[str], flag: str) -> Optional[Tuple[int, int]]:
    if text is None:
        return None
    try:
        size = parse_size(text)
    except ValueError as e:
        raise InvalidParameterError(f"{flag}: {e}") from e
    if min(size) < 1:
        raise InvalidParameterError(f"{flag}: extents must be >= 1, got {text}")
    return size


def _list_text(value) -> str:
    """TOML may give lists where the command line gives comma-separated text."""
    if isinstance(value, (list, tuple)):
        return ",".join(str(item) for item in value)
    return str(value)


def _lr_decay(text: Optional[str]):
    if not text:
        return None
    parts = [part.strip() for part in _list_text(text).split(",")]
    if len(parts) != 2:
        raise InvalidParameterError(f"--lr-decay must look like FACTOR,EVERY, got {text!r}")
    try:
        return float(parts[0]), int(parts[1])
    except ValueError as e:
        raise InvalidParameterError(f"--lr-decay: {e}") from e


def _train_config(options) -> TrainConfig:
    return make_train_config(
        learning_rate=options.lr,
        momentum=options.momentum,
        weight_decay=options.weight_decay,
        batch_size=options.batch_size,
        max_epochs=options.epochs,
        seed=options.seed,
        lr_decay=_lr_decay(options.lr_decay),
        deterministic=options.deterministic,
        train_fraction=options.train_fraction,
        dtype=options.dtype,
    )


def _thresholds(options) -> LabelThresholds:
    if not 0.0 < options.peak_band <= 1.0:
        raise InvalidParameterError(f"--peak-band must lie in (0, 1], got {options.peak_band}")
    if options.reach_widths <= 0:
        raise InvalidParameterError(f"--reach-widths must be > 0, got {options.reach_widths}")
    return LabelThresholds(options.peak_band, options.reach_widths)


def manifests_by_kind(scans_dir: str) -> Dict[str, List[str]]:
    grouped = defaultdict(list)
    for path in list_manifests(scans_dir):
        grouped[read_manifest(path).element_kind].append(path)
    return dict(grouped)


def _select(grouped: Dict[str, List[str]], element: str) -> List[str]:
    if element in (None, "all", "mixed"):
        return sorted(path for paths in grouped.values() for path in paths)
    return list(grouped.get(element, []))


# -------------------------------------------------
# SUBCOMMANDS
# -------------------------------------------------

def cmd_synth(options) -> int:
    if options.count < 0:
        raise InvalidParameterError(f"--count must be >= 0, got {options.count}")
    kinds = ELEMENT_KINDS if options.element == "all" else [options.element]
    out_dir = start_run(options)

    written = 0
    for kind in kinds:
        for index in range(options.count):
            scene = preset_scene(
                kind,
                seed=derive_seed(options.seed, "synth", kind, index),
                noise_sigma=options.noise,
                direct_wave=options.direct_wave,
                n_traces=options.n_traces,
                n_samples=options.n_samples,
                trace_spacing=options.trace_spacing,
            )
            write_bscan(render_bscan(scene), out_dir, f"{kind}_{index:03d}")
            written += 1
    log_info(f"synth: {written} scans written")
    print(f"{written} scans written to {out_dir}")
    return 0


def cmd_dataset(options) -> int:
    scans = _require(options.scans, "--scans")
    preset = get_preset(options.window, options.allow_custom_window)
    stride = _size(options.stride, "--stride")
    input_size = _size(options.input, "--input")
    thresholds = _thresholds(options)
    out_dir = start_run(options, [scans])

    manifests = _select(manifests_by_kind(scans), options.element)
    if not manifests:
        raise DatasetError(f"No {options.element} scans found in {scans}")
    dataset = build_dataset(
        manifests, preset.size, stride, input_size, options.augment, options.channels,
        options.normalize, options.denoise, thresholds, workers=options.workers,
        other_ratio=options.other_ratio, balance_seed=options.seed,
    )
    save_dataset(dataset, out_dir)

    histogram = dataset.histogram()
    for name, count in histogram.items():
        print(f"{name:<6} {count}")
    print(f"{'total':<6} {len(dataset)}")
    return 0


def cmd_train(options) -> int:
    dataset_dir = _require(options.dataset, "--dataset")
    config = _train_config(options)
    out_dir = start_run(options, [dataset_dir], [options.seed])

    dataset = load_dataset(dataset_dir)
    channels, height, width = dataset.sample_shape
    input_size = _size(options.input, "--input") or (width, height)
    if tuple(input_size) != (width, height):
        raise ShapeMismatchError(
            f"--input {format_size(input_size)} does not match the dataset windows {width}x{height}"
        )
    spec = build_network(options.net, input_size, channels)
    result = train(spec, dataset, config)

    save_checkpoint(result.network, os.path.join(out_dir, "model.rbsc"))
    write_metrics_csv(result.metrics, os.path.join(out_dir, "metrics.csv"))
    print(f"{spec.name}: test accuracy {result.metrics.accuracy:.4f}, balanced "
          f"{result.metrics.balanced_accuracy:.4f} (best epoch {result.best_epoch})")
    return 0


def cmd_eval(options) -> int:
    checkpoint = _require(options.checkpoint, "--checkpoint")
    dataset_dir = _require(options.dataset, "--dataset")
    out_dir = start_run(options, [checkpoint, dataset_dir])

    network = load_checkpoint(checkpoint)
    dataset = load_dataset(dataset_dir)
    if tuple(dataset.sample_shape) != tuple(network.spec.input_shape):
        raise ShapeMismatchError(
            f"Checkpoint {network.spec.name} expects input {tuple(network.spec.input_shape)}, "
            f"dataset samples are {tuple(dataset.sample_shape)}"
        )
    metrics = evaluate(network, dataset, options.batch_size)
    write_metrics_csv(metrics, os.path.join(out_dir, "metrics.csv"))
    print(f"{network.spec.name}: accuracy {metrics.accuracy:.4f}, balanced {metrics.balanced_accuracy:.4f} "
          f"on {len(dataset)} windows")
    return 0


def _sweep_corpora(options, grouped: Dict[str, List[str]]) -> Dict[str, Sequence[str]]:
    if options.elements:
        corpora = element_corpora(grouped)
    else:
        corpora = {options.corpus: _select(grouped, options.corpus)}
    corpora = {name: paths for name, paths in corpora.items() if paths}
    if not corpora:
        raise DatasetError(f"No scans found for corpus {options.corpus!r} in {options.scans}")
    return corpora


def cmd_sweep(options) -> int:
    scans = _require(options.scans, "--scans")
    net_names = parse_name_list(_list_text(options.nets))
    if not net_names:
        raise InvalidParameterError("--nets needs at least one network")
    presets = parse_window_list(_list_text(options.windows), options.allow_custom_window)
    try:
        seeds = parse_int_list(_list_text(options.seeds))
    except ValueError as e:
        raise InvalidParameterError(f"--seeds: {e}") from e
    config = _train_config(options)
    input_size = _size(options.input, "--input")
    out_dir = start_run(options, [scans], seeds)

    corpora = _sweep_corpora(options, manifests_by_kind(scans))
    reports = sweep_window_sizes(
        net_names, corpora, presets, seeds, config, out_dir,
        input_size=input_size, channels=options.channels, augment=options.augment,
        stride_fraction=STRIDE_FRACTION, workers=options.workers,
        other_ratio=options.other_ratio, balance_seed=options.seed,
    )

    write_sweep_csv(reports, os.path.join(out_dir, "sweep.csv"), config.deterministic)
    for report in reports:
        name = f"{report.network}_{format_size(report.window)}_{report.corpus}_s{report.seed}.json"
        write_run_report(report, validate_inside(os.path.join(out_dir, "reports", name), out_dir))
    if options.elements:
        write_element_csv(reports, os.path.join(out_dir, "elements.csv"))

    failed = [report for report in reports if report.exit_code]
    print(f"{len(reports) - len(failed)}/{len(reports)} sweep cells succeeded")
    return failed[0].exit_code if failed else 0


def cmd_detect(options) -> int:
    scans = _require(options.scans, "--scans")
    preset = get_preset(options.window, options.allow_custom_window)
    stride = _size(options.stride, "--stride") or default_stride(preset.size, DETECT_STRIDE_FRACTION)
    tolerance = options.tolerance if options.tolerance is not None else preset.width / 2.0
    thresholds = _thresholds(options)
    if not options.oracle:
        _require(options.checkpoint, "--checkpoint (or --oracle)")
    out_dir = start_run(options, [scans] + ([] if options.oracle else [options.checkpoint]))

    network = None if options.oracle else load_checkpoint(options.checkpoint)
    detections, scores = [], []
    for path in list_manifests(scans):
        manifest = read_manifest(path)
        if network is None:
            label_map = oracle_label_map(manifest, preset.size, stride, thresholds)
        else:
            label_map = classify_windows(
                network, load_scan_image(path, manifest), preset.size, stride,
                image_id=manifest.image_id, normalize=options.normalize,
                denoise=options.denoise, batch_size=options.batch_size,
            )
        found = localize_rebar(label_map, options.flank_bonus)
        detections.extend(found)
        scores.append(score_detections(found, [a.x_px for a in manifest.apexes], tolerance, manifest.image_id))
        log_info(f"detect: {manifest.image_id} {len(found)} detections, {len(manifest.apexes)} apexes")

    write_detections_csv(detections, os.path.join(out_dir, "detections.csv"))
    write_detection_summary(scores, os.path.join(out_dir, "detection_summary.csv"))
    print(f"{len(detections)} detections over {len(scores)} scans")
    return 0


def cmd_replay(options) -> int:
    manifest = read_run_manifest(options.manifest)
    replayed = replay_options(manifest, options.out)
    if replayed.command == "replay":
        raise InvalidParameterError("A replay manifest cannot replay itself")
    return HANDLERS[replayed.command](replayed)


HANDLERS = {
    "synth": cmd_synth,
    "dataset": cmd_dataset,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "detect": cmd_detect,
    "gradcheck": cmd_gradcheck,
    "replay": cmd_replay,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(None, DEFAULT_LOG_LEVEL)
    try:
        if args.command == "replay":
            options = args
        else:
            options = resolve_options(args, defaults_for(args.command), load_toml(args.config), load_env())
        return HANDLERS[options.command](options)
    except ValidationError as e:
        error = InvalidParameterError(f"Invalid parameters: {e}")
        log_error(f"{error_family(error)}: {error}")
        return error.exit_code
    except RebarScanError as e:
        log_error(f"{error_family(e)}: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
