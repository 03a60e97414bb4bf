"""
Comparative experiments: the (network x window x corpus x seed) sweep and the
per-element comparison built on it.
"""
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from threading import Lock
from typing import Dict, List, Optional, Sequence, Tuple

from config.config import ELEMENT_KINDS, STRIDE_FRACTION
from netdef.builders import build_network, default_input_size
from netdef.checkpoint import save_checkpoint
from trainer.loop import train
from trainer.metrics import Metrics
from trainer.schemas import TrainConfig
from utils.errors import InvalidParameterError, RebarScanError, error_family
from utils.helpers import format_size
from utils.logger import log_info, log_warning
from windowing.dataset import build_dataset, default_stride, save_dataset
from windowing.presets import WindowSizePreset

Cell = Tuple[str, WindowSizePreset, str, int]


@dataclass
class RunReport:
    network: str
    window: Tuple[int, int]
    corpus: str
    seed: int
    status: str = "ok"
    test_accuracy: Optional[float] = None
    balanced_accuracy: Optional[float] = None
    epochs_run: int = 0
    best_epoch: int = 0
    wall_secs: float = 0.0
    checkpoint: Optional[str] = None
    dataset_dir: Optional[str] = None
    error: Optional[str] = None
    exit_code: int = 0
    metrics: Optional[Metrics] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "network": self.network,
            "window": list(self.window),
            "corpus": self.corpus,
            "seed": self.seed,
            "status": self.status,
            "test_accuracy": self.test_accuracy,
            "balanced_accuracy": self.balanced_accuracy,
            "epochs_run": self.epochs_run,
            "best_epoch": self.best_epoch,
            "wall_secs": self.wall_secs,
            "checkpoint": self.checkpoint,
            "dataset_dir": self.dataset_dir,
            "error": self.error,
            "metrics": self.metrics.summary() if self.metrics is not None else None,
        }


class DatasetCache:
    """
    Builds each (corpus, window, input size, channels) dataset once, persisting it
    under root. With other_ratio set, Other windows are subsampled before augmentation.
    """

    def __init__(self, corpora: Dict[str, Sequence[str]], root: str, augment: bool,
                 stride_fraction: float, workers: int = 1,
                 other_ratio: Optional[float] = None, balance_seed: int = 0):
        self.corpora = corpora
        self.root = root
        self.augment = augment
        self.stride_fraction = stride_fraction
        self.workers = workers
        self.other_ratio = other_ratio
        self.balance_seed = balance_seed
        self._entries = {}
        self._lock = Lock()

    def get(self, corpus: str, window: Tuple[int, int], input_size: Tuple[int, int], channels: int):
        key = (corpus, tuple(window), tuple(input_size), channels)
        with self._lock:
            if key not in self._entries:
                self._entries[key] = self._build(*key)
        entry = self._entries[key]
        if isinstance(entry, RebarScanError):
            raise entry
        return entry

    def _build(self, corpus, window, input_size, channels):
        directory = os.path.join(
            self.root, f"{corpus}_{format_size(window)}_in{format_size(input_size)}_c{channels}"
        )
        try:
            dataset = build_dataset(
                self.corpora[corpus], window, default_stride(window, self.stride_fraction),
                input_size, self.augment, channels, workers=self.workers,
                other_ratio=self.other_ratio, balance_seed=self.balance_seed,
            )
        except RebarScanError as e:
            return e
        save_dataset(dataset, directory)
        return dataset, directory


def run_cell(cell: Cell, cache: DatasetCache, config: TrainConfig, out_dir: str,
             input_size: Optional[Tuple[int, int]], channels: int) -> RunReport:
    net_name, preset, corpus, seed = cell
    report = RunReport(net_name, preset.size, corpus, seed)
    started = time.perf_counter()
    try:
        size = input_size or default_input_size(net_name)
        spec = build_network(net_name, size, channels)
        dataset, report.dataset_dir = cache.get(corpus, preset.size, size, channels)
        result = train(spec, dataset, config.model_copy(update={"seed": seed}))
        report.test_accuracy = result.metrics.accuracy
        report.balanced_accuracy = result.metrics.balanced_accuracy
        report.epochs_run = result.epochs_run
        report.best_epoch = result.best_epoch
        report.metrics = result.metrics
        report.checkpoint = save_checkpoint(result.network, os.path.join(
            out_dir, "checkpoints", f"{net_name}_{preset.name}_{corpus}_s{seed}.rbsc"
        ))
    except RebarScanError as e:
        report.status = f"failed:{error_family(e)}"
        report.error = str(e)
        report.exit_code = e.exit_code
        log_warning(f"Sweep cell {net_name} {preset.name} {corpus} seed {seed} failed: {e}")
    report.wall_secs = time.perf_counter() - started
    log_info(f"Sweep cell {net_name} {preset.name} {corpus} seed {seed}: {report.status} "
             f"acc={report.test_accuracy} ({report.wall_secs:.1f}s)")
    return report


def sweep_window_sizes(
    net_names: Sequence[str],
    corpora: Dict[str, Sequence[str]],
    presets: Sequence[WindowSizePreset],
    seeds: Sequence[int],
    config: TrainConfig,
    out_dir: str,
    input_size: Optional[Tuple[int, int]] = None,
    channels: int = 1,
    augment: bool = False,
    stride_fraction: float = STRIDE_FRACTION,
    workers: int = 1,
    other_ratio: Optional[float] = None,
    balance_seed: int = 0,
) -> List[RunReport]:
    """
    Train and evaluate every (network, window, corpus, seed) cell. Failed cells
    are recorded and the sweep continues. Reports come back in cross-product
    order whatever the worker count.
    """
    if not seeds:
        raise InvalidParameterError("A sweep needs at least one seed")
    cells: List[Cell] = list(product(net_names, presets, corpora.keys(), seeds))
    cache = DatasetCache(corpora, os.path.join(out_dir, "datasets"), augment, stride_fraction,
                         other_ratio=other_ratio, balance_seed=balance_seed)
    log_info(f"Sweep: {len(cells)} cells ({len(net_names)} networks x {len(presets)} windows x "
             f"{len(corpora)} corpora x {len(seeds)} seeds)")

    def job(cell):
        return run_cell(cell, cache, config, out_dir, input_size, channels)

    if workers > 1 and not config.deterministic:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, cells))
    return [job(cell) for cell in cells]


def element_corpora(manifests_by_kind: Dict[str, Sequence[str]]) -> Dict[str, Sequence[str]]:
    """Keep the element corpora in column / wall / slab order, dropping empty ones."""
    return {kind: manifests_by_kind[kind] for kind in ELEMENT_KINDS if manifests_by_kind.get(kind)}


def compare_elements(
    net_names: Sequence[str],
    manifests_by_kind: Dict[str, Sequence[str]],
    presets: Sequence[WindowSizePreset],
    seeds: Sequence[int],
    config: TrainConfig,
    out_dir: str,
    **sweep_options,
) -> List[RunReport]:
    """Sweep each element corpus separately; aggregate with reports.element_frame."""
    return sweep_window_sizes(net_names, element_corpora(manifests_by_kind), presets, seeds,
                              config, out_dir, **sweep_options)
