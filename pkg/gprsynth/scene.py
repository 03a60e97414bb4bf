"""
Scene descriptions and the column / wall / slab presets.
"""
import math
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from config.config import (
    CENTER_FREQUENCY,
    DEFAULT_NOISE_SIGMA,
    ELEMENT_KINDS,
    ELEMENT_PRESETS,
    N_SAMPLES,
    N_TRACES,
    POSITION_JITTER_FRACTION,
    STRIDE_FRACTION,
    TIME_WINDOW_MARGIN,
    TRACE_SPACING,
    WAVE_VELOCITY,
    WINDOW_PRESETS,
)
from gprsynth.physics import travel_time
from utils.errors import InvalidParameterError
from utils.helpers import derive_seed

ElementKind = Literal["column", "wall", "slab"]


# --- Schemas ---
class Rebar(BaseModel):
    x0: float = Field(ge=0)
    depth: float = Field(gt=0)


class SceneSpec(BaseModel):
    element_kind: ElementKind
    rebars: List[Rebar]
    velocity: float = Field(WAVE_VELOCITY, gt=0)
    center_freq: float = Field(CENTER_FREQUENCY, gt=0)
    trace_spacing: float = Field(TRACE_SPACING, gt=0)
    time_step: float = Field(gt=0)
    n_traces: int = Field(N_TRACES, ge=1)
    n_samples: int = Field(N_SAMPLES, ge=1)
    noise_sigma: float = Field(DEFAULT_NOISE_SIGMA, ge=0)
    direct_wave: bool = True
    rng_seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _rebars_on_line(self):
        span = self.n_traces * self.trace_spacing
        for i, rebar in enumerate(self.rebars):
            if rebar.x0 > span:
                raise ValueError(f"rebar {i} at x0={rebar.x0} m lies beyond the scan line ({span} m)")
        return self

    @property
    def time_window(self) -> float:
        return self.time_step * self.n_samples

    def apex_time(self, rebar: Rebar) -> float:
        return travel_time(rebar.x0, rebar.x0, rebar.depth, self.velocity)

    def check_time_window(self):
        """Every apex must fall inside the recorded window."""
        for i, rebar in enumerate(self.rebars):
            t = self.apex_time(rebar)
            if t >= self.time_window:
                raise InvalidParameterError(
                    f"Time window {self.time_window:.3e} s is too short for rebar {i} "
                    f"(apex two-way time {t:.3e} s)"
                )

    def apex_pixel(self, rebar: Rebar) -> Tuple[int, int]:
        """(trace index, sample index) of the hyperbola apex."""
        col = int(math.floor(rebar.x0 / self.trace_spacing + 0.5))
        row = int(math.floor(self.apex_time(rebar) / self.time_step + 0.5))
        return min(col, self.n_traces - 1), row

    def ground_truth(self) -> List[Tuple[int, int]]:
        return [self.apex_pixel(rebar) for rebar in self.rebars]


def fit_time_step(depths, velocity: float = WAVE_VELOCITY, n_samples: int = N_SAMPLES) -> float:
    """Sample interval so n_samples spans TIME_WINDOW_MARGIN x the deepest apex time."""
    deepest = max(depths)
    return TIME_WINDOW_MARGIN * (2.0 * deepest / velocity) / n_samples


def _left_gap(p: int, w: int, s: int) -> int:
    """Traces from the last full window ending before p to p."""
    return p - ((p - w) // s * s + w - 1)


def _right_gap(q: int, s: int, last_start: int) -> float:
    """Traces from q to the first window starting after it."""
    start = (q // s + 1) * s
    return start - q if start <= last_start else math.inf


def field_bounds(
    n_traces: int,
    windows: Sequence[Tuple[int, int]] = WINDOW_PRESETS,
    stride_fraction: float = STRIDE_FRACTION,
) -> Tuple[int, int]:
    """
    Trace range [lo, hi] for the outermost apexes.

    Every window that fits needs a full grid window just left of the first
    apex and one just right of the last, close enough for the limb to cross
    it. The grid starts at trace 0 and drops trailing partial windows, so the
    presets disagree about where those windows sit. lo is searched within one
    stride past the widest window, hi within one stride before the earliest
    last window start, minimising the largest flank gap in window widths.
    """
    grids = []
    for w, _ in windows:
        if w <= n_traces:
            s = max(1, int(w * stride_fraction))
            grids.append((w, s, (n_traces - w) // s * s))
    if not grids:
        raise InvalidParameterError(f"No window preset fits a scan of {n_traces} traces")

    widest = max(w for w, _, _ in grids)
    reach = max(s for _, s, _ in grids)
    last = min(last_start for _, _, last_start in grids)
    lo = min(range(widest, widest + reach),
             key=lambda p: (max(_left_gap(p, w, s) / w for w, s, _ in grids), p))
    hi = min(range(max(lo, last - reach), last),
             key=lambda q: (max(_right_gap(q, s, ls) / w for w, s, ls in grids), -q),
             default=lo)
    if hi <= lo:
        raise InvalidParameterError(
            f"A scan of {n_traces} traces leaves no room for rebar between the outermost windows"
        )
    return lo, hi


def rebar_field(lo: float, hi: float, spacing: float) -> np.ndarray:
    """Nominal positions (metres) from lo to hi inclusive, spaced as close to spacing as fits."""
    gaps = max(1, int(round((hi - lo) / spacing)))
    return np.linspace(lo, hi, gaps + 1)


def preset_scene(
    kind: str,
    seed: int = 0,
    noise_sigma: Optional[float] = None,
    direct_wave: bool = True,
    rng_seed: Optional[int] = None,
    n_traces: int = N_TRACES,
    n_samples: int = N_SAMPLES,
    trace_spacing: float = TRACE_SPACING,
) -> SceneSpec:
    """
    Element preset with seed-keyed jitter on rebar positions and cover depths.
    Jittered positions stay inside field_bounds. noise_sigma defaults to the
    element's clutter level; rng_seed (noise stream) to a value derived from seed.
    """
    kind = kind.lower()
    if kind not in ELEMENT_KINDS:
        raise InvalidParameterError(f"Unknown element {kind!r}; expected one of {ELEMENT_KINDS}")
    preset = ELEMENT_PRESETS[kind]
    rng = np.random.default_rng(derive_seed(seed, "scene", kind))

    lo, hi = (bound * trace_spacing for bound in field_bounds(n_traces))
    nominal = rebar_field(lo, hi, preset["spacing"])
    jitter = POSITION_JITTER_FRACTION * preset["spacing"]
    positions = np.clip(nominal + rng.uniform(-jitter, jitter, size=nominal.size), lo, hi)
    depths = preset["depth"] + rng.uniform(-preset["depth_jitter"], preset["depth_jitter"], size=nominal.size)

    return SceneSpec(
        element_kind=kind,
        rebars=[Rebar(x0=float(x), depth=float(d)) for x, d in zip(positions, depths)],
        trace_spacing=trace_spacing,
        time_step=fit_time_step(depths, WAVE_VELOCITY, n_samples),
        n_traces=n_traces,
        n_samples=n_samples,
        noise_sigma=preset["noise"] if noise_sigma is None else noise_sigma,
        direct_wave=direct_wave,
        rng_seed=derive_seed(seed, "noise", kind) if rng_seed is None else rng_seed,
    )


def min_spacing(scene: SceneSpec) -> float:
    xs = np.sort([rebar.x0 for rebar in scene.rebars])
    return float(np.diff(xs).min()) if xs.size > 1 else math.inf


def limbs_intersect(scene: SceneSpec, first: Rebar, second: Rebar) -> bool:
    """
    True when the travel-time curves of two rebars cross at a time inside the
    recorded window (checked on the trace grid between the two apexes).
    """
    lo, hi = sorted((first.x0, second.x0))
    xs = np.arange(scene.n_traces) * scene.trace_spacing
    xs = xs[(xs >= lo) & (xs <= hi)]
    if xs.size < 2:
        return False
    diff = (travel_time(xs, first.x0, first.depth, scene.velocity)
            - travel_time(xs, second.x0, second.depth, scene.velocity))
    crossing = np.flatnonzero(np.sign(diff[:-1]) != np.sign(diff[1:]))
    if crossing.size == 0:
        return False
    t = travel_time(xs[crossing[0]], first.x0, first.depth, scene.velocity)
    return t < scene.time_window
