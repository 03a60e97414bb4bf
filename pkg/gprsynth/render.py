"""
B-scan rendering: superposed Ricker arrivals along each rebar's travel-time
curve, an optional direct-wave band, seeded noise, then min-max scaling to
8-bit grayscale (rows = time samples, columns = traces).
"""
from dataclasses import dataclass
from typing import List, Tuple

import cv2
import numpy as np

from config.config import AMPLITUDE_REF_TIME, DIRECT_WAVE_GAIN, DIRECT_WAVE_PERIODS
from gprsynth.physics import ricker_wavelet, travel_time
from gprsynth.scene import SceneSpec
from utils.helpers import derive_seed
from utils.logger import log_debug


@dataclass
class BScan:
    amplitude: np.ndarray               # [n_samples, n_traces] float64, after noise
    image: np.ndarray                   # [n_samples, n_traces] uint8
    dx: float
    dt: float
    ground_truth: List[Tuple[int, int]]  # (trace index, sample index) per rebar
    scene: SceneSpec

    @property
    def shape(self) -> Tuple[int, int]:
        return self.image.shape


def direct_wave(scene: SceneSpec) -> np.ndarray:
    """Ricker pulse delayed by one period, zero after DIRECT_WAVE_PERIODS periods; one trace."""
    period = 1.0 / scene.center_freq
    t = np.arange(scene.n_samples) * scene.time_step
    pulse = DIRECT_WAVE_GAIN * ricker_wavelet(t - period, scene.center_freq)
    pulse[t > DIRECT_WAVE_PERIODS * period] = 0.0
    return pulse


def synthesize_response(scene: SceneSpec) -> np.ndarray:
    """Noise-free amplitude grid. Rebar amplitude decays as AMPLITUDE_REF_TIME / t."""
    scene.check_time_window()
    t = (np.arange(scene.n_samples) * scene.time_step)[:, None]
    x = np.arange(scene.n_traces) * scene.trace_spacing

    grid = np.zeros((scene.n_samples, scene.n_traces), dtype=np.float64)
    for rebar in scene.rebars:
        arrival = travel_time(x, rebar.x0, rebar.depth, scene.velocity)[None, :]
        grid += (AMPLITUDE_REF_TIME / arrival) * ricker_wavelet(t - arrival, scene.center_freq)

    if scene.direct_wave:
        grid += direct_wave(scene)[:, None]
    return grid


def to_grayscale(amplitude: np.ndarray) -> np.ndarray:
    """Min-max scale to [0, 1] and quantize; a constant grid maps to zeros."""
    scaled = cv2.normalize(amplitude, None, 0.0, 1.0, cv2.NORM_MINMAX)
    return np.floor(scaled * 255.0 + 0.5).astype(np.uint8)


def render_bscan(scene: SceneSpec) -> BScan:
    response = synthesize_response(scene)
    amplitude = response
    if scene.noise_sigma > 0:
        peak = float(np.abs(response).max(initial=0.0))
        rng = np.random.default_rng(derive_seed(scene.rng_seed, "noise"))
        amplitude = response + rng.normal(0.0, scene.noise_sigma * peak, size=response.shape)

    bscan = BScan(
        amplitude=amplitude,
        image=to_grayscale(amplitude),
        dx=scene.trace_spacing,
        dt=scene.time_step,
        ground_truth=scene.ground_truth(),
        scene=scene,
    )
    log_debug(f"Rendered {scene.element_kind} scene: {len(scene.rebars)} rebars, "
              f"{scene.n_samples}x{scene.n_traces} samples")
    return bscan
