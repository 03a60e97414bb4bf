import numpy as np

from utils.errors import InvalidParameterError


def travel_time(x, x0: float, depth: float, velocity: float):
    """
    Two-way travel time from an antenna at x to a point reflector at (x0, depth):
        t = (2 / v) * sqrt(depth^2 + (x - x0)^2)
    x may be a scalar or an array (metres).
    """
    if velocity <= 0:
        raise InvalidParameterError(f"Wave velocity must be > 0, got {velocity}")
    if depth <= 0:
        raise InvalidParameterError(f"Rebar depth must be > 0, got {depth}")
    offset = np.asarray(x, dtype=np.float64) - x0
    t = (2.0 / velocity) * np.sqrt(depth * depth + offset * offset)
    return float(t) if np.ndim(t) == 0 else t


def ricker_wavelet(t, center_freq: float):
    """(1 - 2 pi^2 f^2 t^2) * exp(-pi^2 f^2 t^2); peak 1 at t = 0."""
    if center_freq <= 0:
        raise InvalidParameterError(f"Center frequency must be > 0, got {center_freq}")
    a = (np.pi * center_freq * np.asarray(t, dtype=np.float64)) ** 2
    w = (1.0 - 2.0 * a) * np.exp(-a)
    return float(w) if np.ndim(w) == 0 else w


def ricker_zero_crossing(center_freq: float) -> float:
    return 1.0 / (np.pi * center_freq * np.sqrt(2.0))
