"""
Execution settings for the layer kernels.

Deterministic mode (the default) keeps every reduction in one fixed order on one
thread. Outside it, convolution may split the batch across a thread pool; per-chunk
weight gradients are still summed in chunk order.

The deterministic flag lives in a context variable, so a training run entering
deterministic_mode in one thread never changes the mode seen by another. New
threads start from the default. The thread count is process-wide.
"""
import threading
from contextlib import contextmanager
from contextvars import ContextVar

_deterministic: ContextVar[bool] = ContextVar("deterministic", default=True)
_lock = threading.Lock()
_settings = {"num_threads": 1}


def set_deterministic(flag: bool):
    _deterministic.set(bool(flag))


def is_deterministic() -> bool:
    return _deterministic.get()


def set_num_threads(count: int):
    if count < 1:
        raise ValueError(f"num_threads must be >= 1, got {count}")
    with _lock:
        _settings["num_threads"] = int(count)


def get_num_threads() -> int:
    return _settings["num_threads"]


def parallel_enabled() -> bool:
    return not is_deterministic() and _settings["num_threads"] > 1


@contextmanager
def deterministic_mode(flag: bool = True):
    token = _deterministic.set(bool(flag))
    try:
        yield
    finally:
        _deterministic.reset(token)
