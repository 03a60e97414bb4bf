"""
RBSC checkpoint files.

    b"RBSC" | u32 version | u32 header_len | header (UTF-8 JSON) | payload

All integers and tensor payloads are little-endian. The header carries the
network spec, the dtype and a manifest of tensors with shapes and byte offsets
relative to the payload start.
"""
import json
import os
import struct
from math import prod

import numpy as np

from config.config import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from netdef.network import Network
from netdef.spec import NetworkSpec, buffer_shapes, param_shapes
from tensor_core.normalization import RunningStats
from utils.errors import CheckpointError, CheckpointShapeError, CheckpointTruncatedError, CheckpointVersionError
from utils.logger import log_info

_PREFIX = struct.Struct("<4sII")
_DTYPES = {"float64": "<f8", "float32": "<f4"}


def _entries(network: Network):
    for index, layer in enumerate(network.params):
        for key, value in layer.items():
            yield f"layers.{index}.{key}", index, key, "param", value
    for index in sorted(network.running_stats):
        stats = network.running_stats[index]
        yield f"layers.{index}.running_mean", index, "running_mean", "buffer", stats.mean
        yield f"layers.{index}.running_var", index, "running_var", "buffer", stats.var


def save_checkpoint(network: Network, path: str) -> str:
    dtype_name = np.dtype(network.dtype).name
    if dtype_name not in _DTYPES:
        raise CheckpointShapeError(f"Unsupported checkpoint dtype {dtype_name}")
    wire = _DTYPES[dtype_name]

    manifest, chunks, offset = [], [], 0
    for name, index, key, kind, value in _entries(network):
        raw = np.ascontiguousarray(value, dtype=wire).tobytes()
        manifest.append({
            "name": name, "layer": index, "key": key, "kind": kind,
            "shape": list(value.shape), "offset": offset, "nbytes": len(raw),
        })
        chunks.append(raw)
        offset += len(raw)

    header = json.dumps({
        "spec": network.spec.model_dump(mode="json"),
        "dtype": dtype_name,
        "momentum": {str(i): s.momentum for i, s in network.running_stats.items()},
        "tensors": manifest,
    }, sort_keys=True).encode("utf-8")

    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as f:
        f.write(_PREFIX.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(header)))
        f.write(header)
        for chunk in chunks:
            f.write(chunk)

    log_info(f"Checkpoint written: {path} ({network.param_count()} parameters)")
    return path


def read_header(data: bytes) -> tuple:
    """Returns (header dict, payload bytes) after checking magic, version and lengths."""
    magic_len = len(CHECKPOINT_MAGIC)
    if data[:magic_len] != CHECKPOINT_MAGIC[:len(data)]:
        raise CheckpointVersionError("Not an RBSC checkpoint: bad magic bytes")
    if len(data) < magic_len:
        raise CheckpointTruncatedError(f"Checkpoint truncated after {len(data)} bytes of magic")
    if len(data) < _PREFIX.size:
        raise CheckpointTruncatedError("Checkpoint truncated inside the fixed prefix")

    _, version, header_len = _PREFIX.unpack_from(data)
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"Checkpoint version {version} is not supported (expected {CHECKPOINT_VERSION})"
        )
    end = _PREFIX.size + header_len
    if len(data) < end:
        raise CheckpointTruncatedError(
            f"Checkpoint header needs {header_len} bytes, only {len(data) - _PREFIX.size} present"
        )
    try:
        header = json.loads(data[_PREFIX.size:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointTruncatedError(f"Checkpoint header is not valid JSON: {e}") from e
    return header, data[end:]


def _expected_shapes(spec: NetworkSpec) -> dict:
    expected = {}
    for index, shapes in enumerate(param_shapes(spec)):
        for key, shape in shapes.items():
            expected[f"layers.{index}.{key}"] = tuple(shape)
    for index, shape in buffer_shapes(spec).items():
        expected[f"layers.{index}.running_mean"] = tuple(shape)
        expected[f"layers.{index}.running_var"] = tuple(shape)
    return expected


def load_checkpoint(path: str) -> Network:
    if not os.path.isfile(path):
        raise CheckpointError(f"Checkpoint not found: {path}")
    with open(path, "rb") as f:
        data = f.read()
    header, payload = read_header(data)

    if "spec" not in header or "tensors" not in header:
        raise CheckpointTruncatedError(f"Checkpoint header of {path} lacks the spec or tensor manifest")
    try:
        spec = NetworkSpec.model_validate(header["spec"])
    except ValueError as e:
        raise CheckpointShapeError(f"Checkpoint spec in {path} is invalid: {e}") from e
    dtype_name = header.get("dtype")
    if dtype_name not in _DTYPES:
        raise CheckpointShapeError(f"Unsupported checkpoint dtype {dtype_name!r}")
    wire = np.dtype(_DTYPES[dtype_name])

    expected = _expected_shapes(spec)
    found = {entry["name"]: entry for entry in header["tensors"]}
    missing = sorted(set(expected) - set(found))
    extra = sorted(set(found) - set(expected))
    if missing or extra:
        raise CheckpointShapeError(
            f"Checkpoint tensors do not match spec {spec.name!r}: missing {missing}, unexpected {extra}"
        )

    tensors = {}
    for name, shape in expected.items():
        entry = found[name]
        if tuple(entry["shape"]) != shape:
            raise CheckpointShapeError(
                f"{name} has shape {tuple(entry['shape'])} in the checkpoint, spec needs {shape}"
            )
        start, nbytes = int(entry["offset"]), int(entry["nbytes"])
        if nbytes != prod(shape) * wire.itemsize:
            raise CheckpointShapeError(f"{name} declares {nbytes} bytes for shape {shape}")
        if start + nbytes > len(payload):
            raise CheckpointTruncatedError(
                f"Checkpoint payload ends before {name} ({start + nbytes} > {len(payload)} bytes)"
            )
        raw = np.frombuffer(payload, dtype=wire, count=prod(shape), offset=start)
        tensors[name] = raw.reshape(shape).astype(dtype_name)

    params = [
        {key: tensors[f"layers.{index}.{key}"] for key in shapes}
        for index, shapes in enumerate(param_shapes(spec))
    ]
    momentum = header.get("momentum", {})
    stats = {
        index: RunningStats(
            tensors[f"layers.{index}.running_mean"],
            tensors[f"layers.{index}.running_var"],
            float(momentum.get(str(index), 0.9)),
        )
        for index in buffer_shapes(spec)
    }
    return Network(spec, params, stats)


def checkpoint_param_count(path: str) -> int:
    """Number of trainable values serialized in a checkpoint."""
    with open(path, "rb") as f:
        header, _ = read_header(f.read())
    return sum(prod(entry["shape"]) for entry in header["tensors"] if entry["kind"] == "param")
