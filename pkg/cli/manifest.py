import json
import os
import sys
from argparse import Namespace
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel

from config.config import RUN_MANIFEST_NAME, TOOL_VERSION
from utils.errors import InvalidParameterError
from tensor_core.state import set_deterministic, set_num_threads
from utils.logger import configure_logging, log_info
from utils.validators import validate_output_dir


# --- Schemas ---
class RunManifest(BaseModel):
    subcommand: str
    tool_version: str = TOOL_VERSION
    seed: Optional[int] = None
    seeds: List[int] = []
    deterministic: bool = True
    options: Dict[str, Any]
    inputs: List[str] = []
    output_dir: str
    argv: List[str] = []


def _jsonable(value):
    if isinstance(value, tuple):
        return list(value)
    return value


def build_run_manifest(options: Namespace, inputs: List[str], seeds: Optional[List[int]] = None) -> RunManifest:
    resolved = {key: _jsonable(value) for key, value in sorted(vars(options).items())}
    return RunManifest(
        subcommand=options.command,
        seed=resolved.get("seed"),
        seeds=list(seeds or []),
        deterministic=bool(resolved.get("deterministic", True)),
        options=resolved,
        inputs=[os.path.abspath(path) for path in inputs if path],
        output_dir=os.path.abspath(options.out),
        argv=list(sys.argv[1:]),
    )


def write_run_manifest(manifest: RunManifest, out_dir: str) -> str:
    """Written before any heavy work starts."""
    path = os.path.join(out_dir, RUN_MANIFEST_NAME)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(manifest.model_dump(mode="json"), f, indent=2, sort_keys=True)
        f.write("\n")
    log_info(f"Run manifest written: {path}")
    return path


def read_run_manifest(path: str) -> RunManifest:
    if not os.path.isfile(path):
        raise InvalidParameterError(f"Run manifest not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return RunManifest.model_validate(json.load(f))


def replay_options(manifest: RunManifest, out_dir: Optional[str] = None) -> Namespace:
    """Namespace that re-runs the recorded subcommand with every resolved option."""
    options = dict(manifest.options)
    options["command"] = manifest.subcommand
    if out_dir is not None:
        options["out"] = out_dir
    return Namespace(**options)


def start_run(options: Namespace, inputs: Sequence[str] = (), seeds: Optional[List[int]] = None) -> str:
    """Prepare the output directory, logging and kernel settings, then write the run manifest."""
    out_dir = validate_output_dir(options.out)
    try:
        configure_logging(out_dir, str(options.log_level))
    except ValueError as e:
        raise InvalidParameterError(f"Unknown log level {options.log_level!r}") from e
    set_deterministic(options.deterministic)
    set_num_threads(1 if options.deterministic else max(1, int(options.workers)))
    write_run_manifest(build_run_manifest(options, list(inputs), seeds), out_dir)
    log_info(f"{options.command}: output in {out_dir} (seed={options.seed}, deterministic={options.deterministic})")
    return out_dir
