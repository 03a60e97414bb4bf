"""
PGM (P5, maxval 255) images with sidecar JSON manifests.
"""
import json
import os
from typing import List

import numpy as np
from PIL import Image
from pydantic import BaseModel

from config.config import RUN_MANIFEST_NAME, TOOL_VERSION
from gprsynth.render import BScan
from gprsynth.scene import SceneSpec
from utils.errors import DatasetError, MissingImageError
from utils.logger import log_info


# --- Schemas ---
class ApexRecord(BaseModel):
    x_px: int
    y_px: int
    x0_m: float
    depth_m: float


class ScanManifest(BaseModel):
    image_id: str
    image_file: str
    element_kind: str
    width: int
    height: int
    dx: float
    dt: float
    apexes: List[ApexRecord]
    scene: SceneSpec
    tool_version: str = TOOL_VERSION


def build_manifest(bscan: BScan, image_id: str) -> ScanManifest:
    scene = bscan.scene
    apexes = [
        ApexRecord(x_px=col, y_px=row, x0_m=rebar.x0, depth_m=rebar.depth)
        for (col, row), rebar in zip(bscan.ground_truth, scene.rebars)
    ]
    height, width = bscan.image.shape
    return ScanManifest(
        image_id=image_id,
        image_file=f"{image_id}.pgm",
        element_kind=scene.element_kind,
        width=width,
        height=height,
        dx=bscan.dx,
        dt=bscan.dt,
        apexes=apexes,
        scene=scene,
    )


def write_pgm(image: np.ndarray, path: str):
    Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8)).save(path, format="PPM")


def read_pgm(path: str) -> np.ndarray:
    if not os.path.isfile(path):
        raise MissingImageError(f"Image file not found: {path}")
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)


def write_bscan(bscan: BScan, out_dir: str, image_id: str) -> str:
    """Writes <image_id>.pgm and <image_id>.json; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    manifest = build_manifest(bscan, image_id)
    write_pgm(bscan.image, os.path.join(out_dir, manifest.image_file))

    manifest_path = os.path.join(out_dir, f"{image_id}.json")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(manifest.model_dump(mode="json"), f, indent=2, sort_keys=True)
        f.write("\n")
    log_info(f"Scan written: {manifest_path} ({len(manifest.apexes)} apexes)")
    return manifest_path


def read_manifest(path: str) -> ScanManifest:
    if not os.path.isfile(path):
        raise MissingImageError(f"Manifest not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return ScanManifest.model_validate(json.load(f))
    except (json.JSONDecodeError, ValueError) as e:
        raise DatasetError(f"Manifest {path} is unreadable: {e}") from e


def manifest_image_path(manifest_path: str, manifest: ScanManifest) -> str:
    return os.path.join(os.path.dirname(os.path.abspath(manifest_path)), manifest.image_file)


def load_scan_image(manifest_path: str, manifest: ScanManifest) -> np.ndarray:
    image = read_pgm(manifest_image_path(manifest_path, manifest))
    if image.shape != (manifest.height, manifest.width):
        raise DatasetError(
            f"{manifest.image_file} is {image.shape[1]}x{image.shape[0]}, "
            f"manifest says {manifest.width}x{manifest.height}"
        )
    return image


def list_manifests(directory: str) -> List[str]:
    """Sorted manifest paths in a scan directory."""
    if not os.path.isdir(directory):
        raise MissingImageError(f"Scan directory not found: {directory}")
    return sorted(
        os.path.join(directory, name) for name in os.listdir(directory)
        if name.endswith(".json") and name != RUN_MANIFEST_NAME
    )
