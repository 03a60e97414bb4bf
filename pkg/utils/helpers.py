import hashlib
import re
from typing import List, Tuple


# -------------------------------------------------
# SIZE PARSING
# -------------------------------------------------

def parse_size(text: str) -> Tuple[int, int]:
    """
    Parse a 'WxH' string into (width, height).
    Example: '200x80' -> (200, 80)
    """
    if not text:
        raise ValueError("Empty size string")

    match = re.fullmatch(r"\s*(\d+)\s*[xX×]\s*(\d+)\s*", text)
    if not match:
        raise ValueError(f"Size must look like WxH, got {text!r}")
    return int(match.group(1)), int(match.group(2))


def format_size(size: Tuple[int, int]) -> str:
    return f"{size[0]}x{size[1]}"


# -------------------------------------------------
# LIST PARSING
# -------------------------------------------------

def parse_int_list(text: str) -> List[int]:
    """
    Parse '1,2,3' into [1, 2, 3]. Blank entries are ignored.
    """
    if not text:
        return []
    return [int(part) for part in text.split(",") if part.strip()]


def parse_name_list(text: str) -> List[str]:
    if not text:
        return []
    return [part.strip().lower() for part in text.split(",") if part.strip()]


# -------------------------------------------------
# SEED DERIVATION
# -------------------------------------------------

def derive_seed(seed: int, *labels) -> int:
    """
    Derive a stable 63-bit seed for a named component stream.
    The same (seed, labels) always gives the same value across runs and platforms.
    """
    key = "/".join([str(int(seed))] + [str(label) for label in labels])
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1
