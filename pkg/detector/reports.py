import json
import os
from dataclasses import asdict
from typing import List, Sequence

import numpy as np
import pandas as pd

from config.config import DETECTION_COLUMNS, REFERENCE_ACCURACY, SWEEP_COLUMNS
from netdef.builders import family_of
from utils.helpers import format_size

ELEMENT_COLUMNS = ["network", "element", "mean_accuracy", "std_accuracy", "n_runs", "per_run"]
SUMMARY_COLUMNS = [
    "image_id", "n_apexes", "n_detections", "matched", "precision", "recall", "mean_abs_error_px",
]


# -------------------------------------------------
# SWEEP TABLE
# -------------------------------------------------

def sweep_frame(reports, deterministic: bool = True) -> pd.DataFrame:
    """
    One row per sweep cell, fixed column set. Failed cells keep their row with
    an empty accuracy. In deterministic mode wall_secs is written as 0.0.
    """
    rows = []
    for r in reports:
        rows.append({
            "network": r.network,
            "window_w": r.window[0],
            "window_h": r.window[1],
            "corpus": r.corpus,
            "seed": r.seed,
            "test_accuracy": r.test_accuracy if r.test_accuracy is not None else np.nan,
            "epochs_run": r.epochs_run,
            "wall_secs": 0.0 if deterministic else round(r.wall_secs, 3),
            "status": r.status,
            "balanced_accuracy": r.balanced_accuracy if r.balanced_accuracy is not None else np.nan,
        })
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def reference_lines(networks: Sequence[str], windows: Sequence) -> List[str]:
    """Published field-scan accuracies for the swept families and windows (annotation only)."""
    families = {family_of(n) for n in networks}
    names = {format_size(w) for w in windows}
    lines = []
    for (family, input_px, window), accuracy in sorted(REFERENCE_ACCURACY.items()):
        if family in families and window in names:
            lines.append(f"# reference,{family},{input_px}x{input_px},{window},{accuracy:.2f}")
    return lines


def write_sweep_csv(reports, path: str, deterministic: bool = True) -> str:
    df = sweep_frame(reports, deterministic)
    footer = reference_lines(df["network"].unique().tolist(),
                             sorted({tuple(r.window) for r in reports}))
    with open(path, "w", encoding="utf-8", newline="") as f:
        df.to_csv(f, index=False, lineterminator="\n", float_format="%.6f", na_rep="")
        for line in footer:
            f.write(line + "\n")
    return path


# -------------------------------------------------
# ELEMENT COMPARISON
# -------------------------------------------------

def element_frame(reports) -> pd.DataFrame:
    """
    Mean and population std of test accuracy per (network, element) over every
    successful run, plus the individual values as 'WxH/s<seed>=acc'.
    """
    ok = [r for r in reports if r.status == "ok"]
    if not ok:
        return pd.DataFrame(columns=ELEMENT_COLUMNS)

    df = pd.DataFrame([{
        "network": r.network,
        "element": r.corpus,
        "accuracy": r.test_accuracy,
        "run": f"{format_size(r.window)}/s{r.seed}={r.test_accuracy:.6f}",
    } for r in ok])

    rows = []
    for (network, element), group in df.groupby(["network", "element"], sort=False):
        accuracies = group["accuracy"].to_numpy(dtype=np.float64)
        rows.append({
            "network": network,
            "element": element,
            "mean_accuracy": float(accuracies.mean()),
            "std_accuracy": float(accuracies.std(ddof=0)),
            "n_runs": int(accuracies.size),
            "per_run": ";".join(group["run"]),
        })
    return pd.DataFrame(rows, columns=ELEMENT_COLUMNS)


def write_element_csv(reports, path: str) -> str:
    element_frame(reports).to_csv(path, index=False, lineterminator="\n", float_format="%.6f")
    return path


# -------------------------------------------------
# DETECTIONS
# -------------------------------------------------

def write_detections_csv(detections, path: str) -> str:
    df = pd.DataFrame([{
        "image_id": d.image_id,
        "x_px": d.x_px,
        "confidence": d.confidence,
        "flanked_left": int(d.flanked_left),
        "flanked_right": int(d.flanked_right),
    } for d in detections], columns=DETECTION_COLUMNS)
    df.to_csv(path, index=False, lineterminator="\n", float_format="%.4f")
    return path


def write_detection_summary(scores, path: str) -> str:
    df = pd.DataFrame([asdict(s) for s in scores], columns=SUMMARY_COLUMNS)
    if not df.empty:
        total = {
            "image_id": "ALL",
            "n_apexes": int(df["n_apexes"].sum()),
            "n_detections": int(df["n_detections"].sum()),
            "matched": int(df["matched"].sum()),
        }
        total["precision"] = (total["matched"] / total["n_detections"] if total["n_detections"]
                              else float(total["n_apexes"] == 0))
        total["recall"] = total["matched"] / total["n_apexes"] if total["n_apexes"] else 1.0
        weighted = (df["mean_abs_error_px"].fillna(0.0) * df["matched"]).sum()
        total["mean_abs_error_px"] = float(weighted / total["matched"]) if total["matched"] else np.nan
        df = pd.concat([df, pd.DataFrame([total])], ignore_index=True)
    df.to_csv(path, index=False, lineterminator="\n", float_format="%.4f", na_rep="")
    return path


# -------------------------------------------------
# RUN REPORTS
# -------------------------------------------------

def write_run_report(report, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    return path
