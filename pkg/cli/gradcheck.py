import os

import pandas as pd

from config.config import GRADCHECK_TOLERANCE
from cli.manifest import start_run
from netdef.gradcheck import check_network
from tensor_core.gradcheck import run_layer_checks
from tensor_core.state import deterministic_mode
from utils.errors import GradcheckFailedError
from utils.logger import log_info


def gradcheck_report(seed: int = 0, configs: int = 20) -> pd.DataFrame:
    """One row per layer kind plus the whole tiny network: worst relative error and pass/fail."""
    with deterministic_mode(True):
        errors = run_layer_checks(seed, configs)
        errors["Network"] = check_network(seed=seed)
    return pd.DataFrame({
        "layer": list(errors.keys()),
        "max_rel_error": [float(value) for value in errors.values()],
        "passed": [bool(value <= GRADCHECK_TOLERANCE) for value in errors.values()],
    })


def cmd_gradcheck(options) -> int:
    out_dir = start_run(options)
    report = gradcheck_report(options.seed, options.configs)
    report.to_csv(os.path.join(out_dir, "gradcheck.csv"), index=False, lineterminator="\n", float_format="%.3e")
    print(report.to_string(index=False, formatters={"max_rel_error": "{:.3e}".format}))

    failed = report.loc[~report["passed"], "layer"].tolist()
    if failed:
        raise GradcheckFailedError(
            f"Relative error above {GRADCHECK_TOLERANCE:g} for: {', '.join(failed)}"
        )
    log_info(f"Gradient check passed for {len(report)} entries")
    return 0
