from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from ctmdp.hjb.grid import ValueFunction

FLOAT_FORMAT = "%.17g"


def value_frame(value: ValueFunction) -> pd.DataFrame:
    """Long table ``t, i, V, argmin_u`` ordered by node, then state label."""
    N1, n = value.values.shape
    return pd.DataFrame(
        {
            "t": np.repeat(value.grid.nodes, n),
            "i": np.tile(np.arange(1, n + 1), N1),
            "V": value.values.reshape(-1),
            "argmin_u": value.argmin.reshape(-1),
        }
    )


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_value_csv(value: ValueFunction, path: Path) -> Path:
    return write_frame(value_frame(value), path)
