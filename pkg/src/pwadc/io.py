"""JSON and CSV file helpers.

Floats go through ``repr``, the shortest decimal string that parses back to
the same double, so every file round-trips bit-identically.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .decomp_folds import Decomposition
from .dc_eval import DcForm
from .pwa import PwaFunction


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(_plain(obj), indent=1) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


def load_pwa(path) -> PwaFunction:
    return PwaFunction.from_json(load_json(path))


def load_decomposition(path) -> Decomposition:
    return Decomposition.from_json(load_json(path))


def load_dc(path) -> DcForm:
    """A ``DcForm`` file, or a decomposition file reduced to its pieces."""
    data = load_json(path)
    if "g_pieces" in data:
        return DcForm.from_json(data)
    from .dc_eval import to_dc
    return to_dc(Decomposition.from_json(data))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow(["" if isinstance(v, float) and math.isnan(v) else
                         (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                         for v in row])
