"""Artifact writers: delimited tables, JSON reports, and figure rendering.

Every CSV carries a header row; every JSON report embeds the config that
produced it.  Figures are rendered to PNG next to the delimited output with
a fixed style, so a run directory is self-contained.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def write_csv(path: Path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    if isinstance(x, complex):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    return x


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and (obj != obj):  # NaN
        return None
    return obj


def write_json(path: Path, payload: dict, config: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = dict(payload)
    if config is not None:
        doc["config"] = config
    with path.open("w") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def new_figure(width: float = 6.0, height: float = 4.0):
    fig, ax = plt.subplots(figsize=(width, height))
    return fig, ax


def save_figure(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=130, metadata={"Software": "sevop"})
    plt.close(fig)
    return path


def write_tensor_bin(path: Path, array) -> Path:
    """Binary tensor layout: int64 ndim, int64 dims..., float64 row-major."""
    import numpy as np

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.ascontiguousarray(array, dtype=np.float64)
    with path.open("wb") as fh:
        np.array([arr.ndim], dtype=np.int64).tofile(fh)
        np.array(arr.shape, dtype=np.int64).tofile(fh)
        arr.tofile(fh)
    return path


def read_tensor_bin(path: Path):
    import numpy as np

    with Path(path).open("rb") as fh:
        ndim = int(np.fromfile(fh, dtype=np.int64, count=1)[0])
        shape = tuple(np.fromfile(fh, dtype=np.int64, count=ndim))
        data = np.fromfile(fh, dtype=np.float64)
    return data.reshape(shape)
