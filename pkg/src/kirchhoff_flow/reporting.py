"""Deterministic report emission.

All structured results are serialized with a fixed key order (insertion
order of the dicts assembled by the callers), floats printed with 17
significant digits, and a trailing newline, so identical inputs produce
byte-identical files.  CSV companions use the same float format.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .errors import KirchhoffFlowError


def _fmt_float(x: float) -> str:
    if x != x:  # NaN is not representable in strict JSON
        return "null"
    if x == float("inf") or x == float("-inf"):
        return "null"
    return format(float(x), ".17g")


def _serialize(obj, out: list) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(k)))
            out.append(":")
            _serialize(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        for i, v in enumerate(seq):
            if i:
                out.append(",")
            _serialize(v, out)
        out.append("]")
    else:
        raise KirchhoffFlowError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> bytes:
    out: list = []
    _serialize(obj, out)
    out.append("\n")
    return "".join(out).encode("ascii")


def write_report(result, path) -> None:
    """Serialize a dict (or object with as_dict) to canonical JSON."""
    payload = result.as_dict() if hasattr(result, "as_dict") else result
    data = canonical_json(payload)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise KirchhoffFlowError(f"cannot write report {path}: {exc}") from exc


def write_csv(path, header: str, rows) -> None:
    """Rows of floats/ints/strings under a fixed header line."""
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(header + "\n")
            for row in rows:
                cells = []
                for cell in row:
                    if isinstance(cell, (float, np.floating)):
                        cells.append(_fmt_float(float(cell)))
                    else:
                        cells.append(str(cell))
                fh.write(",".join(cells) + "\n")
    except OSError as exc:
        raise KirchhoffFlowError(f"cannot write csv {path}: {exc}") from exc


def write_trace_csv(path, energies, gaps=None) -> None:
    """Flow trace as `iter,energy,gap` (gap may be absent: blank cell)."""
    rows = []
    for i, e in enumerate(energies):
        g = "" if gaps is None or i >= len(gaps) else gaps[i]
        rows.append((i, e, g))
    write_csv(path, "iter,energy,gap", rows)


def config_hash(config_dict) -> str:
    return hashlib.sha256(canonical_json(config_dict)).hexdigest()


def run_manifest(config_dict, seed: int, extras: dict | None = None) -> dict:
    """Reproducibility manifest: config hash, seed, library versions.

    Deliberately excludes wall-clock data so identical config + seed
    produce byte-identical manifests on one machine.
    """
    import scipy

    from . import __version__

    manifest = {
        "config_hash": config_hash(config_dict),
        "seed": seed,
        "versions": {
            "kirchhoff_flow": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    if extras:
        manifest.update(extras)
    return manifest


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
