"""Dataset bundles: a JSON manifest plus one CSV response matrix per layer.

Layout of a bundle directory::

    manifest.json     dimensions, M, provenance, and the true parameters
                      (rho, Pi, B, pure_index) when the data were simulated
    layer_1.csv ...   N rows of J comma-separated integers, no header

Floats are written with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import BundleFormatError
from .model import ModelParams, ResponseTensor

FORMAT = "mlgom-bundle/1"
MANIFEST = "manifest.json"


def write_bundle(path, R: ResponseTensor, params: Optional[ModelParams] = None, **meta) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for l, layer in enumerate(R.layers, start=1):
        name = f"layer_{l}.csv"
        with (out / name).open("w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(layer.tolist())
        files.append(name)
    manifest = {"format": FORMAT, "N": R.N, "J": R.J, "L": R.L, "M": R.M, "layers": files, **meta}
    if params is not None:
        manifest["truth"] = {
            "K": params.K,
            "rho": params.rho,
            "Pi": params.Pi.tolist(),
            "B": params.B.tolist(),
            "pure_index": list(params.pure_index) if params.pure_index is not None else None,
        }
    (out / MANIFEST).write_text(json.dumps(manifest) + "\n")
    return out


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise BundleFormatError(f"{where}: missing field {key!r}")
    return d[key]


def _read_layer(path: Path, N: int, J: int, M: int) -> np.ndarray:
    rows = []
    with path.open(newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if len(rec) != J:
                raise BundleFormatError(f"{path}:{lineno}: expected {J} fields, got {len(rec)}")
            row = []
            for col, field in enumerate(rec, start=1):
                try:
                    v = int(field)
                except ValueError:
                    raise BundleFormatError(f"{path}:{lineno}: field {col} is not an integer: {field!r}") from None
                if not 0 <= v <= M:
                    raise BundleFormatError(f"{path}:{lineno}: field {col} = {v} outside [0, {M}]")
                row.append(v)
            rows.append(row)
    if len(rows) != N:
        raise BundleFormatError(f"{path}: expected {N} rows, got {len(rows)}")
    return np.array(rows, dtype=np.int64).reshape(N, J)


def read_bundle(path) -> tuple[ResponseTensor, Optional[ModelParams], dict]:
    """Load (responses, true params or None, manifest) from a bundle directory."""
    root = Path(path)
    mpath = root / MANIFEST
    try:
        manifest = json.loads(mpath.read_text())
    except FileNotFoundError:
        raise BundleFormatError(f"{mpath}: not found") from None
    except json.JSONDecodeError as exc:
        raise BundleFormatError(f"{mpath}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    where = str(mpath)
    if manifest.get("format") != FORMAT:
        raise BundleFormatError(f"{where}: field 'format' must be {FORMAT!r}, got {manifest.get('format')!r}")
    N, J, L, M = (int(_require(manifest, k, where)) for k in ("N", "J", "L", "M"))
    files = _require(manifest, "layers", where)
    if len(files) != L:
        raise BundleFormatError(f"{where}: field 'layers' lists {len(files)} files but L={L}")
    R = ResponseTensor(np.stack([_read_layer(root / f, N, J, M) for f in files]), M)

    params = None
    truth = manifest.get("truth")
    if truth is not None:
        try:
            Pi = np.array(_require(truth, "Pi", where + ":truth"), dtype=np.float64)
            B = np.array(_require(truth, "B", where + ":truth"), dtype=np.float64)
            rho = float(_require(truth, "rho", where + ":truth"))
        except (TypeError, ValueError) as exc:
            raise BundleFormatError(f"{where}:truth: {exc}") from None
        if Pi.shape[0] != N or B.shape[:2] != (L, J) or B.shape[2] != Pi.shape[1]:
            raise BundleFormatError(f"{where}:truth: Pi {Pi.shape} / B {B.shape} inconsistent with N={N}, J={J}, L={L}")
        pure = truth.get("pure_index")
        params = ModelParams(Pi, B, rho, M, tuple(pure) if pure is not None else None)
    return R, params, manifest
