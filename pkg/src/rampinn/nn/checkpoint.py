"""Deterministic checkpoint files: a JSON manifest line plus raw array bytes.

The format is a single file whose first line is a JSON header describing
named arrays (dtype, shape, byte length) and optional metadata, followed by
the arrays' raw little-endian bytes in manifest order.  Writing the same
arrays twice produces identical bytes, and loading restores them bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

_MAGIC = "rampinn-checkpoint-v1"


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    entries = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        blob = arr.tobytes()
        entries.append(
            {
                "name": name,
                "dtype": arr.dtype.str,
                "shape": list(arr.shape),
                "nbytes": len(blob),
            }
        )
        blobs.append(blob)
    header = {"magic": _MAGIC, "meta": meta or {}, "arrays": entries}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)


def load_arrays(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("magic") != _MAGIC:
            raise ValueError(f"{path} is not a rampinn checkpoint")
        arrays = {}
        for entry in header["arrays"]:
            blob = fh.read(entry["nbytes"])
            arr = np.frombuffer(blob, dtype=np.dtype(entry["dtype"]))
            arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return arrays, header.get("meta", {})
