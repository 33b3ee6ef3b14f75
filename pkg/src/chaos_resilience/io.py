"""Tensor file format and report serialization.

The JSON tensor format is

    {"degree": d, "dims": [n1, ..., nd],
     "entries": [{"idx": [i1, ..., id], "val": x}, ...]}

with 1-based indices, absent entries meaning zero, or the dense alternative

    {"degree": d, "dims": [n1, ..., nd], "dense": [...]}

in row-major order with the last index fastest.  Certificate sweeps export
one CSV row per radius with per-term columns; floats are printed with 17
significant digits so regression diffs are exact.
"""

from __future__ import annotations

import json
from typing import IO

import numpy as np

from .bounds import BoundReport
from .errors import TensorFormatError
from .tensor import CoeffTensor

__all__ = [
    "load_tensor",
    "tensor_from_dict",
    "save_tensor",
    "tensor_to_dict",
    "reports_to_csv",
    "float_repr",
]


def float_repr(x: float) -> str:
    return f"{x:.17g}"


def tensor_from_dict(payload: dict) -> CoeffTensor:
    if not isinstance(payload, dict):
        raise TensorFormatError("tensor payload must be a JSON object")
    try:
        degree = int(payload["degree"])
        dims = tuple(int(n) for n in payload["dims"])
    except (KeyError, TypeError, ValueError) as exc:
        raise TensorFormatError(f"missing or malformed degree/dims: {exc}") from exc
    if degree != len(dims):
        raise TensorFormatError(f"degree {degree} disagrees with dims of length {len(dims)}")
    if any(n <= 0 for n in dims):
        raise TensorFormatError(f"dims must be positive, got {dims}")

    if "dense" in payload:
        if degree > 3:
            raise TensorFormatError("dense storage is restricted to degree <= 3")
        flat = np.asarray(payload["dense"], dtype=np.float64).ravel()
        expected = int(np.prod(dims))
        if flat.size != expected:
            raise TensorFormatError(
                f"dense payload has {flat.size} values, dims {dims} need {expected}"
            )
        return CoeffTensor.from_dense(flat.reshape(dims), storage="dense")

    entries = payload.get("entries", [])
    if not isinstance(entries, list):
        raise TensorFormatError("entries must be a list")
    seen: dict[tuple, int] = {}
    idx_rows, vals = [], []
    for pos, entry in enumerate(entries):
        try:
            raw_idx = tuple(int(i) for i in entry["idx"])
            val = float(entry["val"])
        except (KeyError, TypeError, ValueError) as exc:
            raise TensorFormatError(f"malformed entry #{pos}: {entry!r} ({exc})") from exc
        if len(raw_idx) != degree:
            raise TensorFormatError(f"entry #{pos} has index arity {len(raw_idx)}, want {degree}")
        if any(not 1 <= raw_idx[p] <= dims[p] for p in range(degree)):
            raise TensorFormatError(f"entry #{pos} index {raw_idx} outside dims {dims}")
        if raw_idx in seen:
            raise TensorFormatError(
                f"entry #{pos} duplicates index {raw_idx} (first at #{seen[raw_idx]})"
            )
        seen[raw_idx] = pos
        idx_rows.append([i - 1 for i in raw_idx])
        vals.append(val)
    try:
        return CoeffTensor._from_internal(dims, np.asarray(idx_rows, dtype=np.int64).reshape(-1, degree), vals)
    except ValueError as exc:
        raise TensorFormatError(str(exc)) from exc


def load_tensor(source: str | IO) -> CoeffTensor:
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TensorFormatError(f"invalid JSON: {exc}") from exc
    return tensor_from_dict(payload)


def tensor_to_dict(f: CoeffTensor) -> dict:
    if f.storage == "dense" and f.dense_data is not None:
        return {
            "degree": f.degree,
            "dims": list(f.dims),
            "dense": f.dense_data.ravel().tolist(),
        }
    return {
        "degree": f.degree,
        "dims": list(f.dims),
        "entries": [
            {"idx": [int(i) + 1 for i in row], "val": float(v)}
            for row, v in zip(f.idx, f.vals)
        ],
    }


def save_tensor(f: CoeffTensor, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tensor_to_dict(f), fh)
        fh.write("\n")


def reports_to_csv(reports: list[BoundReport]) -> str:
    """One row per report; stable column order; LF line endings."""
    if not reports:
        raise ValueError("no reports to serialize")
    term_keys = list(reports[0].terms.keys())
    for rep in reports:
        if list(rep.terms.keys()) != term_keys:
            raise ValueError("reports disagree on term names")
    lines = [",".join(["r", *term_keys, "total_unclamped", "total"])]
    for rep in reports:
        cells = [str(rep.r)]
        cells += [float_repr(rep.terms[k]) for k in term_keys]
        cells += [float_repr(rep.total_unclamped), float_repr(rep.total)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
