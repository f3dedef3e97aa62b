"""CSV interchange for matrices, vectors and solutions.

Matrices carry a one-line ``# rows,cols,seed`` header followed by one CSV row
per matrix row; vectors are one value per line. Values are written with 17
significant digits so that a write/read cycle is exact.
"""
from __future__ import annotations

import csv
import io as _io
from pathlib import Path

import numpy as np

from .problem import SensingMatrix
from .solver import LassoSolution

FLOAT_FMT = "%.17g"
SOLUTION_META = ("lambda", "N", "iterations", "duality_gap", "atr_inf", "pairing_defect", "s_lambda")


class FormatError(ValueError):
    """A file exists but does not follow the expected layout."""


def write_matrix(path, A: SensingMatrix) -> None:
    buf = _io.StringIO()
    buf.write(f"# {A.rows},{A.cols},{A.seed}\n")
    np.savetxt(buf, A.entries, fmt=FLOAT_FMT, delimiter=",")
    Path(path).write_text(buf.getvalue())


def read_matrix(path) -> SensingMatrix:
    text = Path(path).read_text()
    head, _, body = text.partition("\n")
    if not head.startswith("#"):
        raise FormatError(f"{path}: missing '# rows,cols,seed' header")
    try:
        rows, cols, seed = (int(v) for v in head[1:].split(","))
    except ValueError as exc:
        raise FormatError(f"{path}: bad header {head!r}") from exc
    try:
        a = np.loadtxt(_io.StringIO(body), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if a.shape != (rows, cols):
        raise FormatError(f"{path}: header says {rows}x{cols}, body is {a.shape[0]}x{a.shape[1]}")
    return SensingMatrix(a, seed)


def write_vector(path, v) -> None:
    np.savetxt(path, np.asarray(v, dtype=float).reshape(-1), fmt=FLOAT_FMT)


def read_vector(path) -> np.ndarray:
    try:
        return np.loadtxt(path, ndmin=1, comments="#")
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_solution(path, sol: LassoSolution) -> None:
    meta = {
        "lambda": FLOAT_FMT % sol.lam,
        "N": str(sol.x.size),
        "iterations": str(sol.iterations),
        "duality_gap": FLOAT_FMT % sol.duality_gap,
        "atr_inf": FLOAT_FMT % sol.atr_inf,
        "pairing_defect": FLOAT_FMT % sol.pairing_defect,
        "s_lambda": str(sol.s_lambda),
    }
    with open(path, "w", newline="") as fh:
        for key in SOLUTION_META:
            fh.write(f"# {key}={meta[key]}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "value"])
        for j in np.flatnonzero(sol.x):
            w.writerow([int(j), FLOAT_FMT % sol.x[j]])


def read_solution(path) -> tuple[np.ndarray, dict]:
    """Return the dense solution vector and its metadata."""
    meta: dict = {}
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key] = val
            elif line != "index,value":
                idx, val = line.split(",")
                rows.append((int(idx), float(val)))
    if "N" not in meta or "lambda" not in meta:
        raise FormatError(f"{path}: missing solution metadata")
    x = np.zeros(int(meta["N"]))
    for idx, val in rows:
        x[idx] = val
    for key in ("N", "iterations", "s_lambda"):
        meta[key] = int(meta[key])
    for key in ("lambda", "duality_gap", "atr_inf", "pairing_defect"):
        meta[key] = float(meta[key])
    return x, meta


def write_rows(path, columns, rows, fmt: str = "%.12g") -> None:
    """Write dict rows as CSV with a fixed column order and float format."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_cell(row[c], fmt) for c in columns])


def format_cell(v, fmt: str = "%.12g") -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt % float(v)
    return str(v)
