"""CSV snapshots of nodal fields.

Layout::

    # t=<t> J=<J> h=<h> L0=<L0> L1=<L1>
    U[0,0],U[0,1],...,U[0,J]
    ...
    U[J,0],...,U[J,J]

Rows follow ``j`` (x), columns ``m`` (y).  Values are written with 17
significant digits, enough to round-trip any double.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import SnapshotFormatError
from .grid import GridSpec

_HEADER = re.compile(
    r"^# t=(?P<t>\S+) J=(?P<J>\d+) h=(?P<h>\S+) L0=(?P<L0>\S+) L1=(?P<L1>\S+)$"
)


def _fmt(v, digits):
    return format(float(v), f".{digits}g")


def write_snapshot(field, t, grid: GridSpec, path, digits=17):
    field = np.asarray(field, dtype=float)
    if field.shape != (grid.J + 1, grid.J + 1):
        raise ValueError(f"field shape {field.shape} does not match J = {grid.J}")
    lines = [f"# t={_fmt(t, 17)} J={grid.J} h={_fmt(grid.h, 17)} "
             f"L0={_fmt(grid.L0, 17)} L1={_fmt(grid.L1, 17)}"]
    lines += [",".join(_fmt(v, digits) for v in row) for row in field]
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as err:
        raise OSError(f"cannot write snapshot {path}: {err.strerror}") from err


def read_snapshot(path):
    """Return ``(field, t, meta)`` with ``meta = {"J", "h", "L0", "L1"}``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SnapshotFormatError(f"{path}: line 1: empty file")
    m = _HEADER.match(lines[0])
    if m is None:
        raise SnapshotFormatError(f"{path}: line 1: unrecognized header {lines[0]!r}")
    try:
        t = float(m["t"])
        meta = {"J": int(m["J"]), "h": float(m["h"]),
                "L0": float(m["L0"]), "L1": float(m["L1"])}
    except ValueError:
        raise SnapshotFormatError(f"{path}: line 1: bad header value in {lines[0]!r}") from None
    n = meta["J"] + 1
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            row = [float(tok) for tok in line.split(",")]
        except ValueError:
            raise SnapshotFormatError(f"{path}: line {lineno}: non-numeric entry") from None
        if len(row) != n:
            raise SnapshotFormatError(
                f"{path}: line {lineno}: expected {n} entries, found {len(row)}")
        rows.append(row)
    if len(rows) != n:
        raise SnapshotFormatError(
            f"{path}: expected {n} data rows for J = {meta['J']}, found {len(rows)}")
    return np.array(rows), t, meta
