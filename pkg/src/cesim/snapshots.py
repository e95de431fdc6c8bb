"""Field snapshot files (format ``CESIM-FIELD-1``).

A snapshot is a text header of ``key value`` lines, terminated by ``end``,
followed by the interior values.  Rows run over j (the y index, bottom to
top) and each row holds the nx values along x.  The payload is either ASCII
(one row per line, 17 significant digits, exact round trip) or raw
little-endian float64 in the same row-major order.

    CESIM-FIELD-1
    name n
    nx 64
    ny 64
    Lx 1
    Ly 1
    time 0.5
    encoding ascii
    end
    <payload>
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from cesim.grid import Grid, ScalarField

MAGIC = "CESIM-FIELD-1"
ENCODINGS = ("ascii", "binary")


def write_snapshot(path: str | Path, f: ScalarField, time: float, encoding: str = "ascii") -> None:
    if encoding not in ENCODINGS:
        raise ValueError(f"unknown encoding {encoding!r}")
    g = f.grid
    header = [
        MAGIC,
        f"name {f.name or 'field'}",
        f"nx {g.nx}",
        f"ny {g.ny}",
        f"Lx {g.Lx!r}",
        f"Ly {g.Ly!r}",
        f"time {float(time)!r}",
        f"encoding {encoding}",
        "end",
    ]
    rows = np.ascontiguousarray(f.interior.T)
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if encoding == "ascii":
            buf = io.StringIO()
            np.savetxt(buf, rows, fmt="%.17g")
            fh.write(buf.getvalue().encode("ascii"))
        else:
            fh.write(rows.astype("<f8").tobytes())


def read_snapshot(path: str | Path) -> tuple[ScalarField, float]:
    """Return (field, time); the field's ghost layer is left unfilled."""
    with open(path, "rb") as fh:
        data = fh.read()
    meta, pos = {}, 0
    first = True
    while True:
        nl = data.index(b"\n", pos)
        line = data[pos:nl].decode("ascii").strip()
        pos = nl + 1
        if first:
            if line != MAGIC:
                raise ValueError(f"{path}: not a {MAGIC} file (got {line!r})")
            first = False
            continue
        if line == "end":
            break
        key, _, value = line.partition(" ")
        meta[key] = value.strip()
    grid = Grid(int(meta["nx"]), int(meta["ny"]), float(meta["Lx"]), float(meta["Ly"]))
    payload = data[pos:]
    if meta.get("encoding", "ascii") == "ascii":
        rows = np.loadtxt(io.StringIO(payload.decode("ascii")), ndmin=2)
    else:
        rows = np.frombuffer(payload, dtype="<f8").reshape(grid.ny, grid.nx)
    if rows.shape != (grid.ny, grid.nx):
        raise ValueError(f"{path}: payload shape {rows.shape} does not match header {grid.ny}x{grid.nx}")
    return ScalarField.from_interior(grid, rows.T.copy(), meta.get("name", "")), float(meta["time"])
