"""Binary snapshots.

Layout (little endian): magic ``APEV1``; uint32 N1, N2, N3 and field count;
float64 time; per field a uint16 name length, the UTF-8 name and a uint8 rank
(3 for channel fields, 2 for plate fields); then the fields in header order as
row-major float64 arrays.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import Grid
from .solver import State

MAGIC = b"APEV1"
FIELDS = ("v1", "v2", "v3", "R", "w", "w_t")


class SnapshotError(OSError):
    pass


def encode(state: State) -> bytes:
    g = state.grid
    arrays = {"v1": state.v[0], "v2": state.v[1], "v3": state.v[2], "R": state.R,
              "w": state.w, "w_t": state.w_t}
    head = [MAGIC, struct.pack("<4Id", g.n1, g.n2, g.n3, len(FIELDS), float(state.t))]
    for name in FIELDS:
        raw = name.encode()
        head.append(struct.pack("<H", len(raw)) + raw + struct.pack("<B", arrays[name].ndim))
    body = [np.ascontiguousarray(arrays[n], dtype="<f8").tobytes() for n in FIELDS]
    return b"".join(head + body)


def decode(data: bytes, grid: Grid | None = None) -> State:
    if data[:5] != MAGIC:
        raise SnapshotError("not an APEV1 snapshot")
    pos = 5
    try:
        n1, n2, n3, count, t = struct.unpack_from("<4Id", data, pos)
        pos += struct.calcsize("<4Id")
        specs = []
        for _ in range(count):
            (length,) = struct.unpack_from("<H", data, pos)
            name = data[pos + 2: pos + 2 + length].decode()
            (rank,) = struct.unpack_from("<B", data, pos + 2 + length)
            pos += 3 + length
            specs.append((name, rank))
    except (struct.error, UnicodeDecodeError) as exc:
        raise SnapshotError(f"corrupt snapshot header: {exc}") from exc
    grid = grid or Grid(n1, n2, n3)
    if (grid.n1, grid.n2, grid.n3) != (n1, n2, n3):
        raise SnapshotError(f"snapshot grid {n1}x{n2}x{n3} does not match {grid}")
    arrays = {}
    for name, rank in specs:
        shape = grid.shape if rank == 3 else grid.bshape
        size = int(np.prod(shape)) * 8
        if pos + size > len(data):
            raise SnapshotError(f"snapshot truncated in field {name!r}")
        arrays[name] = np.frombuffer(data, "<f8", int(np.prod(shape)), pos).reshape(shape).copy()
        pos += size
    missing = set(FIELDS) - set(arrays)
    if missing:
        raise SnapshotError(f"snapshot lacks fields {sorted(missing)}")
    v = np.stack([arrays["v1"], arrays["v2"], arrays["v3"]])
    return State(grid, t, v, arrays["R"], arrays["w"], arrays["w_t"])


def write_snapshot(path, state: State) -> None:
    Path(path).write_bytes(encode(state))


def read_snapshot(path, grid: Grid | None = None) -> State:
    return decode(Path(path).read_bytes(), grid)
