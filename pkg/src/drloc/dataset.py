"""Dataset file: RSS pools plus training and test trajectories.

Byte layout (all little-endian)::

    magic        8 bytes   b"DRLOCDS\\0"
    version      u32       DATASET_VERSION
    header_len   u32
    header       header_len bytes of UTF-8 JSON (sorted keys):
                 grid, gateways [{id, x, y}], true_params [{n, b}],
                 noise_sigma, floor_dbm, seed, pool_shape [R, C, G, S],
                 train_shape [N, T], test_shape [M, T]
    pools        R*C*G*S float64, C order [row][col][gw][sample]; NaN = missing
    train        N records of: u64 seed | T*2 int32 (row, col) | T*G float64 RSS
    test         M records, same layout

Every record has the same width, so record k starts at a computable offset.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .env import Trajectory
from .grid import Gateway, GridMap, Position
from .radio import PathLossParams, RssDatabase

DATASET_MAGIC = b"DRLOCDS\x00"
DATASET_VERSION = 1


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    grid: GridMap
    gateways: list[Gateway]
    true_params: list[PathLossParams]
    noise_sigma: float
    floor: float
    seed: int
    db: RssDatabase
    train: list[Trajectory] = field(default_factory=list)
    test: list[Trajectory] = field(default_factory=list)


def _record_dtype(steps: int, n_gw: int) -> np.dtype:
    return np.dtype([("seed", "<u8"), ("cells", "<i4", (steps, 2)), ("rss", "<f8", (steps, n_gw))])


def _pack(trajs: list[Trajectory], steps: int, n_gw: int) -> bytes:
    rec = np.zeros(len(trajs), dtype=_record_dtype(steps, n_gw))
    for i, t in enumerate(trajs):
        if len(t) != steps or t.rss_seq.shape[1] != n_gw:
            raise DatasetError("all trajectories in a file must share length and gateway count")
        rec[i]["seed"] = t.seed
        rec[i]["cells"] = t.true_cells
        rec[i]["rss"] = t.rss_seq
    return rec.tobytes()


def _unpack(buf: bytes, offset: int, count: int, steps: int, n_gw: int) -> tuple[list[Trajectory], int]:
    dt = _record_dtype(steps, n_gw)
    end = offset + count * dt.itemsize
    if end > len(buf):
        raise DatasetError("dataset file truncated")
    rec = np.frombuffer(buf, dtype=dt, count=count, offset=offset)
    out = [Trajectory(r["cells"].astype(np.int64), r["rss"].astype(np.float64), int(r["seed"])) for r in rec]
    return out, end


def to_bytes(ds: Dataset) -> bytes:
    steps = len(ds.train[0]) if ds.train else (len(ds.test[0]) if ds.test else 0)
    n_gw = len(ds.gateways)
    header = {
        "grid": {"rows": ds.grid.rows, "cols": ds.grid.cols, "cell_size": ds.grid.cell_size, "origin": list(ds.grid.origin)},
        "gateways": [{"id": g.id, "x": g.position.x, "y": g.position.y} for g in ds.gateways],
        "true_params": [{"n": p.n, "b": p.b} for p in ds.true_params],
        "noise_sigma": ds.noise_sigma,
        "floor_dbm": ds.floor,
        "seed": ds.seed,
        "pool_shape": list(ds.db.pools.shape),
        "train_shape": [len(ds.train), steps],
        "test_shape": [len(ds.test), steps],
    }
    hb = json.dumps(header, sort_keys=True).encode()
    parts = [
        DATASET_MAGIC,
        struct.pack("<II", DATASET_VERSION, len(hb)),
        hb,
        np.ascontiguousarray(ds.db.pools, dtype="<f8").tobytes(),
        _pack(ds.train, steps, n_gw),
        _pack(ds.test, steps, n_gw),
    ]
    return b"".join(parts)


def from_bytes(buf: bytes) -> Dataset:
    if buf[:8] != DATASET_MAGIC:
        raise DatasetError("not a dataset file (bad magic)")
    version, hlen = struct.unpack_from("<II", buf, 8)
    if version != DATASET_VERSION:
        raise DatasetError(f"dataset format version {version}, expected {DATASET_VERSION}")
    h = json.loads(buf[16 : 16 + hlen])
    g = h["grid"]
    grid = GridMap(g["rows"], g["cols"], g["cell_size"], Position(*g["origin"]))
    gws = [Gateway(d["id"], Position(d["x"], d["y"])) for d in h["gateways"]]
    shape = tuple(h["pool_shape"])
    off = 16 + hlen
    size = int(np.prod(shape))
    if off + size * 8 > len(buf):
        raise DatasetError("dataset file truncated")
    pools = np.frombuffer(buf, dtype="<f8", count=size, offset=off).reshape(shape).astype(np.float64)
    off += size * 8
    n_gw = len(gws)
    train, off = _unpack(buf, off, h["train_shape"][0], h["train_shape"][1], n_gw)
    test, off = _unpack(buf, off, h["test_shape"][0], h["test_shape"][1], n_gw)
    if off != len(buf):
        raise DatasetError("trailing bytes in dataset file")
    return Dataset(
        grid,
        gws,
        [PathLossParams(p["n"], p["b"]) for p in h["true_params"]],
        h["noise_sigma"],
        h["floor_dbm"],
        h["seed"],
        RssDatabase(pools),
        train,
        test,
    )


def save(path, ds: Dataset) -> None:
    with open(path, "wb") as f:
        f.write(to_bytes(ds))


def load(path) -> Dataset:
    with open(path, "rb") as f:
        return from_bytes(f.read())
