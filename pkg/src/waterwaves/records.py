"""Line-delimited JSON snapshot streams and bulk side files."""

import json
import os

import numpy as np

from .errors import GridMismatch, InsufficientSnapshots
from .evolution import SurfaceState

SCHEMA_VERSION = 1


def _line(record):
    return json.dumps({"schema": SCHEMA_VERSION, **record}, allow_nan=False) + "\n"


class StreamWriter:
    """Owns the output file; each record goes out as one complete line."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w", encoding="utf-8")

    def write(self, record):
        self._fh.write(_line(record))
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def snapshot_record(step, state, hamiltonian, mass, bulk_file=None):
    return {
        "record": "snapshot",
        "step": int(step),
        "t": float(state.t),
        "eta": state.eta.tolist(),
        "psi": state.psi.tolist(),
        "hamiltonian": float(hamiltonian),
        "mass": float(mass),
        "bulk_file": bulk_file,
    }


def error_record(exc, step, state):
    return {
        "record": "error",
        "kind": type(exc).__name__,
        "message": str(exc),
        "step": int(step),
        "last_good": None
        if state is None
        else {"t": float(state.t), "eta": state.eta.tolist(), "psi": state.psi.tolist()},
    }


def read_stream(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def snapshots_from_records(records, n_x=None):
    states = []
    for rec in records:
        if rec.get("record") != "snapshot":
            continue
        if n_x is not None and len(rec["eta"]) != n_x:
            raise GridMismatch(f"snapshot has {len(rec['eta'])} points, config has n_x = {n_x}")
        states.append(SurfaceState(rec["t"], np.array(rec["eta"]), np.array(rec["psi"])))
    return states


def load_snapshots(path, n_x=None, minimum=3):
    records = read_stream(path)
    states = snapshots_from_records(records, n_x)
    if len(states) < minimum:
        raise InsufficientSnapshots(len(states), minimum)
    header = next((r for r in records if r.get("record") == "header"), None)
    return states, header


def write_bulk(base_path, step, snap, fmt):
    """Persist Phi, Q, P as a (3, n_z, n_x) row-major block; returns the file name."""
    block = np.stack([snap.Phi, snap.Q, snap.P])
    stem = f"{base_path}.bulk.{step:06d}"
    if fmt == "binary":
        name = stem + ".f64"
        block.astype("<f8").tofile(name)
    elif fmt == "text":
        name = stem + ".txt"
        np.savetxt(name, block.reshape(3, -1), header=f"Phi Q P shape={list(block.shape)}")
    else:
        raise ValueError(f"unknown bulk format {fmt!r}")
    return os.path.basename(name)


def read_bulk(path, shape):
    if path.endswith(".f64"):
        return np.fromfile(path, dtype="<f8").reshape(shape)
    return np.loadtxt(path).reshape(shape)
