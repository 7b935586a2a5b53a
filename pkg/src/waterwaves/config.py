"""Run configuration: flat ``key = value`` files with a closed key set."""

import math
import os
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import ParseError, ValidationError
from .evolution import EvolutionParams

IC_KINDS = ("standing_wave", "traveling_wave_linear", "custom_file")
BULK_FORMATS = ("none", "text", "binary")
AUTO = ("auto", "none", "")


@dataclass(frozen=True)
class RunConfig:
    n_x: int = 128
    n_z: int = 64
    length: float = 2.0 * math.pi
    g: float = 1.0
    h_b: float = 1.0
    delta: float | None = None
    dt: float | None = None
    t_end: float = 10.0
    snapshot_stride: int = 10
    dealias: bool = True
    cg_tol: float = 1e-10
    cg_max_iter: int | None = None
    ic_kind: str = "standing_wave"
    ic_amplitude: float = 1e-3
    ic_wavenumber: float = 2.0
    ic_file: str | None = None
    taylor_threshold: float | None = None
    output_path: str = "snapshots.jsonl"
    bulk_output: str = "none"
    seed: int = 0

    def __post_init__(self):
        validate(self)

    def evolution_params(self):
        return EvolutionParams(
            n_x=self.n_x,
            n_z=self.n_z,
            length=self.length,
            g=self.g,
            h_b=self.h_b,
            delta=self.delta,
            dt=self.dt,
            t_end=self.t_end,
            dealias_on=self.dealias,
            cg_tol=self.cg_tol,
            cg_max_iter=self.cg_max_iter,
        )

    @property
    def threshold(self):
        return 0.5 * self.g if self.taylor_threshold is None else self.taylor_threshold

    def to_dict(self):
        return asdict(self)


KEYS = {f.name: f for f in fields(RunConfig)}
_INTS = {"n_x", "n_z", "snapshot_stride", "cg_max_iter", "seed"}
_BOOLS = {"dealias"}
_STRS = {"ic_kind", "ic_file", "output_path", "bulk_output"}
_OPTIONAL = {"delta", "dt", "cg_max_iter", "ic_file", "taylor_threshold"}


def _convert(key, raw, line):
    text = raw.strip()
    if key in _OPTIONAL and text.lower() in AUTO:
        return None
    try:
        if key in _BOOLS:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if key in _INTS:
            value = float(text)
            if value != int(value):
                raise ValueError(text)
            return int(value)
        if key in _STRS:
            return text
        return float(text)
    except ValueError:
        raise ValidationError(key, f"cannot parse {text!r} (line {line})") from None


def _require(cond, key, reason):
    if not cond:
        raise ValidationError(key, reason)


def validate(c):
    n = c.n_x
    _require(n >= 8 and n % 2 == 0 and not (n & (n - 1)), "n_x", "must be a power of two >= 8")
    _require(c.n_z >= 8, "n_z", "must be >= 8")
    for key in ("length", "g", "h_b", "t_end"):
        value = getattr(c, key)
        _require(math.isfinite(value) and value > 0, key, "must be positive")
    _require(c.delta is None or (math.isfinite(c.delta) and c.delta >= 0), "delta", "must be >= 0")
    _require(c.dt is None or (math.isfinite(c.dt) and c.dt > 0), "dt", "must be positive")
    _require(c.snapshot_stride >= 1, "snapshot_stride", "must be >= 1")
    _require(0 < c.cg_tol <= 1e-4, "cg_tol", "must lie in (0, 1e-4]")
    _require(c.cg_max_iter is None or c.cg_max_iter >= 1, "cg_max_iter", "must be >= 1")
    _require(c.ic_kind in IC_KINDS, "ic_kind", f"must be one of {', '.join(IC_KINDS)}")
    _require(math.isfinite(c.ic_amplitude) and c.ic_amplitude >= 0, "ic_amplitude", "must be >= 0")
    modes = c.ic_wavenumber * c.length / (2.0 * math.pi)
    _require(
        math.isfinite(modes) and abs(modes - round(modes)) < 1e-9 and 0 <= round(modes) < c.n_x // 2,
        "ic_wavenumber",
        "must be a resolved multiple of 2*pi/length",
    )
    if c.ic_kind == "custom_file":
        _require(c.ic_file is not None, "ic_file", "required when ic_kind = custom_file")
    _require(
        c.taylor_threshold is None or math.isfinite(c.taylor_threshold),
        "taylor_threshold",
        "must be finite",
    )
    _require(c.bulk_output in BULK_FORMATS, "bulk_output", f"must be one of {', '.join(BULK_FORMATS)}")
    parent = os.path.dirname(os.path.abspath(c.output_path))
    _require(os.path.isdir(parent) and os.access(parent, os.W_OK), "output_path", "directory is not writable")


def parse_config_text(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, line, "expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ParseError(lineno, key)
        if key in values:
            raise ParseError(lineno, key, "duplicate key")
        values[key] = _convert(key, value, lineno)
    return RunConfig(**values)


def parse_config(path):
    """Read and validate a configuration file.

    Raises
    ------
    ParseError
        Malformed line, unknown or duplicate key.
    ValidationError
        A value is out of range or unparsable.
    """
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def load_custom_ic(path, n_x):
    """Two whitespace-separated columns (eta, psi), one row per grid point."""
    data = np.loadtxt(path, ndmin=2)
    if data.shape != (n_x, 2):
        raise ValidationError("ic_file", f"expected {n_x} rows of (eta, psi), got shape {data.shape}")
    return data[:, 0].copy(), data[:, 1].copy()
