"""Cube files, run configuration and CSV output.

Cube file layout (little-endian)::

    magic    4s   b"LTCI"
    version  u32  1
    domain   u8   0 = frequency/pulse, 1 = range/pulse
    K, M, K_valid        u32 x 3
    fc, fs, Br, PRF, sigma2  f64 x 5
    payload  K*M complex128, pulse-major (all K samples of pulse 1 first)

Run configuration is line-oriented ``key = value`` text grouped in
``[section]`` blocks; ``[target]`` may repeat.  ``#`` starts a comment.
"""

from __future__ import annotations

import csv
import io as _io
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ltci.signal_model import FreqPulseCube, MotionParams, RadarParams, RangePulseCube, Target

MAGIC = b"LTCI"
VERSION = 1
_HEADER = struct.Struct("<4sIBIII5d")
DOMAIN_FREQ = 0
DOMAIN_RANGE = 1


class ConfigError(ValueError):
    def __init__(self, msg: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + msg)


class CubeFormatError(ValueError):
    pass


# --------------------------------------------------------------------------
# cube files
# --------------------------------------------------------------------------

def atomic_write(path, data: bytes) -> None:
    """Write to a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_cube(cube, sigma2: float = 0.0) -> bytes:
    p = cube.params
    domain = DOMAIN_RANGE if isinstance(cube, RangePulseCube) else DOMAIN_FREQ
    head = _HEADER.pack(MAGIC, VERSION, domain, p.K, p.M, p.K_valid, p.fc, p.fs, p.Br, p.PRF, float(sigma2))
    payload = np.ascontiguousarray(cube.data.T).astype("<c16", copy=False).tobytes()
    return head + payload


def write_cube(path, cube, sigma2: float = 0.0) -> None:
    atomic_write(path, encode_cube(cube, sigma2))


def decode_cube(buf: bytes):
    """Return ``(cube, sigma2)``; the cube type follows the domain flag."""
    if len(buf) < _HEADER.size:
        raise CubeFormatError("file shorter than the header")
    magic, version, domain, K, M, kv, fc, fs, Br, PRF, sigma2 = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise CubeFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CubeFormatError(f"unsupported version {version}")
    if domain not in (DOMAIN_FREQ, DOMAIN_RANGE):
        raise CubeFormatError(f"bad domain flag {domain}")
    need = K * M * 16
    body = buf[_HEADER.size:]
    if len(body) != need:
        raise CubeFormatError(f"payload is {len(body)} bytes, expected {need}")
    params = RadarParams(fc=fc, fs=fs, Br=Br, PRF=PRF, M=M, K=K, K_valid=kv)
    data = np.frombuffer(body, dtype="<c16").reshape(M, K).T.astype(np.complex128)
    cls = RangePulseCube if domain == DOMAIN_RANGE else FreqPulseCube
    return cls(data, params), sigma2


def read_cube(path):
    with open(path, "rb") as f:
        return decode_cube(f.read())


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

_ORDER_KEYS = ("velocity", "accel", "jerk")

SCHEMA = {
    "radar": {
        "fc": float, "fs": float, "Br": float, "PRF": float, "M": int, "K": int,
        "K_valid": int, "sigma2": float, "seed": int, "domain": str,
    },
    "target": {
        "amplitude": complex, "range": float, "velocity": float, "accel": float, "jerk": float,
    },
    "space": {
        "velocity_min": float, "velocity_max": float, "accel_min": float, "accel_max": float,
        "jerk_min": float, "jerk_max": float, "alpha": "floats", "roi_start": int, "roi_stop": int,
    },
    "detector": {
        "name": str, "p_fa": float, "radius": int, "floor_db": float, "noise_bins": int,
        "project": bool, "taps": int,
    },
    "bench": {
        "snr_min": float, "snr_max": float, "snr_step": float, "trials": int, "seed": int,
        "detectors": "names", "range_jitter": bool, "ratio_min": float, "ratio_max": float,
        "ratio_step": float, "roi": int, "budget": float, "window": str,
    },
}

REQUIRED_RADAR = ("fc", "fs", "Br", "PRF", "M", "K")


def _convert(kind, raw: str):
    if kind is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if kind is complex:
        return complex(raw.replace(" ", ""))
    if kind == "floats":
        return tuple(float(x) for x in raw.split(","))
    if kind == "names":
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    return raw


@dataclass
class RunConfig:
    radar: dict = field(default_factory=dict)
    targets: list = field(default_factory=list)
    space: dict = field(default_factory=dict)
    detector: dict = field(default_factory=dict)
    bench: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)   # (section, key) -> line, for later errors

    # ---- typed views ----------------------------------------------------
    def radar_params(self) -> RadarParams:
        missing = [k for k in REQUIRED_RADAR if k not in self.radar]
        if missing:
            raise ConfigError(f"[radar] missing required keys: {', '.join(missing)}")
        r = self.radar
        try:
            return RadarParams(fc=r["fc"], fs=r["fs"], Br=r["Br"], PRF=r["PRF"], M=r["M"], K=r["K"],
                               K_valid=r.get("K_valid"))
        except ValueError as e:
            raise ConfigError(f"[radar] {e}", self.lines.get(("radar", "fc"))) from None

    def target_list(self) -> list:
        out = []
        for i, t in enumerate(self.targets):
            if "range" not in t or "velocity" not in t:
                raise ConfigError(f"[target] #{i + 1} needs range and velocity", t.get("_line"))
            c = [t["range"], t["velocity"]]
            if "jerk" in t and "accel" not in t:
                raise ConfigError("jerk given without accel", t.get("_line"))
            c += [t[k] for k in ("accel", "jerk") if k in t]
            try:
                out.append(Target(t.get("amplitude", 1.0), MotionParams(c)))
            except ValueError as e:
                raise ConfigError(f"[target] #{i + 1}: {e}", t.get("_line")) from None
        return out

    def bounds(self) -> tuple:
        s = self.space
        b = []
        for k in _ORDER_KEYS:
            lo, hi = s.get(f"{k}_min"), s.get(f"{k}_max")
            if lo is None and hi is None:
                break
            if lo is None or hi is None:
                raise ConfigError(f"[space] {k}_min and {k}_max go together", self.lines.get(("space", f"{k}_min")))
            b.append((lo, hi))
        if not b:
            raise ConfigError("[space] needs at least velocity_min / velocity_max")
        return tuple(b)

    def roi(self):
        s = self.space
        if "roi_start" not in s and "roi_stop" not in s:
            return None
        if "roi_start" not in s or "roi_stop" not in s:
            raise ConfigError("[space] roi_start and roi_stop go together")
        if s["roi_stop"] <= s["roi_start"]:
            raise ConfigError("[space] roi_stop must exceed roi_start", self.lines.get(("space", "roi_stop")))
        return np.arange(s["roi_start"], s["roi_stop"])


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    section = None
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("unterminated section header", lineno, len(raw.rstrip()))
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno, raw.index("[") + 2)
            if section == "target":
                current = {"_line": lineno}
                cfg.targets.append(current)
            else:
                current = getattr(cfg, section)
            continue
        if "=" not in line:
            raise ConfigError("expected key = value", lineno, 1)
        if section is None:
            raise ConfigError("key outside any section", lineno, 1)
        key, val = (x.strip() for x in line.split("=", 1))
        col = raw.index(key) + 1 if key in raw else 1
        kinds = SCHEMA[section]
        if key not in kinds:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno, col)
        if key in current and key != "_line":
            raise ConfigError(f"duplicate key {key!r}", lineno, col)
        try:
            current[key] = _convert(kinds[key], val)
        except ValueError as e:
            eq = raw.index("=") + 1
            vcol = eq + len(raw[eq:]) - len(raw[eq:].lstrip()) + 1
            raise ConfigError(f"bad value for {key}: {e}", lineno, vcol) from None
        cfg.lines[(section, key)] = lineno
    return cfg


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


# --------------------------------------------------------------------------
# tables
# --------------------------------------------------------------------------

def format_table(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def write_table(path, header, rows) -> str:
    text = format_table(header, rows)
    if path is None:
        return text
    atomic_write(path, text.encode("utf-8"))
    return text
