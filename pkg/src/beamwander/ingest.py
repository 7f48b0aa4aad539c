"""Raw observations to canonical wander traces.

Weighted-centroid extraction from intensity frames (binary PGM files or a
CSV-of-frames), mean-centering, and lossless trace CSV I/O with a JSON
sidecar for units and the sample period.

Axis convention: x indexes columns, y indexes rows, origin at the center
of pixel (0, 0).
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

TRACE_HEADER = ["t_s", "x", "y"]
_SPACING_RTOL = 1e-6


@dataclass
class IntensityGrid:
    """Single non-negative intensity frame; pixel_pitch converts pixel
    coordinates to meters when known."""

    values: np.ndarray
    pixel_pitch: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("frame must be a 2-D array")
        if np.any(self.values < 0):
            raise ValueError("frame intensities must be non-negative")


@dataclass
class WanderTrace:
    """Centroid offset time series (beta_x, beta_y) at a fixed sample period."""

    xs: np.ndarray
    ys: np.ndarray
    sample_period: float
    units: str = "pixels"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ys = np.asarray(self.ys, dtype=float)
        if self.xs.size != self.ys.size:
            raise ValueError("xs and ys must have equal length")
        if not self.sample_period > 0:
            raise ValueError("sample_period must be positive")
        if not (np.all(np.isfinite(self.xs)) and np.all(np.isfinite(self.ys))):
            raise ValueError("trace values must be finite")

    def __len__(self) -> int:
        return int(self.xs.size)


def weighted_centroid(grid: IntensityGrid) -> tuple[float, float]:
    """Intensity-weighted centroid (x, y) in pixel coordinates."""
    g = grid.values
    total = g.sum()
    if total <= 0:
        raise ValueError("cannot centroid an all-zero frame")
    rows, cols = np.indices(g.shape)
    x = float((cols * g).sum() / total)
    y = float((rows * g).sum() / total)
    return x, y


def mean_center(trace: WanderTrace) -> WanderTrace:
    """Subtract the per-axis sample means; the removed means are recorded
    in the output metadata. Idempotent."""
    mx = float(trace.xs.mean())
    my = float(trace.ys.mean())
    meta = dict(trace.meta)
    meta["x_mean_removed"] = meta.get("x_mean_removed", 0.0) + mx
    meta["y_mean_removed"] = meta.get("y_mean_removed", 0.0) + my
    return WanderTrace(xs=trace.xs - mx, ys=trace.ys - my,
                       sample_period=trace.sample_period,
                       units=trace.units, meta=meta)


def centroid_trace(frames, sample_period: float,
                   threshold_fraction: float = 0.0) -> WanderTrace:
    """Per-frame weighted centroid, mean-centered.

    threshold_fraction > 0 zeroes pixels below that fraction of each
    frame's maximum before centroiding (background suppression knob,
    off by default). Units are pixels, or meters when the first frame
    carries a pixel_pitch.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("no frames given")
    shape = frames[0].values.shape
    xs, ys = [], []
    for idx, frame in enumerate(frames):
        if frame.values.shape != shape:
            raise ValueError(f"frame {idx} has shape {frame.values.shape}, "
                             f"expected {shape}")
        g = frame.values
        if threshold_fraction > 0:
            g = np.where(g >= threshold_fraction * g.max(), g, 0.0)
        try:
            cx, cy = weighted_centroid(IntensityGrid(g))
        except ValueError as exc:
            raise ValueError(f"frame {idx}: {exc}") from exc
        xs.append(cx)
        ys.append(cy)
    pitch = frames[0].pixel_pitch
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    units = "pixels"
    if pitch is not None:
        xs = xs * pitch
        ys = ys * pitch
        units = "m"
    return mean_center(WanderTrace(xs=xs, ys=ys, sample_period=sample_period,
                                   units=units))


def _sidecar_path(path: str) -> str:
    return path + ".json"


def write_trace(trace: WanderTrace, path: str) -> None:
    """Write `t_s,x,y` CSV at full round-trip precision plus a JSON sidecar
    with units and the sample period."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for i in range(len(trace)):
            t = i * trace.sample_period
            writer.writerow([repr(t), repr(float(trace.xs[i])),
                             repr(float(trace.ys[i]))])
    sidecar = {"units": trace.units, "sample_period_s": trace.sample_period}
    sidecar.update(trace.meta)
    with open(_sidecar_path(path), "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def read_trace(path: str) -> WanderTrace:
    """Read a `t_s,x,y` CSV; timestamps must be strictly increasing with
    uniform spacing to 1e-6 relative tolerance."""
    ts, xs, ys = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRACE_HEADER:
            raise ValueError(f"{path}: expected header '{','.join(TRACE_HEADER)}'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}: malformed row at line {lineno}")
            try:
                t, x, y = (float(v) for v in row)
            except ValueError as exc:
                raise ValueError(f"{path}: malformed row at line {lineno}") from exc
            ts.append(t)
            xs.append(x)
            ys.append(y)
    if len(ts) < 2:
        raise ValueError(f"{path}: need at least two rows")
    dt = ts[1] - ts[0]
    if dt <= 0:
        raise ValueError(f"{path}: timestamps not increasing at row 2")
    for i in range(1, len(ts)):
        step = ts[i] - ts[i - 1]
        if step <= 0 or not math.isclose(step, dt, rel_tol=_SPACING_RTOL):
            raise ValueError(f"{path}: non-uniform sample spacing at data row {i + 1}")
    units = ""
    meta = {}
    sidecar = _sidecar_path(path)
    if os.path.exists(sidecar):
        with open(sidecar) as fh:
            data = json.load(fh)
        units = data.pop("units", "")
        data.pop("sample_period_s", None)
        meta = data
    return WanderTrace(xs=np.asarray(xs), ys=np.asarray(ys), sample_period=dt,
                       units=units, meta=meta)


def read_pgm(path: str, pixel_pitch: float | None = None) -> IntensityGrid:
    """Read a binary (P5) PGM frame."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    i = 0
    while len(tokens) < 4 and i < len(data):
        # skip whitespace and '#' comments between header tokens
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if i < len(data) and data[i:i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i:i + 1].isspace():
            i += 1
        if start < i:
            tokens.append(data[start:i])
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary P5 PGM file")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    i += 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.uint8
    count = width * height
    pixels = np.frombuffer(data, dtype=dtype, count=count, offset=i)
    if pixels.size != count:
        raise ValueError(f"{path}: truncated pixel data")
    return IntensityGrid(values=pixels.reshape(height, width).astype(float),
                         pixel_pitch=pixel_pitch)


def read_frames_csv(path: str, pixel_pitch: float | None = None) -> list[IntensityGrid]:
    """Read a CSV-of-frames: first line `rows,cols`, then one flattened
    row-major frame per line."""
    frames = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) != 2:
            raise ValueError(f"{path}: first line must be 'rows,cols'")
        rows, cols = int(header[0]), int(header[1])
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            vals = np.asarray([float(v) for v in row])
            if vals.size != rows * cols:
                raise ValueError(f"{path}: frame at line {lineno} has "
                                 f"{vals.size} values, expected {rows * cols}")
            frames.append(IntensityGrid(values=vals.reshape(rows, cols),
                                        pixel_pitch=pixel_pitch))
    if not frames:
        raise ValueError(f"{path}: no frames found")
    return frames


def load_frames(path: str, pixel_pitch: float | None = None) -> list[IntensityGrid]:
    """Load frames from a directory of .pgm files (sorted by name) or a
    single CSV-of-frames."""
    if os.path.isdir(path):
        names = sorted(f for f in os.listdir(path) if f.lower().endswith(".pgm"))
        if not names:
            raise ValueError(f"{path}: no .pgm files found")
        return [read_pgm(os.path.join(path, n), pixel_pitch) for n in names]
    return read_frames_csv(path, pixel_pitch)
