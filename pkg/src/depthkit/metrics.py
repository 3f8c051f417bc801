"""Depth-map comparison and visualisation."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from .depthmap import DepthMap

#: histogram bucket edges in meters; the last bucket is open-ended
ERROR_BUCKETS = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0)


class NoOverlapError(ValueError):
    pass


@dataclass
class ErrorReport:
    mean_abs_error: float
    pixel_count: int
    histogram: list[int] = field(default_factory=list)
    bucket_edges: list[float] = field(default_factory=lambda: list(ERROR_BUCKETS))

    def to_text(self) -> str:
        lines = [
            f"mean_abs_error_m {self.mean_abs_error!r}",
            f"pixel_count {self.pixel_count}",
        ]
        for i, count in enumerate(self.histogram):
            lo = self.bucket_edges[i]
            hi = self.bucket_edges[i + 1] if i + 1 < len(self.bucket_edges) else math.inf
            lines.append(f"bucket {lo!r} {hi!r} {count}")
        lines.append(f"# avg error per pixel: {self.mean_abs_error:.6f} m over {self.pixel_count} pixels")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ErrorReport":
        return cls(**json.loads(text))

    @classmethod
    def from_text(cls, text: str) -> "ErrorReport":
        mae, count, hist, edges = None, None, [], []
        for line in text.splitlines():
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "mean_abs_error_m":
                mae = float(parts[1])
            elif parts[0] == "pixel_count":
                count = int(parts[1])
            elif parts[0] == "bucket":
                edges.append(float(parts[1]))
                hist.append(int(parts[3]))
            else:
                raise ValueError(f"unknown report line: {line!r}")
        if mae is None or count is None:
            raise ValueError("report lacks mean_abs_error_m or pixel_count")
        return cls(mae, count, hist, edges)


def mean_abs_error(pred: DepthMap, gt: DepthMap) -> ErrorReport:
    """Average |pred - gt| over pixels valid in both maps.

    Summation uses ``math.fsum`` (exactly rounded), so the result does not
    depend on pixel order and is symmetric in its arguments.
    """
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    both = pred.valid & gt.valid
    n = int(both.sum())
    if n == 0:
        raise NoOverlapError("no pixel is valid in both maps")
    err = np.abs(pred.values[both] - gt.values[both])
    edges = np.array(ERROR_BUCKETS + (np.inf,))
    hist, _ = np.histogram(err, bins=edges)
    return ErrorReport(math.fsum(err.tolist()) / n, n, hist.astype(int).tolist())


def load_lut() -> np.ndarray:
    text = resources.files("depthkit.data").joinpath("turbo_lut.txt").read_text()
    return np.loadtxt(text.splitlines(), dtype=np.uint8)


def colorize_depth(depth_map: DepthMap, d_min: float, d_max: float) -> np.ndarray:
    """Map depths linearly onto the turbo LUT; invalid pixels are black.

    d_min maps to entry 0, d_max to the last entry, and the midpoint to entry
    ``len(lut) // 2``. Depths outside the range are clamped.
    """
    if not d_min < d_max:
        raise ValueError(f"need d_min < d_max, got {d_min}, {d_max}")
    lut = load_lut()
    t = (depth_map.values - d_min) / (d_max - d_min)
    idx = np.floor(np.clip(t, 0.0, 1.0) * (len(lut) - 1) + 0.5).astype(np.int64)
    rgb = lut[idx]
    rgb[~depth_map.valid] = 0
    return rgb


def overlay_points(base: np.ndarray, depth_map: DepthMap, color=(255, 0, 0)) -> np.ndarray:
    """Paint every valid pixel of ``depth_map`` onto a copy of ``base`` (H, W, 3)."""
    base = np.asarray(base)
    if base.ndim != 3 or base.shape[:2] != depth_map.shape:
        raise ValueError(f"base {base.shape} does not match map {depth_map.shape}")
    out = base.copy()
    out[depth_map.valid] = np.asarray(color, dtype=base.dtype)
    return out
