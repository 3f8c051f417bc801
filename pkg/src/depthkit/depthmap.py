"""Depth image containers shared by the lidar and stereo pipelines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Per-pixel metric depth with an explicit validity mask.

    ``values`` is zero wherever ``valid`` is False, so invalid pixels never leak
    a depth. Use :attr:`depth` for a NaN-masked float view.
    """

    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        valid = np.array(self.valid, dtype=bool)
        if values.ndim != 2 or values.shape != valid.shape:
            raise ValueError(f"values {values.shape} and mask {valid.shape} must be equal 2-D shapes")
        bad = valid & ~(np.isfinite(values) & (values > 0))
        if bad.any():
            raise ValueError(f"{int(bad.sum())} valid pixels have non-positive or non-finite depth")
        values[~valid] = 0.0
        values.flags.writeable = False
        valid.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    @classmethod
    def empty(cls, height: int, width: int):
        return cls(np.zeros((height, width)), np.zeros((height, width), dtype=bool))

    @classmethod
    def from_array(cls, depth: np.ndarray):
        """Build from an array where NaN, inf or <= 0 mean "no data"."""
        depth = np.asarray(depth, dtype=np.float64)
        valid = np.isfinite(depth) & (depth > 0)
        return cls(np.where(valid, depth, 0.0), valid)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def depth(self) -> np.ndarray:
        return np.where(self.valid, self.values, np.nan)

    def identical(self, other: "DepthMap") -> bool:
        """Bitwise equality of mask and values."""
        return (
            self.shape == other.shape
            and np.array_equal(self.valid, other.valid)
            and self.values.tobytes() == other.values.tobytes()
        )


class SparseDepthMap(DepthMap):
    """Rasterized lidar depth; most pixels invalid."""


class DenseDepthMap(DepthMap):
    """Completed (or stereo-derived) depth; holes only outside the filled region."""


#: fixed-point disparity units per pixel (int16 storage, 4 fractional bits)
DISP_SCALE = 16
INVALID_DISPARITY = np.iinfo(np.int16).min


@dataclass(frozen=True, eq=False)
class DisparityMap:
    """Disparity in 1/16 px fixed point, stored as int16.

    ``raw == INVALID_DISPARITY`` marks pixels without a match. Valid values lie
    in ``[min_disparity, min_disparity + num_disparities - 1]`` pixels.
    """

    raw: np.ndarray
    min_disparity: int = 0
    num_disparities: int = 64

    def __post_init__(self):
        raw = np.array(self.raw)
        if raw.ndim != 2:
            raise ValueError(f"disparity map must be 2-D, got shape {raw.shape}")
        if raw.dtype != np.int16:
            if np.any((raw < np.iinfo(np.int16).min) | (raw > np.iinfo(np.int16).max)):
                raise ValueError("fixed-point disparity outside int16 range")
            raw = raw.astype(np.int16)
        raw.flags.writeable = False
        object.__setattr__(self, "raw", raw)

    @classmethod
    def from_float(cls, disp: np.ndarray, min_disparity: int = 0, num_disparities: int = 64):
        """Quantize float disparities; NaN marks invalid, values are clamped to range."""
        disp = np.asarray(disp, dtype=float)
        valid = np.isfinite(disp)
        lo, hi = min_disparity * DISP_SCALE, (min_disparity + num_disparities - 1) * DISP_SCALE
        fixed = np.sign(disp) * np.floor(np.abs(disp) * DISP_SCALE + 0.5)
        fixed = np.clip(np.where(valid, fixed, lo), lo, hi)
        raw = np.where(valid, fixed, INVALID_DISPARITY).astype(np.int16)
        return cls(raw, min_disparity, num_disparities)

    @property
    def shape(self) -> tuple[int, int]:
        return self.raw.shape

    @property
    def max_disparity(self) -> int:
        return self.min_disparity + self.num_disparities - 1

    @property
    def valid(self) -> np.ndarray:
        return self.raw != INVALID_DISPARITY

    @property
    def disparity(self) -> np.ndarray:
        """Float disparity in pixels, NaN where invalid."""
        return np.where(self.valid, self.raw / DISP_SCALE, np.nan)

    def crop_columns(self, start: int) -> "DisparityMap":
        return DisparityMap(self.raw[:, start:], self.min_disparity, self.num_disparities)

    def identical(self, other: "DisparityMap") -> bool:
        return self.raw.shape == other.raw.shape and np.array_equal(self.raw, other.raw)
