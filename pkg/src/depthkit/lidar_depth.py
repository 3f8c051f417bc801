"""Lidar points -> sparse depth image -> dense depth image.

Three stages, each data-parallel over output rows:

1. ``rasterize``: z-buffered projection of camera-frame points.
2. ``preserve_characteristics``: dilate near returns so thin foreground
   structures survive completion.
3. ``complete``: normalized inverse-distance (Shepard) fill inside a
   ``(2*ngrid+1)**2`` window.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ._parallel import ordered_map, split_range
from .depthmap import DenseDepthMap, DepthMap, SparseDepthMap
from .geometry import CameraIntrinsics, Pose, global_to_camera, project_points

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompletionParams:
    """Knobs for the lidar densification stages.

    ngrid: completion window radius; ngrid=4 is a 9x9 window.
    spread_radius: near-pixel dilation radius; 1 is a 3x3 window.
    asymmetric_spread: use an even ``2*spread_radius`` window with offsets
        ``-(spread_radius-1) .. spread_radius`` (radius 2 gives 4x4).
    near_threshold: depths strictly below this (meters) are dilated.
    """

    ngrid: int = 4
    spread_radius: int = 1
    near_threshold: float = 15.0
    asymmetric_spread: bool = False

    def __post_init__(self):
        if int(self.ngrid) != self.ngrid or self.ngrid < 1:
            raise ValueError(f"ngrid must be an integer >= 1, got {self.ngrid}")
        if int(self.spread_radius) != self.spread_radius or self.spread_radius < 0:
            raise ValueError(f"spread_radius must be an integer >= 0, got {self.spread_radius}")
        if self.asymmetric_spread and self.spread_radius < 1:
            raise ValueError("asymmetric_spread needs spread_radius >= 1")
        if not self.near_threshold > 0:
            raise ValueError(f"near_threshold must be > 0, got {self.near_threshold}")

    @property
    def spread_offsets(self) -> range:
        r = self.spread_radius
        if self.asymmetric_spread:
            return range(-(r - 1), r + 1)
        return range(-r, r + 1)


def round_half_away(x: np.ndarray) -> np.ndarray:
    """MATLAB-style round(): halves go away from zero."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def rasterize(points_cam, intr: CameraIntrinsics, workers: int = 1) -> tuple[SparseDepthMap, int]:
    """Z-buffer camera-frame points into a sparse depth image.

    Returns the map and the number of dropped points (behind the camera or
    landing outside the image). When several points hit one pixel the
    smallest depth wins.
    """
    H, W = intr.image_size
    pts = np.asarray(points_cam, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        return SparseDepthMap.empty(H, W), 0

    u, v, z, in_front = project_points(intr, pts)
    col = round_half_away(np.where(in_front, u, -1.0))
    row = round_half_away(np.where(in_front, v, -1.0))
    keep = in_front & (col >= 0) & (col < W) & (row >= 0) & (row < H)
    dropped = int(len(pts) - keep.sum())

    flat = (row[keep] * W + col[keep]).astype(np.int64)
    depth = z[keep]

    def _chunk(bounds):
        a, b = bounds
        buf = np.full(H * W, np.inf)
        np.minimum.at(buf, flat[a:b], depth[a:b])
        return buf

    zbuf = np.full(H * W, np.inf)
    for part in ordered_map(_chunk, split_range(len(flat), workers), workers):
        np.minimum(zbuf, part, out=zbuf)
    zbuf = zbuf.reshape(H, W)
    valid = np.isfinite(zbuf)
    return SparseDepthMap(np.where(valid, zbuf, 0.0), valid), dropped


def _near_source(depth_map: DepthMap, threshold: float):
    near = depth_map.valid & (depth_map.values < threshold)
    return near, np.where(near, depth_map.values, np.inf)


def preserve_characteristics(
    depth_map: DepthMap, params: CompletionParams, workers: int = 1
) -> SparseDepthMap:
    """Spread near depths into their window, never increasing any pixel.

    Targets are invalid pixels and pixels holding a strictly larger depth;
    the near source pixels themselves are left as they are. Reads only the
    input map, so the result does not depend on visiting order.
    """
    H, W = depth_map.shape
    offs = list(params.spread_offsets)
    near, src = _near_source(depth_map, params.near_threshold)
    if not near.any() or offs == [0]:
        return SparseDepthMap(depth_map.values, depth_map.valid)

    lo, hi = min(offs), max(offs)
    # padded[y + hi, x + hi] = src[y, x]
    padded = np.full((H + hi - lo, W + hi - lo), np.inf)
    padded[hi : hi + H, hi : hi + W] = src

    def _rows(bounds):
        a, b = bounds
        best = np.full((b - a, W), np.inf)
        for dy in offs:
            for dx in offs:
                # source pixel = target - offset
                ys, xs = hi - dy, hi - dx
                np.minimum(best, padded[ys + a : ys + b, xs : xs + W], out=best)
        return best

    spread = np.vstack(ordered_map(_rows, split_range(H, workers), workers))
    current = np.where(depth_map.valid, depth_map.values, np.inf)
    out = np.where(near, current, np.minimum(current, spread))
    valid = np.isfinite(out)
    return SparseDepthMap(np.where(valid, out, 0.0), valid)


def completion_offsets(ngrid: int) -> list[tuple[int, int, float]]:
    """Window offsets with inverse-distance weights, in fixed summation order."""
    return [
        (dy, dx, 1.0 / np.hypot(dy, dx))
        for dy in range(-ngrid, ngrid + 1)
        for dx in range(-ngrid, ngrid + 1)
        if (dy, dx) != (0, 0)
    ]


def complete(depth_map: DepthMap, params: CompletionParams, workers: int = 1) -> DenseDepthMap:
    """Fill invalid pixels with the inverse-distance weighted mean of valid
    window neighbours. Valid pixels pass through untouched; pixels with no
    valid neighbour stay invalid.
    """
    H, W = depth_map.shape
    n = params.ngrid
    vals = np.zeros((H + 2 * n, W + 2 * n))
    mask = np.zeros((H + 2 * n, W + 2 * n))
    vals[n : n + H, n : n + W] = depth_map.values
    mask[n : n + H, n : n + W] = depth_map.valid
    offsets = completion_offsets(n)

    def _rows(bounds):
        a, b = bounds
        num = np.zeros((b - a, W))
        den = np.zeros((b - a, W))
        for dy, dx, w in offsets:
            sl = (slice(n + dy + a, n + dy + b), slice(n + dx, n + dx + W))
            num += w * vals[sl]
            den += w * mask[sl]
        return num, den

    parts = ordered_map(_rows, split_range(H, workers), workers)
    num = np.vstack([p[0] for p in parts])
    den = np.vstack([p[1] for p in parts])

    fill = ~depth_map.valid & (den > 0)
    out = depth_map.values.copy()
    out[fill] = num[fill] / den[fill]
    return DenseDepthMap(out, depth_map.valid | fill)


def lidar_pipeline(
    points_global,
    body_pose: Pose,
    camera_pose: Pose,
    intr: CameraIntrinsics,
    params: CompletionParams,
    *,
    preserve: bool = True,
    completion: bool = True,
    workers: int = 1,
) -> DepthMap:
    """Global-frame cloud to depth image: transform, rasterize, preserve, complete.

    ``preserve=False`` / ``completion=False`` skip the respective stage (the
    ablations behind the no-preserve and no-completion comparisons).
    """
    pts = np.asarray(points_global, dtype=float).reshape(-1, 3)
    cam = global_to_camera(body_pose, camera_pose, pts) if len(pts) else pts
    sparse, dropped = rasterize(cam, intr, workers=workers)
    log.info("rasterized %d points, dropped %d", len(pts), dropped)
    if preserve:
        sparse = preserve_characteristics(sparse, params, workers=workers)
    if not completion:
        return sparse
    return complete(sparse, params, workers=workers)


def window_coverage(valid: np.ndarray, radius: int) -> np.ndarray:
    """Pixels with at least one ``valid`` pixel inside their (2r+1)^2 window."""
    from scipy.ndimage import maximum_filter

    return maximum_filter(valid.astype(np.uint8), size=2 * radius + 1, mode="constant") > 0
