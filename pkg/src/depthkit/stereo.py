"""Rectified-pair disparity: SAD block matching (BM) and semi-global matching (SGBM).

Images are float arrays in [0, 1]; matching costs are in 8-bit intensity
units (intensity * 255) so the usual integer P1/P2 conventions carry over.
Cost volumes have shape (H, W, num_disparities) with plane ``k`` holding
disparity ``min_disparity + k``. Borders are clamp-to-edge everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from ._parallel import ordered_map, split_range
from .depthmap import DISP_SCALE, INVALID_DISPARITY, DenseDepthMap, DisparityMap
from .geometry import CameraIntrinsics

#: path directions (dy, dx): the predecessor of pixel p is p - (dy, dx)
DIRECTIONS = {
    1: [(0, 1)],
    2: [(0, 1), (0, -1)],
    4: [(0, 1), (0, -1), (1, 0), (-1, 0)],
    8: [(0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1)],
}

#: disparities below this many pixels are not converted to depth
MIN_DEPTH_DISPARITY = 1.0 / DISP_SCALE


@dataclass(frozen=True)
class MatchParams:
    """Block-matching / SGM settings. ``p1``/``p2`` default to 8*B^2 and 32*B^2."""

    min_disparity: int = 0
    num_disparities: int = 64
    block_size: int = 5
    p1: float | None = None
    p2: float | None = None
    uniqueness_ratio: float = 10.0
    directions: int = 8
    subpixel: bool = True

    def __post_init__(self):
        if self.num_disparities <= 0 or self.num_disparities % 16:
            raise ValueError(f"num_disparities must be a positive multiple of 16, got {self.num_disparities}")
        if self.block_size < 3 or self.block_size % 2 == 0:
            raise ValueError(f"block_size must be odd and >= 3, got {self.block_size}")
        if self.uniqueness_ratio < 0:
            raise ValueError("uniqueness_ratio must be >= 0")
        if self.directions not in DIRECTIONS:
            raise ValueError(f"directions must be one of {sorted(DIRECTIONS)}, got {self.directions}")
        if self.p1 is None:
            object.__setattr__(self, "p1", 8.0 * self.block_size**2)
        if self.p2 is None:
            object.__setattr__(self, "p2", 32.0 * self.block_size**2)
        if not (0 <= self.p1 < self.p2 or self.p1 == self.p2 == 0):
            raise ValueError(f"need 0 <= p1 < p2, got p1={self.p1}, p2={self.p2}")
        lo = (self.min_disparity) * DISP_SCALE
        hi = self.max_disparity * DISP_SCALE
        if lo <= INVALID_DISPARITY or hi > np.iinfo(np.int16).max:
            raise ValueError("disparity range does not fit 16-bit fixed point")

    @property
    def max_disparity(self) -> int:
        return self.min_disparity + self.num_disparities - 1

    @property
    def pad_width(self) -> int:
        return max(self.num_disparities, self.min_disparity + self.num_disparities)


def check_gray(img, name: str = "image") -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {img.shape}")
    if not np.all(np.isfinite(img)) or img.min() < 0 or img.max() > 1:
        raise ValueError(f"{name} intensities must lie in [0, 1]")
    return img


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian, radius ceil(3*sigma), clamp-to-edge borders."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    img = np.asarray(img, dtype=np.float64)
    if sigma == 0:
        return img.copy()
    k = gaussian_kernel(sigma)
    out = correlate1d(img, k, axis=0, mode="nearest")
    return correlate1d(out, k, axis=1, mode="nearest")


def pad_for_matching(left: np.ndarray, right: np.ndarray, params: MatchParams):
    """Prepend ``params.pad_width`` edge-replicated columns to both views.

    Returns ``(left_padded, right_padded, crop_offset)``; drop the first
    ``crop_offset`` columns of the resulting disparity map.
    """
    n = params.pad_width
    pad = ((0, 0), (n, 0))
    return np.pad(left, pad, mode="edge"), np.pad(right, pad, mode="edge"), n


def _box_sum(a: np.ndarray, size: int) -> np.ndarray:
    """Sum over every size x size window of a (valid region only)."""
    c = np.cumsum(a, axis=0)
    c = np.concatenate([c[size - 1 : size], c[size:] - c[:-size]], axis=0)
    c = np.cumsum(c, axis=1)
    return np.concatenate([c[:, size - 1 : size], c[:, size:] - c[:, :-size]], axis=1)


def sad_cost_volume(left, right, params: MatchParams, workers: int = 1) -> np.ndarray:
    """SAD over a block_size^2 window for every pixel and candidate disparity.

    C[y, x, k] = sum_o |L(y+oy, x+ox) - R(y+oy, x+ox-d)| * 255, d = min_disparity + k,
    with each image sampled clamp-to-edge.
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.shape != right.shape:
        raise ValueError(f"left {left.shape} and right {right.shape} differ in size")
    H, W = left.shape
    r = params.block_size // 2
    rows = np.clip(np.arange(-r, H + r), 0, H - 1)
    cols = np.arange(-r, W + r)
    lpad = left[rows][:, np.clip(cols, 0, W - 1)] * 255.0
    rrows = right[rows] * 255.0

    def _plane(k):
        d = params.min_disparity + k
        rpad = rrows[:, np.clip(cols - d, 0, W - 1)]
        return _box_sum(np.abs(lpad - rpad), params.block_size)

    volume = np.empty((H, W, params.num_disparities))
    for k, plane in enumerate(ordered_map(_plane, range(params.num_disparities), workers)):
        volume[:, :, k] = plane
    return volume


def _path_step(cost: np.ndarray, prev: np.ndarray, p1: float, p2: float) -> np.ndarray:
    """One SGM recursion step on a batch of pixels (..., D)."""
    m = prev.min(axis=-1, keepdims=True)
    best = prev.copy()
    np.minimum(best[..., 1:], prev[..., :-1] + p1, out=best[..., 1:])
    np.minimum(best[..., :-1], prev[..., 1:] + p1, out=best[..., :-1])
    np.minimum(best, m + p2, out=best)
    return cost + (best - m)


def aggregate_path(cost: np.ndarray, direction: tuple[int, int], p1: float, p2: float) -> np.ndarray:
    """Path costs L_r for one direction r = (dy, dx) over the whole volume.

    L_r(p, d) = C(p, d) + min(L_r(p-r, d), L_r(p-r, d+-1) + P1, min_k L_r(p-r, k) + P2)
                - min_k L_r(p-r, k)
    """
    H, W, _ = cost.shape
    dy, dx = direction
    out = np.empty_like(cost)
    if dy == 0:
        xs = range(W) if dx > 0 else range(W - 1, -1, -1)
        prev = None
        for x in xs:
            c = cost[:, x, :]
            out[:, x, :] = c if prev is None else _path_step(c, prev, p1, p2)
            prev = out[:, x, :]
        return out

    ys = range(H) if dy > 0 else range(H - 1, -1, -1)
    prev = None
    for y in ys:
        c = cost[y]
        if prev is None:
            out[y] = c
        else:
            if dx == 0:
                shifted = prev
            else:
                shifted = np.empty_like(prev)
                if dx > 0:
                    shifted[dx:] = prev[:-dx]
                    shifted[:dx] = 0.0
                else:
                    shifted[:dx] = prev[-dx:]
                    shifted[dx:] = 0.0
            row = _path_step(c, shifted, p1, p2)
            # paths entering from outside the image start afresh
            if dx > 0:
                row[:dx] = c[:dx]
            elif dx < 0:
                row[dx:] = c[dx:]
            out[y] = row
        prev = out[y]
    return out


def sgm_aggregate(
    cost: np.ndarray,
    params: MatchParams,
    directions: list[tuple[int, int]] | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Sum of path costs over ``params.directions`` (or an explicit list).

    Directions are computed in parallel batches of ``workers`` and summed in
    a fixed order, so the result does not depend on the worker count.
    """
    dirs = directions if directions is not None else DIRECTIONS[params.directions]
    total = np.zeros_like(cost)
    batch = max(1, workers)
    for i in range(0, len(dirs), batch):
        group = dirs[i : i + batch]
        paths = ordered_map(lambda r: aggregate_path(cost, r, params.p1, params.p2), group, workers)
        for L in paths:
            total += L
        del paths
    return total


def select_disparity(cost: np.ndarray, params: MatchParams, workers: int = 1) -> DisparityMap:
    """Winner-take-all over a (possibly aggregated) cost volume.

    Ties go to the lowest disparity. With ``uniqueness_ratio > 0`` a pixel is
    rejected when some disparity outside best+-1 costs no more than
    best * (1 + ratio/100). Optional parabola sub-pixel refinement. Columns
    left of ``min_disparity + num_disparities`` have no complete search range
    in the right view and are marked invalid.
    """
    H, W, D = cost.shape
    if D != params.num_disparities:
        raise ValueError(f"cost volume has {D} planes, params say {params.num_disparities}")

    def _rows(bounds):
        a, b = bounds
        c = cost[a:b]
        k = np.argmin(c, axis=-1)
        best = np.take_along_axis(c, k[..., None], axis=-1)[..., 0]

        valid = np.ones(k.shape, dtype=bool)
        if params.uniqueness_ratio > 0 and D > 3:
            masked = c.copy()
            for off in (-1, 0, 1):
                idx = np.clip(k + off, 0, D - 1)[..., None]
                np.put_along_axis(masked, idx, np.inf, axis=-1)
            second = masked.min(axis=-1)
            valid &= ~(second <= best * (1.0 + params.uniqueness_ratio / 100.0))

        disp = (params.min_disparity + k).astype(np.float64)
        if params.subpixel and D >= 3:
            inner = (k > 0) & (k < D - 1)
            kl = np.clip(k - 1, 0, D - 1)[..., None]
            kr = np.clip(k + 1, 0, D - 1)[..., None]
            cl = np.take_along_axis(c, kl, axis=-1)[..., 0]
            cr = np.take_along_axis(c, kr, axis=-1)[..., 0]
            denom = cl - 2.0 * best + cr
            ok = inner & (denom > 0)
            offset = np.zeros_like(disp)
            offset[ok] = (cl[ok] - cr[ok]) / (2.0 * denom[ok])
            disp += offset

        fixed = np.sign(disp) * np.floor(np.abs(disp) * DISP_SCALE + 0.5)
        fixed = np.clip(fixed, params.min_disparity * DISP_SCALE, params.max_disparity * DISP_SCALE)
        return np.where(valid, fixed, INVALID_DISPARITY).astype(np.int16)

    raw = np.vstack(ordered_map(_rows, split_range(H, workers), workers))
    raw[:, : min(W, params.min_disparity + params.num_disparities)] = INVALID_DISPARITY
    return DisparityMap(raw, params.min_disparity, params.num_disparities)


def bm_match(cost: np.ndarray, params: MatchParams, workers: int = 1) -> DisparityMap:
    """Block matching: winner-take-all directly on the SAD volume."""
    return select_disparity(cost, params, workers)


def compute_disparity(
    left,
    right,
    params: MatchParams,
    algo: str = "sgbm",
    pad: bool = True,
    workers: int = 1,
) -> DisparityMap:
    """Left-view disparity of a rectified pair (images in [0, 1])."""
    left = check_gray(left, "left")
    right = check_gray(right, "right")
    if left.shape != right.shape:
        raise ValueError(f"left {left.shape} and right {right.shape} differ in size")
    if algo not in ("bm", "sgbm"):
        raise ValueError(f"algo must be 'bm' or 'sgbm', got {algo!r}")
    offset = 0
    if pad:
        left, right, offset = pad_for_matching(left, right, params)
    cost = sad_cost_volume(left, right, params, workers)
    if algo == "sgbm":
        cost = sgm_aggregate(cost, params, workers=workers)
    disp = select_disparity(cost, params, workers)
    return disp.crop_columns(offset) if offset else disp


def compute_right_disparity(left, right, params: MatchParams, algo: str = "sgbm", pad: bool = True, workers: int = 1) -> DisparityMap:
    """Right-view disparity: roles swapped and the search run in the opposite
    direction (by mirroring both views). Values are positive magnitudes, so
    right pixel x corresponds to left pixel x + d.
    """
    mirrored = compute_disparity(
        np.fliplr(np.asarray(right)), np.fliplr(np.asarray(left)), params, algo, pad, workers
    )
    return DisparityMap(np.fliplr(mirrored.raw), mirrored.min_disparity, mirrored.num_disparities)


def disparity_to_depth(disp: DisparityMap, intr: CameraIntrinsics) -> DenseDepthMap:
    """Z = focal * baseline / d; invalid or sub-1/16 px disparities stay invalid."""
    d = disp.raw.astype(np.float64) / DISP_SCALE
    ok = disp.valid & (d >= MIN_DEPTH_DISPARITY)
    depth = np.zeros(d.shape)
    depth[ok] = intr.focal * intr.baseline / d[ok]
    return DenseDepthMap(depth, ok)


def depth_to_disparity(depth_map, intr: CameraIntrinsics, min_disparity: int = 0, num_disparities: int | None = None) -> DisparityMap:
    """Inverse of :func:`disparity_to_depth`, quantized to 1/16 px."""
    d = np.where(depth_map.valid, intr.focal * intr.baseline / np.where(depth_map.valid, depth_map.values, 1.0), np.nan)
    if num_disparities is None:
        top = np.nanmax(d) if np.isfinite(d).any() else 0.0
        num_disparities = 16 * max(1, int(math.ceil((top - min_disparity + 1) / 16)))
    return DisparityMap.from_float(d, min_disparity, num_disparities)


def matching_energy(cost: np.ndarray, disp_index: np.ndarray, p1: float, p2: float, neighborhood: int = 4) -> float:
    """E(d) = sum_p C(p, d_p) + sum over neighbour pairs of P1*[|dd| == 1] + P2*[|dd| > 1].

    ``disp_index`` holds integer plane indices; each unordered neighbour pair
    counts once (4- or 8-connectivity).
    """
    d = np.asarray(disp_index, dtype=np.int64)
    data = np.take_along_axis(cost, d[..., None], axis=-1).sum()
    steps = [(0, 1), (1, 0)] if neighborhood == 4 else [(0, 1), (1, 0), (1, 1), (1, -1)]
    smooth = 0.0
    H, W = d.shape
    for sy, sx in steps:
        if sx >= 0:
            a, b = d[: H - sy, : W - sx], d[sy:, sx:]
        else:
            a, b = d[: H - sy, -sx:], d[sy:, : W + sx]
        diff = np.abs(a - b)
        smooth += p1 * np.count_nonzero(diff == 1) + p2 * np.count_nonzero(diff > 1)
    return float(data + smooth)


def stereo_depth(
    left,
    right,
    intr: CameraIntrinsics,
    params: MatchParams,
    wls_params=None,
    algo: str = "sgbm",
    pad: bool = True,
    blur_sigma: float = 1.0,
    workers: int = 1,
) -> tuple[DisparityMap, DenseDepthMap]:
    """Blur, match, optionally WLS-refine (guided by the blurred left view), convert to depth."""
    from .wls import wls_filter

    left = gaussian_blur(check_gray(left, "left"), blur_sigma)
    right = gaussian_blur(check_gray(right, "right"), blur_sigma)
    disp = compute_disparity(left, right, params, algo, pad, workers)
    if wls_params is not None:
        disp = wls_filter(disp, left, wls_params)
    return disp, disparity_to_depth(disp, intr)
