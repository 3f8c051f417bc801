"""Synthetic scenes with exact ground truth.

A scene is a textured fronto-parallel background plane plus textured
fronto-parallel rectangles. Every surface carries its own seeded,
band-limited noise texture indexed by left-image column, so the right view
at column u' simply samples each surface at u' + d (nearest surface wins).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .depthmap import DenseDepthMap
from .geometry import CameraIntrinsics, Pose, back_project, camera_to_global, random_pose
from .io import FormatError, INTRINSIC_KEYS, _float, intrinsics_from_mapping, parse_key_values
from .lidar_depth import round_half_away


@dataclass(frozen=True)
class Rect:
    """Fronto-parallel rectangle covering left-image rows [top, bottom) and columns [left, right)."""

    depth: float
    top: int
    left: int
    bottom: int
    right: int
    texture_seed: int = 0


@dataclass(frozen=True)
class SceneSpec:
    rects: tuple[Rect, ...] = ()
    background_depth: float = 50.0
    noise_sigma: float = 0.0
    texture_sigma: float = 1.0
    lidar_count: int = 0
    lidar_sampling: str = "image"
    seed: int = 0
    pose_seed: int | None = None
    intrinsics: CameraIntrinsics | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.background_depth > 0 or any(not r.depth > 0 for r in self.rects):
            raise ValueError("all depths must be > 0")
        if self.noise_sigma < 0 or self.texture_sigma < 0 or self.lidar_count < 0:
            raise ValueError("noise_sigma, texture_sigma and lidar_count must be >= 0")
        if self.lidar_sampling not in ("image", "surface"):
            raise ValueError(f"lidar_sampling must be 'image' or 'surface', got {self.lidar_sampling!r}")

    def validate(self, intr: CameraIntrinsics) -> None:
        H, W = intr.image_size
        for r in self.rects:
            if not (0 <= r.top < r.bottom <= H and 0 <= r.left < r.right <= W):
                raise ValueError(f"rect {r} not inside {H}x{W} image")


@dataclass(frozen=True, eq=False)
class SceneRender:
    left: np.ndarray
    right: np.ndarray
    gt_depth: DenseDepthMap
    gt_disparity: np.ndarray
    occluded: np.ndarray
    labels: np.ndarray


def _snap(d: float) -> float:
    return float(round(d)) if abs(d - round(d)) < 1e-9 else d


def surface_depths(spec: SceneSpec) -> list[float]:
    """Depth per surface label: 0 is the background, i+1 is ``rects[i]``."""
    return [spec.background_depth] + [r.depth for r in spec.rects]


def label_map(spec: SceneSpec, intr: CameraIntrinsics) -> np.ndarray:
    """Nearest surface covering each left-image pixel."""
    H, W = intr.image_size
    labels = np.zeros((H, W), dtype=np.int64)
    zbuf = np.full((H, W), spec.background_depth)
    for i, r in enumerate(spec.rects, 1):
        region = (slice(r.top, r.bottom), slice(r.left, r.right))
        closer = r.depth < zbuf[region]
        labels[region][closer] = i
        zbuf[region][closer] = r.depth
    return labels


def make_texture(seed: int, shape: tuple[int, int], sigma: float) -> np.ndarray:
    """Seeded white noise low-passed by a Gaussian, rescaled to [0.05, 0.95]."""
    rng = np.random.default_rng(seed)
    tex = rng.random(shape)
    if sigma > 0:
        tex = gaussian_filter(tex, sigma, mode="reflect")
    lo, hi = tex.min(), tex.max()
    return 0.05 + 0.9 * (tex - lo) / (hi - lo if hi > lo else 1.0)


def _sample_row(tex: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Linear interpolation of each texture row at float columns ``xs`` (H, W)."""
    x0 = np.floor(xs).astype(np.int64)
    frac = xs - x0
    x0 = np.clip(x0, 0, tex.shape[1] - 1)
    x1 = np.clip(x0 + 1, 0, tex.shape[1] - 1)
    rows = np.arange(tex.shape[0])[:, None]
    return (1 - frac) * tex[rows, x0] + frac * tex[rows, x1]


def render_scene(spec: SceneSpec, intr: CameraIntrinsics) -> SceneRender:
    """Left/right views, gt depth and disparity, and the left-view occlusion mask.

    A left pixel is occluded when its right-view correspondence falls outside
    the right image or is hidden behind a nearer surface.
    """
    spec.validate(intr)
    H, W = intr.image_size
    fb = intr.focal * intr.baseline
    depths = surface_depths(spec)
    disps = [_snap(fb / z) for z in depths]
    tex_w = W + int(math.ceil(max(disps))) + 2
    seeds = [spec.seed] + [r.texture_seed for r in spec.rects]
    textures = [make_texture(s, (H, tex_w), spec.texture_sigma) for s in seeds]

    labels = label_map(spec, intr)
    cols = np.arange(W, dtype=float)[None, :].repeat(H, axis=0)
    left = np.zeros((H, W))
    for i, tex in enumerate(textures):
        sel = labels == i
        left[sel] = tex[:, :W][sel]

    # right view: surface i is seen at u' when u' + d_i falls inside its region
    right = np.zeros((H, W))
    right_zbuf = np.full((H, W), np.inf)
    right_labels = np.full((H, W), -1, dtype=np.int64)
    rows = np.arange(H)[:, None]
    for i, (tex, z, d) in enumerate(zip(textures, depths, disps)):
        xs = cols + d
        if i == 0:
            covered = np.ones((H, W), dtype=bool)
        else:
            r = spec.rects[i - 1]
            cx = round_half_away(xs)
            covered = (cx >= r.left) & (cx < r.right) & (rows >= r.top) & (rows < r.bottom)
        win = covered & (z < right_zbuf)
        right[win] = _sample_row(tex, xs)[win]
        right_zbuf[win] = z
        right_labels[win] = i

    gt_depth = np.array(depths)[labels]
    gt_disp = np.array(disps)[labels]
    match_col = round_half_away(cols - gt_disp).astype(np.int64)
    inside = (match_col >= 0) & (match_col < W)
    seen = np.zeros((H, W), dtype=bool)
    rr, cc = np.nonzero(inside)
    seen[rr, cc] = right_labels[rr, match_col[rr, cc]] == labels[rr, cc]
    occluded = ~seen

    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed + 1)
        left = left + rng.normal(0.0, spec.noise_sigma, left.shape)
        right = right + rng.normal(0.0, spec.noise_sigma, right.shape)
    left = np.clip(left, 0.0, 1.0)
    right = np.clip(right, 0.0, 1.0)
    return SceneRender(left, right, DenseDepthMap(gt_depth, np.ones((H, W), dtype=bool)), gt_disp, occluded, labels)


def pose_chain(spec: SceneSpec) -> tuple[Pose, Pose]:
    """(body-in-global, camera-in-body); identity unless ``pose_seed`` is set."""
    if spec.pose_seed is None:
        return Pose(), Pose()
    rng = np.random.default_rng(spec.pose_seed)
    return random_pose(rng, 100.0), random_pose(rng, 2.0)


def sample_lidar(
    spec: SceneSpec,
    intr: CameraIntrinsics,
    poses: tuple[Pose, Pose] | None = None,
    count: int | None = None,
    seed: int | None = None,
) -> np.ndarray:
    """Sample visible surface points and express them in the global frame.

    ``lidar_sampling="image"`` draws image positions uniformly;
    ``"surface"`` draws uniformly over visible 3-D surface area, which makes
    near surfaces sparser in the image than far ones.
    """
    spec.validate(intr)
    body_pose, camera_pose = poses if poses is not None else pose_chain(spec)
    count = spec.lidar_count if count is None else count
    seed = spec.seed + 2 if seed is None else seed
    if count == 0:
        return np.zeros((0, 3))
    H, W = intr.image_size
    rng = np.random.default_rng(seed)
    depths = np.array(surface_depths(spec))[label_map(spec, intr)]

    if spec.lidar_sampling == "image":
        u = rng.uniform(-0.5, W - 0.5, count)
        v = rng.uniform(-0.5, H - 0.5, count)
    else:
        weights = (depths**2).ravel()
        pix = rng.choice(H * W, size=count, p=weights / weights.sum())
        v = pix // W + rng.uniform(-0.5, 0.5, count)
        u = pix % W + rng.uniform(-0.5, 0.5, count)
    col = np.clip(round_half_away(u), 0, W - 1).astype(np.int64)
    row = np.clip(round_half_away(v), 0, H - 1).astype(np.int64)
    cam = back_project(intr, u, v, depths[row, col])
    return camera_to_global(body_pose, camera_pose, cam)


def load_scene(path) -> SceneSpec:
    """Parse a scene file; see docs/formats.md for the grammar."""
    scalars = {
        "background_depth": float,
        "noise_sigma": float,
        "texture_sigma": float,
        "lidar_count": int,
        "seed": int,
        "pose_seed": int,
    }
    kwargs: dict = {}
    intr_values: dict = {}
    rects = []
    for lineno, key, rest in parse_key_values(path):
        if key == "rect":
            if len(rest) not in (5, 6):
                raise FormatError(f"{path}:{lineno}: rect takes 'depth top left bottom right [texture_seed]'")
            nums = [_float(t, path, lineno) for t in rest]
            ints = nums[1:]
            if any(n != int(n) for n in ints):
                raise FormatError(f"{path}:{lineno}: rect bounds and seed must be integers")
            rects.append(Rect(nums[0], *(int(n) for n in ints)))
        elif len(rest) != 1:
            raise FormatError(f"{path}:{lineno}: {key} takes one value")
        elif key == "lidar_sampling":
            kwargs[key] = rest[0]
        elif key in INTRINSIC_KEYS:
            intr_values[key] = _float(rest[0], path, lineno)
        elif key in scalars:
            value = _float(rest[0], path, lineno)
            if scalars[key] is int and value != int(value):
                raise FormatError(f"{path}:{lineno}: {key} must be an integer")
            kwargs[key] = scalars[key](value)
        else:
            raise FormatError(f"{path}:{lineno}: unknown key {key!r}")
    if intr_values:
        kwargs["intrinsics"] = intrinsics_from_mapping(intr_values, path)
    try:
        spec = SceneSpec(rects=tuple(rects), **kwargs)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if spec.intrinsics is not None:
        try:
            spec.validate(spec.intrinsics)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
    return spec
