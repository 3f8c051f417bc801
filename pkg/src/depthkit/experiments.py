"""Measurement routines shared by the acceptance tests and scripts/."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .geometry import CameraIntrinsics
from .lidar_depth import CompletionParams, lidar_pipeline, window_coverage
from .stereo import MatchParams, stereo_depth
from .synth import SceneSpec, pose_chain, render_scene, sample_lidar


@dataclass(frozen=True)
class LidarRun:
    mae: float  # over pixels within ngrid of a raster sample
    band_error: float  # near-object boundary band, preserve on
    band_error_no_preserve: float
    pixels: int
    band_pixels: int

    @property
    def band_ratio(self) -> float:
        if self.band_error == 0:
            return np.inf if self.band_error_no_preserve > 0 else 1.0
        return self.band_error_no_preserve / self.band_error


def boundary_band(labels: np.ndarray, label: int, width: int) -> np.ndarray:
    """Pixels of surface ``label`` within ``width`` px (Chebyshev) of its outline."""
    from scipy.ndimage import binary_erosion

    region = labels == label
    core = binary_erosion(region, structure=np.ones((2 * width + 1, 2 * width + 1)), border_value=0)
    return region & ~core


def lidar_band_experiment(
    spec: SceneSpec, intr: CameraIntrinsics, params: CompletionParams, near_label: int = 1, workers: int = 1
) -> LidarRun:
    """Run the lidar pipeline with and without near-pixel spreading on a synthetic scene.

    Errors are mean absolute depth errors. The evaluation mask holds pixels
    that have a raster sample within ``ngrid`` and a completed value; the band
    is the part of that mask inside surface ``near_label`` and within ``ngrid``
    of its outline.
    """
    scene = render_scene(spec, intr)
    body, cam = pose_chain(spec)
    cloud = sample_lidar(spec, intr, (body, cam))
    gt = scene.gt_depth.values

    raster = lidar_pipeline(cloud, body, cam, intr, params, preserve=False, completion=False, workers=workers)
    kept = lidar_pipeline(cloud, body, cam, intr, params, workers=workers)
    lost = lidar_pipeline(cloud, body, cam, intr, params, preserve=False, workers=workers)

    mask = window_coverage(raster.valid, params.ngrid) & kept.valid
    band = boundary_band(scene.labels, near_label, params.ngrid) & mask & lost.valid
    err_kept = np.abs(kept.values - gt)
    err_lost = np.abs(lost.values - gt)
    return LidarRun(
        mae=float(err_kept[mask].mean()),
        band_error=float(err_kept[band].mean()),
        band_error_no_preserve=float(err_lost[band].mean()),
        pixels=int(mask.sum()),
        band_pixels=int(band.sum()),
    )


@dataclass(frozen=True)
class StereoRun:
    within: float  # fraction of evaluated pixels with |d - gt| <= 1/16
    evaluated: int
    seconds: float
    disparity: object
    gt_disparity: np.ndarray
    eval_mask: np.ndarray


def stereo_accuracy(
    spec: SceneSpec,
    intr: CameraIntrinsics,
    params: MatchParams,
    pad: bool = True,
    algo: str = "sgbm",
    wls_params=None,
    workers: int = 1,
) -> StereoRun:
    """Disparity accuracy on non-occluded pixels away from the image border."""
    scene = render_scene(spec, intr)
    t0 = time.perf_counter()
    disp, _ = stereo_depth(scene.left, scene.right, intr, params, wls_params, algo=algo, pad=pad, workers=workers)
    seconds = time.perf_counter() - t0
    r = params.block_size // 2
    interior = np.zeros(scene.occluded.shape, dtype=bool)
    interior[r:-r, r:-r] = True
    mask = interior & ~scene.occluded
    ok = disp.valid & (np.abs(disp.disparity - scene.gt_disparity) <= 1 / 16)
    return StereoRun(float(ok[mask].mean()), int(mask.sum()), seconds, disp, scene.gt_disparity, mask)
