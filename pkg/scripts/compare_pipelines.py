"""Stereo (with and without WLS) and lidar depth on one synthetic scene,
each scored against ground truth and against the lidar map.

    python3 scripts/compare_pipelines.py --scene scenes/steps.txt --wls-lambda 8000 500
"""

import argparse

from depthkit.lidar_depth import CompletionParams, lidar_pipeline
from depthkit.metrics import mean_abs_error
from depthkit.stereo import MatchParams, stereo_depth
from depthkit.synth import load_scene, pose_chain, render_scene, sample_lidar
from depthkit.wls import WlsParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scene", default="scenes/steps.txt")
    ap.add_argument("--num-disparities", type=int, default=64)
    ap.add_argument("--block-size", type=int, default=5)
    ap.add_argument("--wls-lambda", type=float, nargs="*", default=[8000.0, 500.0])
    ap.add_argument("--wls-alpha", type=float, default=1.3)
    ap.add_argument("--ngrid", type=int, default=4)
    args = ap.parse_args()

    spec = load_scene(args.scene)
    intr = spec.intrinsics
    scene = render_scene(spec, intr)
    body, cam = pose_chain(spec)
    lidar = lidar_pipeline(sample_lidar(spec, intr, (body, cam)), body, cam, intr, CompletionParams(ngrid=args.ngrid))

    params = MatchParams(num_disparities=args.num_disparities, block_size=args.block_size)
    rows = [("lidar", lidar)]
    for algo in ("bm", "sgbm"):
        rows.append((f"{algo}", stereo_depth(scene.left, scene.right, intr, params, None, algo=algo)[1]))
    for lam in args.wls_lambda:
        wls = WlsParams(lam=lam, alpha=args.wls_alpha)
        rows.append((f"sgbm+wls({lam:g})", stereo_depth(scene.left, scene.right, intr, params, wls)[1]))

    print(f"{'method':<18} {'vs gt [m]':>10} {'pixels':>8} {'vs lidar [m]':>13}")
    for name, depth in rows:
        gt_report = mean_abs_error(depth, scene.gt_depth)
        lidar_report = mean_abs_error(depth, lidar)
        print(f"{name:<18} {gt_report.mean_abs_error:10.4f} {gt_report.pixel_count:8d} {lidar_report.mean_abs_error:13.4f}")


if __name__ == "__main__":
    main()
