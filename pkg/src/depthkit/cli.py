"""Command-line entry point: ``depthkit {lidar-depth,stereo-depth,compare,synth}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .lidar_depth import CompletionParams, lidar_pipeline
from .metrics import colorize_depth, mean_abs_error, overlay_points
from .stereo import DIRECTIONS, MatchParams, stereo_depth
from .synth import load_scene, pose_chain, render_scene, sample_lidar
from .wls import WlsParams

log = logging.getLogger("depthkit")


def _lidar_depth(args) -> int:
    intr = io.load_intrinsics(args.intrinsics)
    cloud = io.load_point_cloud(args.cloud)
    body = io.load_pose(args.body_pose).pose
    cam = io.load_pose(args.cam_pose).pose
    params = CompletionParams(
        ngrid=args.ngrid,
        spread_radius=args.spread_radius,
        near_threshold=args.near_threshold,
        asymmetric_spread=args.spread_even,
    )
    depth = lidar_pipeline(
        cloud, body, cam, intr, params,
        preserve=not args.no_preserve, completion=not args.no_completion, workers=args.workers,
    )
    io.write_depth(args.out, depth)
    log.info("wrote %s (%d valid pixels)", args.out, int(depth.valid.sum()))
    return 0


def _stereo_depth(args) -> int:
    intr = io.load_intrinsics(args.intrinsics)
    left, right = io.read_gray(args.left), io.read_gray(args.right)
    if left.shape != intr.image_size:
        log.warning("image size %s differs from intrinsics %s", left.shape, intr.image_size)
    params = MatchParams(
        min_disparity=args.min_disparity,
        num_disparities=args.num_disparities,
        block_size=args.block_size,
        p1=args.p1,
        p2=args.p2,
        uniqueness_ratio=args.uniqueness_ratio,
        directions=args.directions,
    )
    wls = None if args.no_wls else WlsParams(lam=args.wls_lambda, alpha=args.wls_alpha)
    disp, depth = stereo_depth(
        left, right, intr, params, wls,
        algo=args.algo, pad=not args.no_pad, blur_sigma=args.blur_sigma, workers=args.workers,
    )
    io.write_depth(args.out, depth)
    if args.disparity_out:
        io.write_disparity(args.disparity_out, disp)
    log.info("wrote %s (%d valid pixels)", args.out, int(depth.valid.sum()))
    return 0


def _compare(args) -> int:
    pred, gt = io.read_depth(args.pred), io.read_depth(args.gt)
    report = mean_abs_error(pred, gt)
    text = report.to_json() if Path(args.report).suffix.lower() == ".json" else report.to_text()
    Path(args.report).write_text(text, encoding="utf-8")
    print(f"mean abs error {report.mean_abs_error:.6f} m over {report.pixel_count} pixels")
    if args.overlay:
        valid = pred.values[pred.valid]
        lo = args.d_min if args.d_min is not None else (float(valid.min()) if valid.size else 0.0)
        hi = args.d_max if args.d_max is not None else (float(valid.max()) if valid.size else 1.0)
        if hi <= lo:
            hi = lo + 1.0
        io.write_rgb(args.overlay, overlay_points(colorize_depth(pred, lo, hi), gt, (255, 0, 0)))
    return 0


def _synth(args) -> int:
    spec = load_scene(args.scene)
    intr = io.load_intrinsics(args.intrinsics) if args.intrinsics else spec.intrinsics
    if intr is None:
        raise SystemExit("scene has no intrinsics; pass --intrinsics")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scene = render_scene(spec, intr)
    body, cam = pose_chain(spec)
    io.write_gray(out / "left.png", scene.left)
    io.write_gray(out / "right.png", scene.right)
    io.write_depth(out / "gt_depth.png", scene.gt_depth)
    io.write_gray(out / "occlusion.png", scene.occluded.astype(np.uint8) * 255)
    io.save_point_cloud(out / "cloud.txt", sample_lidar(spec, intr, (body, cam)))
    io.save_pose(out / "body_pose.txt", io.PoseRecord("body", body))
    io.save_pose(out / "cam_pose.txt", io.PoseRecord("camera", cam))
    io.save_intrinsics(out / "intrinsics.txt", intr)
    log.info("wrote scene to %s", out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="depthkit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lidar-depth", help="project a lidar cloud and complete it to a depth map")
    p.add_argument("--cloud", required=True, help="global-frame points, 'x y z' per line")
    p.add_argument("--body-pose", required=True, help="body pose in the global frame")
    p.add_argument("--cam-pose", required=True, help="camera pose in the body frame")
    p.add_argument("--intrinsics", required=True)
    p.add_argument("--ngrid", type=int, default=4, help="completion window radius (4 -> 9x9)")
    p.add_argument("--spread-radius", type=int, default=1, help="near-pixel spread radius (1 -> 3x3)")
    p.add_argument(
        "--spread-even", action="store_true",
        help="even spread window of 2*radius pixels, offsets -(r-1)..r; radius 2 gives 4x4",
    )
    p.add_argument("--near-threshold", type=float, default=15.0, help="meters; nearer pixels are spread")
    p.add_argument("--no-completion", action="store_true", help="skip depth completion")
    p.add_argument("--no-preserve", action="store_true", help="skip near-pixel spreading")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="16-bit depth PNG/PGM, 1/256 m units")
    p.set_defaults(func=_lidar_depth)

    p = sub.add_parser("stereo-depth", help="depth from a rectified stereo pair")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--intrinsics", required=True)
    p.add_argument("--min-disparity", type=int, default=0)
    p.add_argument("--num-disparities", type=int, default=64, help="search range, multiple of 16")
    p.add_argument("--block-size", type=int, default=5, help="odd SAD window size")
    p.add_argument("--p1", type=float, default=None, help="small-jump penalty (default 8*block^2)")
    p.add_argument("--p2", type=float, default=None, help="large-jump penalty (default 32*block^2)")
    p.add_argument("--uniqueness-ratio", type=float, default=10.0, help="percent; 0 disables")
    p.add_argument("--directions", type=int, default=8, choices=sorted(DIRECTIONS))
    p.add_argument("--algo", choices=("bm", "sgbm"), default="sgbm")
    p.add_argument("--blur-sigma", type=float, default=1.0, help="Gaussian pre-smoothing; 0 disables")
    p.add_argument("--wls-lambda", type=float, default=8000.0)
    p.add_argument("--wls-alpha", type=float, default=1.3)
    p.add_argument("--no-wls", action="store_true", help="skip WLS refinement")
    p.add_argument("--no-pad", action="store_true", help="skip left padding (leaves the unmatched left band)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--disparity-out", help="also write 16-bit disparity (1/16 px units)")
    p.add_argument("--out", required=True, help="16-bit depth PNG/PGM, 1/256 m units")
    p.set_defaults(func=_stereo_depth)

    p = sub.add_parser("compare", help="mean absolute error of a depth map against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--report", required=True, help="text report; JSON when the name ends in .json")
    p.add_argument("--overlay", help="RGB PNG: colorized prediction with gt pixels in red")
    p.add_argument("--d-min", type=float, default=None)
    p.add_argument("--d-max", type=float, default=None)
    p.set_defaults(func=_compare)

    p = sub.add_parser("synth", help="render a synthetic scene (views, gt depth, cloud, poses)")
    p.add_argument("--scene", required=True)
    p.add_argument("--intrinsics", help="overrides intrinsics given in the scene file")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"depthkit {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
