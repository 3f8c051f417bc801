"""Left-band experiment: valid-pixel fraction per column block with and
without left padding.

    python3 scripts/stereo_band.py --scene scenes/shift12.txt
"""

import argparse

import numpy as np

from depthkit.experiments import stereo_accuracy
from depthkit.stereo import MatchParams
from depthkit.synth import load_scene


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scene", default="scenes/shift12.txt")
    ap.add_argument("--num-disparities", type=int, default=64)
    ap.add_argument("--block-size", type=int, default=5)
    ap.add_argument("--algo", choices=("bm", "sgbm"), default="sgbm")
    ap.add_argument("--step", type=int, default=16, help="column block width for the profile")
    args = ap.parse_args()

    spec = load_scene(args.scene)
    params = MatchParams(num_disparities=args.num_disparities, block_size=args.block_size)
    runs = {pad: stereo_accuracy(spec, spec.intrinsics, params, pad=pad, algo=args.algo) for pad in (False, True)}

    W = spec.intrinsics.width
    print(f"{'columns':>10} {'no pad':>8} {'pad':>8}")
    for c0 in range(0, min(W, 2 * args.num_disparities), args.step):
        c1 = min(W, c0 + args.step)
        cells = [runs[p].disparity.valid[:, c0:c1].mean() for p in (False, True)]
        print(f"{c0:>4}-{c1 - 1:<5} {cells[0]:8.3f} {cells[1]:8.3f}")
    for pad, run in runs.items():
        err = np.abs(run.disparity.disparity - run.gt_disparity)[run.eval_mask & run.disparity.valid]
        print(
            f"pad={pad!s:<5} within 1/16 px: {run.within:.2%}  median |err| {np.median(err):.4f} px"
            f"  time {run.seconds:.1f} s"
        )


if __name__ == "__main__":
    main()
