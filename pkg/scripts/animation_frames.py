"""Run one seed and dump surrogate frames for an animation of x1-x2.

    python3 scripts/animation_frames.py --function ackley --seed 1 --out results/frames
"""

import argparse
from pathlib import Path

from batchbo.bench import emit_frames, emit_projection
from batchbo.loop import RunConfig, run_bo


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--function", choices=["ackley", "hartmann"], default="ackley")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--iters", type=int, default=50)
    ap.add_argument("--every", type=int, default=5)
    ap.add_argument("--resolution", type=int, default=61)
    ap.add_argument("--out", type=Path, default=Path("results/frames"))
    args = ap.parse_args()

    history = run_bo(RunConfig(gt=args.function, seed=args.seed, n_iter=args.iters))
    its = sorted(set(range(0, args.iters + 1, args.every)) | {args.iters})
    files = emit_frames(history, (0, 1), args.resolution, args.out, its)
    emit_projection(history.gt, history.gt, (0, 1), args.resolution, args.out / "ground_truth.csv")
    print(f"wrote {len(files) + 1} files to {args.out}")


if __name__ == "__main__":
    main()
