"""Median noiseless kernel amplitude for both benchmark functions.

    python3 scripts/calibrate_amplitudes.py --seeds 20 --parallel 4
"""

import argparse

from batchbo.bench import calibrate_amplitude


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--parallel", type=int, default=1)
    args = ap.parse_args()
    for fn in ("ackley", "hartmann"):
        print(fn, f"{calibrate_amplitude(fn, args.seeds, parallel=args.parallel):.4f}", flush=True)


if __name__ == "__main__":
    main()
