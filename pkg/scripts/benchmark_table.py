"""Acquisition-policy table: <IR(X)>, <CR(X)>, <IR(y)>, <CR(y)> per policy.

    python3 scripts/benchmark_table.py --function ackley --seeds 20 --out results/table_ackley
"""

import argparse
from pathlib import Path

from batchbo.bench import SweepConfig, execute_sweep
from batchbo.loop import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--function", choices=["ackley", "hartmann"], default="ackley")
    ap.add_argument("--seeds", type=int, default=99)
    ap.add_argument("--betas", default="1,15,30")
    ap.add_argument("--xis", default="0,0.1,10")
    ap.add_argument("--parallel", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/table"))
    args = ap.parse_args()

    sweep = SweepConfig(
        base=RunConfig(gt=args.function),
        n_seeds=args.seeds,
        acq_kinds=("ucb", "ei"),
        betas=[float(v) for v in args.betas.split(",")],
        xis=[float(v) for v in args.xis.split(",")],
        parallel=args.parallel,
    )
    _, rows = execute_sweep(sweep, args.out)
    print(f"{'cell':40s} {'<IR(X)>e2':>10s} {'<CR(X)>':>9s} {'<IR(y)>e2':>10s} {'<CR(y)>':>9s}")
    for r in rows:
        print(f"{r['cell']:40s} {100 * r['mean_ir_x']:10.3g} {r['mean_cr_x']:9.3g} "
              f"{100 * r['mean_ir_y']:10.3g} {r['mean_cr_y']:9.3g}")


if __name__ == "__main__":
    main()
