"""Populate the run cache used by tests/test_acceptance.py.

    python3 scripts/prefill_acceptance.py [--parallel N] [name ...]
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from acceptance_plan import CACHE_DIR, PLAN, SEEDS  # noqa: E402

from batchbo.cache import cached_runs  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", default=list(PLAN))
    ap.add_argument("--parallel", type=int, default=1)
    args = ap.parse_args()
    for name in args.names:
        t = time.time()
        runs = cached_runs(PLAN[name], SEEDS, CACHE_DIR, args.parallel)
        errors = sum(1 for h in runs if len(h.records) < h.config.n_iter)
        print(f"{name}: {len(runs)} seeds, {errors} incomplete, {time.time() - t:.0f}s", flush=True)


if __name__ == "__main__":
    main()
