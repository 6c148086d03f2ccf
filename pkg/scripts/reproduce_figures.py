"""Regenerate every figure table and print where they went.

Usage: python3 scripts/reproduce_figures.py [--size 50|500] [--out DIR]
"""

import argparse
import sys
import time

from ctrw_patterns.figures import reproduce_figures


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, choices=(50, 500), default=50)
    parser.add_argument("--out", default="figures")
    parser.add_argument("--workers", type=int, default=None)
    args = parser.parse_args()
    start = time.perf_counter()
    tables, failures = reproduce_figures(args.size, args.out, args.workers)
    for name, err in sorted(failures.items()):
        print(f"FAILED {name}: {err}", file=sys.stderr)
    for table in tables:
        print(f"{args.out}/{table}")
    print(f"{len(tables)} tables in {time.perf_counter() - start:.1f}s")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
