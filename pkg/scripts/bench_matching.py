#!/usr/bin/env python3
"""Matching-cost benchmark: two-stage global-to-local vs flat multi-center search."""

import argparse

from cras.cli import run_hpi_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--classes", default="2,4,8,16")
    ap.add_argument("--channels", default=32, type=int)
    ap.add_argument("--size", default=16, type=int, help="feature map height and width")
    ap.add_argument("--queries", default=32, type=int)
    ap.add_argument("--repeats", default=5, type=int)
    args = ap.parse_args()

    counts = [int(x) for x in args.classes.split(",")]
    rows = run_hpi_benchmark(
        counts, channels=args.channels, height=args.size, width=args.size,
        queries=args.queries, repeats=args.repeats,
    )
    print(f"{'classes':>8}{'global(s)':>12}{'local(s)':>12}{'two-stage(s)':>14}{'flat(s)':>12}{'flat/local':>12}")
    for row in rows:
        print(
            f"{row['classes']:>8}{row['global_s']:>12.5f}{row['local_s']:>12.5f}"
            f"{row['two_stage_s']:>14.5f}{row['flat_s']:>12.5f}{row['flat_s'] / row['local_s']:>12.1f}"
        )
    first, last = rows[0], rows[-1]
    print(
        f"\nscaling {first['classes']} -> {last['classes']} classes: "
        f"local {last['local_s'] / first['local_s']:.2f}x, flat {last['flat_s'] / first['flat_s']:.2f}x"
    )


if __name__ == "__main__":
    main()
