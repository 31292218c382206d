#!/usr/bin/env python3
"""Per-block arithmetic cost of the three warp variants.

Prints the closed-form operation counts next to a tally from an
instrumented run of the actual kernel, so any drift between the table
and the code shows up immediately.
"""

import argparse

from geo360 import motion_model as mm

VARIANTS = [
    ("original", "global", "orig"),
    ("gc", "global", "gcg"),
    ("gc", "local", "gcl"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="4,8,16,32,64",
                    help="comma-separated square block sizes")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print("| block | model | trig | mul | div | add | total | instrumented |")
    print("|------:|:------|-----:|----:|----:|----:|------:|:-------------|")
    for n in sizes:
        for variant, scaling, label in VARIANTS:
            table = mm.op_count(variant, scaling, n, n)
            ran = mm.count_block_ops(variant, scaling, n, n)
            status = "match" if ran == table else f"MISMATCH {ran}"
            print(f"| {n}x{n} | {label} | {table.trig} | {table.mul} "
                  f"| {table.div} | {table.add} | {table.total} | {status} |")

    print()
    print("per-pixel totals: orig 6/px + 5, gcg 4/px, gcl 5/px + 1")


if __name__ == "__main__":
    main()
