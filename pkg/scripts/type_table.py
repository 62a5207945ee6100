#!/usr/bin/env python3
"""Print the self-dual Weyl type of every catalog family, both orientations.

Usage: python scripts/type_table.py [--samples N] [--seed S]
"""

import argparse

from instanton import catalog, geometry
from instanton.errors import InconclusiveError


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ns = ap.parse_args()
    print(f"{'family':<16}{'orientation':<13}type")
    for name in catalog.FAMILIES:
        for label, flip in (("std", False), ("reversed", True)):
            chart = catalog.make_metric(name)
            if flip:
                chart = geometry.orientation_flip(chart)
            try:
                verdict = geometry.classify_type(
                    chart, n_samples=ns.samples, seed=ns.seed).label
            except InconclusiveError:
                verdict = "Inconclusive"
            print(f"{name:<16}{label:<13}{verdict}")


if __name__ == "__main__":
    main()
