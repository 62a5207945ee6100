#!/usr/bin/env python3
"""Run the full verification suite and write the JSON report.

Usage: python scripts/run_suite.py [report.json] [--samples N] [--seed S]
"""

import sys

from instanton import cli


def main() -> int:
    argv = sys.argv[1:]
    out = None
    if argv and not argv[0].startswith("-"):
        out, argv = argv[0], argv[1:]
    args = ["suite"] + argv
    if out:
        args += ["--output", out]
    return cli.run(args)


if __name__ == "__main__":
    sys.exit(main())
