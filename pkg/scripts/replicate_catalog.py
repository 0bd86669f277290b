#!/usr/bin/env python3
"""Recompute every stored expectation of the catalog and write a JSON summary."""

import argparse
import json
import sys

from mslie import catalog
from mslie.replicate import replicate


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("ids", nargs="*", metavar="ID", help=f"catalog ids (default: all of {', '.join(catalog.IDS)})")
    ap.add_argument("-o", "--output", help="write the JSON summary here")
    ap.add_argument("-q", "--quiet", action="store_true", help="only print failing checks")
    args = ap.parse_args(argv)

    bad = [i for i in args.ids if i not in catalog.IDS]
    if bad:
        ap.error(f"unknown catalog id(s): {', '.join(bad)}")
    reports = [replicate(i) for i in args.ids or catalog.IDS]
    for rep in reports:
        for line in rep.lines():
            if not args.quiet or "MISMATCH" in line:
                print(line)
        print(f"{rep.entry}: {'all matched' if rep.ok else 'MISMATCHES'} in {rep.seconds:.2f}s")
    summary = {r.entry: r.to_json() for r in reports}
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
    return 0 if all(r.ok for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
