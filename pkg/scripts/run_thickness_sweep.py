#!/usr/bin/env python3
"""Thin-object approximation study: normal error versus the padded cone's
base thickness.

The thin-object method treats the object as a single refracting surface;
padding the cone from below with a cylinder of height h makes it
progressively thicker and the approximation progressively worse.  The
sweep quantifies that trend under several noise levels.
"""

import argparse
import sys

from lightpath.cli import main as lightpath


def run(argv) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/thickness_sweep")
    ap.add_argument("--res", type=int, default=128)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sigmas", default="0,0.1,0.2")
    args = ap.parse_args(argv)

    rc = lightpath(["sweep", "--experiment", "fig10",
                    "--res", str(args.res), "--trials", str(args.trials),
                    "--seed", str(args.seed), "--sigmas", args.sigmas,
                    "--out", args.out, "--verbose"])
    if rc == 0:
        print(f"done; see {args.out}/sweep_thickness.csv")
    return rc


if __name__ == "__main__":
    raise SystemExit(run(sys.argv[1:]))
