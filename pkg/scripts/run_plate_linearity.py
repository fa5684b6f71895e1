#!/usr/bin/env python3
"""Single-surface model error versus plate thickness on the plano-curved
lens scene.

The thin-object method attributes all bending to one surface.  For a
plano-curved plate the neglected second (flat) face displaces the ray in
proportion to the glass thickness, so the reconstruction error should
grow linearly in the thickness and vanish as it goes to zero.  The script
reconstructs the scene at several thicknesses and reports the fit of a
straight line through the origin.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from lightpath.reconstruct import record_arrays_from_maps, reconstruct_thin
from lightpath.scenes import build_paper_scene
from lightpath.tracer import render_views


def run(argv) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/plate_linearity")
    ap.add_argument("--res", type=int, default=128)
    ap.add_argument("--thicknesses", default="0.25,0.5,1,2")
    args = ap.parse_args(argv)

    thicknesses = [float(x) for x in args.thicknesses.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    base = None
    rows = []
    for d in thicknesses:
        ps = build_paper_scene("plano_curved", resolution=args.res,
                               thickness=d)
        if base is None:
            base = render_views(ps.without_solids(), immersed=False)
        views = render_views(ps.scene, immersed=False)
        records = record_arrays_from_maps(
            views.maps[0], views.maps[1], base.maps[0], base.maps[1],
            ps.scene.patterns)
        cloud = reconstruct_thin(
            records, camera_position=ps.scene.camera.position,
            lam_object=ps.object_index, lam_ambient=1.0,
            depth_range=(float(ps.scene.camera.position[2]), 20.0))
        scored = cloud.ok_mask() & np.isfinite(cloud.fep).all(axis=1)
        scored &= views.fep_valid[cloud.pixels[:, 0], cloud.pixels[:, 1]]
        pix = cloud.pixels[scored]
        err = np.linalg.norm(
            cloud.fep[scored] - views.fep[pix[:, 0], pix[:, 1]], axis=1)
        rows.append((d, int(scored.sum()), float(np.mean(err)),
                     float(np.sqrt(np.mean(err ** 2)))))
        print(f"thickness={d:g}: scored={rows[-1][1]} "
              f"mean_err={rows[-1][2]:.5f} rms={rows[-1][3]:.5f}")

    d = np.array([r[0] for r in rows])
    e = np.array([r[2] for r in rows])
    slope = float(d @ e / (d @ d))
    resid = e - slope * d
    r2 = 1.0 - float(resid @ resid) / float(e @ e)
    print(f"line through origin: slope={slope:.5f} R^2={r2:.6f}")

    with open(out / "linearity.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["thickness", "n_scored", "mean_err", "rms_err"])
        writer.writerows(rows)
        writer.writerow([])
        writer.writerow(["slope", slope])
        writer.writerow(["r_squared", r2])
    print(f"done; see {out}/linearity.csv")
    return 0


if __name__ == "__main__":
    raise SystemExit(run(sys.argv[1:]))
