"""Command-line pipeline for the simulation-and-reconstruction toolkit.

Five subcommands chain into a full workflow::

    lightpath simulate     render correspondence maps for a scene
    lightpath reconstruct  turn a map directory into points and normals
    lightpath evaluate     score a point cloud against references or fits
    lightpath sweep        run the noise/parameter error studies
    lightpath mesh         integrate normals into a height-map mesh

Every command reads defaults from an optional TOML file (``--config``,
``[run]`` table); explicit command-line flags override the file.  Exit
codes: 0 success, 1 usage/configuration/data errors, 2 "ran fine but
produced no usable output" (e.g. every point was quality-flagged).

All outputs are deterministic: rerunning a command with the same inputs
and seed reproduces every artifact byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .evaluate import (
    DEFAULT_SIGMAS,
    SWEEP_EXPERIMENTS,
    CylinderReference,
    EllipsoidReference,
    PlaneReference,
    SphereReference,
    normal_errors,
    position_errors,
    ransac_fit,
    run_sweep,
    sweep_to_csv,
)
from .heightfield import (
    NormalGrid,
    depth_alignment_offset,
    integrate,
    mesh_from_heightmap,
    normals_to_gradients,
)
from .io import (
    read_correspondence_map,
    read_manifest,
    read_point_cloud_ply,
    write_correspondence_map,
    write_manifest,
    write_mesh_obj,
    write_pfm,
    write_pgm16,
    write_point_cloud_ply,
)
from .reconstruct import (
    QualityFlag,
    record_arrays_from_maps,
    reconstruct_surface,
    reconstruct_thin,
)
from .scene import PatternPlane
from .scenes import ConfigError, build_paper_scene, scene_from_mapping
from .stripes import StripeSweep, synthesize_stripe_stack
from .tracer import add_correspondence_noise, render_views

__all__ = ["main"]


class _UsageError(Exception):
    """Bad command line or missing required option (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    """Parser whose errors raise instead of calling ``sys.exit``."""

    def error(self, message):  # noqa: A003 - argparse API
        raise _UsageError(message)


def _note(verbose: bool, **fields) -> None:
    """Key=value progress lines on stderr; silent unless ``--verbose``."""
    if verbose:
        print(" ".join(f"{k}={v}" for k, v in fields.items()),
              file=sys.stderr, flush=True)


# ---------------------------------------------------------------------------
# configuration files


#: [run] keys each command accepts (mirrors its command-line options).
_RUN_KEYS = {
    "simulate": {"scene", "res", "noise", "seed", "pattern_z0", "pattern_z1",
                 "liquid_index", "object_index", "h", "s", "thickness",
                 "stacks", "threads", "out", "verbose"},
    "reconstruct": {"maps", "out", "thin", "unknown_media", "min_angle",
                    "max_gap", "threads", "verbose"},
    "evaluate": {"cloud", "out", "fit", "fit_threshold", "iterations",
                 "seed", "reference", "verbose"},
    "sweep": {"experiment", "trials", "seed", "res", "sigmas", "threads",
              "out", "verbose"},
    "mesh": {"cloud", "maps", "out", "pitch", "verbose"},
}


def _load_config(path, command: str):
    """Read a TOML config: the ``[run]`` option table plus, for simulate,
    any custom scene tables (camera/pattern/solid/liquid)."""
    if path is None:
        return {}, {}
    try:
        import tomllib
    except ModuleNotFoundError:  # pragma: no cover - Python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    run = data.pop("run", {})
    if not isinstance(run, dict):
        raise ConfigError("[run] must be a table")
    extra = sorted(set(run) - _RUN_KEYS[command])
    if extra:
        raise ConfigError(f"unknown keys {extra} in [run] for {command!r}")
    if data and command != "simulate":
        raise ConfigError(
            f"scene tables {sorted(data)} only apply to the simulate command")
    return run, data


def _merge(args, run: dict, key: str, default):
    """Command line beats config file beats built-in default."""
    value = getattr(args, key)
    if value is None:
        value = run.get(key, default)
    return value


def _require(value, what: str):
    if value is None:
        raise _UsageError(f"missing required option {what}")
    return value


def _parse_sigmas(value):
    if value is None:
        return DEFAULT_SIGMAS
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
        if not parts:
            raise ConfigError("--sigmas needs a comma-separated float list")
        return tuple(float(p) for p in parts)
    return tuple(float(v) for v in value)


# ---------------------------------------------------------------------------
# simulate


def _catalog_overrides(args, run) -> dict:
    overrides = {}
    for key in ("pattern_z0", "pattern_z1", "liquid_index", "object_index",
                "h", "s", "thickness"):
        value = _merge(args, run, key, None)
        if value is not None:
            overrides[key] = float(value)
    return overrides


def _build_scene(args, run, scene_tables, res, explicit_res):
    scene_name = _merge(args, run, "scene", None)
    overrides = _catalog_overrides(args, run)
    if scene_name is not None:
        if scene_tables:
            raise ConfigError(
                "give either --scene NAME or custom scene tables, not both")
        return build_paper_scene(scene_name, resolution=res, **overrides)
    if scene_tables:
        if overrides:
            raise ConfigError(
                f"catalog overrides {sorted(overrides)} need --scene NAME")
        ps = scene_from_mapping(scene_tables)
        if explicit_res:
            camera = replace(ps.scene.camera, width=res, height=res)
            ps = replace(ps, scene=replace(ps.scene, camera=camera))
        return ps
    raise _UsageError("simulate needs --scene NAME or a scene config file")


def _write_stripe_stacks(out: Path, scene, map_files: dict,
                         verbose: bool) -> None:
    stacks_dir = out / "stacks"
    stacks_dir.mkdir(parents=True, exist_ok=True)
    index: dict = {}
    for fname, cmap in map_files.items():
        base = fname[: -len(".corr")]
        pattern = scene.patterns[cmap.pattern_index]
        entry: dict = {}
        for axis_i, (axis, coord) in enumerate((("u", cmap.u),
                                                ("v", cmap.v))):
            half = pattern.extent[axis_i]
            sweep = StripeSweep.cover(-half, half, width=1.0)
            stack = synthesize_stripe_stack(coord, cmap.valid, sweep)
            files = []
            for k in range(stack.shape[0]):
                frame = np.round(
                    np.clip(stack[k], 0.0, 1.0) * 65535.0).astype(np.uint16)
                name = f"{base}_{axis}_{k:04d}.pgm"
                write_pgm16(stacks_dir / name, frame)
                files.append(name)
            entry[axis] = {
                "centers": [float(c) for c in sweep.centers],
                "width": float(sweep.width),
                "sigma": float(sweep.sigma),
                "files": files,
            }
        index[fname] = entry
        _note(verbose, stage="stacks", map=fname,
              frames=sum(len(e["files"]) for e in entry.values()))
    write_manifest(stacks_dir / "index.json", index)


def _cmd_simulate(args) -> int:
    run, scene_tables = _load_config(args.config, "simulate")
    out = Path(_require(_merge(args, run, "out", None), "--out"))
    explicit_res = args.res is not None or "res" in run
    res = int(_merge(args, run, "res", 256))
    noise = float(_merge(args, run, "noise", 0.0))
    seed = int(_merge(args, run, "seed", 0))
    threads = int(_merge(args, run, "threads", 1))
    stacks = bool(_merge(args, run, "stacks", False))
    verbose = bool(_merge(args, run, "verbose", False))

    ps = _build_scene(args, run, scene_tables, res, explicit_res)
    scene = ps.scene
    protocol = "thin" if ps.thin else "immersion"
    _note(verbose, stage="simulate", scene=ps.name, protocol=protocol,
          resolution=scene.camera.width, noise=noise, seed=seed)

    if ps.thin:
        altered = render_views(scene, immersed=False, workers=threads)
        reference = render_views(ps.without_solids(), immersed=False,
                                 workers=threads)
        alt_label, ref_label = "object", "empty"
    else:
        altered = render_views(scene, immersed=True, workers=threads)
        reference = render_views(scene, immersed=False, workers=threads)
        alt_label, ref_label = "liquid", "air"

    alt_maps = list(altered.maps)
    ref_maps = list(reference.maps)
    if noise > 0.0:
        rng = np.random.default_rng(seed)
        alt_maps = [add_correspondence_noise(m, noise, rng) for m in alt_maps]
        ref_maps = [add_correspondence_noise(m, noise, rng) for m in ref_maps]

    out.mkdir(parents=True, exist_ok=True)
    map_files: dict = {}
    groups = {"altered": [], "reference": []}
    for label, group, maps in ((alt_label, "altered", alt_maps),
                               (ref_label, "reference", ref_maps)):
        for cmap in maps:
            fname = f"maps_{label}_p{cmap.pattern_index}.corr"
            write_correspondence_map(out / fname, cmap)
            map_files[fname] = cmap
            groups[group].append(fname)

    camera = scene.camera
    meta = {
        "format": "lightpath-run/1",
        "scene": ps.name,
        "protocol": protocol,
        "resolution": int(camera.width),
        "noise_sigma": noise,
        "seed": seed,
        "object_index": ps.object_index,
        "liquid_index": ps.liquid_index,
        "liquid_level": None if scene.liquid is None
        else float(scene.liquid.level),
        "ambient_index": scene.ambient_index,
        "params": ps.params,
        "camera": {
            "position": [float(x) for x in camera.position],
            "forward": [float(x) for x in camera.forward],
            "up": [float(x) for x in camera.up],
            "width": int(camera.width),
            "height": int(camera.height),
            "tan_half_x": float(camera.tan_half_x),
            "tan_half_y": float(camera.tan_half_y),
        },
        "patterns": [{
            "origin": [float(x) for x in p.origin],
            "u_axis": [float(x) for x in p.u_axis],
            "v_axis": [float(x) for x in p.v_axis],
            "extent": [float(x) for x in p.extent],
        } for p in scene.patterns],
        "maps": groups,
    }
    write_manifest(out / "manifest.json", meta)

    if stacks:
        _write_stripe_stacks(out, scene, map_files, verbose)
    _note(verbose, stage="done", out=out)
    return 0


# ---------------------------------------------------------------------------
# reconstruct


#: Object bounding boxes of the immersion catalog scenes; the default
#: triangulation gap cap is 1% of the box diagonal.  Thin-protocol runs get
#: no default cap: there the line gap measures the single-refraction
#: approximation itself and must stay observable.
_IMMERSION_BBOX = {
    "semi_ellipsoid": (25.0, 25.0, 5.0),
    "concave_cone": (10.0, 10.0, 10.0),
    "hemisphere": (16.0, 16.0, 16.0),
    "facet_solid": (10.0, 10.0, 3.0),
}


def _default_max_gap(scene_name: str, protocol: str) -> float:
    box = _IMMERSION_BBOX.get(scene_name)
    if protocol != "immersion" or box is None:
        return math.inf
    return 0.01 * math.sqrt(sum(b * b for b in box))


def _load_run(maps_dir: Path):
    meta = read_manifest(maps_dir / "manifest.json")
    patterns = [PatternPlane(origin=p["origin"], u_axis=p["u_axis"],
                             v_axis=p["v_axis"], extent=tuple(p["extent"]))
                for p in meta["patterns"]]
    immersed = meta["protocol"] == "immersion"
    alt = [read_correspondence_map(maps_dir / f, immersed=immersed)
           for f in meta["maps"]["altered"]]
    ref = [read_correspondence_map(maps_dir / f)
           for f in meta["maps"]["reference"]]
    alt.sort(key=lambda m: m.pattern_index)
    ref.sort(key=lambda m: m.pattern_index)
    return meta, patterns, alt, ref


def _cmd_reconstruct(args) -> int:
    run, _ = _load_config(args.config, "reconstruct")
    maps_dir = Path(_require(_merge(args, run, "maps", None), "--maps"))
    out = Path(_require(_merge(args, run, "out", None), "--out"))
    verbose = bool(_merge(args, run, "verbose", False))
    unknown_media = bool(_merge(args, run, "unknown_media", False))

    meta, patterns, alt, ref = _load_run(maps_dir)
    records = record_arrays_from_maps(alt[0], alt[1], ref[0], ref[1],
                                      patterns)
    thin = meta["protocol"] == "thin" or bool(_merge(args, run, "thin",
                                                     False))
    min_angle = math.radians(float(_merge(args, run, "min_angle", 1.0)))
    max_gap = _merge(args, run, "max_gap", None)
    if max_gap is None:
        max_gap = _default_max_gap(meta["scene"], meta["protocol"])
    max_gap = float(max_gap)
    cam = meta["camera"]
    cam_pos = np.asarray(cam["position"], dtype=float)
    # Plausible contact depths run from the camera to the first pattern.
    # With an immersion liquid the floor tightens to just above its surface:
    # contacts are only ever recorded on immersed glass, while rays that
    # missed the object triangulate to a phantom point exactly on the
    # liquid plane, so the raised floor rejects that background.
    near = min(float(p["origin"][2]) for p in meta["patterns"])
    level = meta.get("liquid_level")
    far = float(cam_pos[2]) if level is None else float(level) + 1e-9
    depth_range = (far, near)
    _note(verbose, stage="reconstruct", scene=meta["scene"],
          protocol="thin" if thin else "immersion",
          records=len(records.pixels), min_angle_deg=math.degrees(min_angle),
          max_gap=max_gap)

    if thin:
        if unknown_media:
            raise ConfigError(
                "--unknown-media applies to the immersion protocol only")
        cloud = reconstruct_thin(
            records, camera_position=cam_pos,
            lam_object=float(meta["object_index"]),
            lam_ambient=float(meta["ambient_index"]),
            min_angle=min_angle, max_gap=max_gap, depth_range=depth_range)
        media = [float(meta["object_index"]), float(meta["ambient_index"])]
    else:
        media = None
        if not unknown_media:
            media = [float(meta["liquid_index"]),
                     float(meta["ambient_index"])]
        cloud = reconstruct_surface(
            records, camera_position=cam_pos,
            media=None if media is None else tuple(media),
            min_angle=min_angle, max_gap=max_gap, depth_range=depth_range)

    out.mkdir(parents=True, exist_ok=True)
    write_point_cloud_ply(out / "cloud.ply", cloud)
    if cloud.normal is not None:
        h, w = int(cam["height"]), int(cam["width"])
        nmap = np.full((h, w, 3), np.nan, dtype=np.float32)
        has = np.isfinite(cloud.normal).all(axis=1)
        nmap[cloud.pixels[has, 0], cloud.pixels[has, 1]] = cloud.normal[has]
        write_pfm(out / "normal_map.pfm", nmap)

    counts = {flag.name.lower(): int((cloud.quality == int(flag)).sum())
              for flag in QualityFlag}
    summary = {
        "format": "lightpath-recon/1",
        "scene": meta["scene"],
        "protocol": "thin" if thin else "immersion",
        "n_points": len(cloud),
        "n_ok": counts["ok"],
        "quality_counts": counts,
        "filters": {
            "min_angle_deg": math.degrees(min_angle),
            "max_gap": None if math.isinf(max_gap) else max_gap,
            "depth_range": [min(depth_range), max(depth_range)],
        },
        "media": None if unknown_media else media,
    }
    write_manifest(out / "summary.json", summary)
    _note(verbose, stage="done", n_points=len(cloud), n_ok=counts["ok"],
          out=out)
    if counts["ok"] == 0:
        print("reconstruct: no point passed the quality filters",
              file=sys.stderr)
        return 2
    return 0


# ---------------------------------------------------------------------------
# evaluate


_EVAL_COLUMNS = ("source", "primitive", "n_points", "inlier_fraction",
                 "radius", "params", "pos_mean", "pos_median", "pos_rms",
                 "normal_mean_deg", "normal_median_deg", "normal_rms_deg")


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _format_params(params: dict) -> str:
    parts = []
    for key, value in params.items():
        arr = np.atleast_1d(np.asarray(value, dtype=float))
        parts.append(f"{key}=" + ",".join(format(v, ".9g") for v in arr))
    return "; ".join(parts)


def parse_reference(text: str):
    """Parse a reference-surface spec like ``sphere:cx,cy,cz:r``.

    Supported forms (all numbers comma-separated)::

        sphere:cx,cy,cz:radius
        plane:nx,ny,nz:offset
        cylinder:px,py,pz:dx,dy,dz:radius
        ellipsoid:cx,cy,cz:ax,ay,az
    """
    def vec(part: str, n: int) -> np.ndarray:
        values = [float(x) for x in part.split(",")]
        if len(values) != n:
            raise ValueError(f"expected {n} numbers, got {len(values)}")
        return np.asarray(values)

    parts = text.split(":")
    kind = parts[0]
    try:
        if kind == "sphere" and len(parts) == 3:
            return SphereReference(center=vec(parts[1], 3),
                                   radius=float(parts[2])), kind
        if kind == "plane" and len(parts) == 3:
            return PlaneReference(normal=vec(parts[1], 3),
                                  offset=float(parts[2])), kind
        if kind == "cylinder" and len(parts) == 4:
            return CylinderReference(axis_point=vec(parts[1], 3),
                                     axis_dir=vec(parts[2], 3),
                                     radius=float(parts[3])), kind
        if kind == "ellipsoid" and len(parts) == 3:
            return EllipsoidReference(center=vec(parts[1], 3),
                                      semi_axes=vec(parts[2], 3)), kind
    except ValueError as exc:
        raise ConfigError(f"cannot parse reference {text!r}: {exc}") from exc
    raise ConfigError(
        f"cannot parse reference {text!r}; expected sphere:cx,cy,cz:r, "
        "plane:nx,ny,nz:off, cylinder:px,py,pz:dx,dy,dz:r or "
        "ellipsoid:cx,cy,cz:ax,ay,az")


def _stat_cells(summary, prefix: str) -> dict:
    return {f"{prefix}_{s}": getattr(summary, f"{prefix}_{s}")
            for s in ("mean", "median", "rms")} if summary is not None else {}


def _cmd_evaluate(args) -> int:
    run, _ = _load_config(args.config, "evaluate")
    cloud_path = Path(_require(_merge(args, run, "cloud", None), "--cloud"))
    out = Path(_require(_merge(args, run, "out", None), "--out"))
    fit = _merge(args, run, "fit", None)
    reference = _merge(args, run, "reference", None)
    if fit is None and reference is None:
        raise _UsageError("evaluate needs --fit and/or --reference")
    fit_threshold = float(_merge(args, run, "fit_threshold", 0.5))
    iterations = int(_merge(args, run, "iterations", 500))
    seed = int(_merge(args, run, "seed", 0))
    verbose = bool(_merge(args, run, "verbose", False))

    cloud = read_point_cloud_ply(cloud_path)
    ok = (cloud.quality == int(QualityFlag.OK)) \
        & np.isfinite(cloud.fep).all(axis=1)
    points = cloud.fep[ok]
    normals = None
    if cloud.normal is not None:
        normals = cloud.normal[ok]
    _note(verbose, stage="evaluate", cloud=cloud_path, n_total=len(cloud),
          n_ok=len(points))

    out.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    if len(points) > 0:
        if fit is not None:
            result = ransac_fit(points, fit, inlier_threshold=fit_threshold,
                                iterations=iterations, seed=seed)
            distances = result.model.distances(points)
            rows.append({
                "source": "fit", "primitive": fit, "n_points": len(points),
                "inlier_fraction": result.inlier_fraction,
                "radius": result.params.get("radius"),
                "params": _format_params(result.params),
                "pos_mean": float(np.mean(distances)),
                "pos_median": float(np.median(distances)),
                "pos_rms": float(np.sqrt(np.mean(distances ** 2))),
            })
            _note(verbose, stage="fit", primitive=fit,
                  inlier_fraction=result.inlier_fraction)
        if reference is not None:
            ref, kind = parse_reference(reference)
            _, pos_summary = position_errors(points, ref)
            row = {"source": "reference", "primitive": kind,
                   "n_points": len(points),
                   "radius": getattr(ref, "radius", None)}
            row.update(_stat_cells(pos_summary, "pos"))
            if normals is not None and hasattr(ref, "normals_at"):
                _, n_summary = normal_errors(points, normals, ref)
                for stat in ("mean_deg", "median_deg", "rms_deg"):
                    row[f"normal_{stat}"] = getattr(n_summary,
                                                    f"normal_{stat}")
            rows.append(row)

    with open(out / "evaluate.csv", "w", encoding="ascii",
              newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_EVAL_COLUMNS)
        for row in rows:
            writer.writerow([_csv_cell(row.get(col))
                             for col in _EVAL_COLUMNS])

    if len(points) == 0:
        print("evaluate: the cloud has no usable (quality OK) points",
              file=sys.stderr)
        return 2
    return 0


# ---------------------------------------------------------------------------
# sweep


_SWEEP_ALIASES = {
    "fig6": ("separation", "medium"),
    "fig10": ("thickness",),
    "fig11": ("shell",),
}

#: Per-alias condensed plot tables: (file name, columns).
_ALIAS_TABLES = {
    "fig6": (("fig6_position.csv", ("sigma", "separation", "pos_rms")),
             ("fig6_normal.csv", ("sigma", "separation", "normal_rms_deg"))),
    "fig10": (("fig10_normal.csv", ("sigma", "thickness",
                                    "normal_rms_deg")),),
    "fig11": (("fig11_error.csv", ("sigma", "shell_offset", "pos_rms",
                                   "normal_rms_deg")),),
}


def _write_table(path: Path, columns, summaries) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for s in summaries:
            writer.writerow([_csv_cell(getattr(s, col)) for col in columns])


def _cmd_sweep(args) -> int:
    run, _ = _load_config(args.config, "sweep")
    experiment = _require(_merge(args, run, "experiment", None),
                          "--experiment")
    out = Path(_require(_merge(args, run, "out", None), "--out"))
    trials = int(_merge(args, run, "trials", 50))
    seed = int(_merge(args, run, "seed", 0))
    res = int(_merge(args, run, "res", 128))
    threads = int(_merge(args, run, "threads", 1))
    sigmas = _parse_sigmas(_merge(args, run, "sigmas", None))
    verbose = bool(_merge(args, run, "verbose", False))

    if experiment in _SWEEP_ALIASES:
        experiments = _SWEEP_ALIASES[experiment]
    elif experiment in SWEEP_EXPERIMENTS:
        experiments = (experiment,)
    else:
        known = ", ".join(SWEEP_EXPERIMENTS + tuple(_SWEEP_ALIASES))
        raise ConfigError(
            f"unknown experiment {experiment!r}; available: {known}")

    out.mkdir(parents=True, exist_ok=True)
    by_experiment = {}
    for exp in experiments:
        _note(verbose, stage="sweep", experiment=exp, trials=trials,
              resolution=res, sigmas=len(sigmas))
        summaries = run_sweep(exp, trials=trials, seed=seed, resolution=res,
                              sigmas=sigmas, workers=threads)
        by_experiment[exp] = summaries
        sweep_to_csv(summaries, out / f"sweep_{exp}.csv")

    for fname, columns in _ALIAS_TABLES.get(experiment, ()):
        _write_table(out / fname, columns, by_experiment[experiments[0]])
    _note(verbose, stage="done", out=out)
    return 0


# ---------------------------------------------------------------------------
# mesh


def _estimate_pitch(maps_dir: Path, depths: np.ndarray) -> float:
    """Scene-unit spacing of neighboring pixels at the surface's depth."""
    meta = read_manifest(maps_dir / "manifest.json")
    cam = meta["camera"]
    span = abs(float(np.median(depths)) - float(cam["position"][2]))
    return 2.0 * float(cam["tan_half_x"]) * span / float(cam["width"])


def _cmd_mesh(args) -> int:
    run, _ = _load_config(args.config, "mesh")
    cloud_path = Path(_require(_merge(args, run, "cloud", None), "--cloud"))
    out = Path(_require(_merge(args, run, "out", None), "--out"))
    verbose = bool(_merge(args, run, "verbose", False))

    cloud = read_point_cloud_ply(cloud_path)
    if cloud.normal is None:
        raise ConfigError(
            "the cloud carries no normals; reconstruct with known media")
    ok = (cloud.quality == int(QualityFlag.OK)) \
        & np.isfinite(cloud.fep).all(axis=1) \
        & np.isfinite(cloud.normal).all(axis=1)
    if not ok.any():
        print("mesh: no usable (quality OK) points in the cloud",
              file=sys.stderr)
        return 2
    pixels = cloud.pixels[ok]
    feps = cloud.fep[ok]
    h = int(pixels[:, 0].max()) + 1
    w = int(pixels[:, 1].max()) + 1

    pitch = _merge(args, run, "pitch", None)
    if pitch is None:
        maps_dir = _merge(args, run, "maps", None)
        if maps_dir is None:
            raise _UsageError("mesh needs --pitch or --maps to derive it")
        pitch = _estimate_pitch(Path(maps_dir), feps[:, 2])
    pitch = float(pitch)
    _note(verbose, stage="mesh", n_points=int(ok.sum()), grid=f"{h}x{w}",
          pitch=pitch)

    normals = np.zeros((h, w, 3))
    mask = np.zeros((h, w), dtype=bool)
    normals[pixels[:, 0], pixels[:, 1]] = cloud.normal[ok]
    mask[pixels[:, 0], pixels[:, 1]] = True
    grads = normals_to_gradients(NormalGrid(normals=normals, mask=mask,
                                            pitch=pitch))
    height = integrate(grads)

    depth = np.full((h, w), np.nan)
    depth[pixels[:, 0], pixels[:, 1]] = feps[:, 2]
    height = height + depth_alignment_offset(height, grads.mask, depth,
                                             np.isfinite(depth))

    origin = (-0.5 * (w - 1) * pitch, -0.5 * (h - 1) * pitch)
    mesh = mesh_from_heightmap(height, grads.mask, pitch, origin=origin)
    out.mkdir(parents=True, exist_ok=True)
    write_mesh_obj(out / "mesh.obj", mesh)
    write_pfm(out / "height.pfm", height.astype(np.float32))
    _note(verbose, stage="done", vertices=len(mesh.vertices),
          faces=len(mesh.faces), out=out)
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _add_common(p: _Parser) -> None:
    p.add_argument("--config", metavar="FILE",
                   help="TOML file with a [run] option table")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--verbose", action="store_true", default=None,
                   help="key=value progress lines on stderr")


def _build_parser() -> _Parser:
    parser = _Parser(prog="lightpath",
                     description="simulate, reconstruct and score refracted "
                                 "light paths around transparent objects")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate",
                       help="render correspondence maps for a scene")
    _add_common(p)
    p.add_argument("--scene", help="catalog scene name")
    p.add_argument("--res", type=int, help="square image resolution")
    p.add_argument("--noise", type=float,
                   help="correspondence noise sigma in pattern units")
    p.add_argument("--seed", type=int, help="noise RNG seed")
    p.add_argument("--pattern-z0", dest="pattern_z0", type=float,
                   help="override near pattern plane z")
    p.add_argument("--pattern-z1", dest="pattern_z1", type=float,
                   help="override far pattern plane z")
    p.add_argument("--liquid-index", dest="liquid_index", type=float,
                   help="override the immersion liquid's refractive index")
    p.add_argument("--object-index", dest="object_index", type=float,
                   help="override the object's refractive index")
    p.add_argument("--h", type=float,
                   help="thin_cone padding height parameter")
    p.add_argument("--s", type=float,
                   help="spherical_shell center offset parameter")
    p.add_argument("--thickness", type=float,
                   help="plano_curved plate thickness parameter")
    p.add_argument("--stacks", action="store_true", default=None,
                   help="also synthesize stripe-sweep image stacks")
    p.add_argument("--threads", type=int, help="render worker processes")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("reconstruct",
                       help="triangulate points and normals from maps")
    _add_common(p)
    p.add_argument("--maps", metavar="DIR",
                   help="directory written by simulate")
    p.add_argument("--thin", action="store_true", default=None,
                   help="force the thin-object method")
    p.add_argument("--unknown-media", dest="unknown_media",
                   action="store_true", default=None,
                   help="triangulate points only; skip normals")
    p.add_argument("--min-angle", dest="min_angle", type=float,
                   help="smallest usable line angle in degrees (default 1)")
    p.add_argument("--max-gap", dest="max_gap", type=float,
                   help="largest usable line gap in scene units")
    p.add_argument("--threads", type=int,
                   help="accepted for symmetry; reconstruction is vectorized")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("evaluate",
                       help="score a point cloud against fits or references")
    _add_common(p)
    p.add_argument("--cloud", metavar="PLY", help="point cloud to score")
    p.add_argument("--fit", choices=("plane", "sphere", "cylinder"),
                   help="robustly fit this primitive to the cloud")
    p.add_argument("--fit-threshold", dest="fit_threshold", type=float,
                   help="inlier distance threshold (default 0.5)")
    p.add_argument("--iterations", type=int,
                   help="sampling iterations (default 500)")
    p.add_argument("--seed", type=int, help="sampling RNG seed")
    p.add_argument("--reference",
                   help="analytic surface, e.g. sphere:0,0,8:8 or "
                        "ellipsoid:0,0,0:12.5,12.5,5")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="run noise/parameter error studies")
    _add_common(p)
    p.add_argument("--experiment",
                   help="separation, medium, thickness, shell or an alias "
                        "fig6, fig10, fig11")
    p.add_argument("--trials", type=int,
                   help="noise trials per grid cell (default 50)")
    p.add_argument("--seed", type=int, help="base RNG seed")
    p.add_argument("--res", type=int,
                   help="render resolution (default 128)")
    p.add_argument("--sigmas", help="comma-separated noise levels")
    p.add_argument("--threads", type=int, help="render worker processes")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("mesh",
                       help="integrate a cloud's normals into a mesh")
    _add_common(p)
    p.add_argument("--cloud", metavar="PLY",
                   help="point cloud with normals and pixel indices")
    p.add_argument("--pitch", type=float,
                   help="pixel spacing in scene units")
    p.add_argument("--maps", metavar="DIR",
                   help="simulate directory used to derive --pitch")
    p.set_defaults(func=_cmd_mesh)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            raise _UsageError("missing subcommand "
                              "(simulate, reconstruct, evaluate, sweep, mesh)")
        return int(args.func(args))
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
