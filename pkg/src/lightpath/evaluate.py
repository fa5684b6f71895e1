"""Error metrics, robust primitive fitting, and noise-sweep experiments.

Three layers:

* reference geometries (:class:`SphereReference` etc.) with point-distance
  and nearest-normal queries, used to score reconstructed clouds;
* :func:`ransac_fit`, a deterministic RANSAC over plane / sphere / cylinder
  primitives with least-squares refinement;
* :func:`run_sweep`, which renders a catalog scene, perturbs the decoded
  correspondences with Gaussian noise over a parameter grid, reconstructs,
  and scores each trial against the traced ground truth.

Sweep scoring is per pixel: a reconstructed contact point is compared with
the traced first-contact point of the same pixel, and its normal with the
traced surface normal there.  Rows whose quality flag marks a degenerate
triangulation (parallel lines, sub-threshold ray angle) are excluded —
those flags exist precisely so downstream stages can skip unusable pixels.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial import cKDTree

from .geometry import ContractViolation, unit
from .reconstruct import (
    QualityFlag,
    reconstruct_surface,
    reconstruct_thin,
    record_arrays_from_maps,
)
from .scenes import build_paper_scene
from .tracer import add_correspondence_noise, render_views

__all__ = [
    "CylinderReference",
    "DEFAULT_SIGMAS",
    "EllipsoidReference",
    "ErrorSummary",
    "FitError",
    "FitResult",
    "ImplicitReference",
    "PlaneReference",
    "PointCloudReference",
    "SphereReference",
    "SWEEP_COLUMNS",
    "SWEEP_EXPERIMENTS",
    "normal_errors",
    "position_errors",
    "ransac_fit",
    "run_sweep",
    "sweep_to_csv",
]


class FitError(ValueError):
    """Raised when a primitive cannot be fitted to the given points."""


def _points(points) -> np.ndarray:
    a = np.asarray(points, dtype=float)
    if a.ndim != 2 or a.shape[1] != 3:
        raise ValueError(f"expected an (N, 3) point array, got {a.shape}")
    return a


# ---------------------------------------------------------------------------
# reference geometries


@dataclass(frozen=True)
class SphereReference:
    """Score points against a sphere surface."""

    center: Sequence[float]
    radius: float

    def distances(self, points) -> np.ndarray:
        p = _points(points)
        return np.abs(np.linalg.norm(p - np.asarray(self.center, float),
                                     axis=1) - self.radius)

    def normals_at(self, points) -> np.ndarray:
        p = _points(points) - np.asarray(self.center, float)
        r = np.linalg.norm(p, axis=1)
        return p / np.where(r > 0.0, r, 1.0)[:, None]


@dataclass(frozen=True)
class PlaneReference:
    """Score points against a plane ``unit(normal) . p = offset``."""

    normal: Sequence[float]
    offset: float

    def __post_init__(self) -> None:
        n = np.asarray(self.normal, dtype=float)
        length = float(np.linalg.norm(n))
        if length == 0.0:
            raise ValueError("plane normal must be non-zero")
        object.__setattr__(self, "normal", n / length)
        object.__setattr__(self, "offset", float(self.offset) / length)

    def distances(self, points) -> np.ndarray:
        return np.abs(_points(points) @ self.normal - self.offset)

    def normals_at(self, points) -> np.ndarray:
        return np.broadcast_to(self.normal, _points(points).shape).copy()


@dataclass(frozen=True)
class CylinderReference:
    """Score points against an infinite cylinder surface."""

    axis_point: Sequence[float]
    axis_dir: Sequence[float]
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "axis_point",
                           np.asarray(self.axis_point, dtype=float))
        object.__setattr__(self, "axis_dir",
                           unit(np.asarray(self.axis_dir, dtype=float)))

    def _radial(self, points) -> np.ndarray:
        q = _points(points) - self.axis_point
        along = q @ self.axis_dir
        return q - along[:, None] * self.axis_dir[None, :]

    def distances(self, points) -> np.ndarray:
        return np.abs(np.linalg.norm(self._radial(points), axis=1)
                      - self.radius)

    def normals_at(self, points) -> np.ndarray:
        radial = self._radial(points)
        r = np.linalg.norm(radial, axis=1)
        return radial / np.where(r > 0.0, r, 1.0)[:, None]


@dataclass(frozen=True)
class ImplicitReference:
    """First-order distance ``|f| / |grad f|`` to an implicit surface.

    Exact for planes and near-exact close to any smooth surface; the
    per-point loop keeps this for modest cloud sizes or analytic checks.
    """

    solid: object

    def distances(self, points) -> np.ndarray:
        p = _points(points)
        out = np.empty(len(p))
        for i, q in enumerate(p):
            g = np.linalg.norm(np.asarray(self.solid.gradient(q), float))
            out[i] = abs(float(self.solid.f(q))) / g if g > 0.0 else np.inf
        return out

    def normals_at(self, points) -> np.ndarray:
        p = _points(points)
        out = np.empty_like(p)
        for i, q in enumerate(p):
            out[i] = unit(np.asarray(self.solid.gradient(q), float))
        return out


@dataclass(frozen=True)
class EllipsoidReference:
    """Vectorized first-order distance to an axis-aligned ellipsoid."""

    center: Sequence[float]
    semi_axes: Sequence[float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "center",
                           np.asarray(self.center, dtype=float))
        axes = np.asarray(self.semi_axes, dtype=float)
        if np.any(axes <= 0):
            raise ValueError("semi-axes must be positive")
        object.__setattr__(self, "semi_axes", axes)

    def _f_grad(self, points):
        q = (_points(points) - self.center) / self.semi_axes
        f = np.sum(q * q, axis=1) - 1.0
        grad = 2.0 * q / self.semi_axes
        return f, grad

    def distances(self, points) -> np.ndarray:
        f, grad = self._f_grad(points)
        gn = np.linalg.norm(grad, axis=1)
        return np.abs(f) / np.where(gn > 0.0, gn, np.inf)

    def normals_at(self, points) -> np.ndarray:
        _, grad = self._f_grad(points)
        gn = np.linalg.norm(grad, axis=1)
        return grad / np.where(gn > 0.0, gn, 1.0)[:, None]


class PointCloudReference:
    """Nearest-neighbour distance to a fixed point cloud."""

    def __init__(self, points, normals=None) -> None:
        self.points = _points(points)
        self.normals = None if normals is None else _points(normals)
        self._tree = cKDTree(self.points)

    def distances(self, points) -> np.ndarray:
        d, _ = self._tree.query(_points(points))
        return np.asarray(d, dtype=float)

    def normals_at(self, points) -> np.ndarray:
        if self.normals is None:
            raise ValueError("this point-cloud reference carries no normals")
        _, idx = self._tree.query(_points(points))
        return self.normals[idx]


# ---------------------------------------------------------------------------
# error summaries


def _check_triplet(name: str, mean, median, rms) -> None:
    given = [v for v in (mean, median, rms) if v is not None]
    if not given:
        return
    if len(given) != 3:
        raise ContractViolation(f"{name} statistics must be set together")
    if not all(np.isfinite(v) for v in given):
        raise ContractViolation(f"{name} statistics must be finite")
    if rms + 1e-12 < abs(mean):
        raise ContractViolation(
            f"{name} RMS {rms} is below |mean| {abs(mean)}")


@dataclass(frozen=True)
class ErrorSummary:
    """Aggregate error statistics for one run or one sweep grid cell."""

    experiment: str
    sigma: float
    trials: int
    separation: Optional[float] = None
    medium_index: Optional[float] = None
    thickness: Optional[float] = None
    shell_offset: Optional[float] = None
    n_points: Optional[int] = None
    pos_mean: Optional[float] = None
    pos_median: Optional[float] = None
    pos_rms: Optional[float] = None
    normal_mean_deg: Optional[float] = None
    normal_median_deg: Optional[float] = None
    normal_rms_deg: Optional[float] = None

    def __post_init__(self) -> None:
        _check_triplet("position", self.pos_mean, self.pos_median,
                       self.pos_rms)
        _check_triplet("normal", self.normal_mean_deg, self.normal_median_deg,
                       self.normal_rms_deg)
        if self.pos_mean is None and self.normal_mean_deg is None:
            raise ContractViolation("summary carries no statistics at all")


def _stats(values: np.ndarray) -> tuple[float, float, float]:
    v = np.asarray(values, dtype=float)
    return (float(v.mean()), float(np.median(v)),
            float(np.sqrt(np.mean(v * v))))


def position_errors(points, reference) -> tuple[np.ndarray, ErrorSummary]:
    """Distances from each point to the reference surface, plus a summary."""
    d = np.asarray(reference.distances(points), dtype=float)
    if d.size == 0:
        raise ValueError("cannot summarize an empty point set")
    mean, median, rms = _stats(d)
    return d, ErrorSummary(experiment="", sigma=0.0, trials=1,
                           n_points=int(d.size), pos_mean=mean,
                           pos_median=median, pos_rms=rms)


def normal_errors(points, normals, reference) -> tuple[np.ndarray,
                                                       ErrorSummary]:
    """Angles (degrees) between given normals and the reference normals."""
    p = _points(points)
    n = _points(normals)
    if len(p) != len(n):
        raise ValueError("points and normals disagree in length")
    if len(p) == 0:
        raise ValueError("cannot summarize an empty point set")
    length = np.linalg.norm(n, axis=1)
    if np.any(length == 0.0):
        raise ValueError("zero-length normal in input")
    n = n / length[:, None]
    ref = reference.normals_at(p)
    dots = np.clip(np.sum(n * ref, axis=1), -1.0, 1.0)
    ang = np.degrees(np.arccos(dots))
    mean, median, rms = _stats(ang)
    return ang, ErrorSummary(experiment="", sigma=0.0, trials=1,
                             n_points=int(ang.size), normal_mean_deg=mean,
                             normal_median_deg=median, normal_rms_deg=rms)


# ---------------------------------------------------------------------------
# RANSAC fitting


@dataclass(frozen=True)
class FitResult:
    """A fitted primitive with its inlier classification."""

    primitive: str
    params: dict
    model: object
    inliers: np.ndarray
    inlier_fraction: float


_MIN_SAMPLES = {"plane": 3, "sphere": 4, "cylinder": 5}
_DEGENERATE_CROSS = 1e-9
_REFINE_ROUNDS = 10


def _plane_from_three(p: np.ndarray) -> Optional[PlaneReference]:
    a = p[1] - p[0]
    b = p[2] - p[0]
    n = np.cross(a, b)
    scale = np.linalg.norm(a) * np.linalg.norm(b)
    if scale == 0.0 or np.linalg.norm(n) <= _DEGENERATE_CROSS * scale:
        return None
    n = unit(n)
    return PlaneReference(normal=n, offset=float(n @ p[0]))


def _sphere_from_four(p: np.ndarray) -> Optional[SphereReference]:
    # equidistance of p1..p3 from p0 gives a linear system for the center
    a = 2.0 * (p[1:] - p[0])
    b = np.sum(p[1:] * p[1:], axis=1) - float(p[0] @ p[0])
    try:
        c = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(c)):
        return None
    r = float(np.linalg.norm(p[0] - c))
    if r <= 0.0:
        return None
    return SphereReference(center=c, radius=r)


def _orthobasis(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([0.0, 0.0, 1.0])
    if abs(d[2]) > 0.9:
        helper = np.array([1.0, 0.0, 0.0])
    e1 = unit(np.cross(d, helper))
    return e1, np.cross(d, e1)


def _circle_fit_2d(x: np.ndarray, y: np.ndarray):
    # algebraic (Kasa) fit: minimize |2cx x + 2cy y + k - (x^2+y^2)|^2
    a = np.stack([2 * x, 2 * y, np.ones_like(x)], axis=1)
    b = x * x + y * y
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    cx, cy, k = sol
    r2 = k + cx * cx + cy * cy
    if not np.isfinite(r2) or r2 <= 0.0:
        return None
    return float(cx), float(cy), math.sqrt(float(r2))


def _cylinder_from_five(p: np.ndarray) -> Optional[CylinderReference]:
    # two-stage minimal model: axis direction from the plane of the first
    # three points (good when they lie near one cross-section — RANSAC keeps
    # the samples for which that holds), then a circle fit in projection
    plane = _plane_from_three(p[:3])
    if plane is None:
        return None
    d = plane.normal
    e1, e2 = _orthobasis(d)
    x = p @ e1
    y = p @ e2
    circ = _circle_fit_2d(x, y)
    if circ is None:
        return None
    cx, cy, r = circ
    return CylinderReference(axis_point=cx * e1 + cy * e2, axis_dir=d,
                             radius=r)


def _canonical_direction(n: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(n)))
    return -n if n[k] < 0 else n


def _refine_plane(pts: np.ndarray) -> PlaneReference:
    centroid = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    n = _canonical_direction(vt[-1])
    return PlaneReference(normal=n, offset=float(n @ centroid))


def _refine_sphere(pts: np.ndarray) -> SphereReference:
    # algebraic initialization, then geometric least squares
    a = np.concatenate([2.0 * pts, np.ones((len(pts), 1))], axis=1)
    b = np.sum(pts * pts, axis=1)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    c0 = sol[:3]
    r0 = math.sqrt(max(float(sol[3] + c0 @ c0), 1e-300))

    def residual(x):
        return np.linalg.norm(pts - x[:3], axis=1) - x[3]

    fit = least_squares(residual, x0=np.append(c0, r0), method="lm")
    return SphereReference(center=fit.x[:3], radius=float(abs(fit.x[3])))


def _refine_cylinder(pts: np.ndarray,
                     init: CylinderReference) -> CylinderReference:
    d0 = init.axis_dir
    u1, u2 = _orthobasis(d0)
    a0 = float(init.axis_point @ u1)
    b0 = float(init.axis_point @ u2)

    def residual(x):
        alpha, beta, a, b, r = x
        d = unit(d0 + alpha * u1 + beta * u2)
        q = pts - (a * u1 + b * u2)
        along = q @ d
        return np.linalg.norm(q - along[:, None] * d[None, :], axis=1) - r

    fit = least_squares(residual, x0=[0.0, 0.0, a0, b0, init.radius],
                        method="lm")
    alpha, beta, a, b, r = fit.x
    d = _canonical_direction(unit(d0 + alpha * u1 + beta * u2))
    point = a * u1 + b * u2
    point = point - float(point @ d) * d
    return CylinderReference(axis_point=point, axis_dir=d, radius=float(abs(r)))


def ransac_fit(points, primitive: str, inlier_threshold: float,
               iterations: int = 500, seed: int = 0) -> FitResult:
    """Fit a plane, sphere, or cylinder robustly; deterministic in ``seed``.

    Minimal candidate models are sampled ``iterations`` times; the candidate
    with the most points within ``inlier_threshold`` of its surface wins and
    is refined by least squares over its inliers.  An infinite threshold
    therefore degenerates to the all-point least-squares fit.
    """
    pts = _points(points)
    if primitive not in _MIN_SAMPLES:
        raise FitError(f"unknown primitive {primitive!r}; "
                       f"available: {', '.join(sorted(_MIN_SAMPLES))}")
    m = _MIN_SAMPLES[primitive]
    if len(pts) < m:
        raise FitError(f"{primitive} fit needs at least {m} points, "
                       f"got {len(pts)}")
    if not inlier_threshold > 0.0:
        raise FitError("inlier threshold must be positive")
    if iterations < 1:
        raise FitError("need at least one iteration")

    builders = {"plane": _plane_from_three, "sphere": _sphere_from_four,
                "cylinder": _cylinder_from_five}
    build = builders[primitive]
    rng = np.random.default_rng(seed)
    best_mask = None
    best_model = None
    best_count = -1
    for _ in range(iterations):
        sample = pts[rng.choice(len(pts), m, replace=False)]
        model = build(sample)
        if model is None:
            continue
        mask = model.distances(pts) <= inlier_threshold
        count = int(mask.sum())
        if count > best_count:
            best_count, best_mask, best_model = count, mask, model
    if best_model is None or best_count < m:
        raise FitError(f"no non-degenerate {primitive} candidate found "
                       f"in {iterations} iterations")

    # iterated refinement: least squares over the inliers, re-classify,
    # repeat until the inlier set stabilizes — this lets a coarse minimal
    # model (common for the cylinder stage-1 direction) pull in the full
    # support instead of freezing its initial biased subset
    refiners = {"plane": lambda sup, mdl: _refine_plane(sup),
                "sphere": lambda sup, mdl: _refine_sphere(sup),
                "cylinder": _refine_cylinder}
    refine = refiners[primitive]
    model, mask = best_model, best_mask
    for _ in range(_REFINE_ROUNDS):
        candidate = refine(pts[mask], model)
        new_mask = candidate.distances(pts) <= inlier_threshold
        if int(new_mask.sum()) < m:
            break
        changed = not np.array_equal(new_mask, mask)
        model, mask = candidate, new_mask
        if not changed:
            break
    if primitive == "plane":
        params = {"normal": model.normal, "offset": model.offset}
    elif primitive == "sphere":
        params = {"center": model.center, "radius": model.radius}
    else:
        params = {"axis_point": model.axis_point, "axis_dir": model.axis_dir,
                  "radius": model.radius}
    return FitResult(primitive=primitive, params=params, model=model,
                     inliers=mask, inlier_fraction=float(mask.mean()))


# ---------------------------------------------------------------------------
# sweep experiments

SWEEP_EXPERIMENTS = ("separation", "medium", "thickness", "shell")

DEFAULT_SIGMAS = tuple(i / 10 for i in range(11))

SWEEP_COLUMNS = ("experiment", "sigma", "separation", "medium_index",
                 "thickness", "shell_offset", "trials", "n_points",
                 "pos_mean", "pos_median", "pos_rms", "normal_mean_deg",
                 "normal_median_deg", "normal_rms_deg")

_SEPARATION_Z1 = (15.0, 20.0, 25.0, 30.0)
_MEDIUM_INDICES = (1.3, 1.5, 1.7)
_THICKNESS_H = (0.0, 0.5, 1.0, 2.0)
_SHELL_OFFSETS = (1.0, 2.0, 3.0, 4.0, 5.0)

#: Sweeps score only OK-quality rows at pixels whose clean render has a
#: valid contact.  Reconstruction applies the angle gate alone — no gap cap
#: and no depth window.  Those acceptance filters are production defaults;
#: inside a noise study they would truncate exactly the high-error rows the
#: study exists to measure, and hardest in the worst-conditioned cells,
#: which can invert a cross-cell trend at large sigma.
@dataclass
class _SweepCell:
    maps: tuple                      # (m0, m1, n0, n1) clean maps
    patterns: list
    camera_position: np.ndarray
    truth_fep: np.ndarray
    truth_normal: np.ndarray
    truth_valid: np.ndarray
    thin: bool
    media: Optional[tuple] = None    # immersion protocol
    lam_object: Optional[float] = None
    key: dict = field(default_factory=dict)


def _immersion_cell(name: str, resolution: int, workers: int,
                    key: dict, **overrides) -> _SweepCell:
    ps = build_paper_scene(name, resolution=resolution, **overrides)
    air = render_views(ps.scene, immersed=False, workers=workers)
    liq = render_views(ps.scene, immersed=True, workers=workers)
    return _SweepCell(
        maps=(liq.maps[0], liq.maps[1], air.maps[0], air.maps[1]),
        patterns=ps.scene.patterns,
        camera_position=ps.scene.camera.position,
        truth_fep=air.fep, truth_normal=air.fep_normal,
        truth_valid=air.fep_valid, thin=False,
        media=(ps.liquid_index, ps.scene.ambient_index), key=key)


def _prepare_cells(experiment: str, resolution: int,
                   workers: int) -> list[_SweepCell]:
    cells: list[_SweepCell] = []
    if experiment == "separation":
        for z1 in _SEPARATION_Z1:
            cells.append(_immersion_cell(
                "semi_ellipsoid", resolution, workers,
                key={"separation": z1 - 10.0}, pattern_z1=z1))
        return cells
    if experiment == "medium":
        for lam in _MEDIUM_INDICES:
            cells.append(_immersion_cell(
                "semi_ellipsoid", resolution, workers,
                key={"medium_index": lam}, liquid_index=lam))
        return cells

    # thin-protocol experiments: one object-free render serves every cell
    name = "thin_cone" if experiment == "thickness" else "spherical_shell"
    ps0 = build_paper_scene(name, resolution=resolution)
    base = render_views(ps0.without_solids(), immersed=False, workers=workers)
    values = _THICKNESS_H if experiment == "thickness" else _SHELL_OFFSETS
    for value in values:
        if experiment == "thickness":
            ps = build_paper_scene(name, resolution=resolution, h=value)
            key = {"thickness": value}
        else:
            ps = build_paper_scene(name, resolution=resolution, s=value)
            key = {"shell_offset": value}
        withv = render_views(ps.scene, immersed=False, workers=workers)
        cells.append(_SweepCell(
            maps=(withv.maps[0], withv.maps[1], base.maps[0], base.maps[1]),
            patterns=ps.scene.patterns,
            camera_position=ps.scene.camera.position,
            truth_fep=withv.fep, truth_normal=withv.fep_normal,
            truth_valid=withv.fep_valid, thin=True,
            lam_object=ps.object_index, key=key))
    return cells


def _score_trial(cell: _SweepCell, sigma: float,
                 rng: np.random.Generator) -> tuple:
    maps = cell.maps
    if sigma > 0.0:
        maps = tuple(add_correspondence_noise(m, sigma, rng) for m in maps)
    records = record_arrays_from_maps(*maps, cell.patterns)
    if cell.thin:
        out = reconstruct_thin(records, camera_position=cell.camera_position,
                               lam_object=cell.lam_object)
    else:
        out = reconstruct_surface(records,
                                  camera_position=cell.camera_position,
                                  media=cell.media)
    rows, cols = out.pixels[:, 0], out.pixels[:, 1]
    good = cell.truth_valid[rows, cols]
    good &= out.quality == QualityFlag.OK
    good &= np.all(np.isfinite(out.fep), axis=1)
    if not np.any(good):
        raise RuntimeError(
            f"sweep cell {cell.key} has no scorable pixels at sigma={sigma}")
    pos = np.linalg.norm(out.fep[good]
                         - cell.truth_fep[rows[good], cols[good]], axis=1)
    n_good = good & np.all(np.isfinite(out.normal), axis=1)
    dots = np.sum(out.normal[n_good]
                  * cell.truth_normal[rows[n_good], cols[n_good]], axis=1)
    ang = np.degrees(np.arccos(np.clip(dots, -1.0, 1.0)))
    if ang.size == 0:
        raise RuntimeError(
            f"sweep cell {cell.key} has no scorable normals at sigma={sigma}")
    return (*_stats(pos), *_stats(ang), int(good.sum()))


def run_sweep(experiment: str, trials: int = 50, seed: int = 0,
              resolution: int = 128,
              sigmas: Sequence[float] = DEFAULT_SIGMAS,
              workers: int = 1) -> list[ErrorSummary]:
    """Render, perturb, reconstruct and score one experiment grid.

    Returns one :class:`ErrorSummary` per (grid cell, sigma), aggregating
    per-trial statistics by their median.  Noise draws are keyed by
    ``(experiment, sigma index, trial)`` only, so every grid cell of one
    experiment sees the same noise fields — paired trials make the
    cross-cell trends far less jittery than independent draws would.
    """
    if experiment not in SWEEP_EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}; available: "
                         f"{', '.join(SWEEP_EXPERIMENTS)}")
    if trials < 1:
        raise ValueError("need at least one trial")
    exp_id = SWEEP_EXPERIMENTS.index(experiment)
    cells = _prepare_cells(experiment, resolution, workers)
    summaries: list[ErrorSummary] = []
    for cell in cells:
        for i_sigma, sigma in enumerate(sigmas):
            if sigma < 0.0:
                raise ValueError("noise sigma must be >= 0")
            n_trials = 1 if sigma == 0.0 else trials
            stats = np.empty((n_trials, 7))
            for t in range(n_trials):
                rng = np.random.default_rng(
                    np.random.SeedSequence(seed,
                                           spawn_key=(exp_id, i_sigma, t)))
                stats[t] = _score_trial(cell, sigma, rng)
            agg = np.median(stats, axis=0)
            summaries.append(ErrorSummary(
                experiment=experiment, sigma=float(sigma), trials=n_trials,
                n_points=int(round(agg[6])),
                pos_mean=float(agg[0]), pos_median=float(agg[1]),
                pos_rms=float(agg[2]), normal_mean_deg=float(agg[3]),
                normal_median_deg=float(agg[4]),
                normal_rms_deg=float(agg[5]), **cell.key))
    return summaries


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def sweep_to_csv(summaries: Sequence[ErrorSummary], dest) -> None:
    """Write sweep results as CSV (one row per grid cell and sigma).

    ``dest`` may be a path or an open text file; the output contains no
    timestamps and is byte-identical for identical inputs.
    """
    def write(fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for s in summaries:
            writer.writerow([_format_cell(getattr(s, col))
                             for col in SWEEP_COLUMNS])

    if hasattr(dest, "write"):
        write(dest)
    else:
        with open(Path(dest), "w", newline="", encoding="ascii") as fh:
            write(fh)
