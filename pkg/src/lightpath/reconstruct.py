"""Surface recovery by triangulating altered incident light paths.

Each camera pixel fixes one light path.  The segment of that path between
the reference pattern and the first glass contact (seen from the pattern
side) changes when the surrounding medium changes, while the segment on the
camera side does not.  Measuring the pattern hits under two media therefore
yields two distinct lines through the same surface point: their
intersection is the contact point, and — when both refractive indices are
known — the angle between them determines the surface normal in closed
form.

Two protocols produce such line pairs:

* immersion: the pattern is observed through air and through a liquid bath;
  both lines are paths before contact (PBCs) in media of different density.
* thin objects: the pattern is observed with and without the object.  Under
  a single-refraction approximation the without-object line (the pixel's
  straight visual ray) stands in for the ray inside the object, and the
  with-object line is the PBC in the ambient medium.

Conventions: line directions are resolved so both point from the pattern
toward the camera side; the rotation axis for normal recovery is
``cross(rarer-side direction, denser-side direction)``; returned normals
point outward, toward the pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Sequence

import numpy as np

from .geometry import (
    PARALLEL_EPS,
    ContractViolation,
    Ray3,
    angle_between,
    check_medium_index,
    closest_points,
    rodrigues_rotate,
    unit,
)

__all__ = [
    "CorrespondenceRecord",
    "DegenerateCorrespondenceError",
    "MIN_ANGLE",
    "NoRecordsError",
    "QualityFlag",
    "ReconPoint",
    "ReconPoints",
    "RecordArrays",
    "SEP_EPS",
    "UnsupportedMediaError",
    "build_pbc",
    "reconstruct_record",
    "reconstruct_surface",
    "reconstruct_thin",
    "record_arrays_from_maps",
    "recover_incident_angle",
    "recover_normal",
    "triangulate_fep",
]

#: Default triangulation-angle threshold (radians) below which a point is
#: considered too ill-conditioned to keep.
MIN_ANGLE = math.radians(1.0)

#: Minimum distance between the two pattern hits of one line; closer pairs
#: cannot define a direction reliably.
SEP_EPS = 1e-6

#: Pattern hits must lie on their plane to this tolerance.
ON_PLANE_TOL = 1e-9


class UnsupportedMediaError(ValueError):
    """The media pair cannot produce the required refraction geometry."""


class DegenerateCorrespondenceError(ValueError):
    """The correspondence geometry carries no usable information."""


class NoRecordsError(ValueError):
    """Reconstruction was asked to run on an empty record set."""


class QualityFlag(IntEnum):
    """Per-point quality classification.

    Flags never silently drop points; callers filter on them.  When several
    conditions hold at once the precedence is
    PARALLEL > LOW_ANGLE > LARGE_GAP > OUT_OF_RANGE, and the thin protocol
    reports both parallel and below-threshold angles as NO_REFRACTION.
    """

    OK = 0
    LOW_ANGLE = 1       # triangulation angle below min_angle
    LARGE_GAP = 2       # closest-approach distance above max_gap
    PARALLEL = 3        # lines parallel; no triangulation possible
    OUT_OF_RANGE = 4    # triangulated depth outside the plausible range
    NO_REFRACTION = 5   # thin protocol: path not measurably bent


@dataclass
class CorrespondenceRecord:
    """Pattern hits of one pixel: two poses x two acquisition configs.

    ``m0``/``m1`` are the pattern points of the altered (liquid or
    with-object) configuration at pattern poses 0/1; ``n0``/``n1`` those of
    the reference (air or without-object) configuration.
    """

    pixel: tuple
    m0: np.ndarray
    m1: np.ndarray
    n0: np.ndarray
    n1: np.ndarray

    def __post_init__(self):
        for name in ("m0", "m1", "n0", "n1"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))


@dataclass
class RecordArrays:
    """Column-wise correspondence records for bulk reconstruction."""

    pixels: np.ndarray          # (N, 2) row, column
    m0: np.ndarray              # (N, 3)
    m1: np.ndarray
    n0: np.ndarray
    n1: np.ndarray
    valid: np.ndarray           # (N,) bool

    def __len__(self) -> int:
        return int(self.pixels.shape[0])

    @classmethod
    def from_records(cls, records: Sequence[CorrespondenceRecord]
                     ) -> "RecordArrays":
        if len(records) == 0:
            return cls(pixels=np.zeros((0, 2), dtype=np.int64),
                       m0=np.zeros((0, 3)), m1=np.zeros((0, 3)),
                       n0=np.zeros((0, 3)), n1=np.zeros((0, 3)),
                       valid=np.zeros(0, dtype=bool))
        return cls(
            pixels=np.asarray([r.pixel for r in records], dtype=np.int64),
            m0=np.asarray([r.m0 for r in records], dtype=float),
            m1=np.asarray([r.m1 for r in records], dtype=float),
            n0=np.asarray([r.n0 for r in records], dtype=float),
            n1=np.asarray([r.n1 for r in records], dtype=float),
            valid=np.ones(len(records), dtype=bool),
        )

    def validate(self, patterns) -> None:
        """Check that every stored hit lies on its pattern plane."""
        for name, pat in (("m0", patterns[0]), ("m1", patterns[1]),
                          ("n0", patterns[0]), ("n1", patterns[1])):
            pts = getattr(self, name)[self.valid]
            if len(pts) == 0:
                continue
            off = (pts - pat.origin) @ pat.normal
            worst = float(np.abs(off).max())
            if worst > ON_PLANE_TOL:
                raise ContractViolation(
                    f"{name} hits leave their pattern plane by {worst:.3g}")


@dataclass
class ReconPoint:
    """One reconstructed surface sample."""

    fep: np.ndarray
    normal: Optional[np.ndarray]
    delta_theta: float
    gap: float
    quality: QualityFlag
    pixel: Optional[tuple] = None


@dataclass
class ReconPoints:
    """Reconstructed samples in input order (row-major for map input)."""

    pixels: np.ndarray                 # (N, 2)
    fep: np.ndarray                    # (N, 3); NaN where PARALLEL
    normal: Optional[np.ndarray]       # (N, 3) or None when media unknown
    delta_theta: np.ndarray            # (N,)
    gap: np.ndarray                    # (N,)
    quality: np.ndarray                # (N,) ints matching QualityFlag

    def __len__(self) -> int:
        return int(self.pixels.shape[0])

    def ok_mask(self) -> np.ndarray:
        return self.quality == QualityFlag.OK


# ---------------------------------------------------------------------------
# scalar operations


def _check_media(lam1: float, lam2: float) -> tuple:
    lam1 = check_medium_index(lam1)
    lam2 = check_medium_index(lam2)
    if not lam1 > lam2:
        raise UnsupportedMediaError(
            f"first medium must be denser than the second "
            f"(got {lam1} vs {lam2}); equal media bend nothing")
    return lam1, lam2


def build_pbc(p0, p1) -> Ray3:
    """Line through a pixel's pattern hits at poses 0 and 1.

    The direction runs from the pose-0 hit toward the pose-1 hit; callers
    resolve it toward the camera before triangulation.
    """
    a = np.asarray(p0, dtype=float)
    b = np.asarray(p1, dtype=float)
    d = b - a
    n = math.sqrt(float(d @ d))
    if n <= SEP_EPS:
        raise DegenerateCorrespondenceError(
            f"pattern hits separated by only {n:.3g}; no direction defined")
    return Ray3(origin=a, direction=d / n)


def recover_incident_angle(delta_theta: float, lam1: float,
                           lam2: float) -> float:
    """Incidence angle in the denser medium from the angle between rays.

    Solves ``lam1 * sin(t1) = lam2 * sin(t1 + delta_theta)`` for ``t1`` in
    closed form; ``delta_theta`` is the angle between the denser-medium and
    rarer-medium rays through the same surface point.
    """
    lam1, lam2 = _check_media(lam1, lam2)
    dt = float(delta_theta)
    if not 0.0 < dt < math.pi / 2:
        raise DegenerateCorrespondenceError(
            f"angle between rays must be in (0, pi/2), got {dt:.6g}")
    return math.atan2(lam2 * math.sin(dt), lam1 - lam2 * math.cos(dt))


def recover_normal(u_dir, v_dir, lam1: float, lam2: float) -> np.ndarray:
    """Outward surface normal from a denser/rarer ray direction pair.

    ``u_dir`` travels in the denser medium (index ``lam1``), ``v_dir`` in
    the rarer one; both point from the pattern toward the surface.  The
    normal is ``u_dir`` rotated away from the interface by the recovered
    incidence angle about ``cross(v_dir, u_dir)``, negated so it points
    against the incoming rays (toward the pattern).
    """
    u = unit(u_dir)
    v = unit(v_dir)
    lam1, lam2 = _check_media(lam1, lam2)
    axis_raw = np.cross(v, u)
    cross_norm = math.sqrt(float(axis_raw @ axis_raw))
    if cross_norm <= PARALLEL_EPS:
        raise DegenerateCorrespondenceError(
            "ray directions are parallel; the refraction plane is undefined")
    theta1 = recover_incident_angle(angle_between(u, v), lam1, lam2)
    rotated = rodrigues_rotate(u, axis_raw / cross_norm, theta1)
    return -rotated


def triangulate_fep(line_m: Ray3, line_n: Ray3, max_gap: float = math.inf,
                    min_angle: float = MIN_ANGLE,
                    depth_range: Optional[tuple] = None) -> ReconPoint:
    """Surface point at the closest approach of two measured lines.

    The returned sample carries no normal (media knowledge is not needed
    here); ``quality`` encodes the checks in precedence order
    PARALLEL > LOW_ANGLE > LARGE_GAP > OUT_OF_RANGE.
    """
    tri = closest_points(line_m, line_n)
    dt = angle_between(line_m.direction, line_n.direction)
    if tri.parallel:
        return ReconPoint(fep=np.full(3, np.nan), normal=None,
                          delta_theta=dt, gap=tri.gap,
                          quality=QualityFlag.PARALLEL)
    quality = QualityFlag.OK
    if depth_range is not None:
        lo, hi = sorted(depth_range)
        z = float(tri.midpoint[2])
        if not lo <= z <= hi:
            quality = QualityFlag.OUT_OF_RANGE
    if tri.gap > max_gap:
        quality = QualityFlag.LARGE_GAP
    if dt < min_angle:
        quality = QualityFlag.LOW_ANGLE
    return ReconPoint(fep=tri.midpoint, normal=None, delta_theta=dt,
                      gap=tri.gap, quality=quality)


def reconstruct_record(record: CorrespondenceRecord, *, camera_position,
                       media: Optional[tuple] = None,
                       min_angle: float = MIN_ANGLE,
                       max_gap: float = math.inf,
                       depth_range: Optional[tuple] = None) -> ReconPoint:
    """Scalar immersion-protocol reconstruction of one record."""
    cam = np.asarray(camera_position, dtype=float)
    line_m = _toward(build_pbc(record.m0, record.m1), cam)
    line_n = _toward(build_pbc(record.n0, record.n1), cam)
    point = triangulate_fep(line_m, line_n, max_gap=max_gap,
                            min_angle=min_angle, depth_range=depth_range)
    normal = None
    if media is not None:
        normal = np.full(3, np.nan)
        if (point.quality != QualityFlag.PARALLEL
                and point.delta_theta < math.pi / 2):
            normal = recover_normal(line_m.direction, line_n.direction,
                                    media[0], media[1])
    return ReconPoint(fep=point.fep, normal=normal,
                      delta_theta=point.delta_theta, gap=point.gap,
                      quality=point.quality, pixel=record.pixel)


def _toward(ray: Ray3, target: np.ndarray) -> Ray3:
    """Resolve a line's direction sign to point toward ``target``."""
    if float(ray.direction @ (target - ray.origin)) < 0.0:
        return Ray3(origin=ray.origin, direction=-ray.direction)
    return ray


# ---------------------------------------------------------------------------
# bulk operations


def record_arrays_from_maps(map_m0, map_m1, map_n0, map_n1,
                            patterns) -> RecordArrays:
    """Assemble records from four correspondence maps.

    ``map_m0``/``map_m1`` hold the altered configuration (liquid or
    with-object) at pattern poses 0/1, ``map_n0``/``map_n1`` the reference
    configuration.  Only pixels valid in all four maps yield records;
    ordering is row-major.
    """
    maps = (map_m0, map_m1, map_n0, map_n1)
    shape = maps[0].u.shape
    for m in maps[1:]:
        if m.u.shape != shape:
            raise ContractViolation(
                f"correspondence maps disagree in shape: {m.u.shape} "
                f"vs {shape}")
    ok = maps[0].valid & maps[1].valid & maps[2].valid & maps[3].valid
    rows, cols = np.nonzero(ok)
    pixels = np.stack([rows, cols], axis=1).astype(np.int64)

    def points(cmap, pat):
        u = cmap.u[rows, cols]
        v = cmap.v[rows, cols]
        return (pat.origin[None, :] + u[:, None] * pat.u_axis[None, :]
                + v[:, None] * pat.v_axis[None, :])

    return RecordArrays(
        pixels=pixels,
        m0=points(map_m0, patterns[0]), m1=points(map_m1, patterns[1]),
        n0=points(map_n0, patterns[0]), n1=points(map_n1, patterns[1]),
        valid=np.ones(len(pixels), dtype=bool),
    )


def _as_arrays(records) -> RecordArrays:
    if isinstance(records, RecordArrays):
        return records
    return RecordArrays.from_records(list(records))


def _bulk_directions(p0: np.ndarray, p1: np.ndarray,
                     cam: np.ndarray) -> np.ndarray:
    """Unit directions of the lines (p0, p1), resolved toward the camera."""
    d = p1 - p0
    length = np.linalg.norm(d, axis=1)
    too_close = length <= SEP_EPS
    if np.any(too_close):
        raise DegenerateCorrespondenceError(
            f"{int(too_close.sum())} record(s) have coincident pattern hits")
    d = d / length[:, None]
    flip = np.einsum("ij,ij->i", d, cam[None, :] - p0) < 0.0
    d[flip] = -d[flip]
    return d


def _bulk_triangulate(o1, d1, o2, d2):
    """Vectorized closest-approach between line families (o, d).

    Mirrors the scalar closest-point algebra so the two routes agree to
    floating-point round-off.
    """
    w0 = o1 - o2
    b = np.einsum("ij,ij->i", d1, d2)
    parallel = np.abs(b) > 1.0 - PARALLEL_EPS
    d = np.einsum("ij,ij->i", d1, w0)
    e = np.einsum("ij,ij->i", d2, w0)
    denom = np.where(parallel, 1.0, 1.0 - b * b)
    s = (b * e - d) / denom
    t = (e - b * d) / denom
    pm = o1 + s[:, None] * d1
    pn = o2 + t[:, None] * d2
    gap = np.linalg.norm(pm - pn, axis=1)
    mid = 0.5 * (pm + pn)
    if np.any(parallel):
        perp = w0 - np.einsum("ij,ij->i", w0, d1)[:, None] * d1
        gap = np.where(parallel, np.linalg.norm(perp, axis=1), gap)
        mid[parallel] = np.nan
    cross = np.cross(d1, d2)
    delta = np.arctan2(np.linalg.norm(cross, axis=1), b)
    return mid, gap, delta, parallel


def _bulk_normals(u_denser, v_rarer, lam1, lam2, parallel):
    """Vectorized normal recovery; NaN rows where lines are parallel."""
    dt = np.arctan2(np.linalg.norm(np.cross(u_denser, v_rarer), axis=1),
                    np.einsum("ij,ij->i", u_denser, v_rarer))
    theta1 = np.arctan2(lam2 * np.sin(dt), lam1 - lam2 * np.cos(dt))
    axis = np.cross(v_rarer, u_denser)
    axis_norm = np.linalg.norm(axis, axis=1)
    safe = np.where(axis_norm > 0.0, axis_norm, 1.0)
    axis = axis / safe[:, None]
    rotated = (u_denser * np.cos(theta1)[:, None]
               + np.cross(axis, u_denser) * np.sin(theta1)[:, None])
    normal = -rotated
    normal[parallel] = np.nan
    return normal


def reconstruct_surface(records, *, camera_position,
                        media: Optional[tuple] = None,
                        min_angle: float = MIN_ANGLE,
                        max_gap: float = math.inf,
                        depth_range: Optional[tuple] = None) -> ReconPoints:
    """Immersion-protocol reconstruction over a record set.

    ``media`` is the (denser, rarer) index pair of the two configurations
    — (liquid, air) in the standard setup.  When it is None only contact
    points are produced.  Every valid record yields an output row; quality
    flags mark unusable rows instead of dropping them.
    """
    arrays = _as_arrays(records)
    keep = arrays.valid
    if int(keep.sum()) == 0:
        raise NoRecordsError("no valid correspondence records to reconstruct")
    cam = np.asarray(camera_position, dtype=float)
    m0, m1 = arrays.m0[keep], arrays.m1[keep]
    n0, n1 = arrays.n0[keep], arrays.n1[keep]

    u = _bulk_directions(m0, m1, cam)       # altered (denser-medium) lines
    v = _bulk_directions(n0, n1, cam)       # reference (rarer-medium) lines
    fep, gap, delta, parallel = _bulk_triangulate(m0, u, n0, v)

    quality = np.zeros(len(fep), dtype=np.int64)
    if depth_range is not None:
        lo, hi = sorted(depth_range)
        with np.errstate(invalid="ignore"):
            out = (fep[:, 2] < lo) | (fep[:, 2] > hi)
        quality[out] = QualityFlag.OUT_OF_RANGE
    quality[gap > max_gap] = QualityFlag.LARGE_GAP
    quality[delta < min_angle] = QualityFlag.LOW_ANGLE
    quality[parallel] = QualityFlag.PARALLEL

    normal = None
    if media is not None:
        lam1, lam2 = _check_media(media[0], media[1])
        normal = _bulk_normals(u, v, lam1, lam2, parallel)

    return ReconPoints(pixels=arrays.pixels[keep], fep=fep, normal=normal,
                       delta_theta=delta, gap=gap, quality=quality)


def reconstruct_thin(records, *, camera_position, lam_object: float,
                     lam_ambient: float = 1.0,
                     min_angle: float = MIN_ANGLE,
                     max_gap: float = math.inf,
                     depth_range: Optional[tuple] = None) -> ReconPoints:
    """Thin-object reconstruction from with/without-object records.

    The with-object hits (``m``) give the bent PBC in the ambient medium;
    the without-object hits (``n``) give the straight visual ray, which the
    single-refraction approximation treats as the ray inside the object.
    Pixels whose two lines are parallel or bent less than ``min_angle`` are
    flagged NO_REFRACTION (flat-plate behavior).
    """
    arrays = _as_arrays(records)
    keep = arrays.valid
    if int(keep.sum()) == 0:
        raise NoRecordsError("no valid correspondence records to reconstruct")
    lam1, lam2 = _check_media(lam_object, lam_ambient)
    cam = np.asarray(camera_position, dtype=float)
    m0, m1 = arrays.m0[keep], arrays.m1[keep]
    n0, n1 = arrays.n0[keep], arrays.n1[keep]

    pbc = _bulk_directions(m0, m1, cam)     # ambient-medium line
    vis = _bulk_directions(n0, n1, cam)     # stands in for the inside ray
    fep, gap, delta, parallel = _bulk_triangulate(m0, pbc, n0, vis)

    quality = np.zeros(len(fep), dtype=np.int64)
    if depth_range is not None:
        lo, hi = sorted(depth_range)
        with np.errstate(invalid="ignore"):
            out = (fep[:, 2] < lo) | (fep[:, 2] > hi)
        quality[out] = QualityFlag.OUT_OF_RANGE
    quality[gap > max_gap] = QualityFlag.LARGE_GAP
    no_refraction = parallel | (delta < min_angle)
    quality[no_refraction] = QualityFlag.NO_REFRACTION

    normal = _bulk_normals(vis, pbc, lam1, lam2, parallel)
    normal[no_refraction] = np.nan

    return ReconPoints(pixels=arrays.pixels[keep], fep=fep, normal=normal,
                       delta_theta=delta, gap=gap, quality=quality)
