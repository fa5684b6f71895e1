"""Refractive path tracer and correspondence-map rendering.

A camera ray is propagated segment by segment through the scene.  At every
media boundary (solid surface, or the liquid's level plane when immersed)
the ray refracts; when refraction is impossible it reflects internally.
Paths that exceed the bounce budget are treated as absorbed.  Each surviving
path ends in a free *terminal ray* whose intersection with a coded pattern
plane yields one pattern correspondence per pattern.

Rendering walks every pixel of the scene camera and produces, per pattern,
a dense correspondence map, plus per-pixel diagnostics and the ground-truth
contact point of the light path with the glass (the surface point where the
light that reaches this pixel first met a solid — the last solid event along
the camera ray).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .geometry import Ray3
from .scene import AcquisitionScene, PatternPlane, medium_at
from .solids import ImplicitSolid

__all__ = [
    "CorrespondenceMap",
    "DIAG_ABSORBED",
    "DIAG_LIQUID_KINK",
    "DIAG_OK",
    "LightPathTrace",
    "MAX_BOUNCES",
    "SimulatedViews",
    "TraceEvent",
    "add_correspondence_noise",
    "first_entry_point",
    "pattern_uv",
    "render_views",
    "trace",
]

MAX_BOUNCES = 16
_MIN_T = 1e-6
_PROBE_EPS = 1e-7

DIAG_OK = 0
DIAG_ABSORBED = 1
# The path refracted at the liquid surface *and* met glass: the straight-PBC
# (pattern side) or fixed-PAC (camera side) assumption is broken, so the
# pixel is excluded from reconstruction.  Liquid-only refractions on
# background pixels keep DIAG_OK.
DIAG_LIQUID_KINK = 2


def _fast_ray(ox, oy, oz, dx, dy, dz) -> Ray3:
    """Construct a Ray3 from components known to be normalized already."""
    r = object.__new__(Ray3)
    object.__setattr__(r, "origin", np.array([ox, oy, oz]))
    object.__setattr__(r, "direction", np.array([dx, dy, dz]))
    return r


def _refract_scalar(dx, dy, dz, nx, ny, nz, n1, n2):
    """Scalar twin of :func:`lightpath.geometry.refract` (same convention)."""
    ci = dx * nx + dy * ny + dz * nz
    if ci > 0.0:
        nx, ny, nz, ci = -nx, -ny, -nz, -ci
    cos_i = -ci
    eta = n1 / n2
    sin2_t = eta * eta * (1.0 - cos_i * cos_i)
    if sin2_t > 1.0:
        return None
    k = eta * cos_i - math.sqrt(1.0 - sin2_t)
    return (eta * dx + k * nx, eta * dy + k * ny, eta * dz + k * nz)


@dataclass(frozen=True)
class TraceEvent:
    """One interaction of the path with a media boundary."""

    position: np.ndarray
    normal: np.ndarray           # surface normal as stored (outward for solids)
    incoming: np.ndarray         # unit direction arriving at the boundary
    outgoing: np.ndarray         # unit direction leaving the boundary
    n_in: float                  # index of the medium the ray arrived in
    n_out: float                 # index it continues in (== n_in for TIR)
    kind: str                    # "refract" | "tir"
    site: str                    # "solid" | "liquid"
    solid: Optional[ImplicitSolid]


@dataclass(frozen=True)
class LightPathTrace:
    """Full record of one traced light path."""

    start: Ray3
    events: list[TraceEvent]
    terminal: Optional[Ray3]     # None when the path was absorbed
    absorbed: bool
    # True when the immersion liquid shaped the path: a refraction at the
    # liquid's surface plane, or glass reached through liquid
    crossed_liquid: bool


def trace(scene: AcquisitionScene, origin: Sequence[float],
          direction: Sequence[float], immersed: bool = False,
          max_bounces: int = MAX_BOUNCES) -> LightPathTrace:
    """Propagate one ray through the scene media."""
    ox, oy, oz = float(origin[0]), float(origin[1]), float(origin[2])
    dx, dy, dz = float(direction[0]), float(direction[1]), float(direction[2])
    norm = math.sqrt(dx * dx + dy * dy + dz * dz)
    if norm == 0.0:
        raise ValueError("trace direction must be nonzero")
    dx, dy, dz = dx / norm, dy / norm, dz / norm
    start = _fast_ray(ox, oy, oz, dx, dy, dz)
    liquid = scene.liquid if immersed else None
    if liquid is not None and liquid.index == scene.ambient_index:
        # a liquid matching the ambient index is optically absent; dropping
        # it here keeps the degenerate immersion bitwise equal to air
        liquid = None
    solids = scene.solids

    def probe(x: float, y: float, z: float) -> tuple[float, bool]:
        """Medium index at a point and whether it is a solid interior."""
        for s in solids:
            if s.contains((x, y, z)):
                return s.index, True
        if liquid is not None and z > liquid.level:
            return liquid.index, False
        return scene.ambient_index, False

    n_cur, in_solid = probe(ox, oy, oz)
    events: list[TraceEvent] = []
    crossed = False
    for _ in range(4 * max_bounces + 8):
        best_t = math.inf
        best_solid: Optional[ImplicitSolid] = None
        o3 = (ox, oy, oz)
        d3 = (dx, dy, dz)
        for s in solids:
            cand = None
            for lo, hi in s.intervals(o3, d3):
                if lo > _MIN_T:
                    cand = lo
                    break
                if hi > _MIN_T:
                    cand = hi
                    break
            if cand is not None and cand < best_t and math.isfinite(cand):
                best_t = cand
                best_solid = s
        # the liquid exists only outside solids, so its surface plane is
        # not a candidate boundary while traveling through glass
        if liquid is not None and dz != 0.0 and not in_solid:
            t_plane = (liquid.level - oz) / dz
            if _MIN_T < t_plane < best_t:
                best_t = t_plane
                best_solid = None
        if not math.isfinite(best_t):
            return LightPathTrace(start=start, events=events,
                                  terminal=_fast_ray(ox, oy, oz, dx, dy, dz),
                                  absorbed=False, crossed_liquid=crossed)
        t = best_t
        px, py, pz = ox + t * dx, oy + t * dy, oz + t * dz
        if best_solid is not None:
            # polish the crossing so the surface residual is far below 1e-9
            for _ in range(3):
                fv = best_solid.f((px, py, pz))
                if abs(fv) < 1e-13:
                    break
                g = best_solid.gradient((px, py, pz))
                deriv = float(g[0]) * dx + float(g[1]) * dy + float(g[2]) * dz
                if abs(deriv) < 1e-14:
                    break
                t -= fv / deriv
                px, py, pz = ox + t * dx, oy + t * dy, oz + t * dz
        n_next, in_next = probe(px + _PROBE_EPS * dx, py + _PROBE_EPS * dy,
                                pz + _PROBE_EPS * dz)
        if abs(n_next - n_cur) < 1e-12:
            # boundary between regions of identical index: nothing happens
            ox, oy, oz = px, py, pz
            in_solid = in_next
            continue
        if best_solid is not None:
            g = best_solid.gradient((px, py, pz))
            gx, gy, gz = float(g[0]), float(g[1]), float(g[2])
            gn = math.sqrt(gx * gx + gy * gy + gz * gz)
            if gn < 1e-10:
                g = best_solid.gradient((px + 1e-7 * dx, py + 1e-7 * dy,
                                         pz + 1e-7 * dz))
                gx, gy, gz = float(g[0]), float(g[1]), float(g[2])
                gn = math.sqrt(gx * gx + gy * gy + gz * gz)
            nx, ny, nz = gx / gn, gy / gn, gz / gn
            site = "solid"
            if (liquid is not None and n_cur == liquid.index
                    and liquid.index != scene.ambient_index):
                # glass reached *through* the liquid (e.g. a grazing exit
                # ray bent back into the solid): everything from here on
                # depends on the immersion medium, breaking the
                # medium-independent camera-side path -> mask the pixel
                crossed = True
        else:
            nx, ny, nz = 0.0, 0.0, 1.0
            site = "liquid"
            crossed = True
        out = _refract_scalar(dx, dy, dz, nx, ny, nz, n_cur, n_next)
        if out is None:
            dd = dx * nx + dy * ny + dz * nz
            out = (dx - 2.0 * dd * nx, dy - 2.0 * dd * ny, dz - 2.0 * dd * nz)
            kind = "tir"
            n_rec = n_cur
        else:
            kind = "refract"
            n_rec = n_next
        events.append(TraceEvent(position=np.array([px, py, pz]),
                                 normal=np.array([nx, ny, nz]),
                                 incoming=np.array([dx, dy, dz]),
                                 outgoing=np.array(out), n_in=n_cur,
                                 n_out=n_rec, kind=kind, site=site,
                                 solid=best_solid))
        if len(events) > max_bounces:
            break
        ox, oy, oz = px, py, pz
        dx, dy, dz = out
        if kind == "refract":
            n_cur = n_next
            in_solid = in_next
    return LightPathTrace(start=start, events=events, terminal=None,
                          absorbed=True, crossed_liquid=crossed)


def first_entry_point(tr: LightPathTrace) -> Optional[TraceEvent]:
    """Surface event where the *light* (pattern to camera) first met glass.

    Along the traced camera ray this is the last solid-surface event.  None
    when the path was absorbed or never touched a solid.
    """
    if tr.terminal is None:
        return None
    for ev in reversed(tr.events):
        if ev.site == "solid":
            return ev
    return None


def pattern_uv(pattern: PatternPlane, ray: Ray3) -> Optional[tuple[float, float]]:
    """Pattern coordinates where the ray meets the pattern plane, if any."""
    n = pattern.normal
    denom = float(ray.direction @ n)
    if abs(denom) < 1e-12:
        return None
    t = float((pattern.origin - ray.origin) @ n) / denom
    if t <= _MIN_T:
        return None
    p = ray.origin + t * ray.direction
    d = p - pattern.origin
    u = float(d @ pattern.u_axis)
    v = float(d @ pattern.v_axis)
    if abs(u) > pattern.extent[0] or abs(v) > pattern.extent[1]:
        return None
    return (u, v)


# ---------------------------------------------------------------------------
# dense rendering


@dataclass
class CorrespondenceMap:
    """Per-pixel pattern coordinates seen through the scene."""

    u: np.ndarray                # (H, W) float64
    v: np.ndarray                # (H, W) float64
    valid: np.ndarray            # (H, W) bool
    pattern_index: int
    immersed: bool


@dataclass
class SimulatedViews:
    """Rendered correspondence maps plus ground-truth path data."""

    maps: list[CorrespondenceMap]
    diagnostics: np.ndarray      # (H, W) uint8, DIAG_* codes
    fep: np.ndarray              # (H, W, 3) light's first contact with glass
    fep_normal: np.ndarray       # (H, W, 3) outward surface normal there
    fep_valid: np.ndarray        # (H, W) bool
    tir_count: np.ndarray        # (H, W) uint8, internal reflections on path
    immersed: bool


def _render_block(scene: AcquisitionScene, immersed: bool,
                  y0: int, y1: int):
    cam = scene.camera
    W = cam.width
    K = len(scene.patterns)
    hb = y1 - y0
    u = np.zeros((K, hb, W))
    v = np.zeros((K, hb, W))
    val = np.zeros((K, hb, W), dtype=bool)
    diag = np.zeros((hb, W), dtype=np.uint8)
    fep = np.zeros((hb, W, 3))
    fnorm = np.zeros((hb, W, 3))
    fval = np.zeros((hb, W), dtype=bool)
    tirc = np.zeros((hb, W), dtype=np.uint8)
    cam_pos = (float(cam.position[0]), float(cam.position[1]),
               float(cam.position[2]))
    # scalar copies of the pattern frames for the per-pixel loop; the public
    # pattern_uv() is the reference implementation this must agree with
    pats = [(tuple(map(float, p.origin)), tuple(map(float, p.normal)),
             tuple(map(float, p.u_axis)), tuple(map(float, p.v_axis)),
             p.extent[0], p.extent[1]) for p in scene.patterns]
    for iy in range(y0, y1):
        row = iy - y0
        for ix in range(W):
            d = cam.pixel_direction(ix, iy)
            tr = trace(scene, cam_pos, d, immersed)
            tirc[row, ix] = min(sum(1 for ev in tr.events if ev.kind == "tir"),
                                255)
            if tr.absorbed:
                diag[row, ix] = DIAG_ABSORBED
                continue
            contact = first_entry_point(tr)
            if contact is not None:
                fep[row, ix] = contact.position
                fnorm[row, ix] = contact.normal
                fval[row, ix] = True
            if tr.crossed_liquid and contact is not None:
                # a liquid-surface kink on a path that also met glass breaks
                # the straight-PBC / fixed-PAC model; pure-liquid refractions
                # (background pixels) are legitimate pattern hits
                diag[row, ix] = DIAG_LIQUID_KINK
                continue
            term = tr.terminal
            tox, toy, toz = term.origin
            tdx, tdy, tdz = term.direction
            for k, (po, pn, pu, pv, eu, ev) in enumerate(pats):
                denom = tdx * pn[0] + tdy * pn[1] + tdz * pn[2]
                if abs(denom) < 1e-12:
                    continue
                tp = ((po[0] - tox) * pn[0] + (po[1] - toy) * pn[1]
                      + (po[2] - toz) * pn[2]) / denom
                if tp <= _MIN_T:
                    continue
                qx = tox + tp * tdx - po[0]
                qy = toy + tp * tdy - po[1]
                qz = toz + tp * tdz - po[2]
                uu = qx * pu[0] + qy * pu[1] + qz * pu[2]
                vv = qx * pv[0] + qy * pv[1] + qz * pv[2]
                if abs(uu) > eu or abs(vv) > ev:
                    continue
                u[k, row, ix] = uu
                v[k, row, ix] = vv
                val[k, row, ix] = True
    return u, v, val, diag, fep, fnorm, fval, tirc


def _render_block_args(args):
    return _render_block(*args)


def render_views(scene: AcquisitionScene, immersed: bool,
                 workers: int = 1) -> SimulatedViews:
    """Render correspondence maps for every pattern of the scene.

    With ``workers > 1`` rows are traced in separate processes; results are
    stitched by row index, so the output is identical to a serial render.
    """
    H = scene.camera.height
    if workers <= 1:
        blocks = [_render_block(scene, immersed, 0, H)]
    else:
        n = min(max(1, workers), H)
        bounds = np.linspace(0, H, n + 1).astype(int)
        jobs = [(scene, immersed, int(bounds[i]), int(bounds[i + 1]))
                for i in range(n) if bounds[i] < bounds[i + 1]]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            blocks = list(ex.map(_render_block_args, jobs))
    u = np.concatenate([b[0] for b in blocks], axis=1)
    v = np.concatenate([b[1] for b in blocks], axis=1)
    val = np.concatenate([b[2] for b in blocks], axis=1)
    diag = np.concatenate([b[3] for b in blocks], axis=0)
    fep = np.concatenate([b[4] for b in blocks], axis=0)
    fnorm = np.concatenate([b[5] for b in blocks], axis=0)
    fval = np.concatenate([b[6] for b in blocks], axis=0)
    tirc = np.concatenate([b[7] for b in blocks], axis=0)
    maps = [CorrespondenceMap(u=u[k], v=v[k], valid=val[k], pattern_index=k,
                              immersed=immersed)
            for k in range(len(scene.patterns))]
    return SimulatedViews(maps=maps, diagnostics=diag, fep=fep,
                          fep_normal=fnorm, fep_valid=fval, tir_count=tirc,
                          immersed=immersed)


def add_correspondence_noise(cmap: CorrespondenceMap, sigma: float,
                             rng: np.random.Generator) -> CorrespondenceMap:
    """Gaussian decoding noise on the valid entries of a map (new object)."""
    if sigma < 0:
        raise ValueError("noise sigma must be >= 0")
    du = rng.normal(0.0, 1.0, cmap.u.shape) * sigma
    dv = rng.normal(0.0, 1.0, cmap.v.shape) * sigma
    u = cmap.u.copy()
    v = cmap.v.copy()
    u[cmap.valid] += du[cmap.valid]
    v[cmap.valid] += dv[cmap.valid]
    return replace(cmap, u=u, v=v, valid=cmap.valid.copy())
