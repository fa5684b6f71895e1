"""Implicit solids with analytic ray intersection and CSG composition.

Every solid exposes a signed implicit function ``f`` (negative inside,
positive outside), its analytic ``gradient`` (which points outward at the
surface), a refractive ``index``, an axis-aligned bounding box, and
``intervals(origin, direction)``: the sorted, disjoint list of parameter
ranges along a ray for which the ray point lies inside the solid.  Boolean
composition (union / intersection / difference) operates on those interval
lists directly, so first-hit queries against composed shapes stay exact.

Quadric primitives (sphere, ellipsoid, cylinder, cone) solve their ray
equations in closed form; :class:`GenericSolid` wraps an arbitrary callable
and falls back to dense sampling plus bisection.  :func:`intersect` extracts
the nearest boundary crossing and polishes it with Newton steps so that the
residual ``|f|`` at the reported hit is below 1e-9.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import check_medium_index, unit

__all__ = [
    "Cone",
    "ConvexPolyhedron",
    "Difference",
    "Ellipsoid",
    "GenericSolid",
    "HalfSpace",
    "Hit",
    "ImplicitSolid",
    "InfiniteCylinder",
    "Intersection",
    "Sphere",
    "Union",
    "finite_cylinder",
    "frustum",
    "intersect",
]

_INF = math.inf
# intervals thinner than this are treated as grazing contact and dropped
_MIN_INTERVAL = 1e-10


# ---------------------------------------------------------------------------
# interval-list algebra (lists of (t0, t1) tuples, sorted and disjoint)


def _quad_le_intervals(a: float, b: float, c: float) -> list[tuple[float, float]]:
    """Parameter ranges where ``a t^2 + b t + c <= 0``.

    Handles the degenerate linear/constant cases and the concave case
    (``a < 0``, e.g. rays crossing the open side of a cone), where the
    solution set is the complement of the root interval.
    """
    scale = max(abs(b), abs(c), 1.0)
    if abs(a) < 1e-14 * scale:
        if abs(b) < 1e-14 * max(abs(c), 1.0):
            return [(-_INF, _INF)] if c <= 0.0 else []
        t = -c / b
        return [(-_INF, t)] if b > 0.0 else [(t, _INF)]
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return [] if a > 0.0 else [(-_INF, _INF)]
    sq = math.sqrt(disc)
    q = -0.5 * (b + sq) if b >= 0.0 else -0.5 * (b - sq)
    r1, r2 = q / a, c / q
    lo, hi = (r1, r2) if r1 <= r2 else (r2, r1)
    if a > 0.0:
        return [(lo, hi)] if hi - lo > _MIN_INTERVAL else []
    return [(-_INF, lo), (hi, _INF)]


def _intersect_ivs(a: list[tuple[float, float]],
                   b: list[tuple[float, float]]) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = a[i][0] if a[i][0] > b[j][0] else b[j][0]
        hi = a[i][1] if a[i][1] < b[j][1] else b[j][1]
        if hi - lo > _MIN_INTERVAL:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def _union_ivs(lists: Sequence[list[tuple[float, float]]]) -> list[tuple[float, float]]:
    ivs = sorted(iv for lst in lists for iv in lst)
    out: list[tuple[float, float]] = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1] + _MIN_INTERVAL:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


def _subtract_ivs(a: list[tuple[float, float]],
                  b: list[tuple[float, float]]) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    for lo, hi in a:
        cur = lo
        for blo, bhi in b:
            if bhi <= cur:
                continue
            if blo >= hi:
                break
            if blo - cur > _MIN_INTERVAL:
                out.append((cur, blo))
            cur = bhi
            if cur >= hi:
                break
        if hi - cur > _MIN_INTERVAL:
            out.append((cur, hi))
    return out


# ---------------------------------------------------------------------------
# base class


@dataclass
class ImplicitSolid:
    """Base for all solids; concrete classes override the geometry hooks."""

    index: float = 1.5

    def __post_init__(self) -> None:
        self.index = check_medium_index(self.index)

    # geometry hooks ---------------------------------------------------
    def f(self, p: Sequence[float]) -> float:
        raise NotImplementedError

    def gradient(self, p: Sequence[float]) -> np.ndarray:
        raise NotImplementedError

    def intervals(self, origin: Sequence[float],
                  direction: Sequence[float]) -> list[tuple[float, float]]:
        raise NotImplementedError

    def _bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    # shared behaviour -------------------------------------------------
    def contains(self, p: Sequence[float]) -> bool:
        return self.f(p) < 0.0

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self._bbox()


# ---------------------------------------------------------------------------
# primitives


@dataclass
class Sphere(ImplicitSolid):
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    radius: float = 1.0

    def __post_init__(self) -> None:
        super().__post_init__()
        self.center = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    def f(self, p):
        dx = float(p[0]) - self.center[0]
        dy = float(p[1]) - self.center[1]
        dz = float(p[2]) - self.center[2]
        return dx * dx + dy * dy + dz * dz - self.radius * self.radius

    def gradient(self, p):
        return 2.0 * (np.asarray(p, dtype=float) - self.center)

    def intervals(self, origin, direction):
        ox = float(origin[0]) - self.center[0]
        oy = float(origin[1]) - self.center[1]
        oz = float(origin[2]) - self.center[2]
        dx, dy, dz = float(direction[0]), float(direction[1]), float(direction[2])
        a = dx * dx + dy * dy + dz * dz
        b = 2.0 * (ox * dx + oy * dy + oz * dz)
        c = ox * ox + oy * oy + oz * oz - self.radius * self.radius
        return _quad_le_intervals(a, b, c)

    def _bbox(self):
        r = self.radius
        return self.center - r, self.center + r


@dataclass
class Ellipsoid(ImplicitSolid):
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    semi_axes: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self) -> None:
        super().__post_init__()
        self.center = np.asarray(self.center, dtype=float)
        self.semi_axes = np.asarray(self.semi_axes, dtype=float)
        if np.any(self.semi_axes <= 0):
            raise ValueError("ellipsoid semi-axes must be positive")
        self._inv2 = 1.0 / self.semi_axes**2

    def f(self, p):
        ux = (float(p[0]) - self.center[0]) ** 2 * self._inv2[0]
        uy = (float(p[1]) - self.center[1]) ** 2 * self._inv2[1]
        uz = (float(p[2]) - self.center[2]) ** 2 * self._inv2[2]
        return ux + uy + uz - 1.0

    def gradient(self, p):
        return 2.0 * (np.asarray(p, dtype=float) - self.center) * self._inv2

    def intervals(self, origin, direction):
        i2x, i2y, i2z = self._inv2
        ox = float(origin[0]) - self.center[0]
        oy = float(origin[1]) - self.center[1]
        oz = float(origin[2]) - self.center[2]
        dx, dy, dz = float(direction[0]), float(direction[1]), float(direction[2])
        a = dx * dx * i2x + dy * dy * i2y + dz * dz * i2z
        b = 2.0 * (ox * dx * i2x + oy * dy * i2y + oz * dz * i2z)
        c = ox * ox * i2x + oy * oy * i2y + oz * oz * i2z - 1.0
        return _quad_le_intervals(a, b, c)

    def _bbox(self):
        return self.center - self.semi_axes, self.center + self.semi_axes


@dataclass
class HalfSpace(ImplicitSolid):
    """Points with ``normal . p <= offset`` (signed-distance implicit)."""

    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    offset: float = 0.0

    def __post_init__(self) -> None:
        super().__post_init__()
        n = np.asarray(self.normal, dtype=float)
        norm = float(np.linalg.norm(n))
        if norm == 0:
            raise ValueError("half-space normal must be nonzero")
        self.normal = n / norm
        self.offset = float(self.offset) / norm

    def f(self, p):
        nx, ny, nz = self.normal
        return nx * float(p[0]) + ny * float(p[1]) + nz * float(p[2]) - self.offset

    def gradient(self, p):
        return self.normal.copy()

    def intervals(self, origin, direction):
        nx, ny, nz = self.normal
        b = nx * float(direction[0]) + ny * float(direction[1]) + nz * float(direction[2])
        c = (nx * float(origin[0]) + ny * float(origin[1]) + nz * float(origin[2])
             - self.offset)
        return _quad_le_intervals(0.0, b, c)

    def _bbox(self):
        lo = np.full(3, -_INF)
        hi = np.full(3, _INF)
        for k in range(3):
            if self.normal[k] > 1.0 - 1e-12:
                hi[k] = self.offset
            elif self.normal[k] < -1.0 + 1e-12:
                lo[k] = -self.offset
        return lo, hi


@dataclass
class InfiniteCylinder(ImplicitSolid):
    """Circular cylinder of unbounded extent along the z axis."""

    center_xy: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self) -> None:
        super().__post_init__()
        self.center_xy = (float(self.center_xy[0]), float(self.center_xy[1]))
        if self.radius <= 0:
            raise ValueError("cylinder radius must be positive")

    def f(self, p):
        dx = float(p[0]) - self.center_xy[0]
        dy = float(p[1]) - self.center_xy[1]
        return dx * dx + dy * dy - self.radius * self.radius

    def gradient(self, p):
        return np.array([2.0 * (float(p[0]) - self.center_xy[0]),
                         2.0 * (float(p[1]) - self.center_xy[1]),
                         0.0])

    def intervals(self, origin, direction):
        ox = float(origin[0]) - self.center_xy[0]
        oy = float(origin[1]) - self.center_xy[1]
        dx, dy = float(direction[0]), float(direction[1])
        a = dx * dx + dy * dy
        b = 2.0 * (ox * dx + oy * dy)
        c = ox * ox + oy * oy - self.radius * self.radius
        return _quad_le_intervals(a, b, c)

    def _bbox(self):
        cx, cy = self.center_xy
        r = self.radius
        return (np.array([cx - r, cy - r, -_INF]),
                np.array([cx + r, cy + r, _INF]))


@dataclass
class Cone(ImplicitSolid):
    """Solid right circular cone from ``apex`` opening along ``axis``.

    ``height`` is the apex-to-base distance and ``radius`` the base radius.
    The implicit value is the largest of three constraint functions (side,
    apex cap, base cap), so it is sign-correct everywhere including beyond
    the apex, where the mirrored nappe of the side quadric is excluded.
    """

    apex: np.ndarray = field(default_factory=lambda: np.zeros(3))
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    height: float = 1.0
    radius: float = 1.0

    def __post_init__(self) -> None:
        super().__post_init__()
        self.apex = np.asarray(self.apex, dtype=float)
        self.axis = unit(np.asarray(self.axis, dtype=float))
        if self.height <= 0 or self.radius <= 0:
            raise ValueError("cone height and radius must be positive")
        self._k2 = (self.radius / self.height) ** 2

    def _parts(self, p):
        qx = float(p[0]) - self.apex[0]
        qy = float(p[1]) - self.apex[1]
        qz = float(p[2]) - self.apex[2]
        wx, wy, wz = self.axis
        h = qx * wx + qy * wy + qz * wz
        rx, ry, rz = qx - h * wx, qy - h * wy, qz - h * wz
        rho2 = rx * rx + ry * ry + rz * rz
        return h, (rx, ry, rz), rho2

    def f(self, p):
        h, _, rho2 = self._parts(p)
        side = rho2 - self._k2 * h * h
        return max(side, -h, h - self.height)

    def gradient(self, p):
        h, (rx, ry, rz), rho2 = self._parts(p)
        side = rho2 - self._k2 * h * h
        best = max(side, -h, h - self.height)
        if best == side:
            g = np.array([2.0 * rx, 2.0 * ry, 2.0 * rz]) - 2.0 * self._k2 * h * self.axis
            if float(g @ g) > 1e-20:
                return g
            return -self.axis.copy()  # singular apex: use the axial limit
        if best == -h:
            return -self.axis.copy()
        return self.axis.copy()

    def intervals(self, origin, direction):
        ox = float(origin[0]) - self.apex[0]
        oy = float(origin[1]) - self.apex[1]
        oz = float(origin[2]) - self.apex[2]
        dx, dy, dz = float(direction[0]), float(direction[1]), float(direction[2])
        wx, wy, wz = self.axis
        oh = ox * wx + oy * wy + oz * wz
        dh = dx * wx + dy * wy + dz * wz
        opx, opy, opz = ox - oh * wx, oy - oh * wy, oz - oh * wz
        dpx, dpy, dpz = dx - dh * wx, dy - dh * wy, dz - dh * wz
        a = dpx * dpx + dpy * dpy + dpz * dpz - self._k2 * dh * dh
        b = 2.0 * (opx * dpx + opy * dpy + opz * dpz - self._k2 * oh * dh)
        c = opx * opx + opy * opy + opz * opz - self._k2 * oh * oh
        side = _quad_le_intervals(a, b, c)
        lo_cap = _quad_le_intervals(0.0, -dh, -oh)                # h >= 0
        hi_cap = _quad_le_intervals(0.0, dh, oh - self.height)    # h <= height
        return _intersect_ivs(_intersect_ivs(side, lo_cap), hi_cap)

    def _bbox(self):
        # base disc corners plus apex, padded conservatively for tilted axes
        base = self.apex + self.height * self.axis
        r = self.radius
        lo = np.minimum(self.apex, base - r)
        hi = np.maximum(self.apex, base + r)
        return lo, hi


@dataclass
class GenericSolid(ImplicitSolid):
    """Arbitrary implicit solid; rays are solved by sampling + bisection.

    ``bounds`` must enclose the solid.  Each ray is clipped to the bounds,
    sampled at 256 uniform spacings to bracket sign changes of ``f``, and
    every bracket is refined by bisection until the parameter is localised
    to 1e-10.  If no analytic gradient is supplied, central differences
    are used.
    """

    f_impl: Callable[[Sequence[float]], float] = None  # type: ignore[assignment]
    gradient_impl: Optional[Callable[[Sequence[float]], np.ndarray]] = None
    bounds: tuple[np.ndarray, np.ndarray] = None  # type: ignore[assignment]
    samples: int = 256

    def __init__(self, f, bounds, gradient=None, index=1.5, samples=256):
        self.f_impl = f
        self.gradient_impl = gradient
        self.bounds = (np.asarray(bounds[0], dtype=float),
                       np.asarray(bounds[1], dtype=float))
        self.samples = int(samples)
        self.index = check_medium_index(index)

    def f(self, p):
        return float(self.f_impl(p))

    def gradient(self, p):
        if self.gradient_impl is not None:
            return np.asarray(self.gradient_impl(p), dtype=float)
        h = 1e-6
        p = np.asarray(p, dtype=float)
        g = np.empty(3)
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            g[k] = (self.f_impl(p + e) - self.f_impl(p - e)) / (2.0 * h)
        return g

    def _clip(self, origin, direction):
        t0, t1 = -_INF, _INF
        lo, hi = self.bounds
        for k in range(3):
            o, d = float(origin[k]), float(direction[k])
            if abs(d) < 1e-15:
                if o < lo[k] or o > hi[k]:
                    return None
                continue
            ta, tb = (lo[k] - o) / d, (hi[k] - o) / d
            if ta > tb:
                ta, tb = tb, ta
            t0 = max(t0, ta)
            t1 = min(t1, tb)
        if not (t0 < t1):
            return None
        return t0, t1

    def intervals(self, origin, direction):
        clip = self._clip(origin, direction)
        if clip is None:
            return []
        t0, t1 = clip
        o = np.asarray(origin, dtype=float)
        d = np.asarray(direction, dtype=float)
        ts = np.linspace(t0, t1, self.samples + 1)
        fs = [self.f_impl(o + t * d) for t in ts]
        crossings: list[float] = []
        for i in range(self.samples):
            fa, fb = fs[i], fs[i + 1]
            if fa == 0.0:
                crossings.append(float(ts[i]))
                continue
            if (fa < 0.0) != (fb < 0.0):
                a, b = float(ts[i]), float(ts[i + 1])
                va = fa
                while b - a > 1e-10:
                    m = 0.5 * (a + b)
                    vm = self.f_impl(o + m * d)
                    if (va < 0.0) != (vm < 0.0):
                        b = m
                    else:
                        a, va = m, vm
                crossings.append(0.5 * (a + b))
        out: list[tuple[float, float]] = []
        inside = fs[0] < 0.0
        start = t0 if inside else None
        for t in crossings:
            if inside:
                out.append((start, t))  # type: ignore[arg-type]
                inside = False
            else:
                start = t
                inside = True
        if inside:
            out.append((start, t1))  # type: ignore[arg-type]
        return [iv for iv in out if iv[1] - iv[0] > _MIN_INTERVAL]

    def _bbox(self):
        return self.bounds


# ---------------------------------------------------------------------------
# CSG combinators


class _Composite(ImplicitSolid):
    def __init__(self, *children: ImplicitSolid, index: Optional[float] = None):
        if not children:
            raise ValueError("composite solid needs at least one child")
        self.children = list(children)
        self.index = check_medium_index(
            index if index is not None else children[0].index)


class Union(_Composite):
    """Points inside any child."""

    def f(self, p):
        best = math.inf
        for c in self.children:
            v = c.f(p)
            if v < best:
                best = v
        return best

    def contains(self, p):
        for c in self.children:
            if c.contains(p):
                return True
        return False

    def gradient(self, p):
        best = math.inf
        pick = self.children[0]
        for c in self.children:
            v = c.f(p)
            if v < best:
                best, pick = v, c
        return pick.gradient(p)

    def intervals(self, origin, direction):
        return _union_ivs([c.intervals(origin, direction) for c in self.children])

    def _bbox(self):
        boxes = [c.bbox() for c in self.children]
        return (np.min([b[0] for b in boxes], axis=0),
                np.max([b[1] for b in boxes], axis=0))


class Intersection(_Composite):
    """Points inside every child."""

    def f(self, p):
        best = -math.inf
        for c in self.children:
            v = c.f(p)
            if v > best:
                best = v
        return best

    def contains(self, p):
        for c in self.children:
            if not c.contains(p):
                return False
        return True

    def gradient(self, p):
        best = -math.inf
        pick = self.children[0]
        for c in self.children:
            v = c.f(p)
            if v > best:
                best, pick = v, c
        return pick.gradient(p)

    def intervals(self, origin, direction):
        ivs = self.children[0].intervals(origin, direction)
        for c in self.children[1:]:
            if not ivs:
                return []
            ivs = _intersect_ivs(ivs, c.intervals(origin, direction))
        return ivs

    def _bbox(self):
        boxes = [c.bbox() for c in self.children]
        return (np.max([b[0] for b in boxes], axis=0),
                np.min([b[1] for b in boxes], axis=0))


class Difference(ImplicitSolid):
    """Points inside ``base`` but not inside ``cut``."""

    def __init__(self, base: ImplicitSolid, cut: ImplicitSolid,
                 index: Optional[float] = None):
        self.base = base
        self.cut = cut
        self.index = check_medium_index(index if index is not None else base.index)

    def f(self, p):
        return max(self.base.f(p), -self.cut.f(p))

    def contains(self, p):
        # matches f < 0 exactly: inside base and strictly outside the cut
        return self.base.contains(p) and self.cut.f(p) > 0.0

    def gradient(self, p):
        fb = self.base.f(p)
        fc = -self.cut.f(p)
        if fb >= fc:
            return self.base.gradient(p)
        return -self.cut.gradient(p)

    def intervals(self, origin, direction):
        base = self.base.intervals(origin, direction)
        if not base:
            return []
        return _subtract_ivs(base, self.cut.intervals(origin, direction))

    def _bbox(self):
        return self.base.bbox()


class ConvexPolyhedron(Intersection):
    """Intersection of half-spaces with an explicit bounding box."""

    def __init__(self, halves: Sequence[HalfSpace],
                 bounds: tuple[Sequence[float], Sequence[float]],
                 index: float = 1.5):
        super().__init__(*halves, index=index)
        self._bounds_override = (np.asarray(bounds[0], dtype=float),
                                 np.asarray(bounds[1], dtype=float))

    def _bbox(self):
        return self._bounds_override


# ---------------------------------------------------------------------------
# convenience constructors


def finite_cylinder(center_xy: tuple[float, float], radius: float,
                    z0: float, z1: float, index: float = 1.5) -> Intersection:
    """Closed circular cylinder spanning ``z0 <= z <= z1``."""
    if not z0 < z1:
        raise ValueError("require z0 < z1")
    return Intersection(
        InfiniteCylinder(center_xy=center_xy, radius=radius, index=index),
        HalfSpace(normal=(0.0, 0.0, -1.0), offset=-z0),
        HalfSpace(normal=(0.0, 0.0, 1.0), offset=z1),
        index=index,
    )


def frustum(base_half: float, top_half: float, z0: float, z1: float,
            index: float = 1.5) -> ConvexPolyhedron:
    """Square-cross-section frustum: half-width tapers from base to top."""
    if not z0 < z1:
        raise ValueError("require z0 < z1")
    s = (base_half - top_half) / (z1 - z0)
    halves = [
        HalfSpace(normal=(0.0, 0.0, -1.0), offset=-z0),
        HalfSpace(normal=(0.0, 0.0, 1.0), offset=z1),
        HalfSpace(normal=(1.0, 0.0, s), offset=base_half + s * z0),
        HalfSpace(normal=(-1.0, 0.0, s), offset=base_half + s * z0),
        HalfSpace(normal=(0.0, 1.0, s), offset=base_half + s * z0),
        HalfSpace(normal=(0.0, -1.0, s), offset=base_half + s * z0),
    ]
    m = max(base_half, top_half)
    return ConvexPolyhedron(halves, bounds=((-m, -m, z0), (m, m, z1)), index=index)


# ---------------------------------------------------------------------------
# nearest-hit extraction


@dataclass(frozen=True)
class Hit:
    """Nearest boundary crossing of a ray with a solid."""

    t: float
    position: np.ndarray
    normal: np.ndarray          # unit, outward
    entering: bool              # True when the ray passes outside -> inside
    solid: ImplicitSolid


def intersect(solid: ImplicitSolid, origin: Sequence[float],
              direction: Sequence[float], min_t: float = 1e-6) -> Optional[Hit]:
    """First surface crossing with ``t > min_t``, or None.

    The crossing parameter from the interval solver is polished with Newton
    steps on ``f`` along the ray so the hit satisfies ``|f| < 1e-9``.
    """
    ivs = solid.intervals(origin, direction)
    best = None
    for lo, hi in ivs:
        if lo > min_t and math.isfinite(lo):
            best = (lo, True)
            break
        if hi > min_t and math.isfinite(hi):
            best = (hi, False)
            break
    if best is None:
        return None
    t, entering = best
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    # Newton polish (keeps the best iterate if steps stop improving)
    t_best, f_best = t, abs(solid.f(o + t * d))
    for _ in range(12):
        p = o + t * d
        fv = solid.f(p)
        if abs(fv) < f_best:
            t_best, f_best = t, abs(fv)
        if abs(fv) < 1e-13:
            break
        g = solid.gradient(p)
        deriv = float(g @ d)
        if abs(deriv) < 1e-14:
            break
        step = fv / deriv
        if abs(step) > 1e-3 * max(1.0, abs(t)):
            break
        t -= step
    t = t_best
    pos = o + t * d
    g = solid.gradient(pos)
    if float(g @ g) < 1e-20:
        # singular surface point (e.g. cone apex): probe just past the hit
        g = solid.gradient(o + (t + 1e-7) * d)
    n = unit(g)
    return Hit(t=t, position=pos, normal=n, entering=entering, solid=solid)
