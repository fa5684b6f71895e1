"""Vector geometry core: refraction, reflection, rotation, line-line closest points.

All angles are radians; callers convert to degrees only for reporting.
Directions passed to the refraction/reflection routines must be unit vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ContractViolation",
    "Ray3",
    "TriangulationResult",
    "angle_between",
    "check_medium_index",
    "closest_points",
    "critical_angle",
    "reflect",
    "refract",
    "rodrigues_rotate",
    "unit",
]

#: lines are treated as parallel when |cos| of their angle exceeds 1 - PARALLEL_EPS
PARALLEL_EPS = 1e-9

#: unit-vector inputs may deviate from length 1 by at most this much
UNIT_TOL = 1e-6


class ContractViolation(ValueError):
    """Raised when an input violates a documented precondition."""


def _as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ContractViolation(f"expected a 3-vector, got shape {a.shape}")
    return a


def unit(v) -> np.ndarray:
    """Return v normalized to unit length."""
    a = _as_vec3(v)
    n = math.sqrt(float(a @ a))
    if n == 0.0:
        raise ContractViolation("cannot normalize a zero vector")
    return a / n


def _check_unit(v: np.ndarray, name: str) -> np.ndarray:
    n = math.sqrt(float(v @ v))
    if abs(n - 1.0) > UNIT_TOL:
        raise ContractViolation(f"{name} must be a unit vector (|v| = {n:.9g})")
    return v / n


def check_medium_index(value: float) -> float:
    """Validate a refractive index; values below vacuum (1.0) are rejected."""
    value = float(value)
    if not value >= 1.0:
        raise ContractViolation(f"refractive index must be >= 1.0, got {value}")
    return value


def angle_between(u, v) -> float:
    """Angle between two vectors in [0, pi], stable for small angles."""
    a = _as_vec3(u)
    b = _as_vec3(v)
    cross = np.cross(a, b)
    return math.atan2(math.sqrt(float(cross @ cross)), float(a @ b))


@dataclass(frozen=True)
class Ray3:
    """A ray/line with an origin and a unit direction."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", _as_vec3(self.origin).copy())
        object.__setattr__(self, "direction", unit(self.direction))

    def point_at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


def refract(incident, normal, n1: float, n2: float):
    """Refract a unit direction at an interface between indices n1 -> n2.

    Arguments:
        incident: unit propagation direction arriving at the surface.
        normal: unit surface normal.  If it does not face the incoming side
            (incident . normal > 0) it is flipped internally.
        n1, n2: refractive indices on the incident and transmitted sides.

    Returns the unit transmitted direction, or ``None`` on total internal
    reflection (sin(theta1) > n2/n1).
    """
    d = _check_unit(_as_vec3(incident), "incident")
    n = _check_unit(_as_vec3(normal), "normal")
    n1 = check_medium_index(n1)
    n2 = check_medium_index(n2)
    cos_i = -float(d @ n)
    if cos_i < 0.0:
        # normal pointed away from the incoming side; use the facing one
        n = -n
        cos_i = -cos_i
    eta = n1 / n2
    sin2_t = eta * eta * max(0.0, 1.0 - cos_i * cos_i)
    if sin2_t > 1.0:
        return None
    cos_t = math.sqrt(1.0 - sin2_t)
    t = eta * d + (eta * cos_i - cos_t) * n
    return unit(t)


def reflect(incident, normal) -> np.ndarray:
    """Mirror a unit direction about a surface normal."""
    d = _check_unit(_as_vec3(incident), "incident")
    n = _check_unit(_as_vec3(normal), "normal")
    return d - 2.0 * float(d @ n) * n


def critical_angle(n1: float, n2: float):
    """Critical angle for total internal reflection going n1 -> n2.

    Defined only when entering a rarer medium (n1 > n2); otherwise ``None``.
    """
    n1 = check_medium_index(n1)
    n2 = check_medium_index(n2)
    if n1 <= n2:
        return None
    return math.asin(n2 / n1)


def rodrigues_rotate(v, axis, angle: float) -> np.ndarray:
    """Rotate v about a unit axis by angle (right-hand rule)."""
    a = _as_vec3(v)
    k = _check_unit(_as_vec3(axis), "axis")
    c = math.cos(angle)
    s = math.sin(angle)
    return a * c + np.cross(k, a) * s + k * float(k @ a) * (1.0 - c)


@dataclass(frozen=True)
class TriangulationResult:
    """Closest-approach data for two lines.

    When ``parallel`` is set the line parameters and midpoint are undefined
    (``None``); ``gap`` then holds the perpendicular line-to-line distance.
    """

    s: float | None
    t: float | None
    gap: float
    midpoint: np.ndarray | None
    parallel: bool = field(default=False)


def closest_points(line_m: Ray3, line_n: Ray3,
                   parallel_eps: float = PARALLEL_EPS) -> TriangulationResult:
    """Closest points between two lines given as origin + unit direction.

    Returns the line parameters of the two closest points, their distance
    (gap), and their midpoint.  Lines whose directions satisfy
    |cos angle| > 1 - parallel_eps are flagged parallel.
    """
    u = line_m.direction
    v = line_n.direction
    w0 = line_m.origin - line_n.origin
    b = float(u @ v)
    if abs(b) > 1.0 - parallel_eps:
        perp = w0 - float(w0 @ u) * u
        return TriangulationResult(
            s=None, t=None, gap=float(np.linalg.norm(perp)),
            midpoint=None, parallel=True)
    d = float(u @ w0)
    e = float(v @ w0)
    denom = 1.0 - b * b
    s = (b * e - d) / denom
    t = (e - b * d) / denom
    pm = line_m.point_at(s)
    pn = line_n.point_at(t)
    gap = float(np.linalg.norm(pm - pn))
    return TriangulationResult(s=s, t=t, gap=gap,
                               midpoint=0.5 * (pm + pn), parallel=False)
