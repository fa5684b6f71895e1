"""Acquisition geometry: coded pattern planes, pinhole camera, liquid bath.

The measurement layout places a pinhole camera on one side of the solids and
one or more coded pattern planes on the opposite side, so every camera ray
that matters passes through (or around) the glass before meeting a pattern.
An optional liquid surface — a horizontal plane at ``level`` — fills the
half-space ``z > level`` with a second immersion medium; the camera must
remain outside the liquid so the camera-side segment of every light path is
identical with and without immersion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import ContractViolation, Ray3, check_medium_index, unit
from .solids import ImplicitSolid

__all__ = [
    "AcquisitionScene",
    "LiquidSurface",
    "PatternPlane",
    "PinholeCamera",
    "camera_ray",
    "medium_at",
]

_ORTHO_TOL = 1e-12


@dataclass
class PatternPlane:
    """Planar coded pattern addressed by in-plane coordinates (u, v).

    ``u_axis`` and ``v_axis`` must be orthonormal; ``extent`` holds the
    half-width of the addressable area along each axis.
    """

    origin: np.ndarray
    u_axis: np.ndarray
    v_axis: np.ndarray
    extent: tuple[float, float]

    def __post_init__(self) -> None:
        self.origin = np.asarray(self.origin, dtype=float)
        self.u_axis = np.asarray(self.u_axis, dtype=float)
        self.v_axis = np.asarray(self.v_axis, dtype=float)
        self.extent = (float(self.extent[0]), float(self.extent[1]))
        for name, a in (("u_axis", self.u_axis), ("v_axis", self.v_axis)):
            if abs(float(a @ a) - 1.0) > 2 * _ORTHO_TOL:
                raise ContractViolation(f"pattern {name} must be unit length")
        if abs(float(self.u_axis @ self.v_axis)) > _ORTHO_TOL:
            raise ContractViolation("pattern axes must be orthogonal")
        if self.extent[0] <= 0 or self.extent[1] <= 0:
            raise ContractViolation("pattern extent must be positive")
        self.normal = np.cross(self.u_axis, self.v_axis)

    def point3d(self, u: float, v: float) -> np.ndarray:
        """3D location of pattern coordinate (u, v)."""
        return self.origin + u * self.u_axis + v * self.v_axis

    def project(self, p: Sequence[float]) -> tuple[float, float]:
        """In-plane coordinates of a 3D point (its off-plane part is ignored)."""
        d = np.asarray(p, dtype=float) - self.origin
        return float(d @ self.u_axis), float(d @ self.v_axis)


@dataclass
class PinholeCamera:
    """Ideal pinhole with a regular pixel grid.

    ``tan_half_x``/``tan_half_y`` give the tangent of the half field of view
    along the image axes.  Pixel (0, 0) is the top-left pixel; its center ray
    leans toward -x (left) and +up.
    """

    position: np.ndarray
    forward: np.ndarray
    up: np.ndarray
    width: int
    height: int
    tan_half_x: float
    tan_half_y: float

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float)
        f = unit(np.asarray(self.forward, dtype=float))
        r = unit(np.cross(np.asarray(self.up, dtype=float), f))
        u = np.cross(f, r)
        self.forward, self.right, self.up = f, r, u
        self.width = int(self.width)
        self.height = int(self.height)
        if self.width <= 0 or self.height <= 0:
            raise ContractViolation("camera resolution must be positive")
        if self.tan_half_x <= 0 or self.tan_half_y <= 0:
            raise ContractViolation("camera field of view must be positive")

    def pixel_direction(self, ix: float, iy: float) -> tuple[float, float, float]:
        """Unnormalized direction through the center of pixel (ix, iy)."""
        xn = (2.0 * (ix + 0.5) / self.width - 1.0) * self.tan_half_x
        yn = (1.0 - 2.0 * (iy + 0.5) / self.height) * self.tan_half_y
        f, r, u = self.forward, self.right, self.up
        return (f[0] + xn * r[0] + yn * u[0],
                f[1] + xn * r[1] + yn * u[1],
                f[2] + xn * r[2] + yn * u[2])


def camera_ray(camera: PinholeCamera, ix: float, iy: float) -> Ray3:
    """Normalized ray through the center of pixel (ix, iy)."""
    return Ray3(origin=camera.position.copy(),
                direction=np.asarray(camera.pixel_direction(ix, iy)))


@dataclass
class LiquidSurface:
    """Horizontal interface: the half-space ``z > level`` holds the liquid."""

    level: float
    index: float

    def __post_init__(self) -> None:
        self.level = float(self.level)
        self.index = check_medium_index(self.index)


@dataclass
class AcquisitionScene:
    """Solids plus measurement hardware, validated for a consistent layout."""

    solids: list[ImplicitSolid]
    patterns: list[PatternPlane]
    camera: PinholeCamera
    liquid: Optional[LiquidSurface] = None
    ambient_index: float = 1.0

    def __post_init__(self) -> None:
        self.ambient_index = check_medium_index(self.ambient_index)
        if not self.patterns:
            raise ContractViolation("scene needs at least one pattern plane")
        cam = self.camera
        for s in self.solids:
            if s.contains(cam.position):
                raise ContractViolation("camera must lie outside every solid")
        if self.liquid is not None and cam.position[2] >= self.liquid.level:
            raise ContractViolation(
                "camera must stay outside the liquid (below its level plane)")
        # every pattern must lie beyond every solid as seen from the camera,
        # so traced rays terminate after their last glass surface
        depth_max = -np.inf
        for s in self.solids:
            lo, hi = s.bbox()
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise ContractViolation(
                    "top-level solids need finite bounding boxes")
            for corner in _corners(lo, hi):
                depth_max = max(depth_max, float((corner - cam.position)
                                                @ cam.forward))
        for pat in self.patterns:
            depth_min = min(
                float((pat.point3d(su * pat.extent[0], sv * pat.extent[1])
                       - cam.position) @ cam.forward)
                for su in (-1, 1) for sv in (-1, 1))
            if depth_min <= depth_max:
                raise ContractViolation(
                    "pattern planes must lie behind all solids as seen "
                    "from the camera")


def _corners(lo: np.ndarray, hi: np.ndarray):
    for x in (lo[0], hi[0]):
        for y in (lo[1], hi[1]):
            for z in (lo[2], hi[2]):
                yield np.array([x, y, z])


def medium_at(scene: AcquisitionScene, p: Sequence[float],
              immersed: bool) -> float:
    """Refractive index at a point: solid interior, liquid bath, or ambient."""
    for s in scene.solids:
        if s.contains(p):
            return s.index
    if immersed and scene.liquid is not None and float(p[2]) > scene.liquid.level:
        return scene.liquid.index
    return scene.ambient_index
