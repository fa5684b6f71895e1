"""Catalog of acquisition scenes and a text scene-description format.

Scenes share one layout: the camera sits below the object on the z axis
looking up, the reference pattern planes lie above the object, and — for
immersion scenes — liquid fills the half space above ``liquid.level`` so
that the pattern-facing surfaces are submerged while the camera-facing
surfaces and the camera itself stay dry.  Thin-object scenes skip the
liquid; their second acquisition removes the object instead.

Scene geometry (object shapes, refractive indices, pattern heights) follows
the synthetic experiment setups this package reproduces; camera distance and
field of view are chosen so the object fills most of the frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .scene import AcquisitionScene, LiquidSurface, PatternPlane, PinholeCamera
from .solids import (
    Cone,
    Difference,
    Ellipsoid,
    HalfSpace,
    ImplicitSolid,
    Intersection,
    Sphere,
    Union,
    finite_cylinder,
    frustum,
)

__all__ = [
    "ConfigError",
    "PaperScene",
    "SCENE_NAMES",
    "build_paper_scene",
    "load_scene_config",
    "scene_from_mapping",
]

#: Pattern planes are 32 x 32 scene units in every catalog scene.
PATTERN_HALF_EXTENT = 16.0


class ConfigError(ValueError):
    """Raised for unknown scene names, bad parameters, or malformed files."""


@dataclass(frozen=True)
class PaperScene:
    """An acquisition scene bundled with its protocol metadata.

    ``thin`` selects the acquisition protocol: False means the two
    configurations are air/liquid immersion; True means with/without the
    object (single-refraction approximation).
    """

    name: str
    scene: AcquisitionScene
    thin: bool
    object_index: float
    liquid_index: Optional[float]
    params: dict = field(default_factory=dict)

    def without_solids(self) -> AcquisitionScene:
        """The same viewing geometry with the object removed."""
        return AcquisitionScene(
            solids=[],
            patterns=self.scene.patterns,
            camera=self.scene.camera,
            liquid=None,
            ambient_index=self.scene.ambient_index,
        )


def _vec(*xs) -> np.ndarray:
    return np.asarray(xs, dtype=float)


def _camera(position, tan_half: float, resolution: int,
            aim=None) -> PinholeCamera:
    position = _vec(*position)
    if aim is None:
        forward = _vec(0.0, 0.0, 1.0)
    else:
        forward = _vec(*aim) - position
        forward = forward / float(np.linalg.norm(forward))
    return PinholeCamera(
        position=position,
        forward=forward,
        up=_vec(0.0, 1.0, 0.0),
        width=resolution,
        height=resolution,
        tan_half_x=tan_half,
        tan_half_y=tan_half,
    )


def _pattern(z: float, half_extent: float = PATTERN_HALF_EXTENT) -> PatternPlane:
    return PatternPlane(
        origin=_vec(0.0, 0.0, z),
        u_axis=_vec(1.0, 0.0, 0.0),
        v_axis=_vec(0.0, 1.0, 0.0),
        extent=(half_extent, half_extent),
    )


# ---------------------------------------------------------------------------
# object constructions


def _semi_ellipsoid(index: float) -> ImplicitSolid:
    # (x/12.5)^2 + (y/12.5)^2 + (z/5)^2 <= 1 restricted to z >= 0
    return Intersection(
        Ellipsoid(center=_vec(0, 0, 0), semi_axes=_vec(12.5, 12.5, 5.0),
                  index=index),
        HalfSpace(normal=_vec(0, 0, -1), offset=0.0, index=index),
    )


def _concave_cone(index: float) -> ImplicitSolid:
    # cylinder (radius 5, height 10) minus a cone (height 4, base radius 10)
    # opening upward from its apex at z=6: a conical funnel in the top face
    return Difference(
        finite_cylinder(center_xy=(0.0, 0.0), radius=5.0, z0=0.0, z1=10.0,
                        index=index),
        Cone(apex=_vec(0, 0, 6.0), axis=_vec(0, 0, 1.0), height=4.0,
             radius=10.0, index=index),
    )


#: Tilt of the hemisphere's flat face.  Viewed along the z axis this
#: reproduces the oblique internal-reflection geometry: rays refracted at
#: the dome meet the tilted flat face beyond the critical angle, reflect,
#: and exit through the dome on the far side, still reaching the pattern.
HEMISPHERE_TILT = math.radians(30.0)


def _hemisphere(index: float) -> ImplicitSolid:
    # glass half-ball of radius 8, flat face tilted toward +x, dome facing
    # the camera below
    n = _vec(math.sin(HEMISPHERE_TILT), 0.0, math.cos(HEMISPHERE_TILT))
    return Intersection(
        Sphere(center=_vec(0, 0, 8.0), radius=8.0, index=index),
        HalfSpace(normal=n, offset=float(n @ _vec(0, 0, 8.0)), index=index),
    )


def _thin_cone(index: float, h: float) -> ImplicitSolid:
    # cone of height 1, base radius 4, apex up; optionally padded from below
    # by a cylinder of height h (the thickness knob of the experiment)
    cone = Cone(apex=_vec(0, 0, 1.0 + h), axis=_vec(0, 0, -1.0), height=1.0,
                radius=4.0, index=index)
    if h <= 0.0:
        return cone
    pad = finite_cylinder(center_xy=(0.0, 0.0), radius=4.0, z0=0.0, z1=h,
                          index=index)
    return Union(cone, pad, index=index)


def _spherical_shell(index: float, s: float) -> ImplicitSolid:
    # sphere at the origin minus the same sphere shifted up by s: a crescent
    # whose lower cap (facing the camera) has vertical thickness s
    return Difference(
        Sphere(center=_vec(0, 0, 0), radius=10.0, index=index),
        Sphere(center=_vec(0, 0, s), radius=10.0, index=index),
    )


def _facet_solid(index: float) -> ImplicitSolid:
    # a frustum with four sloped planar facets: 10 x 10 base, 6 x 6 top
    return frustum(base_half=5.0, top_half=3.0, z0=0.0, z1=3.0, index=index)


def _parallel_plate(index: float) -> ImplicitSolid:
    return frustum(base_half=6.0, top_half=6.0, z0=1.0, z1=2.0, index=index)


def _plano_curved(index: float, thickness: float) -> ImplicitSolid:
    # spherical cap (radius 60, apex at z=2) whose flat lower face sits
    # `thickness` below the apex — the knob of the single-refraction
    # linearity experiment
    return Intersection(
        Sphere(center=_vec(0, 0, 2.0 - 60.0), radius=60.0, index=index),
        HalfSpace(normal=_vec(0, 0, -1.0), offset=thickness - 2.0,
                  index=index),
    )


# ---------------------------------------------------------------------------
# catalog

# name -> (thin?, object index, liquid index, liquid level,
#          pattern z0, z1, camera z, camera tan(half fov), pattern half extent)
_CATALOG = {
    "semi_ellipsoid": (False, 1.5, 1.3, 0.1, 10.0, 25.0, -80.0, 0.145, 16.0),
    "concave_cone": (False, 1.7, 1.33, 3.0, 12.0, 25.0, -40.0, 0.131, 16.0),
    # the hemisphere demo needs a wide pattern: post-reflection exit rays
    # leave nearly tangent to the dome and land far off axis
    "hemisphere": (False, 1.5, 1.33, 6.0, 18.0, 28.0, -60.0, 0.16, 80.0),
    "facet_solid": (False, 1.5, 1.33, 0.1, 10.0, 25.0, -60.0, 0.1, 16.0),
    "thin_cone": (True, 1.7, None, None, 20.0, 30.0, -600.0, 0.0085, 16.0),
    "spherical_shell": (True, 1.7, None, None, 20.0, 30.0, -60.0, 0.11, 16.0),
    "parallel_plate": (True, 1.52, None, None, 20.0, 30.0, -40.0, 0.12, 16.0),
    "plano_curved": (True, 1.5, None, None, 20.0, 30.0, -200.0, 0.02, 16.0),
}

#: Cameras sit on the z axis except where noted.  The padded-cone scene uses
#: a sideways-offset camera aimed at the object: with a perfectly axial view
#: the flat-face refraction displaces every slant hit point radially, which a
#: rotationally symmetric cone cannot distinguish, and the padding-height
#: study would measure nothing.  The offset turns part of that displacement
#: azimuthal, so the approximation error grows with padding as intended.
_OFF_AXIS_CAMERAS = {"thin_cone": ((-10.0, 0.0, -600.0), (0.0, 0.0, 0.0))}

SCENE_NAMES = tuple(_CATALOG)

_SHAPE_PARAMS = {"thin_cone": "h", "spherical_shell": "s",
                 "plano_curved": "thickness"}


def build_paper_scene(
    name: str,
    resolution: int = 1024,
    pattern_z0: Optional[float] = None,
    pattern_z1: Optional[float] = None,
    liquid_index: Optional[float] = None,
    object_index: Optional[float] = None,
    h: Optional[float] = None,
    s: Optional[float] = None,
    thickness: Optional[float] = None,
) -> PaperScene:
    """Build a catalog scene, optionally overriding its free parameters.

    ``h`` (thin_cone padding height), ``s`` (spherical_shell center offset)
    and ``thickness`` (plano_curved plate depth) are only accepted for the
    scene they belong to; unknown names or stray parameters raise
    :class:`ConfigError`.
    """
    if name not in _CATALOG:
        raise ConfigError(
            f"unknown scene {name!r}; available: {', '.join(SCENE_NAMES)}")
    (thin, obj_idx, liq_idx, liq_level, z0, z1, cam_z, tan_half,
     half_extent) = _CATALOG[name]

    shape_args = {"h": h, "s": s, "thickness": thickness}
    own = _SHAPE_PARAMS.get(name)
    for key, value in shape_args.items():
        if value is not None and key != own:
            raise ConfigError(f"parameter {key!r} does not apply to {name!r}")

    if resolution < 1:
        raise ConfigError("resolution must be >= 1")
    if object_index is not None:
        obj_idx = float(object_index)
    if liquid_index is not None:
        if thin:
            raise ConfigError(f"{name!r} uses no liquid")
        liq_idx = float(liquid_index)
    if pattern_z0 is not None:
        z0 = float(pattern_z0)
    if pattern_z1 is not None:
        z1 = float(pattern_z1)

    params: dict = {}
    if name == "semi_ellipsoid":
        solid = _semi_ellipsoid(obj_idx)
    elif name == "concave_cone":
        solid = _concave_cone(obj_idx)
    elif name == "hemisphere":
        solid = _hemisphere(obj_idx)
    elif name == "facet_solid":
        solid = _facet_solid(obj_idx)
    elif name == "thin_cone":
        params["h"] = 0.0 if h is None else float(h)
        if params["h"] < 0:
            raise ConfigError("padding height h must be >= 0")
        solid = _thin_cone(obj_idx, params["h"])
    elif name == "spherical_shell":
        params["s"] = 3.0 if s is None else float(s)
        if not 0.0 < params["s"] < 20.0:
            raise ConfigError("shell offset s must be in (0, 20)")
        solid = _spherical_shell(obj_idx, params["s"])
    elif name == "parallel_plate":
        solid = _parallel_plate(obj_idx)
    else:  # plano_curved
        params["thickness"] = 0.5 if thickness is None else float(thickness)
        if params["thickness"] <= 0:
            raise ConfigError("plate thickness must be > 0")
        solid = _plano_curved(obj_idx, params["thickness"])

    liquid = None
    if not thin:
        liquid = LiquidSurface(level=liq_level, index=liq_idx)
    cam_pos, cam_aim = _OFF_AXIS_CAMERAS.get(name, ((0.0, 0.0, cam_z), None))
    scene = AcquisitionScene(
        solids=[solid],
        patterns=[_pattern(z0, half_extent), _pattern(z1, half_extent)],
        camera=_camera(cam_pos, tan_half, resolution, aim=cam_aim),
        liquid=liquid,
    )
    return PaperScene(name=name, scene=scene, thin=thin,
                      object_index=obj_idx,
                      liquid_index=None if thin else liq_idx, params=params)


# ---------------------------------------------------------------------------
# text configuration files


_SOLID_TYPES = ("sphere", "ellipsoid", "halfspace", "cylinder", "cone",
                "frustum", "union", "intersection", "difference")


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing key {key!r} in {where}")
    return mapping[key]


def _check_keys(mapping: dict, allowed: set, where: str) -> None:
    extra = set(mapping) - allowed
    if extra:
        raise ConfigError(f"unknown keys {sorted(extra)} in {where}")


def solid_from_mapping(node: dict, index: float) -> ImplicitSolid:
    """Build an implicit solid from a nested table (custom CSG trees)."""
    if not isinstance(node, dict):
        raise ConfigError("solid description must be a table")
    kind = _require(node, "type", "solid")
    if kind not in _SOLID_TYPES:
        raise ConfigError(
            f"unknown solid type {kind!r}; available: {', '.join(_SOLID_TYPES)}")
    idx = float(node.get("index", index))
    w = f"solid type {kind!r}"
    if kind == "sphere":
        _check_keys(node, {"type", "index", "center", "radius"}, w)
        return Sphere(center=_vec(*_require(node, "center", w)),
                      radius=float(_require(node, "radius", w)), index=idx)
    if kind == "ellipsoid":
        _check_keys(node, {"type", "index", "center", "semi_axes"}, w)
        return Ellipsoid(center=_vec(*_require(node, "center", w)),
                         semi_axes=_vec(*_require(node, "semi_axes", w)),
                         index=idx)
    if kind == "halfspace":
        _check_keys(node, {"type", "index", "normal", "offset"}, w)
        return HalfSpace(normal=_vec(*_require(node, "normal", w)),
                         offset=float(_require(node, "offset", w)), index=idx)
    if kind == "cylinder":
        _check_keys(node, {"type", "index", "center_xy", "radius", "z0", "z1"}, w)
        return finite_cylinder(
            center_xy=tuple(node.get("center_xy", (0.0, 0.0))),
            radius=float(_require(node, "radius", w)),
            z0=float(_require(node, "z0", w)),
            z1=float(_require(node, "z1", w)), index=idx)
    if kind == "cone":
        _check_keys(node, {"type", "index", "apex", "axis", "height", "radius"}, w)
        return Cone(apex=_vec(*_require(node, "apex", w)),
                    axis=_vec(*_require(node, "axis", w)),
                    height=float(_require(node, "height", w)),
                    radius=float(_require(node, "radius", w)), index=idx)
    if kind == "frustum":
        _check_keys(node, {"type", "index", "base_half", "top_half", "z0", "z1"}, w)
        return frustum(base_half=float(_require(node, "base_half", w)),
                       top_half=float(_require(node, "top_half", w)),
                       z0=float(_require(node, "z0", w)),
                       z1=float(_require(node, "z1", w)), index=idx)
    if kind == "difference":
        _check_keys(node, {"type", "index", "base", "cut"}, w)
        return Difference(solid_from_mapping(_require(node, "base", w), idx),
                          solid_from_mapping(_require(node, "cut", w), idx),
                          index=idx)
    # union / intersection
    _check_keys(node, {"type", "index", "children"}, w)
    children = _require(node, "children", w)
    if not isinstance(children, list) or not children:
        raise ConfigError(f"{w} needs a non-empty children list")
    built = [solid_from_mapping(c, idx) for c in children]
    cls = Union if kind == "union" else Intersection
    return cls(*built, index=idx)


def scene_from_mapping(mapping: dict) -> PaperScene:
    """Build a scene from a parsed configuration mapping.

    Two shapes are accepted: a ``[scene]`` table with ``name`` referencing
    the catalog (plus overrides), or a fully custom description with
    ``[camera]``, ``[[pattern]]``, ``[solid]`` and optional ``[liquid]``
    tables.
    """
    if not isinstance(mapping, dict):
        raise ConfigError("configuration root must be a table")
    head = dict(mapping.get("scene", {}))
    if "name" in head:
        _check_keys(mapping, {"scene"}, "catalog configuration")
        name = head.pop("name")
        _check_keys(head, {"resolution", "pattern_z0", "pattern_z1",
                           "liquid_index", "object_index", "h", "s",
                           "thickness"}, "[scene]")
        return build_paper_scene(name, **head)

    _check_keys(mapping, {"scene", "camera", "pattern", "liquid", "solid"},
                "custom configuration")
    _check_keys(head, {"thin", "object_index", "ambient_index"}, "[scene]")
    cam_map = _require(mapping, "camera", "custom configuration")
    _check_keys(cam_map, {"position", "forward", "up", "resolution",
                          "tan_half"}, "[camera]")
    res = cam_map.get("resolution", [256, 256])
    tan = cam_map.get("tan_half", [0.15, 0.15])
    camera = PinholeCamera(
        position=_vec(*_require(cam_map, "position", "[camera]")),
        forward=_vec(*cam_map.get("forward", (0.0, 0.0, 1.0))),
        up=_vec(*cam_map.get("up", (0.0, 1.0, 0.0))),
        width=int(res[0]), height=int(res[1]),
        tan_half_x=float(tan[0]), tan_half_y=float(tan[1]),
    )
    pat_list = _require(mapping, "pattern", "custom configuration")
    if not isinstance(pat_list, list) or not pat_list:
        raise ConfigError("need at least one [[pattern]] table")
    patterns = []
    for p in pat_list:
        _check_keys(p, {"origin", "u_axis", "v_axis", "extent"}, "[[pattern]]")
        extent = p.get("extent", [PATTERN_HALF_EXTENT, PATTERN_HALF_EXTENT])
        patterns.append(PatternPlane(
            origin=_vec(*_require(p, "origin", "[[pattern]]")),
            u_axis=_vec(*p.get("u_axis", (1.0, 0.0, 0.0))),
            v_axis=_vec(*p.get("v_axis", (0.0, 1.0, 0.0))),
            extent=(float(extent[0]), float(extent[1])),
        ))
    obj_idx = float(head.get("object_index", 1.5))
    solid = solid_from_mapping(_require(mapping, "solid", "configuration"),
                               obj_idx)
    liquid = None
    liq_idx = None
    if "liquid" in mapping:
        liq_map = mapping["liquid"]
        _check_keys(liq_map, {"level", "index"}, "[liquid]")
        liq_idx = float(_require(liq_map, "index", "[liquid]"))
        liquid = LiquidSurface(level=float(_require(liq_map, "level",
                                                    "[liquid]")),
                               index=liq_idx)
    thin = bool(head.get("thin", liquid is None))
    if thin and liquid is not None:
        raise ConfigError("thin protocol scenes must not define [liquid]")
    scene = AcquisitionScene(
        solids=[solid], patterns=patterns, camera=camera, liquid=liquid,
        ambient_index=float(head.get("ambient_index", 1.0)),
    )
    return PaperScene(name="custom", scene=scene, thin=thin,
                      object_index=obj_idx, liquid_index=liq_idx)


def load_scene_config(path) -> PaperScene:
    """Load a scene description from a TOML file."""
    try:
        import tomllib
    except ModuleNotFoundError:  # pragma: no cover - Python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scene config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed scene config {path}: {exc}") from exc
    return scene_from_mapping(data)
