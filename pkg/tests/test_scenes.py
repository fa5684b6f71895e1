"""Scene catalog, configuration loading, and per-scene physical sanity.

Inclusion/exclusion points for the catalog solids are derived by evaluating
the defining inequalities by hand; rendering thresholds were measured once
on the committed geometry and frozen with a margin.
"""

import math

import numpy as np
import pytest

from lightpath.geometry import ContractViolation
from lightpath.scene import AcquisitionScene
from lightpath.scenes import (
    PATTERN_HALF_EXTENT,
    SCENE_NAMES,
    ConfigError,
    PaperScene,
    build_paper_scene,
    load_scene_config,
    scene_from_mapping,
)
from lightpath.solids import Cone, Difference, Sphere, Union
from lightpath.tracer import render_views

EXPECTED_NAMES = {
    "semi_ellipsoid", "concave_cone", "thin_cone", "spherical_shell",
    "hemisphere", "facet_solid", "parallel_plate", "plano_curved",
}

THIN_NAMES = {"thin_cone", "spherical_shell", "parallel_plate",
              "plano_curved"}


# ---------------------------------------------------------------------------
# catalog coverage and layout validity


def test_catalog_names_complete():
    assert set(SCENE_NAMES) == EXPECTED_NAMES


@pytest.mark.parametrize("name", sorted(EXPECTED_NAMES))
def test_every_catalog_scene_builds_and_validates(name):
    ps = build_paper_scene(name, resolution=32)
    assert isinstance(ps, PaperScene)
    assert ps.name == name
    assert ps.thin == (name in THIN_NAMES)
    sc = ps.scene
    assert len(sc.patterns) == 2
    assert (sc.liquid is None) == ps.thin
    assert (ps.liquid_index is None) == ps.thin
    assert sc.camera.width == 32 and sc.camera.height == 32
    # camera below the object looking up
    assert sc.camera.position[2] < 0
    assert sc.camera.forward[2] > 0
    # second pose farther than the first
    assert sc.patterns[1].origin[2] > sc.patterns[0].origin[2]
    # the protocol's "without object" variant keeps the viewing geometry
    empty = ps.without_solids()
    assert empty.solids == []
    assert empty.camera is sc.camera
    assert empty.patterns == sc.patterns


def test_default_resolution_is_full_scale():
    ps = build_paper_scene("parallel_plate")
    assert ps.scene.camera.width == 1024
    assert ps.scene.camera.height == 1024


# ---------------------------------------------------------------------------
# per-scene parameters


def test_semi_ellipsoid_parameters():
    ps = build_paper_scene("semi_ellipsoid", resolution=16)
    assert ps.object_index == 1.5
    assert ps.liquid_index == 1.3
    assert ps.scene.liquid.index == 1.3
    assert [p.origin[2] for p in ps.scene.patterns] == [10.0, 25.0]
    assert all(p.extent == (16.0, 16.0) for p in ps.scene.patterns)
    solid = ps.scene.solids[0]
    assert solid.index == 1.5
    # boundary points of (x/12.5)^2 + (y/12.5)^2 + (z/5)^2 = 1, z > 0
    for t in (0.2, 0.9, 1.4):
        p = (12.5 * math.sin(t) * 0.6, 12.5 * math.sin(t) * 0.8,
             5.0 * math.cos(t))
        assert abs(solid.f(p)) < 1e-12
    assert solid.contains((0.0, 0.0, 2.5))
    assert solid.contains((11.0, 0.0, 0.5))
    assert not solid.contains((0.0, 0.0, -0.5))      # cut below base plane
    assert not solid.contains((0.0, 0.0, 5.2))
    assert not solid.contains((12.6, 0.0, 0.1))


def test_semi_ellipsoid_pose_and_medium_overrides():
    ps = build_paper_scene("semi_ellipsoid", resolution=16,
                           pattern_z0=6.0, pattern_z1=10.0,
                           liquid_index=1.7)
    assert [p.origin[2] for p in ps.scene.patterns] == [6.0, 10.0]
    assert ps.liquid_index == 1.7
    assert ps.scene.liquid.index == 1.7
    for z1 in (15.0, 20.0, 30.0):
        alt = build_paper_scene("semi_ellipsoid", resolution=16,
                                pattern_z1=z1)
        assert alt.scene.patterns[1].origin[2] == z1


def test_concave_cone_parameters():
    ps = build_paper_scene("concave_cone", resolution=16)
    assert ps.object_index == 1.7
    assert ps.liquid_index == 1.33
    solid = ps.scene.solids[0]
    # cylinder radius 5 height 10; funnel = cone height 4 base radius 10,
    # apex at (0, 0, 6) opening upward
    assert solid.contains((0.0, 0.0, 3.0))           # body below the apex
    assert solid.contains((4.9, 0.0, 7.9))           # wall outside the funnel
    assert not solid.contains((0.0, 0.0, 6.5))       # hollow funnel interior
    assert not solid.contains((4.0, 0.0, 9.5))       # carved near the top
    assert not solid.contains((5.1, 0.0, 5.0))       # outside the cylinder
    assert not solid.contains((0.0, 0.0, 10.5))      # above the cylinder
    # funnel surface: radius 2.5 at height 7 (one unit above the apex)
    assert abs(solid.f((2.5, 0.0, 7.0))) < 1e-12


def test_thin_cone_padding_parameter():
    bare = build_paper_scene("thin_cone", resolution=16)
    assert bare.object_index == 1.7
    assert bare.params == {"h": 0.0}
    assert [p.origin[2] for p in bare.scene.patterns] == [20.0, 30.0]
    solid = bare.scene.solids[0]
    assert isinstance(solid, Cone)                    # no pad cylinder
    assert solid.height == 1.0 and solid.radius == 4.0
    assert solid.contains((0.0, 0.0, 0.5))
    assert solid.contains((3.9, 0.0, 0.01))
    assert not solid.contains((0.0, 0.0, -0.01))
    assert not solid.contains((0.5, 0.0, 0.95))      # near apex, off axis

    padded = build_paper_scene("thin_cone", resolution=16, h=2.0)
    assert padded.params == {"h": 2.0}
    psolid = padded.scene.solids[0]
    assert isinstance(psolid, Union)
    assert psolid.contains((3.9, 0.0, 1.0))          # inside the pad
    assert psolid.contains((0.0, 0.0, 2.5))          # inside the lifted cone
    assert not psolid.contains((0.0, 0.0, 3.1))      # above the lifted apex

    with pytest.raises(ConfigError):
        build_paper_scene("thin_cone", h=-0.5)


def test_spherical_shell_structure():
    ps = build_paper_scene("spherical_shell", resolution=16)
    assert ps.params == {"s": 3.0}
    assert ps.object_index == 1.7
    solid = ps.scene.solids[0]
    assert isinstance(solid, Difference)
    assert isinstance(solid.base, Sphere) and solid.base.radius == 10.0
    assert isinstance(solid.cut, Sphere) and solid.cut.radius == 10.0
    assert np.allclose(solid.base.center, [0.0, 0.0, 0.0])
    assert np.allclose(solid.cut.center, [0.0, 0.0, 3.0])
    # crescent: cap of the origin sphere below the offset sphere
    assert solid.contains((0.0, 0.0, -9.5))
    assert not solid.contains((0.0, 0.0, 0.0))       # hollow: inside both
    assert not solid.contains((0.0, 0.0, 9.0))       # removed upper region
    assert abs(solid.f((0.0, 0.0, -7.0))) < 1e-12    # inner (cut) surface
    for s in (1.0, 2.0, 4.0, 5.0):
        alt = build_paper_scene("spherical_shell", resolution=16, s=s)
        assert np.allclose(alt.scene.solids[0].cut.center, [0.0, 0.0, s])
    for bad in (0.0, 20.0, -1.0):
        with pytest.raises(ConfigError):
            build_paper_scene("spherical_shell", s=bad)


def test_hemisphere_is_tilted_half_ball():
    ps = build_paper_scene("hemisphere", resolution=16)
    assert ps.object_index == 1.5
    assert ps.liquid_index == 1.33
    solid = ps.scene.solids[0]
    c = np.array([0.0, 0.0, 8.0])
    phi = math.radians(30.0)
    n = np.array([math.sin(phi), 0.0, math.cos(phi)])
    # flat face passes through the sphere center (a true half-ball)
    assert solid.contains(c - 0.5 * n)
    assert not solid.contains(c + 0.5 * n)
    # dome points: on the sphere, below the tilted plane
    for ang in (0.3, 1.0, 2.0):
        p = c + 8.0 * np.array([math.sin(ang) * 0.5, math.sin(ang) * 0.7,
                                -math.cos(ang) * 0.6])
        p = c + (p - c) * (8.0 / np.linalg.norm(p - c))
        if float((p - c) @ n) < -1e-9:
            assert abs(solid.f(p)) < 1e-9
    # wide pattern so reflected-then-exiting rays still land on it
    assert ps.scene.patterns[0].extent[0] == 80.0


def test_facet_solid_is_square_frustum():
    ps = build_paper_scene("facet_solid", resolution=16)
    solid = ps.scene.solids[0]
    assert solid.contains((4.5, 4.5, 0.5))           # wide base corner
    assert solid.contains((2.9, 2.9, 2.9))           # narrow top corner
    assert not solid.contains((4.5, 0.0, 2.9))       # sloped facet cuts in
    assert not solid.contains((0.0, 0.0, 3.1))
    assert not solid.contains((0.0, 0.0, -0.1))
    # sloped facet plane: half-width 5 at z=0 tapering to 3 at z=3
    assert abs(solid.f((5.0 - 2.0 / 3.0, 0.0, 1.0))) < 1e-12


def test_parallel_plate_is_flat_slab():
    ps = build_paper_scene("parallel_plate", resolution=16)
    assert ps.thin
    assert ps.object_index == 1.52
    solid = ps.scene.solids[0]
    assert solid.contains((0.0, 0.0, 1.5))
    assert solid.contains((5.9, 5.9, 1.5))
    assert not solid.contains((0.0, 0.0, 0.9))
    assert not solid.contains((0.0, 0.0, 2.1))
    # both faces horizontal -> surface normals parallel everywhere
    assert abs(solid.f((0.0, 0.0, 1.0))) < 1e-12
    assert abs(solid.f((0.0, 0.0, 2.0))) < 1e-12


def test_plano_curved_thickness_parameter():
    ps = build_paper_scene("plano_curved", resolution=16)
    assert ps.params == {"thickness": 0.5}
    solid = ps.scene.solids[0]
    assert abs(solid.f((0.0, 0.0, 2.0))) < 1e-12     # spherical apex
    assert solid.contains((0.0, 0.0, 1.8))
    assert not solid.contains((0.0, 0.0, 1.4))       # below the flat face

    thick = build_paper_scene("plano_curved", resolution=16, thickness=2.0)
    tsolid = thick.scene.solids[0]
    assert tsolid.contains((0.0, 0.0, 0.5))
    assert not tsolid.contains((0.0, 0.0, -0.1))
    # curved face: sphere of radius 60 centered 58 below the apex plane
    rho = math.sqrt(60.0 ** 2 - 59.0 ** 2)
    assert abs(tsolid.f((rho, 0.0, 1.0))) < 1e-9

    with pytest.raises(ConfigError):
        build_paper_scene("plano_curved", thickness=0.0)


# ---------------------------------------------------------------------------
# override validation


def test_unknown_scene_name_is_config_error():
    with pytest.raises(ConfigError, match="unknown scene"):
        build_paper_scene("pyramid")


def test_shape_parameters_rejected_on_wrong_scene():
    with pytest.raises(ConfigError):
        build_paper_scene("semi_ellipsoid", h=1.0)
    with pytest.raises(ConfigError):
        build_paper_scene("thin_cone", s=3.0)
    with pytest.raises(ConfigError):
        build_paper_scene("spherical_shell", thickness=1.0)


def test_liquid_override_rejected_on_thin_scene():
    with pytest.raises(ConfigError):
        build_paper_scene("thin_cone", liquid_index=1.33)


def test_object_index_override_applies_to_solid():
    ps = build_paper_scene("semi_ellipsoid", resolution=16, object_index=1.7)
    assert ps.object_index == 1.7
    assert ps.scene.solids[0].index == 1.7


def test_bad_resolution_rejected():
    with pytest.raises(ConfigError):
        build_paper_scene("semi_ellipsoid", resolution=0)


# ---------------------------------------------------------------------------
# configuration files


def test_load_named_scene_from_toml(tmp_path):
    cfg = tmp_path / "scene.toml"
    cfg.write_text(
        '[scene]\nname = "thin_cone"\nh = 0.5\nresolution = 32\n')
    ps = load_scene_config(cfg)
    assert ps.name == "thin_cone"
    assert ps.params == {"h": 0.5}
    assert ps.scene.camera.width == 32


def test_load_custom_csg_scene_from_toml(tmp_path):
    cfg = tmp_path / "custom.toml"
    cfg.write_text("""
[scene]
object_index = 1.52

[camera]
position = [0.0, 0.0, -30.0]
resolution = [24, 24]
tan_half = [0.2, 0.2]

[[pattern]]
origin = [0.0, 0.0, 12.0]

[[pattern]]
origin = [0.0, 0.0, 20.0]

[liquid]
level = 0.5
index = 1.33

[solid]
type = "difference"

[solid.base]
type = "sphere"
center = [0.0, 0.0, 2.0]
radius = 3.0

[solid.cut]
type = "halfspace"
normal = [0.0, 0.0, 1.0]
offset = 2.0
""")
    ps = load_scene_config(cfg)
    assert ps.name == "custom"
    assert not ps.thin
    assert ps.object_index == 1.52
    assert ps.liquid_index == 1.33
    solid = ps.scene.solids[0]
    assert solid.index == 1.52
    assert solid.contains((0.0, 0.0, 4.0))           # upper cap kept
    assert not solid.contains((0.0, 0.0, 1.0))       # lower part cut away
    views = render_views(ps.scene, immersed=False)
    assert views.fep_valid.any()


def test_custom_scene_union_of_spheres():
    ps = scene_from_mapping({
        "camera": {"position": [0.0, 0.0, -30.0]},
        "pattern": [{"origin": [0.0, 0.0, 15.0]}],
        "solid": {"type": "union", "index": 1.5, "children": [
            {"type": "sphere", "center": [-2.0, 0.0, 2.0], "radius": 2.0},
            {"type": "sphere", "center": [2.0, 0.0, 2.0], "radius": 2.0},
        ]},
    })
    assert ps.thin                                    # no liquid table
    solid = ps.scene.solids[0]
    assert solid.contains((-2.0, 0.0, 2.0))
    assert solid.contains((2.0, 0.0, 2.0))
    assert not solid.contains((0.0, 0.0, 5.0))


def test_config_error_cases(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[scene\nname = oops")
    with pytest.raises(ConfigError, match="malformed"):
        load_scene_config(bad)
    with pytest.raises(ConfigError, match="cannot read"):
        load_scene_config(tmp_path / "missing.toml")
    with pytest.raises(ConfigError, match="unknown keys"):
        scene_from_mapping({"scene": {"name": "thin_cone", "frobnicate": 1}})
    with pytest.raises(ConfigError, match="unknown solid type"):
        scene_from_mapping({
            "camera": {"position": [0, 0, -30]},
            "pattern": [{"origin": [0, 0, 15]}],
            "solid": {"type": "torus", "radius": 2.0},
        })
    with pytest.raises(ConfigError, match="missing key"):
        scene_from_mapping({
            "camera": {"position": [0, 0, -30]},
            "pattern": [{"origin": [0, 0, 15]}],
            "solid": {"type": "sphere", "center": [0, 0, 2]},
        })
    with pytest.raises(ConfigError, match="must not define"):
        scene_from_mapping({
            "scene": {"thin": True},
            "camera": {"position": [0, 0, -30]},
            "pattern": [{"origin": [0, 0, 15]}],
            "liquid": {"level": 0.5, "index": 1.33},
            "solid": {"type": "sphere", "center": [0, 0, 2], "radius": 1.0},
        })
    with pytest.raises(ConfigError, match="pattern"):
        scene_from_mapping({
            "camera": {"position": [0, 0, -30]},
            "pattern": [],
            "solid": {"type": "sphere", "center": [0, 0, 2], "radius": 1.0},
        })


# ---------------------------------------------------------------------------
# rendered physical sanity (thresholds measured once, frozen with margin)


def test_semi_ellipsoid_usable_pixel_yield():
    # both-configuration, both-pose validity with glass contact must stay
    # high enough that a full-scale render yields well over 7e5 usable
    # correspondences (measured 0.78 at this framing)
    ps = build_paper_scene("semi_ellipsoid", resolution=64)
    air = render_views(ps.scene, immersed=False)
    liq = render_views(ps.scene, immersed=True)
    usable = (air.maps[0].valid & air.maps[1].valid
              & liq.maps[0].valid & liq.maps[1].valid
              & air.fep_valid & liq.fep_valid)
    assert usable.mean() > 0.72
    # at usable pixels the two configurations share the camera-side path,
    # so the glass contact point is bitwise identical
    assert np.array_equal(air.fep[usable], liq.fep[usable])


def test_hemisphere_has_reflect_then_exit_correspondences():
    # some dome rays reflect internally off the tilted flat face, exit
    # through the dome far side, and still reach both patterns
    ps = build_paper_scene("hemisphere", resolution=96)
    air = render_views(ps.scene, immersed=False)
    both = air.maps[0].valid & air.maps[1].valid
    one_bounce = (air.tir_count == 1) & both
    assert one_bounce.sum() >= 5
    # plain two-refraction pixels dominate
    assert ((air.tir_count == 0) & both).mean() > 0.5


def test_concave_cone_funnel_fully_usable():
    ps = build_paper_scene("concave_cone", resolution=48)
    air = render_views(ps.scene, immersed=False)
    liq = render_views(ps.scene, immersed=True)
    usable = (air.maps[0].valid & air.maps[1].valid
              & liq.maps[0].valid & liq.maps[1].valid & air.fep_valid)
    # silhouette of the radius-5 cylinder fills ~71% of this framing
    assert usable.mean() > 0.6


def test_thin_scenes_render_with_and_without_object():
    ps = build_paper_scene("spherical_shell", resolution=32)
    with_obj = render_views(ps.scene, immersed=False)
    without = render_views(ps.without_solids(), immersed=False)
    assert with_obj.fep_valid.all()
    assert not without.fep_valid.any()
    both = (with_obj.maps[0].valid & with_obj.maps[1].valid
            & without.maps[0].valid & without.maps[1].valid)
    assert both.all()
    # refraction displaces the observed pattern coordinates
    du = np.abs(with_obj.maps[0].u - without.maps[0].u)
    assert du.max() > 0.05
