"""Unit tests for the vector geometry core.

Expected values are either hand-derived, computed by independent scalar
oracles inside the test, or cross-checked against scipy implementations.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation

from lightpath.geometry import (
    ContractViolation,
    Ray3,
    angle_between,
    check_medium_index,
    closest_points,
    critical_angle,
    reflect,
    refract,
    rodrigues_rotate,
    unit,
)


def vec(*xs):
    return np.asarray(xs, dtype=float)


def incident_at(theta, normal=None):
    """Unit direction hitting a surface with normal +z at incidence theta."""
    d = vec(math.sin(theta), 0.0, -math.cos(theta))
    return d


# ---------------------------------------------------------------------------
# unit vectors / angles


def test_unit_normalizes():
    v = unit(vec(3.0, 0.0, 4.0))
    assert np.allclose(v, [0.6, 0.0, 0.8], atol=1e-15)


def test_unit_rejects_zero():
    with pytest.raises(ContractViolation):
        unit(vec(0.0, 0.0, 0.0))


def test_angle_between_stable_at_small_angles():
    # atan2 formulation keeps precision where acos would lose it
    eps = 1e-8
    u = vec(0.0, 0.0, 1.0)
    v = unit(vec(eps, 0.0, 1.0))
    assert angle_between(u, v) == pytest.approx(eps, rel=1e-6)


def test_angle_between_orthogonal_and_opposite():
    assert angle_between(vec(1, 0, 0), vec(0, 1, 0)) == pytest.approx(math.pi / 2, abs=1e-15)
    assert angle_between(vec(1, 0, 0), vec(-1, 0, 0)) == pytest.approx(math.pi, abs=1e-12)


# ---------------------------------------------------------------------------
# Ray3


def test_ray_normalizes_direction():
    r = Ray3(vec(1, 2, 3), vec(0, 0, 2))
    assert np.allclose(r.direction, [0, 0, 1], atol=1e-15)
    assert np.allclose(r.point_at(2.5), [1, 2, 5.5], atol=1e-15)


def test_ray_rejects_zero_direction():
    with pytest.raises(ContractViolation):
        Ray3(vec(0, 0, 0), vec(0, 0, 0))


# ---------------------------------------------------------------------------
# medium index


def test_medium_index_validation():
    assert check_medium_index(1.0) == 1.0
    assert check_medium_index(1.52) == 1.52
    with pytest.raises(ContractViolation):
        check_medium_index(0.99)


# ---------------------------------------------------------------------------
# refraction


def scalar_snell(theta1, n1, n2):
    """Independent scalar oracle: returns transmission angle or None."""
    s = n1 * math.sin(theta1) / n2
    if s > 1.0:
        return None
    return math.asin(s)


def test_refract_air_to_glass_45deg():
    # 45 degrees from air (1.0) into glass (1.5)
    d = incident_at(math.radians(45.0))
    n = vec(0, 0, 1)
    t = refract(d, n, 1.0, 1.5)
    theta2 = angle_between(t, vec(0, 0, -1))
    assert math.degrees(theta2) == pytest.approx(28.1255, abs=1e-3)
    oracle = scalar_snell(math.radians(45.0), 1.0, 1.5)
    assert theta2 == pytest.approx(oracle, abs=1e-12)


def test_refract_glass_to_air_45deg_is_tir():
    d = incident_at(math.radians(45.0))
    t = refract(d, vec(0, 0, 1), 1.5, 1.0)
    assert t is None


def test_refract_equal_indices_passes_straight():
    d = incident_at(0.3)
    t = refract(d, vec(0, 0, 1), 1.3, 1.3)
    assert np.allclose(t, d, atol=1e-15)


def test_refract_flips_normal_when_given_from_far_side():
    d = incident_at(math.radians(30.0))
    t_near = refract(d, vec(0, 0, 1), 1.0, 1.5)
    t_far = refract(d, vec(0, 0, -1), 1.0, 1.5)
    assert np.allclose(t_near, t_far, atol=1e-15)


def test_refract_rejects_nonunit_inputs():
    d = incident_at(0.4)
    with pytest.raises(ContractViolation):
        refract(d * 1.001, vec(0, 0, 1), 1.0, 1.5)
    with pytest.raises(ContractViolation):
        refract(d, vec(0, 0, 1.001), 1.0, 1.5)


def test_refract_tir_boundary_is_sharp():
    # within 1e-9 rad on either side of the critical angle
    theta_c = math.asin(1.0 / 1.5)
    below = incident_at(theta_c - 1e-9)
    above = incident_at(theta_c + 1e-9)
    assert refract(below, vec(0, 0, 1), 1.5, 1.0) is not None
    assert refract(above, vec(0, 0, 1), 1.5, 1.0) is None


@settings(max_examples=200, deadline=None)
@given(
    theta=st.floats(0.0, math.pi / 2 - 1e-3),
    phi=st.floats(0.0, 2 * math.pi),
    n1=st.floats(1.0, 2.0),
    n2=st.floats(1.0, 2.0),
)
def test_refract_satisfies_snell_and_coplanarity(theta, phi, n1, n2):
    d = vec(
        math.sin(theta) * math.cos(phi),
        math.sin(theta) * math.sin(phi),
        -math.cos(theta),
    )
    n = vec(0, 0, 1)
    t = refract(d, n, n1, n2)
    if t is None:
        assert n1 * math.sin(theta) > n2 * (1 + 1e-12)
        return
    theta2 = angle_between(t, -n)
    # Snell residual
    assert abs(n1 * math.sin(theta) - n2 * math.sin(theta2)) < 1e-12
    # incident, normal, transmitted are coplanar
    assert abs(np.dot(np.cross(d, n), t)) < 1e-12
    # transmitted continues into the far side
    assert np.dot(t, n) <= 0.0


@settings(max_examples=200, deadline=None)
@given(
    theta=st.floats(1e-4, math.pi / 2 - 1e-3),
    n1=st.floats(1.0, 2.0),
    n2=st.floats(1.0, 2.0),
)
def test_refract_round_trip(theta, n1, n2):
    d = incident_at(theta)
    n = vec(0, 0, 1)
    t = refract(d, n, n1, n2)
    if t is None:
        return
    back = refract(-t, n, n2, n1)
    assert back is not None
    assert np.allclose(back, -d, atol=1e-10)


# ---------------------------------------------------------------------------
# reflection


def test_reflect_example():
    d = unit(vec(1, 0, -1))
    r = reflect(d, vec(0, 0, 1))
    assert np.allclose(r, unit(vec(1, 0, 1)), atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(
    theta=st.floats(0.0, math.pi / 2 - 1e-6),
    phi=st.floats(0.0, 2 * math.pi),
)
def test_reflect_preserves_angle_and_is_involutive(theta, phi):
    d = vec(
        math.sin(theta) * math.cos(phi),
        math.sin(theta) * math.sin(phi),
        -math.cos(theta),
    )
    n = vec(0, 0, 1)
    r = reflect(d, n)
    assert abs(np.linalg.norm(r) - 1.0) < 1e-12
    assert angle_between(-d, n) == pytest.approx(angle_between(r, n), abs=1e-12)
    assert np.allclose(reflect(r, n), d, atol=1e-12)


# ---------------------------------------------------------------------------
# critical angle


def test_critical_angle_values():
    glass_air = critical_angle(1.5, 1.0)
    assert math.degrees(glass_air) == pytest.approx(41.81, abs=1e-2)
    assert glass_air == pytest.approx(math.asin(1.0 / 1.5), abs=1e-15)
    water_air = critical_angle(1.33, 1.0)
    assert math.degrees(water_air) == pytest.approx(48.7535, abs=1e-3)


def test_critical_angle_none_when_entering_denser():
    assert critical_angle(1.0, 1.5) is None
    assert critical_angle(1.5, 1.5) is None


# ---------------------------------------------------------------------------
# Rodrigues rotation


def test_rodrigues_example():
    v = vec(1, 1, 0)
    out = rodrigues_rotate(v, vec(0, 0, 1), math.radians(45.0))
    assert np.allclose(out, [0.0, math.sqrt(2.0), 0.0], atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    angle=st.floats(-2 * math.pi, 2 * math.pi),
)
def test_rodrigues_matches_scipy_rotation(seed, angle):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=3)
    axis = unit(rng.normal(size=3))
    ours = rodrigues_rotate(v, axis, angle)
    oracle = Rotation.from_rotvec(angle * axis).apply(v)
    assert np.allclose(ours, oracle, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10_000), angle=st.floats(-6.0, 6.0))
def test_rodrigues_invariants(seed, angle):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=3)
    axis = unit(rng.normal(size=3))
    out = rodrigues_rotate(v, axis, angle)
    # norm preserved
    assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(v), abs=1e-12)
    # component along the axis preserved
    assert np.dot(out, axis) == pytest.approx(np.dot(v, axis), abs=1e-12)
    # inverse rotation restores the input
    back = rodrigues_rotate(out, axis, -angle)
    assert np.allclose(back, v, atol=1e-12)


# ---------------------------------------------------------------------------
# closest points between two lines


def test_closest_points_example():
    lm = Ray3(vec(0, 0, 0), vec(1, 0, 0))
    ln = Ray3(vec(0, 0, 1), vec(0, 1, 0))
    res = closest_points(lm, ln)
    assert not res.parallel
    assert res.gap == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(res.midpoint, [0, 0, 0.5], atol=1e-15)
    assert res.s == pytest.approx(0.0, abs=1e-15)
    assert res.t == pytest.approx(0.0, abs=1e-15)


def brute_force_closest(lm, ln):
    """Oracle: coarse grid search followed by local refinement."""

    def dist2(params):
        s, t = params
        d = lm.point_at(s) - ln.point_at(t)
        return float(np.dot(d, d))

    grid = np.linspace(-30, 30, 121)
    best = min(((dist2((s, t)), s, t) for s in grid for t in grid))
    res = minimize(dist2, [best[1], best[2]], method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": 4000})
    return res.x


def test_closest_points_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(25):
        lm = Ray3(rng.normal(scale=5, size=3), unit(rng.normal(size=3)))
        ln = Ray3(rng.normal(scale=5, size=3), unit(rng.normal(size=3)))
        if abs(np.dot(lm.direction, ln.direction)) > 0.99:
            continue
        res = closest_points(lm, ln)
        s_ref, t_ref = brute_force_closest(lm, ln)
        assert res.s == pytest.approx(s_ref, abs=1e-6)
        assert res.t == pytest.approx(t_ref, abs=1e-6)
        gap_ref = np.linalg.norm(lm.point_at(s_ref) - ln.point_at(t_ref))
        assert res.gap == pytest.approx(gap_ref, abs=1e-8)


def test_closest_points_gap_consistency():
    rng = np.random.default_rng(3)
    for _ in range(50):
        lm = Ray3(rng.normal(size=3), unit(rng.normal(size=3)))
        ln = Ray3(rng.normal(size=3), unit(rng.normal(size=3)))
        res = closest_points(lm, ln)
        if res.parallel:
            continue
        gap = np.linalg.norm(lm.point_at(res.s) - ln.point_at(res.t))
        assert res.gap == pytest.approx(gap, abs=1e-12)
        # perpendicularity of the connecting segment (first-order optimality)
        seg = lm.point_at(res.s) - ln.point_at(res.t)
        assert abs(np.dot(seg, lm.direction)) < 1e-9
        assert abs(np.dot(seg, ln.direction)) < 1e-9


def test_closest_points_symmetry():
    rng = np.random.default_rng(11)
    for _ in range(25):
        lm = Ray3(rng.normal(size=3), unit(rng.normal(size=3)))
        ln = Ray3(rng.normal(size=3), unit(rng.normal(size=3)))
        a = closest_points(lm, ln)
        b = closest_points(ln, lm)
        assert a.parallel == b.parallel
        if a.parallel:
            continue
        assert a.s == pytest.approx(b.t, abs=1e-12)
        assert a.t == pytest.approx(b.s, abs=1e-12)
        assert a.gap == pytest.approx(b.gap, abs=1e-12)
        assert np.allclose(a.midpoint, b.midpoint, atol=1e-12)


def test_closest_points_parallel_flag():
    lm = Ray3(vec(0, 0, 0), vec(1, 0, 0))
    ln = Ray3(vec(0, 1, 0), vec(1, 0, 0))
    res = closest_points(lm, ln)
    assert res.parallel
    assert res.s is None and res.t is None and res.midpoint is None
    # gap still reports the line-to-line distance
    assert res.gap == pytest.approx(1.0, abs=1e-12)


def test_closest_points_nearly_parallel_threshold():
    d1 = vec(0, 0, 1)
    d2 = unit(vec(1e-10, 0, 1))  # within the parallel guard band
    res = closest_points(Ray3(vec(0, 0, 0), d1), Ray3(vec(1, 0, 0), d2))
    assert res.parallel
    d3 = unit(vec(1e-3, 0, 1))
    res2 = closest_points(Ray3(vec(0, 0, 0), d1), Ray3(vec(1, 0, 0), d3))
    assert not res2.parallel
