"""Oracle tests for error metrics, robust fitting, and sweep experiments.

Fitting oracles are constructed point sets with known primitives; metric
oracles are hand-derived distances.  Sweeps are smoke-tested at small
resolution here; full-scale trend assertions live in the acceptance tests.
"""

import io
import math

import numpy as np
import pytest

from lightpath.evaluate import (
    CylinderReference,
    EllipsoidReference,
    ErrorSummary,
    FitError,
    ImplicitReference,
    PlaneReference,
    PointCloudReference,
    SphereReference,
    normal_errors,
    position_errors,
    ransac_fit,
    run_sweep,
    sweep_to_csv,
)
from lightpath.geometry import ContractViolation, unit
from lightpath.solids import Sphere

DEG = math.pi / 180.0


def _sphere_cloud(center, radius, n, seed=0, noise=0.0, hemisphere=True):
    rng = np.random.default_rng(seed)
    z = rng.uniform(0.0 if hemisphere else -1.0, 1.0, n)
    phi = rng.uniform(0.0, 2 * math.pi, n)
    s = np.sqrt(1.0 - z ** 2)
    pts = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    r = radius + rng.normal(0.0, noise, n)[:, None]
    return np.asarray(center) + pts * r


# ---------------------------------------------------------------------------
# references and metrics


def test_points_on_sphere_zero_distance():
    pts = _sphere_cloud((0, 0, 0), 1.0, 200)
    d, summary = position_errors(pts, SphereReference((0, 0, 0), 1.0))
    assert np.allclose(d, 0.0, atol=1e-12)
    assert summary.pos_rms < 1e-12
    assert summary.pos_mean < 1e-12


def test_sphere_distance_value():
    d, _ = position_errors(np.array([[0.0, 0.0, 1.4]]),
                           SphereReference((0, 0, 0), 1.0))
    assert abs(d[0] - 0.4) < 1e-12


def test_plane_distance_value():
    ref = PlaneReference(normal=(0, 0, 1), offset=2.0)
    d, _ = position_errors(np.array([[5.0, 3.0, 2.75], [0.0, 0.0, 1.0]]), ref)
    np.testing.assert_allclose(d, [0.75, 1.0], atol=1e-12)


def test_cylinder_distance_value():
    ref = CylinderReference(axis_point=(1.0, 0.0, 0.0),
                            axis_dir=(0.0, 0.0, 1.0), radius=2.0)
    d, _ = position_errors(np.array([[4.0, 0.0, 7.0], [1.0, 2.0, -3.0]]), ref)
    np.testing.assert_allclose(d, [1.0, 0.0], atol=1e-12)


def test_implicit_first_order_distance():
    # unit sphere as implicit solid: point at r=1.1 has f=0.21, |grad|=2.2
    ref = ImplicitReference(Sphere(center=np.zeros(3), radius=1.0, index=1.5))
    d, _ = position_errors(np.array([[1.1, 0.0, 0.0]]), ref)
    assert abs(d[0] - 0.21 / 2.2) < 1e-12


def test_ellipsoid_reference_matches_implicit():
    from lightpath.solids import Ellipsoid
    axes = (12.5, 12.5, 5.0)
    solid = Ellipsoid(center=np.zeros(3), semi_axes=np.array(axes), index=1.5)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, (50, 3)) * np.array([10, 10, 4]) \
        + np.array([0, 0, 1.0])
    fast = EllipsoidReference((0, 0, 0), axes)
    d1, _ = position_errors(pts, fast)
    d2, _ = position_errors(pts, ImplicitReference(solid))
    np.testing.assert_allclose(d1, d2, atol=1e-9)
    n1 = fast.normals_at(pts)
    for k in range(0, 50, 7):
        n2 = unit(np.asarray(solid.gradient(pts[k])))
        np.testing.assert_allclose(n1[k], n2, atol=1e-9)


def test_cloud_against_itself_identically_zero():
    pts = np.random.default_rng(1).normal(size=(100, 3))
    d, summary = position_errors(pts, PointCloudReference(pts))
    assert np.all(d == 0.0)
    assert summary.pos_rms == 0.0


def test_normal_errors_exact_zero():
    pts = _sphere_cloud((0, 0, 0), 2.0, 50, seed=5)
    normals = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    ang, summary = normal_errors(pts, normals, SphereReference((0, 0, 0), 2.0))
    assert np.allclose(ang, 0.0, atol=1e-9)
    assert summary.normal_rms_deg < 1e-9


def test_normal_errors_known_tilt():
    ref = PlaneReference(normal=(0, 0, 1), offset=0.0)
    tilted = np.array([[math.sin(5 * DEG), 0.0, math.cos(5 * DEG)]])
    ang, summary = normal_errors(np.array([[0.0, 0.0, 0.0]]), tilted, ref)
    assert abs(ang[0] - 5.0) < 1e-9
    assert abs(summary.normal_rms_deg - 5.0) < 1e-9


def test_error_summary_invariant():
    with pytest.raises(ContractViolation):
        ErrorSummary(experiment="x", sigma=0.0, trials=1,
                     pos_mean=2.0, pos_median=1.0, pos_rms=1.0)
    with pytest.raises(ContractViolation):
        ErrorSummary(experiment="x", sigma=0.0, trials=1,
                     pos_mean=float("nan"), pos_median=1.0, pos_rms=3.0)


# ---------------------------------------------------------------------------
# RANSAC


def test_ransac_sphere_noise_free_exact():
    pts = _sphere_cloud((1.0, -2.0, 3.0), 7.5, 400, seed=2)
    fit = ransac_fit(pts, "sphere", inlier_threshold=0.1, seed=11)
    assert abs(fit.params["radius"] - 7.5) / 7.5 < 1e-6
    np.testing.assert_allclose(fit.params["center"], [1.0, -2.0, 3.0],
                               atol=1e-5)
    assert fit.inliers.all()


def test_ransac_plane_rejects_outliers():
    rng = np.random.default_rng(4)
    n_in, n_out = 140, 60
    x = rng.uniform(-5, 5, (n_in, 2))
    inliers = np.stack([x[:, 0], x[:, 1],
                        0.25 * x[:, 0] - 0.1 * x[:, 1] + 2.0], axis=1)
    outliers = inliers[:n_out] + np.stack(
        [np.zeros(n_out), np.zeros(n_out),
         rng.uniform(1.0, 6.0, n_out) * rng.choice([-1, 1], n_out)], axis=1)
    pts = np.concatenate([inliers, outliers])
    fit = ransac_fit(pts, "plane", inlier_threshold=0.5, seed=7)
    assert fit.inliers[:n_in].all()
    assert not fit.inliers[n_in:].any()
    true_n = unit(np.array([-0.25, 0.1, 1.0]))
    assert abs(abs(float(fit.params["normal"] @ true_n)) - 1.0) < 1e-9


def test_ransac_cylinder_recovery():
    rng = np.random.default_rng(9)
    radius = 15.32
    n = 500
    theta = rng.uniform(-0.9, 0.9, n)          # half-shell arc
    z = rng.uniform(0.0, 30.0, n)
    pts = np.stack([radius * np.cos(theta), radius * np.sin(theta), z],
                   axis=1)
    pts += rng.normal(0.0, 0.2, pts.shape)
    fit = ransac_fit(pts, "cylinder", inlier_threshold=0.5, seed=3,
                     iterations=800)
    assert abs(fit.params["radius"] - radius) < 0.5
    assert fit.inlier_fraction >= 0.4
    # axis must align with z
    assert abs(abs(float(fit.params["axis_dir"] @ np.array([0, 0, 1.0])))
               - 1.0) < 1e-3


def test_ransac_infinite_threshold_is_least_squares():
    rng = np.random.default_rng(6)
    x = rng.uniform(-3, 3, (80, 2))
    pts = np.stack([x[:, 0], x[:, 1],
                    0.5 * x[:, 0] + 0.2 * x[:, 1] + 1.0], axis=1)
    pts[:, 2] += rng.normal(0, 0.05, 80)
    fit = ransac_fit(pts, "plane", inlier_threshold=math.inf, seed=1)
    assert fit.inliers.all()
    # reference least squares: smallest singular vector of centered cloud
    centered = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    ref_n = vt[-1]
    assert abs(abs(float(fit.params["normal"] @ ref_n)) - 1.0) < 1e-9


def test_ransac_deterministic():
    pts = _sphere_cloud((0, 0, 0), 3.0, 150, seed=8, noise=0.05)
    a = ransac_fit(pts, "sphere", inlier_threshold=0.2, seed=42)
    b = ransac_fit(pts, "sphere", inlier_threshold=0.2, seed=42)
    assert np.array_equal(a.inliers, b.inliers)
    np.testing.assert_array_equal(a.params["center"], b.params["center"])
    assert a.params["radius"] == b.params["radius"]


def test_ransac_insufficient_points():
    pts = np.zeros((3, 3))
    with pytest.raises(FitError):
        ransac_fit(pts, "sphere", inlier_threshold=0.1, seed=0)
    with pytest.raises(FitError):
        ransac_fit(np.zeros((2, 3)), "plane", inlier_threshold=0.1, seed=0)
    with pytest.raises(FitError):
        ransac_fit(pts, "torus", inlier_threshold=0.1, seed=0)


def test_ransac_degenerate_collinear_plane():
    t = np.linspace(0, 1, 12)
    pts = np.stack([t, 2 * t, 3 * t], axis=1)     # a line, not a plane
    with pytest.raises(FitError):
        ransac_fit(pts, "plane", inlier_threshold=0.1, seed=0, iterations=32)


# ---------------------------------------------------------------------------
# sweeps (small-scale smoke; full trends in acceptance tests)


def test_separation_sweep_smoke():
    rows = run_sweep("separation", trials=3, seed=5, resolution=24,
                     sigmas=(0.0, 0.3))
    assert len(rows) == 8                        # 4 separations x 2 sigmas
    by_sep = {}
    for r in rows:
        assert r.experiment == "separation"
        assert np.isfinite(r.pos_rms) and np.isfinite(r.normal_rms_deg)
        by_sep.setdefault(r.sigma, {})[r.separation] = r
    # noise-free column is at solver tolerance
    for r in by_sep[0.0].values():
        assert r.pos_rms < 1e-6
        assert r.normal_rms_deg < 1e-4
    # larger separation helps at fixed noise (median statistics at this
    # tiny smoke resolution; RMS trends are asserted at full scale)
    seps = sorted(by_sep[0.3])
    pos = [by_sep[0.3][s].pos_median for s in seps]
    ang = [by_sep[0.3][s].normal_median_deg for s in seps]
    assert all(pos[i + 1] <= pos[i] for i in range(len(pos) - 1))
    assert all(ang[i + 1] <= ang[i] for i in range(len(ang) - 1))
    assert pos[-1] < pos[0]
    for r in by_sep[0.3].values():
        assert np.isfinite(r.pos_rms) and r.pos_rms > 0


def test_medium_sweep_smoke():
    rows = run_sweep("medium", trials=2, seed=9, resolution=24,
                     sigmas=(0.25,))
    assert len(rows) == 3
    media = sorted(r.medium_index for r in rows)
    assert media == [1.3, 1.5, 1.7]
    for r in rows:
        assert r.separation is None
        assert np.isfinite(r.pos_rms) and r.pos_rms > 0


def test_thickness_sweep_smoke():
    rows = run_sweep("thickness", trials=2, seed=3, resolution=24,
                     sigmas=(0.2,))
    assert len(rows) == 4
    hs = sorted(r.thickness for r in rows)
    assert hs == [0.0, 0.5, 1.0, 2.0]
    for r in rows:
        assert np.isfinite(r.normal_rms_deg) and r.normal_rms_deg > 0


def test_shell_sweep_smoke():
    rows = run_sweep("shell", trials=2, seed=3, resolution=20,
                     sigmas=(0.2,))
    assert len(rows) == 5
    ss = sorted(r.shell_offset for r in rows)
    assert ss == [1.0, 2.0, 3.0, 4.0, 5.0]
    for r in rows:
        assert np.isfinite(r.pos_rms)
        assert np.isfinite(r.normal_rms_deg)


def test_unknown_experiment_rejected():
    with pytest.raises(ValueError):
        run_sweep("bogus", trials=1, seed=0, resolution=16, sigmas=(0.1,))


def test_sweep_csv_deterministic():
    rows = run_sweep("separation", trials=2, seed=1, resolution=16,
                     sigmas=(0.2,))
    buf1, buf2 = io.StringIO(), io.StringIO()
    sweep_to_csv(rows, buf1)
    rows2 = run_sweep("separation", trials=2, seed=1, resolution=16,
                      sigmas=(0.2,))
    sweep_to_csv(rows2, buf2)
    assert buf1.getvalue() == buf2.getvalue()
    header = buf1.getvalue().splitlines()[0]
    for col in ("experiment", "sigma", "separation", "medium_index",
                "thickness", "shell_offset", "trials", "pos_rms",
                "normal_rms_deg"):
        assert col in header
