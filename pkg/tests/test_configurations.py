"""Configuration products: Green's-matrix metrics, exact curvature, scans."""

import math

import numpy as np
import pytest

from curvlab import liealg
from curvlab.configurations import (IllConditionedError, build_configuration,
                                    lattice_points, load_point_file,
                                    ricci_lower_bound_scan)

SEED = 20240917


def test_single_point_metric_and_ricci():
    conf = build_configuration("circle", [[0.0]], 1.0, 1.0)
    gram = conf.geometry.metric.dense_gram()
    np.testing.assert_allclose(
        gram, conf.algebra.inner_gram / conf.greens_matrix[0, 0], atol=1e-12)
    # scaled bi-invariant geometry: Ricci form equals -kappa/4 independent of scale
    eye = np.eye(3)
    for i in range(3):
        for j in range(3):
            expected = -0.25 * conf.algebra.killing_form(eye[i], eye[j])
            y = conf.site_vector(0, eye[i])
            z = conf.site_vector(0, eye[j])
            assert abs(conf.ricci(y, z) - expected) < 1e-10


def test_antipodal_pair_closed_form():
    conf = build_configuration("circle", [[0.0], [math.pi]], 1.0, 1.0)
    g_diag = math.cosh(math.pi) / (2.0 * math.sinh(math.pi))
    g_off = 1.0 / (2.0 * math.sinh(math.pi))
    assert abs(conf.greens_matrix[0, 0] - g_diag) < 1e-8
    assert abs(conf.greens_matrix[1, 1] - g_diag) < 1e-8
    assert abs(conf.greens_matrix[0, 1] - g_off) < 1e-8


def test_metric_green_roundtrip():
    conf = build_configuration("circle", [[0.0], [1.1], [2.9]], 1.5, 0.8)
    gram = conf.geometry.metric.dense_gram()
    # invert the metric and contract away the Lie factor to recover G
    inv = np.linalg.inv(gram)
    d = conf.algebra.dim
    lie_inv = np.linalg.inv(conf.algebra.inner_gram)
    recovered = np.empty_like(conf.greens_matrix)
    for v in range(3):
        for w in range(3):
            block = inv[v * d:(v + 1) * d, w * d:(w + 1) * d]
            recovered[v, w] = np.trace(block @ np.linalg.inv(lie_inv)) / d
    np.testing.assert_allclose(recovered, conf.greens_matrix, atol=1e-10)


def test_permutation_equivariance():
    pts = [[0.2], [1.5], [4.0]]
    conf = build_configuration("circle", pts, 1.0, 1.0)
    perm = [2, 0, 1]
    conf_p = build_configuration("circle", [pts[i] for i in perm], 1.0, 1.0)
    d = conf.algebra.dim
    n = len(pts)
    p_mat = np.zeros((n * d, n * d))
    for new, old in enumerate(perm):
        p_mat[new * d:(new + 1) * d, old * d:(old + 1) * d] = np.eye(d)
    gram = conf.geometry.metric.dense_gram()
    gram_p = conf_p.geometry.metric.dense_gram()
    np.testing.assert_allclose(gram_p, p_mat @ gram @ p_mat.T, atol=1e-10)
    ric = conf.ricci_matrix()
    ric_p = conf_p.ricci_matrix()
    np.testing.assert_allclose(ric_p, p_mat @ ric @ p_mat.T, atol=1e-9)


def test_curvature_symmetry_suite_exact():
    conf = build_configuration("circle", [[0.0], [2.0]], 1.0, 0.7)
    geo = conf.geometry
    rng = np.random.default_rng(SEED)
    inner = geo.metric.inner
    for _ in range(25):
        x, y, z, w = rng.standard_normal((4, conf.dim))
        r = geo.curvature_direct(x, y, z)
        np.testing.assert_allclose(geo.curvature_direct(y, x, z), -r, atol=1e-10)
        assert abs(inner(r, w) + inner(geo.curvature_direct(x, y, w), z)) < 1e-10
        assert abs(inner(r, w) - inner(geo.curvature_direct(z, w, x), y)) < 1e-10
        bianchi = r + geo.curvature_direct(y, z, x) + geo.curvature_direct(z, x, y)
        np.testing.assert_allclose(bianchi, 0.0, atol=1e-10)
        expanded = geo.curvature_term_expansion(x, y, z)
        np.testing.assert_allclose(expanded, r, atol=1e-10)


def test_well_separated_large_mass_decouples():
    # off-diagonal Green entries decay with the mass; each site approaches
    # its own bi-invariant copy
    eye = np.eye(3)
    for m0 in (5.0, 10.0, 20.0):
        conf = build_configuration("circle", [[0.0], [math.pi]], 1.0, m0)
        off = abs(conf.greens_matrix[0, 1]) / conf.greens_matrix[0, 0]
        assert off < math.exp(-0.9 * m0)
        y = conf.site_vector(0, eye[0])
        assert abs(conf.ricci(y, y) - 0.5) < 10 * off


def test_relative_ricci_eigenvalues_single_point():
    conf = build_configuration("circle", [[0.3]], 1.0, 1.0)
    eigs = conf.relative_ricci_eigenvalues()
    expected = 0.25 * conf.greens_matrix[0, 0]
    np.testing.assert_allclose(eigs, expected, atol=1e-10)


def test_abelian_configuration_flat():
    conf = build_configuration("circle", [[0.0], [1.0]], 1.0, 1.0,
                               algebra=liealg.abelian(2))
    np.testing.assert_allclose(conf.ricci_matrix(), 0.0, atol=1e-13)


def test_validation_errors():
    with pytest.raises(ValueError):
        build_configuration("circle", [[0.0], [0.0]], 1.0, 1.0)  # coincident
    with pytest.raises(ValueError):
        build_configuration("circle", [[0.0], [2 * math.pi]], 1.0, 1.0)  # wrapped
    with pytest.raises(ValueError):
        build_configuration("circle", [[0.0]], 0.5, 1.0)  # 2s <= dim
    with pytest.raises(ValueError):
        build_configuration("torus", [[0.0, 0.0]], 1.0, 1.0)  # 2s <= dim
    with pytest.raises(ValueError):
        build_configuration("circle", [[0.0]], 1.0, 0.0)  # zero mass
    with pytest.raises(IllConditionedError):
        build_configuration("circle", [[0.0], [1e-6]], 2.0, 1.0)


def test_lattice_and_point_file(tmp_path):
    pts = lattice_points("circle", 4, 0.5)
    np.testing.assert_allclose(pts.ravel(), [0.0, 0.5, 1.0, 1.5])
    pts2 = lattice_points("torus", 5, 1.0)
    assert pts2.shape == (5, 2)
    path = tmp_path / "points.txt"
    path.write_text("# sample\n0.0\n1.25\n2.5\n")
    loaded = load_point_file(path)
    np.testing.assert_allclose(loaded.ravel(), [0.0, 1.25, 2.5])


def test_scan_report_shape_and_flags():
    rows = ricci_lower_bound_scan("circle", [1, 2], [0.5, 1e-8], [1.0], [1.0])
    assert len(rows) == 4
    for row in rows:
        assert set(row) == {"domain", "n_points", "spacing", "s", "m0",
                            "min_rel_ricci", "max_rel_ricci",
                            "condition_number", "flag"}
    flagged = [r for r in rows if r["flag"]]
    assert any(r["n_points"] == 2 and r["spacing"] == 1e-8 for r in flagged)
    clean = [r for r in rows if not r["flag"]]
    assert all(np.isfinite(r["min_rel_ricci"]) for r in clean)


def test_scan_spacing_trend_reported():
    # exploratory: finer spacing lowers the minimum relative eigenvalue
    rows = ricci_lower_bound_scan("circle", [4], [0.2, 0.4, 0.8], [1.0], [1.0])
    vals = [r["min_rel_ricci"] for r in sorted(rows, key=lambda r: r["spacing"])]
    assert all(np.isfinite(v) for v in vals)
