"""Curvature engine on finite algebras: connection, curvature forms, Ricci.

Oracles:
  * bi-invariant closed forms (nabla = ad/2, R = -ad_{[x,y]}/4, kappa traces),
  * the three-inner-product Koszul identity solved on every basis vector,
  * the defining bilinear relation for ad^*,
  * curvature pair symmetry and brute-force orthonormal-basis Ricci sums.
"""

import numpy as np
import pytest

from curvlab import liealg
from curvlab.engine import (DenseMetric, FiniteBackend, InternalConsistencyError,
                            MetrizedAlgebra, metrized_from_lie_algebra)

SEED = 20240917
N_QUADRUPLES = 100


def biinvariant_su2():
    return metrized_from_lie_algebra(liealg.su2())


def diag_metric_su2():
    return metrized_from_lie_algebra(liealg.su2(), metric_gram=np.diag([1.0, 2.0, 3.0]))


def test_ad_star_biinvariant_is_minus_ad():
    geo = biinvariant_su2()
    rng = np.random.default_rng(SEED)
    for _ in range(10):
        x = rng.standard_normal(3)
        np.testing.assert_allclose(geo.ad_star(x), -geo.ad(x), atol=1e-12)


def test_ad_star_defining_relation():
    # Oracle: solve <A y, z> = <y, [x, z]> on all basis pairs.
    geo = diag_metric_su2()
    rng = np.random.default_rng(SEED + 1)
    gram = geo.metric.dense_gram()
    eye = np.eye(3)
    for _ in range(5):
        x = rng.standard_normal(3)
        a = geo.ad_star(x)
        for i in range(3):
            for j in range(3):
                lhs = (a @ eye[i]) @ gram @ eye[j]
                rhs = eye[i] @ gram @ geo.bracket(x, eye[j])
                assert abs(lhs - rhs) < 1e-12


def test_ad_star_apply_matches_matrix():
    geo = diag_metric_su2()
    rng = np.random.default_rng(SEED + 2)
    x, v = rng.standard_normal((2, 3))
    np.testing.assert_allclose(geo.ad_star_apply(x, v), geo.ad_star(x) @ v, atol=1e-13)
    np.testing.assert_allclose(geo.ad_star_arg_apply(v, x), geo.ad_star(x) @ v, atol=1e-13)


def test_levi_civita_biinvariant_is_half_bracket():
    geo = biinvariant_su2()
    rng = np.random.default_rng(SEED + 3)
    for _ in range(10):
        x, y = rng.standard_normal((2, 3))
        np.testing.assert_allclose(geo.levi_civita(x, y), 0.5 * geo.bracket(x, y),
                                   atol=1e-12)
        np.testing.assert_allclose(geo.levi_civita(x, x), 0.0, atol=1e-12)


def test_levi_civita_koszul_oracle():
    # <nabla_x y, z> = 1/2 (<[x,y],z> - <[x,z],y> - <[y,z],x>) on every basis z.
    geo = diag_metric_su2()
    rng = np.random.default_rng(SEED + 4)
    gram = geo.metric.dense_gram()
    eye = np.eye(3)
    for _ in range(10):
        x, y = rng.standard_normal((2, 3))
        lhs = gram @ geo.levi_civita(x, y)
        for j in range(3):
            z = eye[j]
            rhs = 0.5 * (geo.bracket(x, y) @ gram @ z
                         - geo.bracket(x, z) @ gram @ y
                         - geo.bracket(y, z) @ gram @ x)
            assert abs(lhs[j] - rhs) < 1e-12


def test_nabla_operator_matches_vector_form():
    geo = diag_metric_su2()
    rng = np.random.default_rng(SEED + 5)
    x, y = rng.standard_normal((2, 3))
    np.testing.assert_allclose(geo.nabla_operator(x) @ y, geo.levi_civita(x, y),
                               atol=1e-13)
    np.testing.assert_allclose(geo.covariant_slot_operator(y) @ x,
                               geo.levi_civita(x, y), atol=1e-13)


def test_metric_compatibility_and_torsion():
    for geo in (biinvariant_su2(), diag_metric_su2(),
                metrized_from_lie_algebra(liealg.su3())):
        eye = np.eye(geo.dim)
        for i in range(geo.dim):
            for j in range(geo.dim):
                for k in range(geo.dim):
                    x, y, z = eye[i], eye[j], eye[k]
                    compat = (geo.metric.inner(geo.levi_civita(x, y), z)
                              + geo.metric.inner(y, geo.levi_civita(x, z)))
                    assert abs(compat) < 1e-10
                torsion = (geo.levi_civita(eye[i], eye[j])
                           - geo.levi_civita(eye[j], eye[i]) - geo.bracket(eye[i], eye[j]))
                assert np.max(np.abs(torsion)) < 1e-10


def test_curvature_biinvariant_closed_form():
    for alg in (liealg.su2(), liealg.su3()):
        geo = metrized_from_lie_algebra(alg)
        rng = np.random.default_rng(SEED + 6)
        for _ in range(10):
            x, y, z = rng.standard_normal((3, geo.dim))
            expected = -0.25 * geo.bracket(geo.bracket(x, y), z)
            np.testing.assert_allclose(geo.curvature(x, y, z), expected, atol=1e-12)
            np.testing.assert_allclose(geo.curvature(x, x, z), 0.0, atol=1e-12)


def test_curvature_three_forms_agree():
    rng = np.random.default_rng(SEED)
    for geo in (biinvariant_su2(), diag_metric_su2(),
                metrized_from_lie_algebra(liealg.su3(), metric_gram=np.diag(
                    [1.0, 1.5, 2.0, 0.7, 1.2, 2.5, 0.9, 1.1]))):
        for _ in range(N_QUADRUPLES):
            x, y, z = rng.standard_normal((3, geo.dim))
            direct = geo.curvature_direct(x, y, z)
            expanded = geo.curvature_term_expansion(x, y, z)
            grouped = geo.curvature_commutator_grouping(x, y, z)
            scale = max(1.0, np.max(np.abs(direct)))
            assert np.max(np.abs(direct - expanded)) < 1e-10 * scale
            assert np.max(np.abs(direct - grouped)) < 1e-10 * scale


def test_curvature_symmetries_random_quadruples():
    geo = diag_metric_su2()
    rng = np.random.default_rng(SEED)
    inner = geo.metric.inner
    for _ in range(N_QUADRUPLES):
        x, y, z, w = rng.standard_normal((4, 3))
        r_xyz = geo.curvature_direct(x, y, z)
        np.testing.assert_allclose(geo.curvature_direct(y, x, z), -r_xyz, atol=1e-10)
        lhs = inner(r_xyz, w)
        assert abs(lhs + inner(geo.curvature_direct(x, y, w), z)) < 1e-10
        assert abs(lhs - inner(geo.curvature_direct(z, w, x), y)) < 1e-10
        bianchi = (r_xyz + geo.curvature_direct(y, z, x) + geo.curvature_direct(z, x, y))
        np.testing.assert_allclose(bianchi, 0.0, atol=1e-10)


def test_curvature_operator_matches_pointwise():
    geo = diag_metric_su2()
    rng = np.random.default_rng(SEED + 8)
    x, y, z = rng.standard_normal((3, 3))
    np.testing.assert_allclose(geo.curvature_operator(x, y) @ z,
                               geo.curvature_direct(x, y, z), atol=1e-12)


def test_first_slot_operator_columns():
    geo = diag_metric_su2()
    rng = np.random.default_rng(SEED + 9)
    y, z = rng.standard_normal((2, 3))
    t = geo.first_slot_operator(y, z)
    eye = np.eye(3)
    for j in range(3):
        np.testing.assert_allclose(t[:, j], geo.curvature_direct(eye[j], y, z),
                                   atol=1e-12)


def test_sectional_biinvariant():
    geo = biinvariant_su2()
    e = np.eye(3)
    # |e3|^2 = -kappa(e3, e3) = 2, so the plane (e1, e2) has curvature 1/2.
    assert abs(geo.sectional(e[0], e[1]) - 0.5) < 1e-12
    assert abs(geo.sectional(e[0], e[0])) < 1e-12
    rng = np.random.default_rng(SEED + 10)
    for _ in range(20):
        x, y = rng.standard_normal((2, 3))
        assert geo.sectional(x, y) >= -1e-12


def test_ricci_biinvariant_is_quarter_of_minus_killing():
    for alg in (liealg.su2(), liealg.su3()):
        geo = metrized_from_lie_algebra(alg)
        eye = np.eye(alg.dim)
        for i in range(alg.dim):
            for j in range(alg.dim):
                expected = -0.25 * alg.killing_form(eye[i], eye[j])
                assert abs(geo.ricci_full(eye[i], eye[j]) - expected) < 1e-11
    # su(2): Ric(e1,e1) = -kappa(e1,e1)/4 = 0.5
    geo = biinvariant_su2()
    assert abs(geo.ricci_full(np.eye(3)[0], np.eye(3)[0]) - 0.5) < 1e-12


def test_ricci_operator_equals_brute_force_sum():
    geo = diag_metric_su2()
    rng = np.random.default_rng(SEED + 11)
    for _ in range(5):
        y, z = rng.standard_normal((2, 3))
        fast = geo.ricci_full(y, z, method="operator")
        brute = geo.ricci_full(y, z, method="sum")
        assert abs(fast - brute) < 1e-10


def test_ricci_symmetric_and_abelian_zero():
    geo = diag_metric_su2()
    rng = np.random.default_rng(SEED + 12)
    for _ in range(10):
        y, z = rng.standard_normal((2, 3))
        assert abs(geo.ricci_full(y, z) - geo.ricci_full(z, y)) < 1e-10
    flat = metrized_from_lie_algebra(liealg.abelian(4))
    for _ in range(5):
        y, z = rng.standard_normal((2, 4))
        assert abs(flat.ricci_full(y, z)) < 1e-13


def test_ricci_bilinear_matrix():
    for geo in (biinvariant_su2(), diag_metric_su2()):
        ric = geo.ricci_bilinear_matrix()
        eye = np.eye(3)
        for i in range(3):
            for j in range(3):
                assert abs(ric[i, j] - geo.ricci_full(eye[i], eye[j])) < 1e-10


def test_singular_metric_rejected_at_construction():
    with pytest.raises(ValueError):
        DenseMetric(np.diag([1.0, 0.0, 2.0]))
    with pytest.raises(ValueError):
        DenseMetric(np.diag([1.0, -1.0, 2.0]))


def test_inconsistent_backend_caught():
    # A deliberately wrong "bracket" (violates Jacobi) must be rejected:
    # [e1,e2] = e3 and [e1,e3] = e1 leave [[e3,e1],e2] = -e3 uncancelled.
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    c[1, 0, 2] = -1.0
    c[0, 2, 0] = 1.0
    c[2, 0, 0] = -1.0
    with pytest.raises(ValueError):
        MetrizedAlgebra(FiniteBackend(c), DenseMetric(np.eye(3)))


def test_internal_consistency_error_type():
    assert issubclass(InternalConsistencyError, RuntimeError)
