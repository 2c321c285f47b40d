"""Two-step Ricci traces: scalarization routes, grouped partial traces,
extrapolation classifier, and the interleaved-summation demonstration."""

import numpy as np
import pytest

from curvlab import liealg
from curvlab.engine import InternalConsistencyError
from curvlab.mapping import TruncatedGroupModel
from curvlab.regularize import (classify_partial_traces, einstein_ratio,
                                factored_scalar_block, first_slot_block,
                                interleaved_trace_probe, lie_partial_trace,
                                ricci_cutoff, scalarize, traced_form_block)

SEED = 20240917


def model_su2(cutoff=8, s=1.0, m0=1.0):
    return TruncatedGroupModel("circle", liealg.su2(), cutoff, s, m0)


def test_scalarize_routes_agree():
    model = model_su2(cutoff=8)
    rng = np.random.default_rng(SEED)
    mask = model.mode_mask(model.cutoff)
    for _ in range(3):
        y = rng.standard_normal(model.dim) * mask
        z = rng.standard_normal(model.dim) * mask
        scal = scalarize(model, y, z)
        assert scal.route_deviation < 1e-9


def test_scalarize_factored_reduction():
    # For y = Y (x) b, z = Z (x) c the traced operator is -kappa(b,c)/4 times
    # a Lie-independent scalar operator.
    model = model_su2(cutoff=8)
    rng = np.random.default_rng(SEED + 1)
    fmask = model.basis.indices_within(model.cutoff)
    y_fun = rng.standard_normal(model.basis.n_modes) * fmask
    z_fun = rng.standard_normal(model.basis.n_modes) * fmask
    scalar_block = factored_scalar_block(model, y_fun, z_fun)
    for b, c in [((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
                 ((0.3, -0.4, 1.0), (0.8, 0.2, -0.5))]:
        b = np.asarray(b)
        c = np.asarray(c)
        scal = scalarize(model, model.factored_vector(y_fun, b),
                         model.factored_vector(z_fun, c))
        kappa = model.algebra.killing_form(b, c)
        np.testing.assert_allclose(scal.matrix, -0.25 * kappa * scalar_block,
                                   atol=1e-9)


def test_scalarize_kappa_ratio_independent_of_directions():
    model = model_su2(cutoff=8)
    rng = np.random.default_rng(SEED + 2)
    fmask = model.basis.indices_within(model.cutoff)
    y_fun = rng.standard_normal(model.basis.n_modes) * fmask
    z_fun = rng.standard_normal(model.basis.n_modes) * fmask
    ratios = []
    for b, c in [((1, 0, 0), (1, 0, 0)), ((0, 1, 0), (0, 1, 0)),
                 ((1, 1, 0), (0, 1, 1))]:
        b = np.asarray(b, dtype=float)
        c = np.asarray(c, dtype=float)
        kappa = model.algebra.killing_form(b, c)
        est = ricci_cutoff(model, model.factored_vector(y_fun, b),
                           model.factored_vector(z_fun, c), [2, 4, 8])
        ratios.append(est.partial_traces / kappa)
    for other in ratios[1:]:
        np.testing.assert_allclose(other, ratios[0], atol=1e-9)


def test_scalarize_abelian_zero():
    model = TruncatedGroupModel("circle", liealg.abelian(2), 4, 1.0, 1.0)
    y = model.vector([1], "cos", [1.0, 0.0])
    scal = scalarize(model, y, y)
    np.testing.assert_allclose(scal.matrix, 0.0, atol=1e-14)
    est = ricci_cutoff(model, y, y, [1, 2, 4])
    np.testing.assert_allclose(est.partial_traces, 0.0, atol=1e-14)


def test_grouped_trace_matches_submodel():
    # Partial trace of the big model at cutoff M equals the full grouped
    # trace of the independently built cutoff-M model (ambient exactness).
    big = model_su2(cutoff=8)
    y = big.vector([1], "cos", [1.0, 0.0, 0.0])
    z = big.vector([1], "cos", [0.0, 1.0, 1.0])
    scal_big = scalarize(big, y, z)
    for m in (2, 4, 8):
        sub = model_su2(cutoff=m)
        scal_sub = scalarize(sub, sub.vector([1], "cos", [1.0, 0.0, 0.0]),
                             sub.vector([1], "cos", [0.0, 1.0, 1.0]))
        assert abs(scal_big.partial_trace(m) - scal_sub.partial_trace(m)) < 1e-9


def test_grouped_trace_equals_operator_trace():
    model = model_su2(cutoff=6)
    rng = np.random.default_rng(SEED + 3)
    mask = model.mode_mask(model.cutoff)
    y = rng.standard_normal(model.dim) * mask
    z = rng.standard_normal(model.dim) * mask
    scal = scalarize(model, y, z)
    block, _, _ = first_slot_block(model, y, z)
    assert abs(scal.partial_trace(model.cutoff) - np.trace(block)) < 1e-10


def test_traced_form_equals_engine_after_lie_trace_only():
    # The five-term assembly is trace-equal, not operator-equal.
    model = model_su2(cutoff=6)
    rng = np.random.default_rng(SEED + 4)
    mask = model.mode_mask(model.cutoff)
    y = rng.standard_normal(model.dim) * mask
    z = rng.standard_normal(model.dim) * mask
    t_eng = first_slot_block(model, y, z)[0]
    t_form = traced_form_block(model, y, z)[0]
    assert np.max(np.abs(t_eng - t_form)) > 1e-3  # different operators
    s_eng = lie_partial_trace(t_eng, model.lie_dim)
    s_form = lie_partial_trace(t_form, model.lie_dim)
    np.testing.assert_allclose(s_eng, s_form, atol=1e-10)


def test_ricci_symmetric_at_every_cutoff():
    model = model_su2(cutoff=8)
    rng = np.random.default_rng(SEED + 5)
    mask = model.mode_mask(model.cutoff)
    y = rng.standard_normal(model.dim) * mask
    z = rng.standard_normal(model.dim) * mask
    est_yz = ricci_cutoff(model, y, z, [2, 4, 8])
    est_zy = ricci_cutoff(model, z, y, [2, 4, 8])
    np.testing.assert_allclose(est_yz.partial_traces, est_zy.partial_traces,
                               atol=1e-9)


def test_quotient_routes_agree_despite_projected_bracket():
    model = TruncatedGroupModel("circle", liealg.su2(), 8, 1.0, 0.0)
    y = model.vector([1], "cos", [1.0, 0.0, 0.0])
    scal = scalarize(model, y, y)
    assert scal.route_deviation < 1e-12


def test_classifier_power_sequences():
    cutoffs = np.array([16.0, 32.0, 64.0])
    for q in (0.5, 1.0, 2.0):
        vals = 3.0 - 2.0 * cutoffs ** (-q)
        est = classify_partial_traces(cutoffs, vals)
        assert est.verdict == "convergent"
        assert abs(est.value - 3.0) < 1e-9
        assert est.exponent == q
        assert est.residual < 1e-12


def test_classifier_log_divergence():
    cutoffs = np.array([8.0, 16.0, 32.0, 64.0])
    vals = 0.3 + 0.7 * np.log(cutoffs)
    est = classify_partial_traces(cutoffs, vals)
    assert est.verdict == "log-divergent"
    assert abs(est.log_coefficient - 0.7) < 1e-9
    assert np.isnan(est.value)


def test_classifier_flat_sequence():
    est = classify_partial_traces([16, 32, 64], [5.0, 5.0, 5.0])
    assert est.verdict == "convergent"
    assert est.value == 5.0


def test_classifier_needs_three_points():
    with pytest.raises(ValueError):
        classify_partial_traces([16, 32], [1.0, 2.0])


def test_circle_s1_quotient_negative():
    model = TruncatedGroupModel("circle", liealg.su2(), 16, 1.0, 0.0)
    for k in (1, 2, 3):
        y = model.vector([k], "cos", [1.0, 0.0, 0.0])
        est = ricci_cutoff(model, y, y, [4, 8, 16])
        assert est.verdict == "convergent"
        assert est.value < 0.0
        # known closed value at s=1 on the quotient: -2 <<e1, e1>> = -4
        assert abs(est.value + 4.0) < 1e-9


def test_einstein_ratio_biinvariant():
    # finite-dimensional sanity: Ric = -kappa/4 proportional to the metric
    from curvlab.engine import metrized_from_lie_algebra
    geo = metrized_from_lie_algebra(liealg.su2())
    rng = np.random.default_rng(SEED + 6)
    rics, refs = [], []
    for _ in range(10):
        y = rng.standard_normal(3)
        rics.append(geo.ricci_full(y, y))
        refs.append(geo.metric.inner(y, y))
    result = einstein_ratio(np.array(rics), np.array(refs), spread_tol=1e-12)
    assert result["einstein"]
    assert abs(result["mean"] - 0.25) < 1e-12


def test_einstein_ratio_excludes_orthogonal_pairs():
    rics = np.array([1.0, 2.0, 1e-14])
    refs = np.array([2.0, 4.0, 0.0])
    result = einstein_ratio(rics, refs, spread_tol=1e-9)
    assert result["excluded"] == 1
    assert result["einstein"]
    with pytest.raises(ValueError):
        einstein_ratio(np.array([1.0]), np.array([0.0]))


def test_interleaved_probe_verdicts():
    # At s = 1/2 the complex interleaved sums diverge logarithmically; at
    # s = 1 the operator is trace class and every ordering converges.
    half = TruncatedGroupModel("circle", liealg.su2(), 64, 0.5, 0.3)
    y = half.vector([1], "cos", [1.0, 0.0, 0.0])
    z = half.vector([1], "cos", [0.0, 1.0, 0.0])
    probe = interleaved_trace_probe(half, y, z, [8, 16, 32, 64])
    assert probe["ungrouped_verdict"] == "log-divergent"
    assert probe["grouped_estimate"].verdict == "convergent"

    one = TruncatedGroupModel("circle", liealg.su2(), 64, 1.0, 1.0)
    y = one.vector([1], "cos", [1.0, 0.0, 0.0])
    z = one.vector([1], "cos", [0.0, 1.0, 0.0])
    probe = interleaved_trace_probe(one, y, z, [8, 16, 32, 64])
    assert probe["ungrouped_verdict"] == "convergent"


def test_ricci_cutoff_validates_range():
    model = model_su2(cutoff=8)
    y = model.vector([1], "cos", [1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        ricci_cutoff(model, y, y, [4, 8, 16])


def test_internal_consistency_error_on_tampered_routes(monkeypatch):
    model = model_su2(cutoff=4)
    y = model.vector([1], "cos", [1.0, 0.0, 0.0])
    import curvlab.regularize as reg

    def broken(model_, y_, z_):
        block, freqs, axis = reg.first_slot_block(model_, y_, z_)
        return block + 1.0, freqs, axis

    monkeypatch.setattr(reg, "traced_form_block", broken)
    with pytest.raises(InternalConsistencyError):
        reg.scalarize(model, y, y)
