import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conelab.cone_density import HomogeneousDensity, LinearPower, PlanarSector, SolidCone
from conelab.errors import (CriticalDegree, HypothesisViolated, StencilExitsCone, TooManyDofs,
                            WrongDegreeRange)
from conelab.hypersurface import (barbosa_test_field, geometry, make_cap, make_ellipsoid, make_off_center_sphere,
                                  make_radial_graph, make_sphere_through_origin, support_function)
from conelab.oracles import brute_variation, cap_reference, circle_rayleigh
from conelab.stability import (Dilation, Normal, Parallel, RescaledParallel, assemble, cutoff_energy,
                               cutoff_energy_decay, d1_five, d2_five, index_form, jacobi_apply,
                               quintic_step, refine_spectrum, rescaled_parallel, run_variation, spectrum,
                               stability_report, stability_spectrum, stationarity_check, umbilicity_gap)
from conelab.weighted_measures import fsum


def test_five_point_stencils_exact_on_quartics():
    dt = 0.1
    t = dt * np.arange(-2, 3)
    vals = 1 + 2 * t + 3 * t ** 2 + 4 * t ** 3 + 5 * t ** 4
    assert d1_five(vals, dt) == pytest.approx(2.0)
    assert d2_five(vals, dt) == pytest.approx(6.0)


def test_quintic_step():
    v, d = quintic_step(np.array([0.2, 0.5, 0.75, 1.0, 3.0]))
    np.testing.assert_allclose(v, [0, 0, 0.5, 1, 1])
    assert d[0] == d[1] == d[3] == 0 and d[2] > 0


def test_operators_are_symmetric(circ_cone):
    ops = assemble(make_cap(circ_cone, 1.3, 16), HomogeneousDensity(1.0), circ_cone)
    for name in ("K", "M", "P", "B", "Q"):
        A = ops.dense(name)
        assert np.abs(A - A.T).max() <= 1e-12 * np.abs(A).max()


def test_fem_operators_are_sparse(plane):
    ops = assemble(make_cap(plane, 1.0, 64, "fem"), HomogeneousDensity(1.0), plane)
    assert ops.backend == "simplicial" and ops.K.nnz < 4 * 64


@pytest.mark.parametrize("k", [-2.0, 0.0, 1.0])
def test_cap_spectrum_matches_neumann_reference(half3, k):
    r = 1.3
    ops = assemble(make_cap(half3, r, 24), HomogeneousDensity(k), half3)
    ref = cap_reference(2, k, r, half3).expected
    assert stability_spectrum(ops, "all")[0] == pytest.approx(ref["min_eigen_all"], abs=1e-8)
    # Neumann data enter weakly, so the mean-zero eigenvalue converges algebraically
    assert stability_spectrum(ops, "mean_zero")[0] == pytest.approx(ref["min_eigen_meanzero"], abs=1e-5)


def test_arc_spectrum_against_rayleigh(sector):
    k, r = 0.5, 1.0
    ops = assemble(make_cap(sector, r, 48), HomogeneousDensity(k), sector)
    vals = spectrum(ops, "all", 3)
    for m in range(3):
        assert vals[m] == pytest.approx(circle_rayleigh(k, r, m, arc=2.0), abs=1e-5)


def test_spectrum_count_and_ordering(circ_cone):
    ops = assemble(make_cap(circ_cone, 1.0, 10), HomogeneousDensity(1.0), circ_cone)
    vals = spectrum(ops, "all", 6)
    assert len(vals) == 6 and np.all(np.diff(vals) >= -1e-12)
    with pytest.raises(ValueError):
        stability_spectrum(ops, "sideways")


def test_constant_is_an_eigenfunction_of_caps(circ_cone):
    r, k = 1.3, 0.5
    ops = assemble(make_cap(circ_cone, r, 16), HomogeneousDensity(k), circ_cone)
    one = np.ones(ops.dofs)
    np.testing.assert_allclose(jacobi_apply(ops, one).values, (2 + k) / r ** 2, atol=1e-9)
    A = fsum(np.diag(ops.M))
    assert index_form(ops, one) == pytest.approx(-(2 + k) / r ** 2 * A, rel=1e-10)


def test_jacobi_of_support_function(circ_cone):
    S = make_cap(circ_cone, 1.3, 24)
    D = HomogeneousDensity(2.0)
    ops = assemble(S, D, circ_cone)
    g = (S.positions * S.shape().normal).sum(1)
    assert np.abs(jacobi_apply(ops, g).values + geometry(S, D, circ_cone).H_f).max() < 1e-9


def test_fem_jacobi_uses_weak_form(plane):
    ops = assemble(make_cap(plane, 1.0, 256, "fem"), HomogeneousDensity(1.0), plane)
    np.testing.assert_allclose(jacobi_apply(ops, np.ones(ops.dofs)).values, 2.0, rtol=1e-3)


def test_too_many_dofs(plane):
    ops = assemble(make_cap(plane, 1.0, 5001, "fem"), HomogeneousDensity(0.0), plane)
    with pytest.raises(TooManyDofs):
        stability_spectrum(ops)


def test_refinement_converges(plane):
    res = refine_spectrum(lambda g: make_cap(plane, 1.0, g, "fem"), HomogeneousDensity(1.0), plane,
                          [64, 128, 256])
    assert res.converged
    assert res.values[-1] == pytest.approx(-1.0, rel=1e-3)


def test_stability_report_on_cap(half3):
    rep = stability_report(make_cap(half3, 1.0, 16), HomogeneousDensity(-2.0), half3)
    assert rep.verdicts["stationary"] and rep.verdicts["strongly_stationary"]
    assert rep.verdicts["strongly_f_stable"] and rep.verdicts["f_stable"]
    assert rep.orthogonality_error < 1e-12


def test_stability_report_unstable_radial(half3):
    rep = stability_report(make_cap(half3, 1.0, 16), HomogeneousDensity(1.0), half3)
    assert rep.verdicts["stationary"] and not rep.verdicts["strongly_stationary"]
    assert not rep.verdicts["f_stable"]
    assert rep.lambda_min_meanzero == pytest.approx(-1.0, abs=1e-5)


def test_stationarity_fails_for_tilted_graph(circ_cone):
    rep = stationarity_check(make_radial_graph(circ_cone, 1.0, 0.3, (0.2, 0.1, 0.0), 16),
                             HomogeneousDensity(1.0), circ_cone)
    assert not rep.verdicts["stationary"]


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_index_form_matches_second_variation(seed):
    cone = SolidCone(2, PlanarSector(2.0))
    S = make_cap(cone, 1.0, 32)
    D = HomogeneousDensity(1.5)
    rng = np.random.default_rng(seed)
    c = rng.normal(size=3)
    P = S.positions
    u = np.cos(c[0] * P[:, 0] + c[1]) + c[2] * P[:, 1] ** 2
    r = run_variation(S, D, cone, Normal(u))
    assert r.reliable
    assert r.d2 == pytest.approx(r.d2_expected, rel=1e-6, abs=1e-8)
    assert r.dA == pytest.approx(r.dA_expected, rel=1e-8, abs=1e-10)


def test_normal_variation_first_derivatives_match_brute_oracle(circ_cone):
    S = make_cap(circ_cone, 1.2, 20)
    D = HomogeneousDensity(1.0)
    u = lambda P: 1 + 0.3 * P[:, 0] * P[:, 2]
    ref = brute_variation(S, D, circ_cone, u)
    r = run_variation(S, D, circ_cone, Normal(u))
    assert ref.reliable
    assert r.dA == pytest.approx(ref.expected["dA"], rel=1e-6)
    assert r.dV == pytest.approx(ref.expected["dV"], rel=1e-6)


def test_dilation(circ_cone):
    S = make_cap(circ_cone, 1.2, 20)
    D = HomogeneousDensity(-1.0)
    r = run_variation(S, D, circ_cone, Dilation())
    assert r.dA == pytest.approx(r.dA_expected, rel=1e-8)
    assert r.dV == pytest.approx(r.dV_expected, rel=1e-8)
    assert r.extra["dH_f_max_error"] < 1e-6
    ref = brute_variation(S, D, circ_cone)
    assert r.dA == pytest.approx(ref.expected["dA"], rel=1e-6)


def test_parallel_variation(circ_cone):
    S = make_cap(circ_cone, 1.2, 20)
    r = run_variation(S, HomogeneousDensity(1.0), circ_cone, Parallel())
    assert r.dA == pytest.approx(r.dA_expected, rel=1e-7)
    assert r.dV == pytest.approx(r.dV_expected, rel=1e-7)


def test_rescaled_parallel_preserves_volume_on_cap(circ_cone):
    S = make_cap(circ_cone, 1.2, 20)
    d = rescaled_parallel(S, HomogeneousDensity(1.0), circ_cone)
    assert d.volume_drift < 1e-12
    # on a cap n + k + H_f g vanishes, so the flow is stationary to first order
    assert d.normal_velocity_error < 1e-6
    r = run_variation(S, HomogeneousDensity(1.0), circ_cone, RescaledParallel())
    assert abs(r.dV) < 1e-8


def test_critical_degree_variations(plane):
    S = make_cap(plane, 1.0, 33)
    with pytest.raises(CriticalDegree):
        rescaled_parallel(S, HomogeneousDensity(-2.0), plane)
    r = run_variation(S, HomogeneousDensity(-2.0), plane, Dilation())
    assert r.dV is None and r.d2 is None


def test_stencil_leaving_cone(circ_cone):
    S = make_cap(circ_cone, 1.0, 12)
    with pytest.raises(StencilExitsCone):
        run_variation(S, HomogeneousDensity(1.0), circ_cone, Normal(lambda P: 50 * P[:, 0]), dt=0.05)


def test_umbilicity_gap_on_caps(circ_cone):
    for k in (-3.0, 1.0, 2.0):
        g = umbilicity_gap(make_cap(circ_cone, 1.3, 16), HomogeneousDensity(k), circ_cone)
        assert np.abs(g.values).max() < 1e-10
    with pytest.raises(WrongDegreeRange):
        umbilicity_gap(make_cap(circ_cone, 1.3, 8), HomogeneousDensity(-1.0), circ_cone)


def test_umbilicity_gap_dominates_bound_under_cd(half3):
    D = HomogeneousDensity(profile=LinearPower((0, 0, 1), 2.0))
    g = umbilicity_gap(make_off_center_sphere((0.3, 0.1, 1.5), 0.6, 24), D, half3)
    assert np.all(g.values - g.meta["lower_bound"] >= -1e-9)


def test_cutoff_energy_scaling(space):
    S = make_sphere_through_origin(space, (0, 0, 1.0), 48)
    e1 = cutoff_energy(S, HomogeneousDensity(2.0), space, 0.01)
    e2 = cutoff_energy(S, HomogeneousDensity(2.0), space, 0.02)
    assert e2 / e1 == pytest.approx(4.0, rel=0.02)


def test_cutoff_hypotheses(space):
    S = make_sphere_through_origin(space, (0, 0, 1.0), 16)
    for k in (0.0, -0.5):
        with pytest.raises(HypothesisViolated):
            cutoff_energy_decay(S, HomogeneousDensity(k), space, [0.01, 0.02])


def test_umbilic_detector_on_sphere_and_ellipsoid():
    sph = make_off_center_sphere((0, 0, 2.0), 0.5, 16).shape()
    assert np.abs(sph.sigma2 - 2 * sph.H ** 2).max() < 1e-9
    ell = make_ellipsoid((0, 0, 2.0), (1.0, 0.5, 0.5), 24).shape()
    assert (ell.sigma2 - 2 * ell.H ** 2).max() > 1e-2


def test_support_function_boundary_law_on_caps(circ_cone):
    S = make_cap(circ_cone, 1.3, 24)
    geo = geometry(S, HomogeneousDensity(1.0), circ_cone)
    g = support_function(S)
    dg = S.boundary_normal_derivative(g.values)
    np.testing.assert_allclose(dg, -geo.boundary.ii_nn * g.boundary, atol=1e-9)


def test_barbosa_ledger_terms_vanish_on_caps(circ_cone):
    S = make_cap(circ_cone, 1.3, 24)
    D = HomogeneousDensity(2.0)
    geo = geometry(S, D, circ_cone)
    ops = assemble(S, D, circ_cone)
    u = barbosa_test_field(S, D, circ_cone).values
    assert abs(index_form(ops, u)) < 1e-8
    assert abs(fsum(umbilicity_gap(S, D, circ_cone).values * geo.weights)) < 1e-8
    assert abs(fsum(geo.boundary.ii_nn * geo.boundary.dl_f)) < 1e-8


def test_potential_and_boundary_terms_nonnegative(circ_cone, rng):
    # convex cone and Ric_f >= 0: both subtracted pieces of the index form are nonnegative
    D = HomogeneousDensity(profile=LinearPower((0, 0, 1), 1.5))
    S = make_radial_graph(circ_cone, 1.0, 0.2, (0.1, 0.2, 0.0), 16)
    ops = assemble(S, D, circ_cone)
    for _ in range(20):
        u = rng.normal(size=ops.dofs)
        assert u @ ops.P @ u >= 0 and u @ ops.B @ u >= -1e-12


def test_ellipsoid_is_not_strongly_stable_at_minus_n(space):
    rep = stability_report(make_ellipsoid((0, 0, 0), (2.0, 1.0, 1.0), 16), HomogeneousDensity(-2.0), space)
    assert not (rep.verdicts["stationary"] and rep.verdicts["strongly_f_stable"])


def test_rescaled_parallel_flags_non_stationary(circ_cone):
    S = make_radial_graph(circ_cone, 1.0, 0.3, (0.2, 0.1, 0.0), 16)
    with pytest.warns(RuntimeWarning):
        d = rescaled_parallel(S, HomogeneousDensity(1.0), circ_cone)
    assert d.warning is not None and d.volume_drift < 1e-10


def test_fem_refinement_is_monotone(plane):
    res = refine_spectrum(lambda g: make_cap(plane, 1.0, g, "fem"), HomogeneousDensity(1.0), plane,
                          [32, 64, 128])
    assert res.monotone and res.converged
