import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fishercert.core_model import GaussianMeasure, StudentTMeasure
from fishercert.fisher import (
    ComparabilityFactor,
    FisherError,
    FisherEstimate,
    ReferenceMeasure,
    comparability_factor,
    counter_uniforms,
    fisher_distance_gaussian_closed,
    fisher_distance_gaussian_pair,
    fisher_distance_mc,
    sup_density_ratio_gaussian,
    sup_density_ratio_grid,
)

N = GaussianMeasure.univariate


def mc(eta, eta_hat, nu, p=2, n=100_000, seed=0, workers=1):
    return fisher_distance_mc(eta.potential_grad, eta_hat.potential_grad, nu, p=p, n=n, seed=seed, workers=workers)


def test_counter_uniforms_in_open_unit_interval():
    u = counter_uniforms(5, 0, 50_000, 3)
    assert u.shape == (50_000, 3)
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.005


def test_counter_uniforms_are_position_addressable():
    whole = counter_uniforms(9, 0, 1000, 5)
    np.testing.assert_array_equal(whole[300:700], counter_uniforms(9, 300, 700, 5))


def test_identical_potentials_give_zero():
    g = N(0.5, 2.0)
    est = mc(g, g, ReferenceMeasure.gaussian(g, is_target=True), n=1000)
    assert est.value == 0.0 and est.std_error == 0.0


@pytest.mark.parametrize("p", [1, 2])
def test_constant_gradient_gap(p):
    nu = ReferenceMeasure.gaussian(N(3.0, 5.0))
    est = mc(N(0, 1), N(1, 1), nu, p=p, n=1000)
    assert est.value == pytest.approx(1.0, abs=1e-12)
    assert est.std_error == pytest.approx(0.0, abs=1e-12)


def test_scale_mismatch_value():
    eta = N(0, 1)
    est = mc(eta, N(0, 2), ReferenceMeasure.gaussian(eta, is_target=True))
    assert est.p == 2 and est.nu_is_target
    assert abs(est.value**2 - 9 / 16) <= 3 * 2 * est.value * est.std_error
    assert abs(est.value - 0.75) <= 3 * est.std_error


def test_rejects_small_n_and_bad_p():
    nu = ReferenceMeasure.gaussian(N(0, 1))
    with pytest.raises(ValueError):
        mc(N(0, 1), N(0, 1), nu, n=50)
    with pytest.raises(ValueError):
        mc(N(0, 1), N(0, 1), nu, p=3)


def test_nonfinite_gradient_names_draw():
    def bad(theta):
        out = np.array(theta, dtype=float)
        out[theta[:, 0] > 2.5] = np.nan
        return out

    with pytest.raises(FisherError, match=r"draw \d+, theta=\[[2-9]\.\d+\]"):
        fisher_distance_mc(bad, lambda t: t, ReferenceMeasure.gaussian(N(0, 1)), n=20_000)


def test_determinism_across_runs_and_workers():
    eta, hat = StudentTMeasure(4.0), N(0.1, 1.2)
    nu = ReferenceMeasure.gaussian(N(0, 1.5))
    runs = [fisher_distance_mc(eta.potential_grad, hat.potential_grad, nu, n=50_000, seed=17, workers=w)
            for w in (1, 2, 8, 1)]
    assert len({(r.value, r.std_error) for r in runs}) == 1


def test_different_seeds_differ():
    nu = ReferenceMeasure.gaussian(N(0, 1))
    a = mc(N(0, 1), N(0, 2), nu, n=1000, seed=1)
    b = mc(N(0, 1), N(0, 2), nu, n=1000, seed=2)
    assert a.value != b.value


def test_upper_adds_k_standard_errors():
    fe = FisherEstimate(2, 1.0, 0.1, 100, 0, "x")
    assert fe.upper(3) == pytest.approx(1.3)


def test_pair_formula_multivariate_against_mc():
    eta = GaussianMeasure([0.0, 1.0], [[2.0, 0.3], [0.3, 1.0]])
    hat = GaussianMeasure([0.2, 0.8], [[1.5, 0.0], [0.0, 1.2]])
    nu = GaussianMeasure([0.5, 0.5], np.eye(2))
    est = mc(eta, hat, ReferenceMeasure.gaussian(nu), n=200_000)
    assert abs(est.value - fisher_distance_gaussian_pair(eta, hat, nu)) <= 3 * est.std_error


def test_closed_display_identity_case():
    assert fisher_distance_gaussian_closed(N(0, 1), N(0, 1), 0.0, 2.0) == 0.0


def test_closed_display_is_distance_not_square():
    eta, hat = N(0, 1), N(-1, 1)
    closed = fisher_distance_gaussian_closed(eta, hat, 0.0, 2.0)
    est = mc(eta, hat, ReferenceMeasure.gaussian(N(0, math.sqrt(2))), n=1_000_000)
    assert abs(est.value - closed) <= 3 * est.std_error + 1e-12
    est2 = mc(N(0, 1), N(0.3, 1.7), ReferenceMeasure.gaussian(N(0.5, math.sqrt(2))), n=1_000_000, seed=3)
    closed2 = fisher_distance_gaussian_closed(N(0, 1), N(0.3, 1.7), 0.5, 2.0)
    assert abs(est2.value - closed2) <= 3 * est2.std_error
    # The unsquared reading is far outside the error bars.
    assert abs(est2.value - closed2**2) > 10 * est2.std_error


@given(st.floats(-2, 2), st.floats(0.3, 3), st.floats(-2, 2), st.floats(0.3, 3),
       st.floats(-2, 2), st.floats(1.01, 6))
def test_closed_display_matches_pair_formula(mu, s, mu_h, s_h, eps, rho):
    eta, hat = N(mu, s), N(mu_h, s_h)
    nu = N(mu + eps, math.sqrt(rho) * s)
    assert fisher_distance_gaussian_closed(eta, hat, eps, rho) == pytest.approx(
        fisher_distance_gaussian_pair(eta, hat, nu), rel=1e-10, abs=1e-12)


def test_closed_display_rho_to_one_limit():
    eta, hat = N(0.3, 1.4), N(-0.2, 0.9)
    at_target = fisher_distance_gaussian_pair(eta, hat)
    assert fisher_distance_gaussian_closed(eta, hat, 0.0, 1 + 1e-9) == pytest.approx(at_target, rel=1e-8)


def test_closed_display_rejects_rho_at_most_one():
    with pytest.raises(ValueError):
        fisher_distance_gaussian_closed(N(0, 1), N(0, 1), 0.0, 1.0)


def test_jensen_ordering_on_random_pairs():
    rng = np.random.default_rng(11)
    for i in range(100):
        eta, hat = N(rng.normal(), rng.uniform(0.5, 2)), N(rng.normal(), rng.uniform(0.5, 2))
        nu = ReferenceMeasure.gaussian(N(rng.normal(), rng.uniform(0.5, 2)))
        f1 = mc(eta, hat, nu, p=1, n=2000, seed=i)
        f2 = mc(eta, hat, nu, p=2, n=2000, seed=i)
        # Same draws, so the empirical L^p norms are ordered exactly.
        assert f1.value <= f2.value * (1 + 1e-12)


def test_chi2_route_inequality_on_triples():
    rng = np.random.default_rng(12)
    for i in range(10):
        eta = N(rng.normal(), rng.uniform(0.5, 1.5))
        hat = N(rng.normal(), rng.uniform(0.5, 1.5))
        nu = N(eta.mean[0] + rng.normal(0, 0.5), eta.std[0] * rng.uniform(1.0, 2.0))
        f1 = mc(eta, hat, ReferenceMeasure.gaussian(eta, is_target=True), p=1, n=100_000, seed=i)
        f2 = fisher_distance_gaussian_pair(eta, hat, nu)
        B1 = comparability_factor(1, eta, nu)
        assert f1.value - 3 * f1.std_error <= f2 * B1.value


def test_factor_for_target_reference_is_one():
    eta = N(0, 1)
    for p in (1, 2):
        assert comparability_factor(p, eta, eta).value == 1.0
        assert comparability_factor(p, eta, ReferenceMeasure.gaussian(eta, is_target=True)).value == 1.0


def test_factor_shifted_wider_reference():
    B2 = comparability_factor(2, N(0, 1), N(1, math.sqrt(2)))
    assert B2.value**2 == pytest.approx(math.sqrt(2) * math.exp(0.5), rel=1e-12)
    assert B2.value**2 == pytest.approx(2.3316, abs=1e-4)
    assert B2.kind == "sup_ratio_based" and B2.provenance == "closed_form"


def test_factor_grid_agrees_with_closed_form():
    eta, nu = N(0, 1), N(1, math.sqrt(2))
    assert sup_density_ratio_grid(eta, nu) == pytest.approx(sup_density_ratio_gaussian(eta, nu), abs=1e-4)


def test_factor_closed_form_at_least_one():
    rng = np.random.default_rng(4)
    for _ in range(50):
        eta = N(rng.normal(), rng.uniform(0.5, 2))
        nu = N(rng.normal(), eta.std[0] * rng.uniform(1.01, 3))
        assert comparability_factor(2, eta, nu).value >= 1.0
        assert comparability_factor(1, eta, nu).value >= 1.0


def test_factor_narrow_reference_is_infinite():
    for p in (1, 2):
        assert not comparability_factor(p, N(0, 2), N(0, 1)).finite
    assert not comparability_factor(2, StudentTMeasure(3.0), N(0, 1)).finite


def test_factor_student_t_quadrature():
    B2 = comparability_factor(2, StudentTMeasure(3.0), StudentTMeasure(2.5))
    assert B2.provenance == "quadrature" and 1.0 <= B2.value < 1.1
    B1 = comparability_factor(1, StudentTMeasure(3.0), StudentTMeasure(2.5))
    assert B1.provenance == "quadrature" and B1.value >= 1.0


def test_factor_user_value():
    f = comparability_factor(2, None, None, user_value=1.7)
    assert f.provenance == "user_supplied" and f.value == 1.7


def test_factor_rejects_multivariate_non_gaussian():
    class Fake:
        dim = 2

    with pytest.raises(ValueError):
        comparability_factor(2, Fake(), Fake())


def test_factor_validates_kind():
    with pytest.raises(ValueError):
        ComparabilityFactor(1, 1.0, "sup_ratio_based", "closed_form")
