import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from fishercert.core_model import GaussianMeasure, StudentTMeasure
from fishercert.divergences import (
    DivergenceValue,
    chi2_divergence,
    chi2_gaussian,
    construct_kl_pathology_A,
    hellinger_numeric_1d,
    kl_gaussian,
    kl_gaussian_t_upper,
    kl_interval_error_bound,
    kl_mean_error_bound,
    kl_numeric_1d,
    tv_numeric_1d,
)

N = GaussianMeasure.univariate


def random_pairs(seed, count):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield N(rng.normal(), rng.uniform(0.3, 3.0)), N(rng.normal(), rng.uniform(0.3, 3.0))


def test_divergence_value_validation():
    assert DivergenceValue("chi2", math.inf, "quadrature").infinite
    with pytest.raises(ValueError):
        DivergenceValue("KL", -0.1, "closed_form")
    with pytest.raises(ValueError):
        DivergenceValue("renyi", 0.1, "closed_form")


def test_kl_gaussian_identity():
    assert kl_gaussian(N(0.4, 1.3), N(0.4, 1.3)) == 0.0


def test_kl_gaussian_unit_shift():
    assert kl_gaussian(N(0, 1), N(1, 1)) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("delta", [0.1, 1.0, 5.0])
def test_pathology_invariants(delta):
    pair = construct_kl_pathology_A(delta, 1.0)
    assert kl_gaussian(pair.eta_hat, pair.eta) == pytest.approx(delta, abs=1e-9)
    assert pair.mean_gap**2 == pytest.approx(math.expm1(2 * delta), rel=1e-14)
    var_hat, var = pair.eta_hat.covariance[0, 0], pair.eta.covariance[0, 0]
    assert var_hat == pytest.approx(math.exp(-2 * delta) * var, rel=1e-14)


def test_pathology_large_gap():
    pair = construct_kl_pathology_A(5.0, 1.0)
    assert pair.mean_gap / pair.sigma_hat == pytest.approx(math.sqrt(math.expm1(10.0)), rel=1e-14)
    assert pair.mean_gap > 148


def test_pathology_small_delta_continuity():
    pair = construct_kl_pathology_A(1e-8, 1.0)
    assert pair.mean_gap < 2e-4
    assert pair.eta.covariance[0, 0] == pytest.approx(1.0, abs=1e-7)


def test_pathology_roundtrip_scaled():
    pair = construct_kl_pathology_A(0.5, 2.0)
    assert kl_gaussian(pair.eta_hat, pair.eta) == pytest.approx(0.5, abs=1e-12)


def test_kl_mean_error_bound_examples():
    assert kl_mean_error_bound(0.0, 1.0, 1.0) == 0.0
    assert kl_mean_error_bound(0.5, 1.0, 1.0) == pytest.approx(math.sqrt(2.0), abs=1e-15)
    assert math.isinf(kl_mean_error_bound(1.0, 1.0, 1.0))


def test_kl_mean_error_bound_holds_for_pathology():
    pair = construct_kl_pathology_A(0.5, 1.0)
    bound = kl_mean_error_bound(0.5, pair.eta_hat.covariance[0, 0], pair.eta.covariance[0, 0])
    assert pair.mean_gap <= bound


def test_kl_interval_error_bound_examples():
    assert kl_interval_error_bound(0.0) == 0.0
    assert kl_interval_error_bound(0.5) == pytest.approx(0.5, abs=1e-15)
    assert kl_interval_error_bound(2.0) == 1.0


def test_kl_t_upper_verbatim_value_at_two():
    # The closed-form expression, evaluated as written, gives this at h = 2.
    # A larger constant (0.801345) differs from it by exactly log(pi) / 2.
    # Gamma(1) = 1 and Gamma(3/2) = sqrt(pi) / 2 reduce it to elementary terms.
    val = kl_gaussian_t_upper(2.0)
    exact = math.log(2) - 0.5 * math.log(math.pi) - 0.5 + 1.5 * math.log(1.5)
    assert val == pytest.approx(exact, abs=1e-14)
    assert val == pytest.approx(0.2289799, abs=1e-7)
    assert val + 0.5 * math.log(math.pi) == pytest.approx(0.801345, abs=1e-6)
    true_kl = kl_numeric_1d(N(0, 1), StudentTMeasure(2.0))
    assert true_kl == pytest.approx(0.11723, abs=1e-5)
    assert true_kl <= val


def test_kl_t_upper_decreases():
    hs = np.linspace(3.0, 200.0, 400)
    vals = np.array([kl_gaussian_t_upper(h) for h in hs])
    assert np.all(np.diff(vals) < 0)
    assert kl_gaussian_t_upper(1e5) < 1e-5


@pytest.mark.parametrize("h", [3.0, 5.0, 10.0])
def test_kl_t_upper_dominates_quadrature(h):
    assert kl_gaussian_t_upper(h) >= kl_numeric_1d(N(0, 1), StudentTMeasure(h))


def test_kl_numeric_identity():
    assert kl_numeric_1d(N(0.2, 1.5), N(0.2, 1.5)) == pytest.approx(0.0, abs=1e-8)
    assert kl_numeric_1d(StudentTMeasure(3.0), StudentTMeasure(3.0)) == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("a,b", list(random_pairs(1, 5)))
def test_kl_numeric_matches_closed_form(a, b):
    assert kl_numeric_1d(a, b) == pytest.approx(kl_gaussian(a, b), abs=1e-6)


def test_kl_numeric_gaussian_vs_t2_finite():
    val = kl_numeric_1d(N(0, 1), StudentTMeasure(2.0))
    assert 0 < val < math.inf


def test_kl_numeric_heavy_against_light_is_infinite():
    assert math.isinf(kl_numeric_1d(StudentTMeasure(3.0), N(0, 1)))


def test_chi2_identity():
    assert chi2_divergence(N(0, 1), N(0, 1)).value == pytest.approx(0.0, abs=1e-14)


def test_chi2_closed_form_against_quadrature():
    cf = chi2_divergence(N(0, 1), N(0, 2))
    quad = chi2_divergence(N(0, 1), N(0, 2), method="quadrature")
    assert cf.method == "closed_form" and quad.method == "quadrature"
    # 1 + chi^2 = s^2 / sqrt(2 s^2 - 1) with s = 2.
    assert cf.value == pytest.approx(4 / math.sqrt(7) - 1, abs=1e-14)
    assert quad.value == pytest.approx(cf.value, abs=1e-6)


def test_chi2_too_narrow_reference_is_infinite():
    assert chi2_gaussian(N(0, 2), N(0, 1)) == math.inf
    assert chi2_divergence(N(0, 2), N(0, 1), method="quadrature").infinite


def test_chi2_multivariate_reduces_to_product():
    xi = GaussianMeasure(np.zeros(2), np.eye(2))
    nu = GaussianMeasure(np.zeros(2), 4.0 * np.eye(2))
    one = 1 + chi2_gaussian(N(0, 1), N(0, 2))
    assert chi2_gaussian(xi, nu) == pytest.approx(one**2 - 1, rel=1e-12)


def test_chi2_student_t_against_normal_is_infinite():
    assert chi2_divergence(StudentTMeasure(3.0), N(0, 2)).infinite


def test_tv_identity_and_shift():
    assert tv_numeric_1d(N(0, 1), N(0, 1)) == pytest.approx(0.0, abs=1e-12)
    assert tv_numeric_1d(N(0, 1), N(3, 1)) == pytest.approx(2 * special.ndtr(1.5) - 1, abs=1e-4)


def test_hellinger_closed_form():
    # H^2 = 2 (1 - exp(-d^2 / 8)) for unit-variance Gaussians a distance d apart.
    assert hellinger_numeric_1d(N(0, 1), N(1, 1)) == pytest.approx(2 * (1 - math.exp(-1 / 8)), abs=1e-6)


@pytest.mark.parametrize("a,b", list(random_pairs(2, 20)))
def test_hellinger_below_kl(a, b):
    h2 = hellinger_numeric_1d(a, b)
    assert h2 <= kl_gaussian(a, b) + 1e-9
    assert tv_numeric_1d(a, b) <= 2 * math.sqrt(h2) + 1e-9


def test_kl_guarantees_on_random_pairs():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 200:
        a = N(rng.normal(0, 0.5), rng.uniform(0.5, 2.0))
        b = N(rng.normal(0, 0.5), rng.uniform(0.5, 2.0))
        delta = kl_gaussian(a, b)
        if delta >= 1:
            continue
        gap = abs(a.mean[0] - b.mean[0])
        assert gap <= kl_mean_error_bound(delta, a.covariance[0, 0], b.covariance[0, 0]) + 1e-12
        assert tv_numeric_1d(a, b) <= kl_interval_error_bound(delta) + 1e-9
        checked += 1


def test_heavy_tail_variance_blows_up_at_finite_kl():
    t = StudentTMeasure(2.01)
    assert t.var() > 100 * 1.0
    for h in np.linspace(2.01, 3.0, 5):
        assert math.isfinite(kl_numeric_1d(N(0, 1), StudentTMeasure(h)))


@given(st.floats(-2, 2), st.floats(0.3, 3), st.floats(-2, 2), st.floats(0.3, 3))
def test_divergences_bounded(m1, s1, m2, s2):
    a, b = N(m1, s1), N(m2, s2)
    assert 0 <= tv_numeric_1d(a, b) <= 1
    assert 0 <= hellinger_numeric_1d(a, b) <= 2
    assert kl_gaussian(a, b) >= -1e-15
