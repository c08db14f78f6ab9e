"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import special

from fishercert.certificates import (
    COV_LINEAR,
    COV_QUADRATIC,
    STD_CONST,
    ConvexityCertificate,
    gaussian_reference_bound,
    gaussian_w2_closed_form,
    moment_error_report,
    t_reference_bound,
    tv_from_fisher,
    wasserstein_from_fisher,
)
from fishercert.cli import cmd_certify, figure_rows, load_spec
from fishercert.core_model import GaussianLocationModel, GaussianMeasure, LogisticRegressionPosterior, QuarticPerturbedGaussian, StudentTMeasure
from fishercert.coreset import build_coreset_fw, coreset_certificate, decay_slope, gradient_feature_matrix
from fishercert.divergences import construct_kl_pathology_A, kl_gaussian, tv_numeric_1d
from fishercert.fisher import ComparabilityFactor, FisherEstimate, ReferenceMeasure, fisher_distance_gaussian_pair, fisher_distance_mc
from fishercert.laplace import laplace_certificate
from fishercert.oracle import quadrature_posterior_1d, vectorized, wasserstein_1d

N = GaussianMeasure.univariate
SPECS = Path(__file__).resolve().parents[1] / "specs"
SLACK = 1e-9


@pytest.fixture
def verdict(capsys, request):
    def emit(ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {request.node.name}: {detail}")
        assert ok, detail

    return emit


def test_criterion_01_gaussian_w2_identity(verdict):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        a, b = N(rng.normal(0, 2), rng.uniform(0.2, 3)), N(rng.normal(0, 2), rng.uniform(0.2, 3))
        worst = max(worst, abs(gaussian_w2_closed_form(a, b) - wasserstein_1d(2, a, b)))
    elapsed = time.perf_counter() - t0
    verdict(worst <= 1e-6 and elapsed < 10, f"max |closed - oracle| = {worst:.2e} (tol 1e-6), {elapsed:.2f}s (< 10s)")


def test_criterion_02_fig1_anchor_and_dominance(verdict):
    anchor = gaussian_reference_bound(1.0, 1.0, -1.0)
    truth_at_one = gaussian_w2_closed_form(N(0, 1), N(1, 1)) ** 2
    header, rows = figure_rows("fig1")
    arr = np.array(rows, dtype=float)
    margin = float(np.min(arr[:, 2:] - arr[:, [1]]))
    ok = anchor == 1.0 and truth_at_one == 1.0 and margin >= -SLACK
    verdict(ok, f"r=1 bound {anchor!r} vs truth {truth_at_one!r}; min margin over {len(rows)}x4 curve points {margin:.2e}")


def test_criterion_03_student_t_anchor_and_fig2(verdict):
    exact = t_reference_bound(3.0) == 10.0 / 6.0
    gaps = []
    for h in (3.0, 5.0, 10.0, 30.0):
        gaps.append(math.sqrt(t_reference_bound(h)) - wasserstein_1d(2, StudentTMeasure(h), N(0, 1)))
    header, rows = figure_rows("fig2")
    arr = np.array(rows, dtype=float)
    fig2 = float(np.min(arr[:, 2:] - arr[:, [1]]))
    hs = arr[:, 0]
    direct = float(np.min([STD_CONST * math.sqrt(t_reference_bound(h)) - abs(math.sqrt(h / (h - 2)) - 1) for h in hs]))
    ok = exact and min(gaps) >= -SLACK and fig2 >= -SLACK and direct >= -SLACK
    verdict(ok, f"t_reference_bound(3) == 5/3: {exact}; min sqrt-bound - W2 = {min(gaps):.4f}; "
                f"min Fig 2 margin {min(fig2, direct):.4f}")


def test_criterion_04_kl_pathology(verdict):
    pair = construct_kl_pathology_A(5.0, 1.0)
    kl = kl_gaussian(pair.eta_hat, pair.eta)
    ratio = pair.mean_gap / pair.sigma_hat
    ok = abs(kl - 5.0) <= 1e-9 and ratio == pytest.approx(math.sqrt(math.expm1(10.0)), rel=1e-14) and ratio > 148
    verdict(ok, f"KL = {kl!r}, mean gap / sigma_hat = {ratio:.4f}")


def test_criterion_05_fisher_calibration(verdict):
    eta, hat = N(0, 1), N(0, 2)
    nu = ReferenceMeasure.gaussian(eta, is_target=True)
    t0 = time.perf_counter()
    hits = 0
    for seed in range(20):
        fe = fisher_distance_mc(eta.potential_grad, hat.potential_grad, nu, 2, 100_000, seed)
        hits += abs(fe.value - 0.75) <= 3 * fe.std_error
    elapsed = time.perf_counter() - t0
    verdict(hits >= 19 and elapsed < 5, f"{hits}/20 within 3 SE of 3/4, {elapsed:.2f}s (< 5s)")


def _mean(m):
    return float(np.ravel(m.mean)[0])


def _random_pair(rng):
    eta = N(rng.normal(), rng.uniform(0.5, 2))
    if rng.random() < 0.5:
        other = StudentTMeasure(rng.uniform(4.2, 30), rng.normal(0, 0.5), rng.uniform(0.5, 2))
    else:
        other = N(rng.normal(), rng.uniform(0.5, 2))
    return (eta, other) if rng.random() < 0.5 else (other, eta)


def test_criterion_06_summary_soundness(verdict):
    rng = np.random.default_rng(106)
    violations = []
    for i in range(100):
        target, approx = _random_pair(rng)
        w1 = wasserstein_1d(1, target, approx, tol=1e-9, max_refinements=12)
        w2 = wasserstein_1d(2, target, approx, tol=1e-9, max_refinements=12)
        rep = moment_error_report(w1 + SLACK, w2 + SLACK, target.var(), approx.var(), density_cap=target.density_cap())
        checks = {
            "mean": (abs(_mean(target) - _mean(approx)), rep.mean_bound),
            "mad": (abs(target.mad() - approx.mad()), rep.mad_bound),
            "std": (abs(math.sqrt(target.var()) - math.sqrt(approx.var())), STD_CONST * (w2 + SLACK)),
            "cov": (abs(target.var() - approx.var()),
                    COV_LINEAR * math.sqrt(min(target.var(), approx.var())) * (w2 + SLACK) + COV_QUADRATIC * (w2 + SLACK) ** 2),
            "cov_simple": (abs(target.var() - approx.var()), rep.cov_opnorm_bound_simple),
        }
        assert rep.std_bound == checks["std"][1] and rep.cov_opnorm_bound == pytest.approx(checks["cov"][1], rel=1e-15)
        a, b = np.sort(rng.normal(_mean(target), 1.5, size=2))
        interval_err = abs(float(target.cdf(b) - target.cdf(a)) - float(approx.cdf(b) - approx.cdf(a)))
        checks["interval"] = (interval_err, rep.interval_bound_density)
        for name, (err, bound) in checks.items():
            if err > bound:
                violations.append((i, name, err, bound))
    verdict(not violations, f"{len(violations)} violations over 100 pairs x 6 summaries" + (f": {violations[:3]}" if violations else ""))


def test_criterion_07_laplace_soundness(verdict, bundled_logistic_1d):
    t0 = time.perf_counter()
    X, y = bundled_logistic_1d
    logistic = LogisticRegressionPosterior(X, y, 1.0)
    quartic = QuarticPerturbedGaussian([0.5], [1.0], 1.5)
    lines, ok = [], True
    for name, model in (("logistic n=20", logistic), ("quartic", quartic)):
        fit, cert = laplace_certificate(model, p=1)
        post = quadrature_posterior_1d(vectorized(lambda x, m=model: np.asarray(m.log_density(x[:, None]))))
        w1 = wasserstein_1d(1, post, fit.gaussian)
        ok &= cert.bound >= w1
        lines.append(f"{name}: bound {cert.bound:.4f} >= W1 {w1:.4f}")
    _, gcert = laplace_certificate(N(0.3, 1.7), p=1)
    ok &= gcert.bound == 0.0
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 30
    verdict(ok, "; ".join(lines) + f"; Gaussian bound {gcert.bound!r}; {elapsed:.2f}s (< 30s)")


def test_criterion_08_coreset_structure(verdict):
    data = np.random.default_rng(108).normal(1.0, 1.0, size=(500, 5))
    model = GaussianLocationModel(data)
    full = model.posterior()
    nu = ReferenceMeasure.gaussian(full, is_target=True)
    fs = gradient_feature_matrix(model, nu, S=256, seed=0)
    res = build_coreset_fw(fs, 50, keep_weights=True)
    K = np.arange(1, 51)
    support_ok = bool(np.all(res.support_trace <= K))
    monotone = bool(np.all(np.diff(res.objective_trace) <= 0))
    slope = decay_slope(res.objective_trace)
    alpha = ConvexityCertificate.global_strong(model.prior_precision)
    one = ComparabilityFactor(2, 1.0, "sup_ratio_based", "closed_form")
    dominance = []
    for k in (1, 5, 10, 25, 50):
        w = res.weights_trace[k - 1]
        hat = model.with_weights(w)
        check = fisher_distance_mc(model.potential_grad, hat.potential_grad, nu, 2, 20_000, seed=k)
        cert = coreset_certificate(alpha, one, res.objective_trace[k - 1], check)
        dominance.append((k, cert.bound, gaussian_w2_closed_form(full, hat.posterior())))
    dom_ok = all(b >= w2 - SLACK for _, b, w2 in dominance)
    ok = support_ok and monotone and slope < 0 and dom_ok
    verdict(ok, f"support<=K {support_ok}, nonincreasing {monotone}, slope {slope:.3f}, "
                "bound/W2 at K=1,5,10,25,50: " + ", ".join(f"{b:.2e}/{w2:.2e}" for _, b, w2 in dominance))


def test_criterion_09_tv_soundness(verdict):
    rng = np.random.default_rng(109)
    worst = math.inf
    for _ in range(50):
        eta, hat = N(rng.normal(0, 0.5), rng.uniform(0.5, 2)), N(rng.normal(0, 0.5), rng.uniform(0.5, 2))
        F = fisher_distance_gaussian_pair(eta, hat)
        fe = FisherEstimate(2, F, 0.0, 0, None, "target", True, "closed_form")
        bound = tv_from_fisher(ConvexityCertificate.global_strong(hat.strong_convexity), 1.0, fe)
        worst = min(worst, bound - tv_numeric_1d(eta, hat))
    verdict(worst >= 0, f"min (TV bound - quadrature TV) over 50 pairs = {worst:.4f}")


def test_criterion_10_determinism(verdict):
    spec = load_spec(SPECS / "gaussian_shifted_nu.json")
    first = json.dumps(cmd_certify(spec)[1], indent=2)
    second = json.dumps(cmd_certify(load_spec(SPECS / "gaussian_shifted_nu.json"))[1], indent=2)
    eta, hat = StudentTMeasure(4.0), N(0.2, 1.3)
    nu = ReferenceMeasure.gaussian(N(0, 1.5))
    runs = {w: fisher_distance_mc(eta.potential_grad, hat.potential_grad, nu, 2, 60_000, 5, workers=w) for w in (1, 2, 8)}
    same = len({(r.value, r.std_error) for r in runs.values()}) == 1
    verdict(first == second and same, f"certify JSON identical: {first == second}; MC identical across workers 1/2/8: {same}")
