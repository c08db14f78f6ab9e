"""Turn Fisher distances into Wasserstein, total-variation and summary-error certificates.

Every bound here folds a Monte Carlo allowance ``k * std_error`` into the
Fisher value, records the slack multiplier ``k`` and carries explicit flags for
any assumption that the code could not check itself.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, linalg

from .core_model import GaussianMeasure, StudentTMeasure
from .fisher import ComparabilityFactor, FisherEstimate, sup_density_ratio_grid

STD_CONST = 0.5 * (math.sqrt(2.0) + math.sqrt(6.0))
COV_LINEAR = 2.0**1.5
COV_QUADRATIC = 1.0 + 3.0 * math.sqrt(2.0)

# Descriptive tags naming which bound produced a certificate.
FISHER_AT_TARGET = "fisher_at_target"
FISHER_AT_TARGET_TAIL = "fisher_at_target_tail_convexity_conditional"
FISHER_REFERENCE = "fisher_reference_measure"
LAPLACE_NONASYMPTOTIC = "laplace_nonasymptotic"
LAPLACE_ASYMPTOTIC = "laplace_asymptotic"
CORESET = "coreset_fisher_reference"

ALPHA_USER_ASSERTED = "alpha_user_asserted: tail convexity (K, R) gives existence of alpha but no formula"
P1_INTEGRABILITY_UNCHECKED = "integrability_unchecked: every eta-integrable continuous function assumed eta_hat-integrable"


class NoCertificate(RuntimeError):
    """No finite certificate can be issued (infinite comparability factor or Fisher value)."""


@dataclass(frozen=True)
class ConvexityCertificate:
    """Evidence that the approximation's potential is strongly convex.

    ``regime`` is ``"global_strong"`` (Hessian bounded below by ``alpha``
    everywhere) or ``"tail_strong"`` (Hessian bounded below by ``K`` outside the
    ball of radius ``R``). In the tail regime ``alpha`` is asserted by the user.
    """

    regime: str
    alpha: float
    K: Optional[float] = None
    R: Optional[float] = None
    alpha_provenance: str = "derived"

    def __post_init__(self):
        if not self.alpha > 0 or not math.isfinite(self.alpha):
            raise ValueError("alpha must be positive and finite")
        if self.regime == "tail_strong":
            if self.K is None or not self.K > 0 or self.R is None or self.R < 0:
                raise ValueError("tail regime needs K > 0 and R >= 0")
            if self.alpha_provenance != "user_supplied":
                raise ValueError("tail-regime alpha must be user-supplied")
        elif self.regime != "global_strong":
            raise ValueError(f"unknown regime {self.regime!r}")

    @classmethod
    def global_strong(cls, alpha: float, provenance: str = "derived") -> "ConvexityCertificate":
        return cls("global_strong", float(alpha), alpha_provenance=provenance)

    @classmethod
    def tail_strong(cls, K: float, R: float, alpha: float) -> "ConvexityCertificate":
        return cls("tail_strong", float(alpha), float(K), float(R), "user_supplied")

    @property
    def conditional(self) -> bool:
        return self.regime == "tail_strong"


CERT_FIELDS = ("theorem", "p", "bound", "alpha", "b_factor", "fisher_value", "fisher_stderr",
               "slack_k", "n_samples", "seed", "assumptions")


@dataclass(frozen=True)
class WassersteinCertificate:
    """A p-Wasserstein bound with everything needed to reproduce it."""

    theorem: str
    p: int
    bound: float
    alpha: float
    b_factor: float
    fisher_value: float
    fisher_stderr: float
    slack_k: float
    n_samples: Optional[int]
    seed: Optional[int]
    assumptions: tuple = ()
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ValueError("p must be 1 or 2")
        if not self.bound >= 0:
            raise ValueError("bound must be nonnegative")

    def to_dict(self) -> dict:
        out = {name: getattr(self, name) for name in CERT_FIELDS}
        out["assumptions"] = list(self.assumptions)
        if self.details:
            out["details"] = dict(self.details)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)


def _check_p(p):
    if p not in (1, 2):
        raise ValueError(f"p must be 1 or 2, got {p}")


def wasserstein_from_fisher(cert: ConvexityCertificate, fe: FisherEstimate, p: int, k: float = 3.0) -> WassersteinCertificate:
    """W_p bound from the (p, eta)-Fisher distance: ``(F + k se) / alpha``.

    Args:
        cert: Strong convexity of the approximation's potential.
        fe: Fisher estimate computed with the target as reference measure.
        p: 1 or 2; must match ``fe.p``.
        k: Number of standard errors added to the Fisher value.
    """
    _check_p(p)
    if not fe.nu_is_target:
        raise ValueError("this bound needs the Fisher distance under the target; use wasserstein_from_fisher_reference")
    if fe.p != p:
        raise ValueError(f"W_{p} bound needs the ({p}, eta)-Fisher distance, got p={fe.p}")
    assumptions = []
    theorem = FISHER_AT_TARGET
    if cert.conditional:
        theorem = FISHER_AT_TARGET_TAIL
        assumptions.append(ALPHA_USER_ASSERTED)
        if p == 1:
            assumptions.append(P1_INTEGRABILITY_UNCHECKED)
    return WassersteinCertificate(theorem, p, fe.upper(k) / cert.alpha, cert.alpha, 1.0, fe.value, fe.std_error,
                                  float(k), fe.n_samples, fe.seed, tuple(assumptions),
                                  {"nu": fe.nu_descriptor, "fisher_method": fe.method})


def wasserstein_from_fisher_reference(cert: ConvexityCertificate, B: ComparabilityFactor, fe: FisherEstimate, p: int,
                                      k: float = 3.0) -> WassersteinCertificate:
    """W_p bound from the (2, nu)-Fisher distance under a general reference measure.

    ``bound = B * (F + k se) / alpha``. Both ``p = 1`` and ``p = 2`` consume the
    ``p = 2`` Fisher distance; only the factor ``B`` changes with ``p``.

    Raises:
        NoCertificate: ``B`` or the Fisher value is infinite.
    """
    _check_p(p)
    if fe.p != 2:
        raise ValueError("the reference-measure bound needs the (2, nu)-Fisher distance")
    if B.p != p:
        raise ValueError(f"comparability factor is for p={B.p}, requested p={p}")
    if not B.finite:
        raise NoCertificate(f"comparability factor B_{p} is infinite for nu={fe.nu_descriptor}")
    if not math.isfinite(fe.upper(k)):
        raise NoCertificate("Fisher value is infinite")
    assumptions = [f"b_factor_provenance: {B.provenance}"]
    if cert.conditional:
        assumptions.append(ALPHA_USER_ASSERTED)
    return WassersteinCertificate(FISHER_REFERENCE, p, B.value * fe.upper(k) / cert.alpha, cert.alpha, B.value,
                                  fe.value, fe.std_error, float(k), fe.n_samples, fe.seed, tuple(assumptions),
                                  {"nu": fe.nu_descriptor, "b_kind": B.kind, "fisher_method": fe.method})


def tv_from_fisher(cert: ConvexityCertificate, sup_ratio: float, fe: FisherEstimate, k: float = 3.0) -> float:
    """Total-variation bound ``(2 alpha)^{-1/2} sup_ratio^{1/2} (F + k se)``, clamped to 1.

    ``sup_ratio`` is the supremum of ``d eta / d nu`` (1 when ``nu`` is the
    target). The same number bounds every interval-probability error.
    """
    if fe.p != 2:
        raise ValueError("the TV bound needs the (2, nu)-Fisher distance")
    if not math.isfinite(sup_ratio) or sup_ratio < 0:
        raise NoCertificate("density ratio supremum must be finite")
    return min(1.0, math.sqrt(sup_ratio / (2.0 * cert.alpha)) * fe.upper(k))


# ---------------------------------------------------------------------------
# Summary-statistic errors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SummaryErrorReport:
    """Bounds on the error of every reported summary, per coordinate.

    ``None`` marks a bound that needs an input that was not provided (a W_2
    bound, covariance norms or a density cap).
    """

    eps1: float
    eps2: Optional[float]
    mean_bound: float
    mad_bound: float
    std_bound: Optional[float]
    cov_opnorm_bound: Optional[float]
    cov_opnorm_bound_simple: Optional[float]
    interval_bound_density: Optional[float]
    interval_bound_tv: Optional[float]
    density_cap: Optional[float]
    interval_bound_best: Optional[str]

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def moment_error_report(eps1: float, eps2: float | None = None, cov_opnorm_eta: float | None = None,
                        cov_opnorm_hat: float | None = None, density_cap: float | None = None,
                        tv_bound: float | None = None) -> SummaryErrorReport:
    """Summary-error bounds from Wasserstein bounds ``W_1 <= eps1`` and ``W_2 <= eps2``.

    Args:
        eps1: W_1 bound. Replaced by ``eps2`` when that is smaller, since
            ``W_1 <= W_2``.
        eps2: Optional W_2 bound; needed for std and covariance errors.
        cov_opnorm_eta: Operator norm of the target covariance, if known.
        cov_opnorm_hat: Operator norm of the approximation covariance.
        density_cap: Upper bound on the target's Lebesgue density.
        tv_bound: Optional total-variation bound, reported as a second
            interval-probability route.

    Returns:
        SummaryErrorReport. Interval bounds are clamped to 1 and
        ``interval_bound_best`` names the tighter route.
    """
    if eps1 < 0 or (eps2 is not None and eps2 < 0):
        raise ValueError("Wasserstein bounds must be nonnegative")
    if eps2 is not None:
        eps1 = min(eps1, eps2)
    std_bound = cov = cov_simple = None
    if eps2 is not None:
        std_bound = STD_CONST * eps2
        norms = [v for v in (cov_opnorm_eta, cov_opnorm_hat) if v is not None]
        if norms:
            root = math.sqrt(min(norms))
            cov = COV_LINEAR * root * eps2 + COV_QUADRATIC * eps2**2
            cov_simple = 3.0 * root * eps2 + 5.25 * eps2**2
    interval_density = None
    if density_cap is not None:
        interval_density = min(1.0, 2.0 * math.sqrt(2.0 * density_cap * eps1))
    interval_tv = None if tv_bound is None else min(1.0, tv_bound)
    best = None
    if interval_density is not None or interval_tv is not None:
        pairs = [(v, name) for v, name in ((interval_density, "density_cap"), (interval_tv, "total_variation")) if v is not None]
        best = min(pairs)[1]
    return SummaryErrorReport(eps1, eps2, eps1, 2.0 * eps1, std_bound, cov, cov_simple, interval_density,
                              interval_tv, density_cap, best)


# ---------------------------------------------------------------------------
# Gaussian and Student-t closed forms
# ---------------------------------------------------------------------------


def gaussian_w2_closed_form(eta: GaussianMeasure, eta_hat: GaussianMeasure) -> float:
    """Exact 2-Wasserstein distance between Gaussians.

    Univariate: ``sqrt(dmu^2 + dsigma^2)``. Multivariate: the Bures formula
    ``|dm|^2 + tr(S1 + S2 - 2 (S2^{1/2} S1 S2^{1/2})^{1/2})``.
    """
    if eta.dim != eta_hat.dim:
        raise ValueError("dimension mismatch")
    dm = eta.mean - eta_hat.mean
    if eta.dim == 1:
        ds = math.sqrt(eta.covariance[0, 0]) - math.sqrt(eta_hat.covariance[0, 0])
        return math.hypot(float(dm[0]), ds)
    S1, S2 = np.asarray(eta.covariance), np.asarray(eta_hat.covariance)
    r2 = np.real(linalg.sqrtm(S2))
    cross = np.real(linalg.sqrtm(r2 @ S1 @ r2))
    val = float(dm @ dm + np.trace(S1 + S2 - 2.0 * cross))
    return math.sqrt(max(0.0, val))


def gaussian_reference_constant(sigma: float, eps: float, rho: float) -> float:
    """``rho^{1/2} exp(eps^2 / (2 (rho - 1) sigma^2))``, the squared p = 2 factor for a shifted, widened Gaussian ``nu``."""
    if not rho > 1:
        raise ValueError("rho must exceed 1")
    return math.sqrt(rho) * math.exp(eps**2 / (2.0 * (rho - 1.0) * sigma**2))


def gaussian_reference_bound(sigma: float, sigma_hat: float, dmu: float, eps: float = 0.0, rho: float | None = None) -> float:
    """Closed-form bound on W_2^2 between univariate Gaussians.

    With ``r = sigma_hat / sigma``, ``dsigma = sigma - sigma_hat`` and
    ``dmu = mean_eta - mean_hat``:

    * ``rho=None`` (reference measure equal to the target):
      ``dmu^2 + (1 + r)^2 dsigma^2``.
    * ``rho > 1`` (reference ``N(mean_eta + eps, rho sigma^2)``):
      ``C {r^2 (r^2 + 1) eps^2 + (1 - r^2)(eps - dmu)^2 + r^2 dmu^2 + rho (r + 1)^2 dsigma^2}``
      with ``C`` from :func:`gaussian_reference_constant`.

    The second expression is conservative: it exceeds the exact composition
    :func:`gaussian_reference_bound_exact` with ``dmu`` negated by
    ``2 C r^2 eps^2``.
    """
    r = sigma_hat / sigma
    dsig = sigma - sigma_hat
    if rho is None:
        if eps != 0:
            raise ValueError("the reference-equals-target form has no shift")
        return dmu**2 + (1.0 + r) ** 2 * dsig**2
    C = gaussian_reference_constant(sigma, eps, rho)
    return C * (r**2 * (r**2 + 1.0) * eps**2 + (1.0 - r**2) * (eps - dmu) ** 2 + r**2 * dmu**2
                + rho * (r + 1.0) ** 2 * dsig**2)


def gaussian_reference_bound_exact(sigma: float, sigma_hat: float, dmu: float, eps: float = 0.0, rho: float | None = None) -> float:
    """W_2^2 bound obtained by composing the exact Gaussian Fisher distance with the exact factor.

    ``C [ (dmu + (1 - r^2) eps)^2 + rho (r + 1)^2 dsigma^2 ]`` with ``C = 1`` and
    ``rho = 1`` when the reference measure is the target.
    """
    r = sigma_hat / sigma
    dsig = sigma - sigma_hat
    if rho is None:
        return (dmu + (1.0 - r**2) * eps) ** 2 + (r + 1.0) ** 2 * dsig**2
    C = gaussian_reference_constant(sigma, eps, rho)
    return C * ((dmu + (1.0 - r**2) * eps) ** 2 + rho * (r + 1.0) ** 2 * dsig**2)


def t_reference_bound(h: float) -> float:
    """Bound on W_2^2 between T_h and N(0, 1) with the target as reference: ``10 / (h^2 + h - 6)``."""
    if not h > 2:
        raise ValueError("h must exceed 2")
    return 10.0 / (h * h + h - 6.0)


def t_fisher_sq_quadrature(h: float, nu) -> float:
    """``E_nu[(grad U_t(theta) - theta)^2]`` for target T_h and approximation N(0, 1), by quadrature."""
    target = StudentTMeasure(h)

    def integrand(x):
        d = target.potential_grad(x) - x
        return d * d * float(nu.pdf(x))

    val, _ = integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-11, limit=500)
    return val


def t_reference_measure_bound(h: float, h0: float) -> float:
    """Bound on W_2^2 between T_h and N(0, 1) with reference measure T_{h0}.

    ``sup(T_h / T_{h0}) * E_{T_{h0}}[(grad U - theta)^2]`` (the approximation is
    1-strongly convex). Both factors come from univariate quadrature.
    Returns ``inf`` when the density ratio is unbounded (``h <= h0``).
    """
    if not h > 2:
        raise ValueError("h must exceed 2")
    if not h0 > 2:
        raise ValueError("reference dof must exceed 2 for a finite Fisher integral")
    nu = StudentTMeasure(h0)
    sup = sup_density_ratio_grid(StudentTMeasure(h), nu)
    if not math.isfinite(sup):
        return math.inf
    return sup * t_fisher_sq_quadrature(h, nu)
