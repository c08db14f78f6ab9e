"""KL, chi-square, Hellinger and total-variation divergences.

Closed forms cover Gaussian pairs. Univariate quadrature handles everything
else that exposes ``logpdf`` together with ``ppf``/``isf``. A divergence that
does not converge is returned as ``inf`` instead of raising, because heavy-tailed
examples deliberately sit near the integrability boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .core_model import GaussianMeasure

KINDS = ("KL", "chi2", "hellinger_sq", "tv")


@dataclass(frozen=True)
class DivergenceValue:
    """A divergence value together with how it was obtained."""

    kind: str
    value: float
    method: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown divergence kind {self.kind!r}")
        if self.method not in ("closed_form", "quadrature"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.value >= 0:
            raise ValueError("divergence values are nonnegative")

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)


# ---------------------------------------------------------------------------
# Gaussian closed forms
# ---------------------------------------------------------------------------


def _mv(g: GaussianMeasure):
    if g.dim != 1:
        raise ValueError("expected a univariate Gaussian")
    return float(g.mean[0]), float(g.covariance[0, 0])


def kl_gaussian(eta_hat: GaussianMeasure, eta: GaussianMeasure) -> float:
    """KL(eta_hat || eta) for univariate Gaussians."""
    m1, v1 = _mv(eta_hat)
    m2, v2 = _mv(eta)
    return 0.5 * (v1 / v2 - 1.0 + math.log(v2 / v1) + (m1 - m2) ** 2 / v2)


@dataclass(frozen=True)
class KLPathologyA:
    """Gaussian pair with KL(eta_hat || eta) = delta but a mean gap that grows like exp(delta)."""

    delta: float
    sigma_hat: float
    eta_hat: GaussianMeasure
    eta: GaussianMeasure

    @property
    def mean_gap(self) -> float:
        return abs(float(self.eta.mean[0] - self.eta_hat.mean[0]))


def construct_kl_pathology_A(delta: float, sigma_hat: float) -> KLPathologyA:
    """Build the pair with ``sigma_eta = exp(delta) sigma_hat`` and squared mean gap ``sigma_hat^2 (exp(2 delta) - 1)``.

    The approximation is centred at zero and the target mean sits to the right.
    """
    if not delta > 0 or not sigma_hat > 0:
        raise ValueError("delta and sigma_hat must be positive")
    gap = sigma_hat * math.sqrt(math.expm1(2.0 * delta))
    sigma = math.exp(delta) * sigma_hat
    return KLPathologyA(
        delta=float(delta),
        sigma_hat=float(sigma_hat),
        eta_hat=GaussianMeasure.univariate(0.0, sigma_hat),
        eta=GaussianMeasure.univariate(gap, sigma),
    )


def kl_mean_error_bound(delta: float, var_hat: float, var: float) -> float:
    """Bound on ``|mean_hat - mean|`` implied by KL(eta_hat || eta) = delta.

    Returns ``inf`` when ``delta >= 1``, where the guarantee is vacuous.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if delta >= 1:
        return math.inf
    return math.sqrt((var_hat + var) * delta / (1.0 - delta))


def kl_interval_error_bound(delta: float) -> float:
    """Bound on any interval-probability error from a KL value (Pinsker), clamped to 1."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return min(1.0, math.sqrt(delta / 2.0))


def kl_gaussian_t_upper(h: float) -> float:
    """Upper bound on KL(N(0,1) || T_h) evaluated exactly as the closed-form expression reads.

    ``log[Gamma(h/2) sqrt(h) / Gamma((h+1)/2)] - log(2e)/2 + (h+1) log(1 + 1/h) / 2``.
    """
    if h < 2:
        raise ValueError("h must be >= 2")
    return (
        special.gammaln(h / 2.0)
        + 0.5 * math.log(h)
        - special.gammaln((h + 1.0) / 2.0)
        - 0.5 * math.log(2.0 * math.e)
        + 0.5 * (h + 1.0) * math.log1p(1.0 / h)
    )


def chi2_gaussian(xi: GaussianMeasure, nu: GaussianMeasure) -> float:
    """chi^2(xi || nu) for Gaussians of any dimension; ``inf`` when not integrable.

    Uses ``1 + chi^2 = int xi^2 / nu``. With ``A = 2 S1^{-1} - S2^{-1}`` this is
    finite iff ``A`` is positive definite.
    """
    if xi.dim != nu.dim:
        raise ValueError("dimension mismatch")
    P1, P2 = np.asarray(xi.precision), np.asarray(nu.precision)
    m1, m2 = xi.mean, nu.mean
    A = 2.0 * P1 - P2
    A = 0.5 * (A + A.T)
    eig = np.linalg.eigvalsh(A)
    if eig[0] <= 0:
        return math.inf
    b = 2.0 * P1 @ m1 - P2 @ m2
    c = 2.0 * m1 @ P1 @ m1 - m2 @ P2 @ m2
    logdet1 = float(np.linalg.slogdet(xi.covariance)[1])
    logdet2 = float(np.linalg.slogdet(nu.covariance)[1])
    logdetA = float(np.sum(np.log(eig)))
    log_one_plus = 0.5 * logdet2 - logdet1 - 0.5 * logdetA + 0.5 * float(b @ np.linalg.solve(A, b)) - 0.5 * c
    if log_one_plus > 700:
        return math.inf
    return max(0.0, math.expm1(log_one_plus))


# ---------------------------------------------------------------------------
# Univariate quadrature
# ---------------------------------------------------------------------------


def _support(*dists, tail=1e-10):
    lo = min(float(d.ppf(tail)) for d in dists)
    hi = max(float(d.isf(tail)) for d in dists)
    return lo, hi


def _bulk(*dists):
    """Centre and length scale of the narrowest law, used to place sinh-spaced nodes."""
    center = float(dists[0].ppf(0.5))
    scale = min(float(d.isf(0.25) - d.ppf(0.25)) for d in dists) / 1.349
    return center, scale


def _adaptive_trapezoid(fn, lo, hi, center, scale, tol=1e-7, n0=513, max_doublings=12):
    """Trapezoid rule on ``x = center + scale sinh(s)``, doubling until successive values agree."""
    s_lo = math.asinh((lo - center) / scale)
    s_hi = math.asinh((hi - center) / scale)

    def total(n):
        s = np.linspace(s_lo, s_hi, n)
        x = center + scale * np.sinh(s)
        return float(integrate.trapezoid(fn(x) * scale * np.cosh(s), s))

    n = n0
    prev = total(n)
    cur = prev
    for _ in range(max_doublings):
        n = 2 * n - 1
        cur = total(n)
        if not math.isfinite(cur) or abs(cur - prev) < tol:
            return cur
        prev = cur
    return cur


def _tail_extended(fn, range_dists, all_dists, tol=1e-7):
    """Integrate ``fn`` over growing quantile ranges; ``inf`` if the value keeps growing."""
    center, scale = _bulk(*all_dists)
    values = []
    for tail in (1e-10, 1e-20, 1e-40):
        lo, hi = _support(*range_dists, tail=tail)
        values.append(_adaptive_trapezoid(fn, lo, hi, center, scale, tol=tol))
        if not math.isfinite(values[-1]):
            return math.inf
    if abs(values[-1] - values[0]) > max(1e-6, 1e-6 * abs(values[0])):
        return math.inf
    return values[0]


def kl_numeric_1d(p, q) -> float:
    """KL(p || q) by quadrature over the central range of ``p``.

    ``p`` and ``q`` expose ``logpdf``, ``ppf`` and ``isf`` (Gaussian, Student-t,
    quadrature posteriors). Returns ``inf`` when the integral does not settle
    as the range is widened.
    """
    def integrand(x):
        lp, lq = p.logpdf(x), q.logpdf(x)
        with np.errstate(invalid="ignore", over="ignore"):
            out = np.exp(lp) * (lp - lq)
        return np.where(np.isneginf(lp), 0.0, out)

    return max(0.0, _tail_extended(integrand, (p,), (p, q)))


def chi2_divergence(xi, nu, method: str = "auto") -> DivergenceValue:
    """chi^2(xi || nu).

    Args:
        xi, nu: The two laws.
        method: ``"auto"`` uses the closed form for Gaussian pairs and
            univariate quadrature otherwise; ``"quadrature"`` forces quadrature.
    """
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto" and isinstance(xi, GaussianMeasure) and isinstance(nu, GaussianMeasure):
        return DivergenceValue("chi2", chi2_gaussian(xi, nu), "closed_form")

    def integrand(x):
        with np.errstate(over="ignore"):
            return np.exp(2.0 * xi.logpdf(x) - nu.logpdf(x))

    one_plus = _tail_extended(integrand, (xi,), (xi, nu))
    return DivergenceValue("chi2", max(0.0, one_plus - 1.0), "quadrature")


def tv_numeric_1d(p, q) -> float:
    """Total variation ``0.5 int |p - q|`` by quadrature."""
    def integrand(x):
        return np.abs(np.exp(p.logpdf(x)) - np.exp(q.logpdf(x)))

    lo, hi = _support(p, q)
    return min(1.0, 0.5 * _adaptive_trapezoid(integrand, lo, hi, *_bulk(p, q)))


def hellinger_numeric_1d(p, q) -> float:
    """Squared Hellinger distance ``int (sqrt p - sqrt q)^2`` (at most 2) by quadrature."""
    def integrand(x):
        return (np.exp(0.5 * p.logpdf(x)) - np.exp(0.5 * q.logpdf(x))) ** 2

    lo, hi = _support(p, q)
    return min(2.0, _adaptive_trapezoid(integrand, lo, hi, *_bulk(p, q)))
