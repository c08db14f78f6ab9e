"""Fisher distances between potentials and the factors that convert them to Wasserstein bounds.

The (p, nu)-Fisher distance between a target with potential ``U`` and an
approximation with potential ``U_hat`` is

    F_{p,nu} = ( E_{theta ~ nu} ||grad U(theta) - grad U_hat(theta)||^p )^{1/p}.

Only gradients enter, so unnormalized posteriors are fine.

Monte Carlo draws come from a counter-based generator (Philox): draw ``i`` is a
pure function of ``(seed, i)``. Work is cut into fixed-size chunks regardless of
how many threads run them, and the final reduction runs over the reassembled
array, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .core_model import GaussianMeasure, StudentTMeasure
from .divergences import chi2_divergence, chi2_gaussian

CHUNK = 8192
_TWO_POW_M53 = 2.0**-53


class FisherError(RuntimeError):
    pass


def counter_uniforms(seed: int, start: int, stop: int, dim: int) -> np.ndarray:
    """Uniforms in (0, 1) for draws ``start..stop-1``, shape ``(stop - start, dim)``.

    Each draw consumes ``ceil(dim / 4)`` Philox blocks of four 64-bit words.
    The top 53 bits of each word are mapped to ``(k + 0.5) 2^-53``, which never
    hits 0 or 1.
    """
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    blocks = -(-dim // 4)
    bitgen = np.random.Philox(key=int(seed))
    bitgen.advance(start * blocks)
    raw = bitgen.random_raw((stop - start) * blocks * 4).reshape(stop - start, blocks * 4)[:, :dim]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_POW_M53


@dataclass(frozen=True)
class ReferenceMeasure:
    """Sampling law ``nu`` for the Fisher integral.

    Args:
        transform: Maps an ``(m, dim)`` array of uniforms to ``(m, dim)`` draws.
        dim: Dimension of the draws.
        descriptor: Human-readable tag recorded in estimates and certificates.
        density: Optional measure object (Gaussian, Student-t, quadrature
            posterior) used when a comparability factor needs the density.
        is_target: True when ``nu`` is the target itself, in which case no
            comparability factor is needed.
    """

    transform: Callable[[np.ndarray], np.ndarray]
    dim: int
    descriptor: str
    density: object = None
    is_target: bool = False

    def draws(self, start: int, stop: int, seed: int) -> np.ndarray:
        return np.asarray(self.transform(counter_uniforms(seed, start, stop, self.dim)), dtype=float).reshape(stop - start, self.dim)

    @classmethod
    def gaussian(cls, g: GaussianMeasure, is_target: bool = False, descriptor: str | None = None) -> "ReferenceMeasure":
        if descriptor is None:
            descriptor = "target" if is_target else repr(g)
        return cls(g.transform_uniforms, g.dim, descriptor, g, is_target)

    @classmethod
    def student_t(cls, t: StudentTMeasure, is_target: bool = False, descriptor: str | None = None) -> "ReferenceMeasure":
        if descriptor is None:
            descriptor = "target" if is_target else f"student_t(dof={t.dof:g}, loc={t.loc:g}, scale={t.scale:g})"
        return cls(t.transform_uniforms, 1, descriptor, t, is_target)

    @classmethod
    def from_measure(cls, m, is_target: bool = False, descriptor: str = "custom") -> "ReferenceMeasure":
        """Wrap any object with ``transform_uniforms`` (for example a quadrature posterior)."""
        return cls(m.transform_uniforms, getattr(m, "dim", 1), "target" if is_target else descriptor, m, is_target)


@dataclass(frozen=True)
class FisherEstimate:
    """A Fisher distance value with its Monte Carlo standard error (zero for closed forms)."""

    p: int
    value: float
    std_error: float
    n_samples: int
    seed: Optional[int]
    nu_descriptor: str
    nu_is_target: bool = False
    method: str = "monte_carlo"

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ValueError("p must be 1 or 2")
        if not (self.value >= 0 and self.std_error >= 0):
            raise ValueError("value and std_error must be nonnegative")

    def upper(self, k: float) -> float:
        return self.value + k * self.std_error


def _chunk_stats(grad_u, grad_u_hat, nu, p, seed, start, stop):
    theta = nu.draws(start, stop, seed)
    diff = np.asarray(grad_u(theta), dtype=float).reshape(theta.shape) - np.asarray(grad_u_hat(theta), dtype=float).reshape(theta.shape)
    bad = ~np.all(np.isfinite(diff), axis=1)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise FisherError(f"non-finite gradient at draw {start + i}, theta={theta[i].tolist()}")
    norms = np.sqrt(np.sum(diff * diff, axis=1))
    return norms if p == 1 else norms * norms


def fisher_distance_mc(grad_u: Callable, grad_u_hat: Callable, nu: ReferenceMeasure, p: int = 2,
                       n: int = 100_000, seed: int = 0, workers: int = 1) -> FisherEstimate:
    """Monte Carlo estimate of the (p, nu)-Fisher distance.

    Args:
        grad_u: Gradient of the target potential, batched over ``(m, d)`` inputs.
        grad_u_hat: Gradient of the approximation's potential, same signature.
        nu: Reference measure to draw from.
        p: 1 or 2.
        n: Number of draws (at least 100).
        seed: Nonnegative integer key of the counter-based stream.
        workers: Threads used to evaluate chunks. Does not affect the result.

    Returns:
        FisherEstimate. For ``p = 2`` the standard error comes from the delta
        method applied to the mean of squared norms.

    Raises:
        FisherError: a gradient difference is non-finite; the message names the
            draw index and the point.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if n < 100:
        raise ValueError("n must be at least 100")
    bounds = [(a, min(a + CHUNK, n)) for a in range(0, n, CHUNK)]
    job = lambda ab: _chunk_stats(grad_u, grad_u_hat, nu, p, seed, ab[0], ab[1])  # noqa: E731
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, bounds))
    else:
        parts = [job(ab) for ab in bounds]
    stats = np.concatenate(parts)
    m = float(np.mean(stats))
    se_m = float(np.std(stats, ddof=1)) / math.sqrt(n)
    if p == 1:
        value, se = m, se_m
    else:
        value = math.sqrt(m)
        se = se_m / (2.0 * value) if value > 0 else 0.0
    return FisherEstimate(p, value, se, n, seed, nu.descriptor, nu.is_target)


# ---------------------------------------------------------------------------
# Closed forms for Gaussian targets and approximations
# ---------------------------------------------------------------------------


def fisher_distance_gaussian_pair(eta: GaussianMeasure, eta_hat: GaussianMeasure, nu: GaussianMeasure | None = None) -> float:
    """Exact (2, nu)-Fisher distance between Gaussians for Gaussian ``nu`` (default ``nu = eta``).

    The gradient difference is affine, ``D theta + c`` with ``D = P - P_hat``,
    so its second moment under ``N(m, S)`` is ``tr(D S D^T) + ||D m + c||^2``.
    """
    nu = eta if nu is None else nu
    P, Ph = np.asarray(eta.precision), np.asarray(eta_hat.precision)
    D = P - Ph
    c = Ph @ eta_hat.mean - P @ eta.mean
    shift = D @ nu.mean + c
    return math.sqrt(max(0.0, float(np.trace(D @ nu.covariance @ D.T) + shift @ shift)))


def fisher_distance_gaussian_closed(eta: GaussianMeasure, eta_hat: GaussianMeasure, eps: float, rho: float) -> float:
    """(2, nu)-Fisher distance for univariate Gaussians with ``nu = N(mean_eta + eps, rho var_eta)``.

    Returns the distance itself, the square root of

        [rho s^2 (s_hat^2 - s^2)^2 + (s^2 (dmu + eps) - s_hat^2 eps)^2] / (s_hat^4 s^4)

    with ``dmu = mean_eta - mean_hat``. The squared reading was confirmed
    against :func:`fisher_distance_mc` (see the test suite).
    """
    if not rho > 1:
        raise ValueError("rho must exceed 1")
    mu, s2 = float(eta.mean[0]), float(eta.covariance[0, 0])
    mu_h, sh2 = float(eta_hat.mean[0]), float(eta_hat.covariance[0, 0])
    dmu = mu - mu_h
    num = rho * s2 * (sh2 - s2) ** 2 + (s2 * (dmu + eps) - sh2 * eps) ** 2
    return math.sqrt(num / (sh2**2 * s2**2))


# ---------------------------------------------------------------------------
# Comparability factors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparabilityFactor:
    """Multiplier turning a (2, nu)-Fisher distance into a p-Wasserstein bound.

    ``p = 1`` uses ``sqrt(1 + chi^2(eta || nu))``; ``p = 2`` uses the square root
    of the supremum of the density ratio ``d eta / d nu``. ``value = inf`` means
    no finite factor exists.
    """

    p: int
    value: float
    kind: str
    provenance: str
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ValueError("p must be 1 or 2")
        if self.kind not in ("chi2_based", "sup_ratio_based"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if (self.p == 1) != (self.kind == "chi2_based"):
            raise ValueError("p = 1 pairs with chi2_based and p = 2 with sup_ratio_based")
        if self.provenance not in ("closed_form", "quadrature", "user_supplied"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if not self.value >= 0:
            raise ValueError("comparability factor must be nonnegative")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


def sup_density_ratio_gaussian(eta: GaussianMeasure, nu: GaussianMeasure) -> float:
    """``sup_theta eta(theta) / nu(theta)`` for Gaussians; ``inf`` when unbounded.

    The log ratio is a concave quadratic exactly when ``cov_nu - cov_eta`` is
    positive definite, with maximum
    ``log sqrt(det cov_nu / det cov_eta) + delta^T (cov_nu - cov_eta)^{-1} delta / 2``.
    Equal covariances give a bounded ratio only for equal means.
    """
    if eta.dim != nu.dim:
        raise ValueError("dimension mismatch")
    S1, S2 = np.asarray(eta.covariance), np.asarray(nu.covariance)
    delta = eta.mean - nu.mean
    if np.allclose(S1, S2, rtol=1e-13, atol=0.0):
        return 1.0 if np.allclose(delta, 0.0, atol=0.0) else math.inf
    gap = S2 - S1
    if np.linalg.eigvalsh(0.5 * (gap + gap.T))[0] <= 0:
        return math.inf
    log_sup = 0.5 * (np.linalg.slogdet(S2)[1] - np.linalg.slogdet(S1)[1]) + 0.5 * float(delta @ np.linalg.solve(gap, delta))
    return math.exp(log_sup) if log_sup < 700 else math.inf


def sup_density_ratio_grid(eta, nu, n_grid: int = 4096, tail: float = 1e-10) -> float:
    """Supremum of ``eta / nu`` for univariate laws by grid search plus local polishing.

    The grid spans the ``tail`` quantile range of ``nu``. To rule out a
    supremum escaping to infinity the log ratio is also evaluated far out in
    both tails (``nu`` quantiles ``1e-20``, ``1e-40``, ``1e-80``); if it keeps
    rising there the ratio is declared unbounded and ``inf`` is returned.
    """
    def log_ratio(x):
        return np.asarray(eta.logpdf(x), dtype=float) - np.asarray(nu.logpdf(x), dtype=float)

    lo, hi = float(nu.ppf(tail)), float(nu.isf(tail))
    x = np.linspace(lo, hi, n_grid)
    lr = log_ratio(x)
    i = int(np.argmax(lr))
    best = float(lr[i])
    for side, edge in ((-1, lo), (1, hi)):
        prev = float(log_ratio(np.array([edge]))[0])
        for far_tail in (1e-20, 1e-40, 1e-80):
            far = float(nu.ppf(far_tail)) if side < 0 else float(nu.isf(far_tail))
            val = float(log_ratio(np.array([far]))[0])
            if not math.isfinite(val) or (val > prev and val > best):
                return math.inf
            prev = val
    a, b = x[max(i - 1, 0)], x[min(i + 1, n_grid - 1)]
    if b > a:
        res = optimize.minimize_scalar(lambda v: -float(log_ratio(np.array([v]))[0]), bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return math.exp(best)


def comparability_factor(p: int, eta, nu, user_value: float | None = None) -> ComparabilityFactor:
    """Comparability factor for target ``eta`` and reference ``nu``.

    Args:
        p: 1 (chi-square route) or 2 (density-ratio route).
        eta: Target measure, or None when only ``user_value`` is available.
        nu: Reference measure; a :class:`ReferenceMeasure` flagged as the
            target gives factor 1.
        user_value: Overrides every computation and is tagged ``user_supplied``.

    Returns:
        ComparabilityFactor with provenance ``closed_form`` (Gaussian pairs or
        ``nu = eta``), ``quadrature`` (univariate non-Gaussian laws) or
        ``user_supplied``. ``value = inf`` when no finite factor exists.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    kind = "chi2_based" if p == 1 else "sup_ratio_based"
    if user_value is not None:
        return ComparabilityFactor(p, float(user_value), kind, "user_supplied")
    if isinstance(nu, ReferenceMeasure):
        if nu.is_target:
            return ComparabilityFactor(p, 1.0, kind, "closed_form", {"reason": "nu is the target"})
        nu = nu.density
    if nu is None or eta is None:
        raise ValueError("comparability factor needs densities for eta and nu, or a user-supplied value")
    if nu is eta:
        return ComparabilityFactor(p, 1.0, kind, "closed_form", {"reason": "nu is the target"})
    if isinstance(eta, GaussianMeasure) and isinstance(nu, GaussianMeasure):
        if p == 1:
            chi2 = chi2_gaussian(eta, nu)
            return ComparabilityFactor(1, math.sqrt(1.0 + chi2), kind, "closed_form", {"chi2": chi2})
        sup = sup_density_ratio_gaussian(eta, nu)
        return ComparabilityFactor(2, math.sqrt(sup), kind, "closed_form", {"sup_ratio": sup})
    if getattr(eta, "dim", 1) != 1 or getattr(nu, "dim", 1) != 1:
        raise ValueError("multivariate non-Gaussian comparability factors must be user-supplied")
    if p == 1:
        chi2 = chi2_divergence(eta, nu).value
        return ComparabilityFactor(1, math.sqrt(1.0 + chi2), kind, "quadrature", {"chi2": chi2})
    sup = sup_density_ratio_grid(eta, nu)
    return ComparabilityFactor(2, math.sqrt(sup), kind, "quadrature", {"sup_ratio": sup})
