"""Laplace approximation with certified Wasserstein error.

The Gaussian is centred at the MAP ``theta*`` with covariance ``(-H*)^{-1}``,
where ``H*`` is the Hessian of the log density at ``theta*``. The eigenvalues
``lambda`` of that covariance feed the constants ``L_1 = ||lambda||_1`` and
``L_2 = (||lambda||_1^2 + 2 ||lambda||_2^2)^{1/2}``; together with a uniform
third-derivative bound ``M`` and the strong convexity ``alpha`` of the
negative log density they give ``W_p <= L_p M / alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certificates import LAPLACE_ASYMPTOTIC, LAPLACE_NONASYMPTOTIC, WassersteinCertificate
from .core_model import GaussianMeasure


class LaplaceError(RuntimeError):
    pass


def _fns(model):
    logf = getattr(model, "log_density_unnorm", None) or model.log_density
    hess = model.hess
    if hess is None:
        raise LaplaceError("model has no Hessian oracle")
    return logf, model.grad, hess


def find_map(model, init=None, tol: float = 1e-10, max_iter: int = 200) -> np.ndarray:
    """Maximize a strongly log-concave density by damped Newton iterations.

    Each Newton step is halved until the log density does not decrease (up to
    rounding). Accepting on a shrinking gradient norm alone can cycle when the
    likelihood saturates far from the mode, so ascent is the only criterion.

    Args:
        model: Object with ``dim``, ``log_density`` (or ``log_density_unnorm``),
            ``grad`` and ``hess``.
        init: Starting point; zero by default.
        tol: Stop once the gradient norm is at most ``tol``.
        max_iter: Newton iteration cap.

    Raises:
        LaplaceError: the Hessian is not negative definite at an iterate, or
            the iteration cap is hit.
    """
    logf, grad, hess = _fns(model)
    theta = np.zeros(model.dim) if init is None else np.array(init, dtype=float).reshape(model.dim)
    f = float(logf(theta))
    g = np.asarray(grad(theta), dtype=float).reshape(model.dim)
    for _ in range(max_iter):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol:
            return theta
        H = np.atleast_2d(np.asarray(hess(theta), dtype=float))
        try:
            L = np.linalg.cholesky(-0.5 * (H + H.T))
        except np.linalg.LinAlgError:
            raise LaplaceError(f"Hessian is not negative definite at theta={theta.tolist()}; log density is not strongly concave") from None
        step = np.linalg.solve(L.T, np.linalg.solve(L, g))
        t = 1.0
        while True:
            cand = theta + t * step
            fc = float(logf(cand))
            if fc >= f - 1e-12 * (1.0 + abs(f)):
                break
            t *= 0.5
            if t < 1e-12:
                raise LaplaceError("line search failed to make progress")
        theta, f = cand, fc
        g = np.asarray(grad(theta), dtype=float).reshape(model.dim)
    if float(np.linalg.norm(g)) <= tol:
        return theta
    raise LaplaceError(f"Newton iterations did not converge in {max_iter} steps (gradient norm {np.linalg.norm(g):.3e})")


@dataclass(frozen=True)
class LaplaceApproximation:
    """Gaussian fitted at the mode.

    Attributes:
        theta_star: The MAP.
        H_star: Hessian of the log density at the MAP (negative definite).
        lambdas: Eigenvalues of ``(-H_star)^{-1}``, ascending, all positive.
        gaussian: ``N(theta_star, (-H_star)^{-1})``.
    """

    theta_star: np.ndarray
    H_star: np.ndarray
    lambdas: np.ndarray
    gaussian: GaussianMeasure


def laplace_fit(model, init=None, tol: float = 1e-10) -> LaplaceApproximation:
    theta = find_map(model, init=init, tol=tol)
    H = np.atleast_2d(np.asarray(model.hess(theta), dtype=float))
    H = 0.5 * (H + H.T)
    curv, vecs = np.linalg.eigh(-H)
    if not np.all(np.isfinite(curv)):
        raise LaplaceError("eigensolver returned non-finite values")
    if curv[0] <= 0:
        raise LaplaceError(f"Hessian at the mode has a nonnegative eigenvalue {-curv[0]:g}")
    lambdas = np.sort(1.0 / curv)
    cov = (vecs / curv) @ vecs.T
    return LaplaceApproximation(theta, H, lambdas, GaussianMeasure(theta, 0.5 * (cov + cov.T)))


def gaussian_norm_moments(lambdas) -> tuple[float, float]:
    """``(E||X||^2, E||X||^4)`` for ``X ~ N(0, diag(lambdas))``: ``||lambda||_1`` and ``2 ||lambda||_2^2 + ||lambda||_1^2``."""
    lam = np.asarray(lambdas, dtype=float)
    s1 = float(np.sum(lam))
    return s1, 2.0 * float(lam @ lam) + s1 * s1


def lp_lambda(lambdas) -> tuple[float, float]:
    """``(L_1, L_2)`` for the eigenvalues of the Laplace covariance."""
    lam = np.asarray(lambdas, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("eigenvalues must be positive")
    m2, m4 = gaussian_norm_moments(lam)
    return m2, math.sqrt(m4)


@dataclass(frozen=True)
class ThirdDerivativeBound:
    value: float
    provenance: str


def third_derivative_bound(model, user_value: float | None = None) -> ThirdDerivativeBound:
    """Uniform bound ``M`` on ``sqrt(sum_j ||Hess(d_j log pi)||_2^2)``.

    Gaussians give 0. Families with a ``third_derivative_sup`` method
    (logistic regression, Gaussian location, tempered quartic) supply an
    analytic constant. A user value overrides both and is flagged.

    Raises:
        ValueError: no analytic constant and no user value.
    """
    if user_value is not None:
        if user_value < 0:
            raise ValueError("M must be nonnegative")
        return ThirdDerivativeBound(float(user_value), "user_supplied")
    if isinstance(model, GaussianMeasure):
        return ThirdDerivativeBound(0.0, "closed_form")
    sup = getattr(model, "third_derivative_sup", None)
    if sup is None:
        raise ValueError(f"no analytic third-derivative bound for {type(model).__name__}; supply one")
    return ThirdDerivativeBound(float(sup()), "closed_form")


def strong_convexity_of(model) -> float:
    sc = model.strong_convexity
    return float(sc() if callable(sc) else sc)


@dataclass(frozen=True)
class LaplaceCertificateInputs:
    alpha: float
    M: float
    L1: float
    L2: float
    lambdas: tuple = ()
    M_provenance: str = "closed_form"
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.M < 0:
            raise ValueError("M must be nonnegative")

    @classmethod
    def from_fit(cls, fit: LaplaceApproximation, alpha: float, M: ThirdDerivativeBound) -> "LaplaceCertificateInputs":
        L1, L2 = lp_lambda(fit.lambdas)
        return cls(alpha, M.value, L1, L2, tuple(float(v) for v in fit.lambdas), M.provenance)


def laplace_error_bound(inputs: LaplaceCertificateInputs, p: int) -> WassersteinCertificate:
    """Non-asymptotic certificate ``W_p <= L_p M / alpha``.

    ``fisher_value`` records ``L_p M``, the bound on the Fisher distance between
    the Laplace Gaussian and the target that the certificate rests on.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    Lp = inputs.L1 if p == 1 else inputs.L2
    assumptions = ["third_derivative_bound_user_supplied"] if inputs.M_provenance == "user_supplied" else []
    return WassersteinCertificate(
        LAPLACE_NONASYMPTOTIC, p, Lp * inputs.M / inputs.alpha, inputs.alpha, 1.0, Lp * inputs.M, 0.0, 0.0,
        None, None, tuple(assumptions),
        {"L_p": Lp, "M": inputs.M, "M_provenance": inputs.M_provenance, "lambdas": list(inputs.lambdas)},
    )


def laplace_asymptotic_bound(alpha: float, M: float, Lp: float, n: int, p: int,
                             concentration_provenance: str = "user_supplied") -> WassersteinCertificate:
    """Large-sample certificate ``W_p <= L_p M / (alpha n)``.

    All constants refer to the normalized log posterior ``n^{-1} log pi_n``:
    ``M`` bounds its third derivatives and ``alpha n`` is the strong convexity
    of the Laplace Gaussian's potential, i.e. the smallest eigenvalue of
    ``-H*`` for the unnormalized Hessian ``H*``. Use
    ``normalized_laplace_convexity`` to obtain ``alpha`` from a fit.
    ``Lp`` is the concentration constant with
    ``(E||theta - theta_n||^{2p})^{1/p} <= Lp / n``. It cannot be certified from
    gradients alone, so unless it was measured (``"measured_by_quadrature"``)
    the certificate carries a flag saying it was asserted.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    assumptions = [] if concentration_provenance == "measured_by_quadrature" else ["concentration_constant_user_asserted"]
    return WassersteinCertificate(LAPLACE_ASYMPTOTIC, p, Lp * M / (alpha * n), float(alpha), 1.0, Lp * M / n, 0.0, 0.0,
                                  int(n), None, tuple(assumptions),
                                  {"L_p": Lp, "M": M, "concentration_provenance": concentration_provenance})


def normalized_laplace_convexity(fit: LaplaceApproximation, n: int) -> float:
    """``alpha`` with ``alpha n = lambda_min(-H*)``, the convexity used by the large-sample certificate."""
    if n <= 0:
        raise ValueError("n must be positive")
    return 1.0 / (n * float(np.max(fit.lambdas)))


def concentration_constant_1d(posterior, center: float, n: int, p: int) -> float:
    """Smallest ``L_p`` with ``(E|theta - center|^{2p})^{1/p} <= L_p / n`` for a quadrature posterior."""
    return n * posterior.moment(2 * p, center=center) ** (1.0 / p)


def laplace_certificate(model, p: int, M_user: float | None = None, init=None, alpha: float | None = None):
    """Fit the Laplace approximation and return ``(fit, certificate)``."""
    target = model.as_log_density() if isinstance(model, GaussianMeasure) else model
    fit = laplace_fit(target, init=init)
    a = strong_convexity_of(model) if alpha is None else float(alpha)
    M = third_derivative_bound(model, M_user)
    return fit, laplace_error_bound(LaplaceCertificateInputs.from_fit(fit, a, M), p)
