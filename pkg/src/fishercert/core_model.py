"""Differentiable log densities, closed-form measure families and posterior models.

All log densities are handled up to an additive constant. Gradients are the only
thing the Fisher machinery needs, so normalizing constants of posteriors are
never computed here.

Sign conventions: ``grad`` on a :class:`DiffLogDensity` is the gradient of the
log density (the score). ``potential_grad`` methods return the gradient of the
potential ``U = -log density``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special, stats


class DatasetError(ValueError):
    """Raised when a dataset file cannot be parsed."""


@dataclass(frozen=True)
class DiffLogDensity:
    """A log density known up to a constant, with gradient (and optional Hessian) oracles.

    ``grad`` and ``hess`` act on a single point of shape ``(dim,)``.
    """

    dim: int
    log_density_unnorm: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")

    def potential_grad(self, theta):
        return -np.asarray(self.grad(theta))


def _as_points(theta, dim):
    """Return ``theta`` as an ``(m, dim)`` array plus a flag for single-point input."""
    arr = np.asarray(theta, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
        return arr, True
    if arr.ndim == 1:
        if dim == 1 and arr.shape[0] != 1:
            return arr.reshape(-1, 1), False
        if arr.shape[0] != dim:
            raise ValueError(f"expected a point of dimension {dim}, got shape {arr.shape}")
        return arr.reshape(1, dim), True
    if arr.shape[-1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {arr.shape}")
    return arr, False


# ---------------------------------------------------------------------------
# Gaussian measures
# ---------------------------------------------------------------------------


class GaussianMeasure:
    """Multivariate normal distribution N(mean, covariance).

    Args:
        mean: Mean vector (a scalar is read as a 1-D mean).
        covariance: Covariance matrix. A scalar or a 1-D array is read as a
            diagonal (variance) specification.
    """

    def __init__(self, mean, covariance):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.asarray(covariance, dtype=float)
        d = mean.shape[0]
        if cov.ndim == 0:
            cov = np.eye(d) * float(cov)
        elif cov.ndim == 1:
            if cov.shape[0] != d:
                raise ValueError("diagonal covariance length does not match mean")
            cov = np.diag(cov)
        if cov.shape != (d, d):
            raise ValueError(f"covariance must be {d}x{d}, got {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("mean and covariance must be finite")
        if not np.allclose(cov, cov.T, rtol=1e-12, atol=1e-14):
            raise ValueError("covariance must be symmetric")
        cov = 0.5 * (cov + cov.T)
        eig = np.linalg.eigvalsh(cov)
        if eig[0] <= 0:
            raise ValueError("covariance must be positive definite")
        self.mean = mean
        self.covariance = cov
        self._diagonal = bool(np.all(cov == np.diag(np.diag(cov))))
        self._chol = np.linalg.cholesky(cov)
        if self._diagonal:
            self.precision = np.diag(1.0 / np.diag(cov))
        else:
            inv_chol = np.linalg.inv(self._chol)
            self.precision = inv_chol.T @ inv_chol
        self._cov_eigs = eig
        self.mean.setflags(write=False)
        self.covariance.setflags(write=False)
        self.precision.setflags(write=False)

    @classmethod
    def univariate(cls, mean: float, std: float) -> "GaussianMeasure":
        return cls([mean], [std**2])

    def __repr__(self):
        if self.dim == 1:
            return f"GaussianMeasure(mean={self.mean[0]:g}, var={self.covariance[0, 0]:g})"
        return f"GaussianMeasure(dim={self.dim})"

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    @property
    def strong_convexity(self) -> float:
        """Smallest eigenvalue of the precision matrix."""
        return float(1.0 / self._cov_eigs[-1])

    @property
    def covariance_opnorm(self) -> float:
        return float(self._cov_eigs[-1])

    def potential_grad(self, theta):
        """Gradient of the potential, ``Sigma^{-1} (theta - mean)``; accepts ``(d,)`` or ``(m, d)``."""
        pts, single = _as_points(theta, self.dim)
        centered = pts - self.mean
        if self._diagonal:
            out = centered * np.diag(self.precision)
        else:
            out = centered @ self.precision
        return out[0] if single else out

    def score(self, theta):
        return -self.potential_grad(theta)

    def log_density(self, theta):
        pts, single = _as_points(theta, self.dim)
        z = np.linalg.solve(self._chol, (pts - self.mean).T)
        logdet = 2.0 * np.sum(np.log(np.diag(self._chol)))
        out = -0.5 * (np.sum(z**2, axis=0) + logdet + self.dim * math.log(2 * math.pi))
        return float(out[0]) if single else out

    def as_log_density(self) -> DiffLogDensity:
        prec = np.array(self.precision)
        return DiffLogDensity(
            dim=self.dim,
            log_density_unnorm=lambda th: self.log_density(np.atleast_1d(th)),
            grad=lambda th: self.score(np.atleast_1d(th)),
            hess=lambda th: -prec,
            name="gaussian",
        )

    def transform_uniforms(self, u: np.ndarray) -> np.ndarray:
        """Map an ``(m, d)`` array of uniforms to draws from this measure."""
        z = special.ndtri(u)
        return self.mean + z @ self._chol.T

    # 1-D distribution protocol used by quadrature and quantile oracles.

    def _scalar(self):
        if self.dim != 1:
            raise ValueError("operation only defined for univariate Gaussians")
        return stats.norm(loc=self.mean[0], scale=math.sqrt(self.covariance[0, 0]))

    def logpdf(self, x):
        return self._scalar().logpdf(x)

    def pdf(self, x):
        return self._scalar().pdf(x)

    def cdf(self, x):
        return self._scalar().cdf(x)

    def ppf(self, u):
        return self._scalar().ppf(u)

    def isf(self, u):
        return self._scalar().isf(u)

    def var(self) -> float:
        return float(self._scalar().var())

    def mad(self) -> float:
        return float(math.sqrt(self.covariance[0, 0]) * math.sqrt(2.0 / math.pi))

    def density_cap(self) -> float:
        """Supremum of the Lebesgue density."""
        logdet = float(np.sum(np.log(self._cov_eigs)))
        return math.exp(-0.5 * (logdet + self.dim * math.log(2 * math.pi)))


def gaussian_potential_grad(g: GaussianMeasure, theta) -> np.ndarray:
    """Return ``Sigma^{-1} (theta - mu)`` for the Gaussian potential."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    return g.potential_grad(theta)


# ---------------------------------------------------------------------------
# Student-t
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StudentTMeasure:
    """Univariate location-scale Student-t distribution with ``dof`` degrees of freedom."""

    dof: float
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.dof > 0:
            raise ValueError("dof must be positive")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    dim = 1

    @property
    def _log_norm(self) -> float:
        h = self.dof
        return special.gammaln((h + 1) / 2) - special.gammaln(h / 2) - 0.5 * math.log(h * math.pi) - math.log(self.scale)

    def potential_grad(self, theta):
        """``(h + 1) z / (s (h + z^2))`` with ``z = (theta - loc) / s``."""
        theta = np.asarray(theta, dtype=float)
        z = (theta - self.loc) / self.scale
        return (self.dof + 1.0) * z / (self.scale * (self.dof + z**2))

    def score(self, theta):
        return -self.potential_grad(theta)

    def log_density(self, theta):
        return self.logpdf(theta)

    def potential_hess(self, theta):
        theta = np.asarray(theta, dtype=float)
        z = (theta - self.loc) / self.scale
        h = self.dof
        return (h + 1.0) * (h - z**2) / (self.scale**2 * (h + z**2) ** 2)

    def as_log_density(self) -> DiffLogDensity:
        return DiffLogDensity(
            dim=1,
            log_density_unnorm=lambda th: float(self.log_density(np.asarray(th).reshape(-1)[0])),
            grad=lambda th: np.atleast_1d(self.score(np.asarray(th).reshape(-1)[0])),
            hess=lambda th: np.array([[-self.potential_hess(np.asarray(th).reshape(-1)[0])]]),
            name="student_t",
        )

    def transform_uniforms(self, u: np.ndarray) -> np.ndarray:
        return self.loc + self.scale * special.stdtrit(self.dof, u)

    def logpdf(self, x):
        z = (np.asarray(x, dtype=float) - self.loc) / self.scale
        return self._log_norm - 0.5 * (self.dof + 1.0) * np.log1p(z * z / self.dof)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def cdf(self, x):
        return special.stdtr(self.dof, (np.asarray(x, dtype=float) - self.loc) / self.scale)

    def ppf(self, u):
        return self.loc + self.scale * special.stdtrit(self.dof, u)

    def isf(self, u):
        return self.loc - self.scale * special.stdtrit(self.dof, u)

    def var(self) -> float:
        if self.dof <= 2:
            raise ValueError(f"variance undefined for dof={self.dof} <= 2")
        return self.dof / (self.dof - 2.0) * self.scale**2

    @property
    def mean(self) -> float:
        if self.dof <= 1:
            raise ValueError("mean undefined for dof <= 1")
        return self.loc

    @property
    def std(self) -> float:
        return math.sqrt(self.var())

    def mad(self) -> float:
        h = self.dof
        if h <= 1:
            raise ValueError("mean absolute deviation undefined for dof <= 1")
        log_c = special.gammaln((h + 1) / 2) - special.gammaln(h / 2)
        return self.scale * 2.0 * math.sqrt(h) * math.exp(log_c) / (math.sqrt(math.pi) * (h - 1))

    def density_cap(self) -> float:
        return math.exp(self._log_norm)


def student_t_potential_grad(t: StudentTMeasure, theta):
    return t.potential_grad(theta)


# ---------------------------------------------------------------------------
# Logistic regression posterior
# ---------------------------------------------------------------------------


class LogisticRegressionPosterior:
    """Bayesian logistic regression with an isotropic Gaussian prior N(0, I / prior_precision).

    The log posterior (up to a constant) is
    ``sum_j w_j log sigmoid(y_j x_j^T theta) - prior_precision |theta|^2 / 2``
    with ``w_j = 1`` for the full posterior. Weights other than one give the
    coreset posterior.
    """

    def __init__(self, design, labels, prior_precision: float = 1.0, weights=None):
        X = np.atleast_2d(np.asarray(design, dtype=float))
        y = np.asarray(labels, dtype=float).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"design has {X.shape[0]} rows but {y.shape[0]} labels given")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be in {-1, +1}")
        if not prior_precision > 0:
            raise ValueError("prior_precision must be positive")
        if weights is None:
            weights = np.ones(X.shape[0])
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if weights.shape[0] != X.shape[0] or np.any(weights < 0):
            raise ValueError("weights must be nonnegative with one entry per datum")
        self.design = X
        self.labels = y
        self.prior_precision = float(prior_precision)
        self.weights = weights
        self._yx = y[:, None] * X

    @property
    def dim(self) -> int:
        return self.design.shape[1]

    @property
    def n(self) -> int:
        return self.design.shape[0]

    def __repr__(self):
        return f"LogisticRegressionPosterior(n={self.n}, d={self.dim}, prior_precision={self.prior_precision:g})"

    def with_weights(self, weights) -> "LogisticRegressionPosterior":
        return LogisticRegressionPosterior(self.design, self.labels, self.prior_precision, weights)

    def _check(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] != self.dim:
            raise ValueError(f"theta has dimension {theta.shape[-1]}, model has {self.dim}")
        return theta

    def log_density(self, theta):
        """Unnormalized log posterior; a float for one point, an array for a batch of shape ``(..., d)``."""
        theta = self._check(theta)
        margins = theta @ self._yx.T
        out = special.log_expit(margins) @ self.weights - 0.5 * self.prior_precision * np.sum(theta * theta, axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def grad(self, theta) -> np.ndarray:
        """``sum_j w_j y_j x_j sigmoid(-y_j x_j^T theta) - prior_precision theta``; batched over leading axes."""
        theta = self._check(theta)
        margins = theta @ self._yx.T
        coef = self.weights * special.expit(-margins)
        return coef @ self._yx - self.prior_precision * theta

    def potential_grad(self, theta):
        return -self.grad(theta)

    def hess(self, theta) -> np.ndarray:
        theta = self._check(theta)
        p = special.expit(self._yx @ theta)
        curv = self.weights * p * (1.0 - p)
        return -(self.design.T * curv) @ self.design - self.prior_precision * np.eye(self.dim)

    def datum_grads(self, thetas) -> np.ndarray:
        """Per-datum log-likelihood gradients at ``(S, d)`` points, shape ``(n, S, d)``."""
        thetas = np.atleast_2d(self._check(thetas))
        coef = special.expit(-(self._yx @ thetas.T))  # (n, S)
        return coef[:, :, None] * self._yx[:, None, :]

    def strong_convexity(self) -> float:
        # The weighted logistic term is convex for w >= 0; only the prior adds curvature.
        return self.prior_precision

    def third_derivative_sup(self) -> float:
        """Bound on ``sup_theta sqrt(sum_j ||Hess(d_j log pi)(theta)||_2^2)``.

        The third derivative of ``log sigmoid(s)`` is ``-sigma(s)(1-sigma(s))(1-2 sigma(s))``,
        bounded in absolute value by ``1 / (6 sqrt(3))``.
        """
        c = 1.0 / (6.0 * math.sqrt(3.0))
        row_sq = np.sum(self.design**2, axis=1)
        per_coord = (self.weights * row_sq) @ np.abs(self.design)
        return float(c * np.sqrt(np.sum(per_coord**2)))

    def as_log_density(self) -> DiffLogDensity:
        return DiffLogDensity(self.dim, self.log_density, self.grad, self.hess, name="logistic")


def logistic_posterior_grad(m: LogisticRegressionPosterior, theta) -> np.ndarray:
    return m.grad(theta)


# ---------------------------------------------------------------------------
# Gaussian location model
# ---------------------------------------------------------------------------


class GaussianLocationModel:
    """Observations ``x_j ~ N(theta, noise_var I)`` with prior ``theta ~ N(prior_mean, I / prior_precision)``.

    Posterior and every weighted (coreset) posterior are Gaussian in closed form.
    """

    def __init__(self, data, noise_var: float = 1.0, prior_precision: float = 1.0, prior_mean=None, weights=None):
        X = np.asarray(data, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if not noise_var > 0 or not prior_precision > 0:
            raise ValueError("noise_var and prior_precision must be positive")
        self.data = X
        self.noise_var = float(noise_var)
        self.prior_precision = float(prior_precision)
        self.prior_mean = np.zeros(X.shape[1]) if prior_mean is None else np.asarray(prior_mean, dtype=float)
        if weights is None:
            weights = np.ones(X.shape[0])
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (X.shape[0],) or np.any(weights < 0):
            raise ValueError("weights must be nonnegative with one entry per datum")
        self.weights = weights

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def with_weights(self, weights) -> "GaussianLocationModel":
        return GaussianLocationModel(self.data, self.noise_var, self.prior_precision, self.prior_mean, weights)

    def posterior(self) -> GaussianMeasure:
        prec = self.prior_precision + self.weights.sum() / self.noise_var
        mean = (self.prior_precision * self.prior_mean + self.weights @ self.data / self.noise_var) / prec
        return GaussianMeasure(mean, np.full(self.dim, 1.0 / prec))

    def log_density(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        resid = self.data - theta
        return float(
            -0.5 * self.weights @ np.sum(resid**2, axis=1) / self.noise_var
            - 0.5 * self.prior_precision * np.sum((theta - self.prior_mean) ** 2)
        )

    def grad(self, theta):
        theta = np.asarray(theta, dtype=float)
        wsum = self.weights.sum()
        lik = (self.weights @ self.data - wsum * theta) / self.noise_var
        return lik - self.prior_precision * (theta - self.prior_mean)

    def potential_grad(self, theta):
        return -self.grad(theta)

    def hess(self, theta):
        prec = self.prior_precision + self.weights.sum() / self.noise_var
        return -prec * np.eye(self.dim)

    def datum_grads(self, thetas) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        return (self.data[:, None, :] - thetas[None, :, :]) / self.noise_var

    def strong_convexity(self) -> float:
        return self.prior_precision

    def third_derivative_sup(self) -> float:
        return 0.0

    def as_log_density(self) -> DiffLogDensity:
        return DiffLogDensity(self.dim, self.log_density, self.grad, self.hess, name="gaussian_location")


# ---------------------------------------------------------------------------
# Quartic-perturbed Gaussian
# ---------------------------------------------------------------------------


def _tempered_quartic(t):
    t2 = t * t
    return t2 * t2 / (1.0 + t2)


def _tempered_quartic_d1(t):
    return 2.0 * t - 2.0 * t / (1.0 + t * t) ** 2


def _tempered_quartic_d2(t):
    return 2.0 - 2.0 * (1.0 - 3.0 * t * t) / (1.0 + t * t) ** 3


def _tempered_quartic_d3(t):
    return 24.0 * t * (1.0 - t * t) / (1.0 + t * t) ** 4


def _tempered_quartic_d3_sup() -> float:
    # Critical points of t (1 - t^2) / (1 + t^2)^4 solve 5 t^4 - 10 t^2 + 1 = 0.
    roots = [math.sqrt(1.0 - 2.0 / math.sqrt(5.0)), math.sqrt(1.0 + 2.0 / math.sqrt(5.0))]
    return max(abs(_tempered_quartic_d3(r)) for r in roots)


class QuarticPerturbedGaussian:
    """Potential ``U(theta) = (theta - m)^T A (theta - m) / 2 + b * sum_i q(theta_i)``.

    ``q(t) = t^4 / (1 + t^2)`` is quartic near the origin and quadratic in the
    tails. It is convex, so ``U`` stays ``lambda_min(A)``-strongly convex, and
    its third derivative is bounded, so the Laplace error bound applies.
    """

    def __init__(self, mean, precision, strength: float):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        A = np.asarray(precision, dtype=float)
        d = mean.shape[0]
        if A.ndim == 0:
            A = np.eye(d) * float(A)
        elif A.ndim == 1:
            A = np.diag(A)
        if A.shape != (d, d) or not np.allclose(A, A.T):
            raise ValueError("precision must be a symmetric d x d matrix")
        eig = np.linalg.eigvalsh(A)
        if eig[0] <= 0:
            raise ValueError("precision must be positive definite")
        if strength < 0:
            raise ValueError("strength must be nonnegative")
        self.mean = mean
        self.precision = A
        self.strength = float(strength)
        self._lam_min = float(eig[0])

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def log_density(self, theta):
        theta = np.asarray(theta, dtype=float)
        c = theta - self.mean
        quad = 0.5 * np.einsum("...i,ij,...j->...", c, self.precision, c)
        return -(quad + self.strength * np.sum(_tempered_quartic(theta), axis=-1))

    def grad(self, theta):
        theta = np.asarray(theta, dtype=float)
        return -((theta - self.mean) @ self.precision + self.strength * _tempered_quartic_d1(theta))

    def potential_grad(self, theta):
        return -self.grad(theta)

    def hess(self, theta):
        theta = np.asarray(theta, dtype=float)
        return -(self.precision + self.strength * np.diag(_tempered_quartic_d2(theta)))

    def third_derivative(self, theta):
        """Diagonal of the (diagonal) third-derivative tensor of ``log pi``."""
        return -self.strength * _tempered_quartic_d3(np.asarray(theta, dtype=float))

    def strong_convexity(self) -> float:
        return self._lam_min

    def third_derivative_sup(self) -> float:
        return self.strength * _tempered_quartic_d3_sup() * math.sqrt(self.dim)

    def as_log_density(self) -> DiffLogDensity:
        return DiffLogDensity(self.dim, lambda t: float(self.log_density(t)), self.grad, self.hess, name="quartic_gaussian")


# ---------------------------------------------------------------------------
# Data ingestion and empirical summaries
# ---------------------------------------------------------------------------


def _parse_rows(path: Path):
    text = path.read_text()
    rows = [r for r in csv.reader(text.splitlines()) if any(cell.strip() for cell in r)]
    if not rows:
        raise DatasetError(f"{path}: empty file")
    width = len(rows[0])
    values = np.empty((len(rows), width))
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise DatasetError(f"{path}: row {i} has {len(row)} columns, expected {width}")
        for j, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise DatasetError(f"{path}: row {i}, column {j}: cannot parse {cell.strip()!r} as a number") from None
            if not math.isfinite(v):
                raise DatasetError(f"{path}: row {i}, column {j}: non-finite value {cell.strip()!r}")
            values[i - 1, j - 1] = v
    return values


def load_dataset(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a classification CSV: feature columns followed by a label column.

    Labels in {0, 1} are remapped to {-1, +1}. Rows keep file order.

    Raises:
        DatasetError: empty file, unparseable or non-finite cell (with 1-based
            row/column), or labels outside {-1, 0, +1}.
    """
    path = Path(path)
    values = _parse_rows(path)
    if values.shape[1] < 2:
        raise DatasetError(f"{path}: need at least one feature column and a label column")
    design, labels = values[:, :-1], values[:, -1].copy()
    bad = ~np.isin(labels, (-1.0, 0.0, 1.0))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0]) + 1
        raise DatasetError(f"{path}: row {i}, column {values.shape[1]}: label {labels[i - 1]:g} not in {{-1, 0, 1}}")
    labels[labels == 0.0] = -1.0
    return design, labels


def load_observations(path) -> np.ndarray:
    """Read a purely numeric CSV (one observation per row)."""
    return _parse_rows(Path(path))


@dataclass(frozen=True)
class EmpiricalSummary:
    mean: np.ndarray
    covariance: np.ndarray
    std: np.ndarray
    mad: np.ndarray
    interval_probs: tuple = field(default_factory=tuple)


def summarize(samples, intervals: Sequence[tuple[int, float, float]] = ()) -> EmpiricalSummary:
    """Empirical mean, covariance (1/(N-1)), std, MAD about the mean and interval probabilities.

    ``intervals`` holds ``(coordinate, a, b)`` triples; probabilities use the
    closed interval ``[a, b]``.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise ValueError("summarize needs at least 2 samples")
    mean = X.mean(axis=0)
    cov = np.atleast_2d(np.cov(X, rowvar=False, ddof=1))
    mad = np.mean(np.abs(X - mean), axis=0)
    probs = []
    for i, a, b in intervals:
        col = X[:, i]
        probs.append((int(i), float(a), float(b), float(np.mean((col >= a) & (col <= b)))))
    return EmpiricalSummary(mean=mean, covariance=cov, std=np.sqrt(np.diag(cov)), mad=mad, interval_probs=tuple(probs))
