"""Sparse reweighting of per-datum log-likelihoods that minimizes a projected Fisher distance.

For a weighted posterior ``pi_w`` with log density ``sum_j w_j L_j + log prior``
the prior cancels in ``grad U - grad U_w``, leaving
``sum_j (1 - w_j) grad L_j``. Evaluating the per-datum gradients at ``S`` draws
from a reference measure ``nu`` and stacking them into rows ``phi_j`` of length
``S d`` (scaled by ``S^{-1/2}``) turns the empirical (2, nu)-Fisher distance into
the Euclidean norm ``||sum_j (w_j - 1) phi_j||``. Frank-Wolfe on the simplex
scaled to total mass ``n`` then adds at most one datum per iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .certificates import CORESET, ConvexityCertificate, NoCertificate, WassersteinCertificate
from .fisher import ComparabilityFactor, FisherEstimate, ReferenceMeasure


@dataclass(frozen=True)
class GradientFeatureSet:
    """Per-datum gradient features.

    Attributes:
        features: ``(n, S d)`` matrix; row ``j`` stacks ``grad L_j`` at the ``S``
            reference draws, scaled by ``S^{-1/2}``.
        nu_seed: Seed used to draw the evaluation points.
        S: Number of evaluation points.
        dim: Parameter dimension.
    """

    features: np.ndarray
    nu_seed: int
    S: int
    dim: int

    @property
    def n(self) -> int:
        return self.features.shape[0]


def gradient_feature_matrix(model, nu: ReferenceMeasure, S: int = 256, seed: int = 0) -> GradientFeatureSet:
    """Evaluate every per-datum log-likelihood gradient at ``S`` draws from ``nu``.

    ``model.datum_grads`` must map ``(S, d)`` points to an ``(n, S, d)`` array.

    Raises:
        ValueError: a gradient is non-finite.
    """
    if S < 1:
        raise ValueError("S must be positive")
    thetas = nu.draws(0, S, seed)
    grads = np.asarray(model.datum_grads(thetas), dtype=float)
    if not np.all(np.isfinite(grads)):
        j = int(np.flatnonzero(~np.all(np.isfinite(grads.reshape(grads.shape[0], -1)), axis=1))[0])
        raise ValueError(f"non-finite gradient for datum {j}")
    n = grads.shape[0]
    return GradientFeatureSet(grads.reshape(n, -1) / math.sqrt(S), int(seed), int(S), thetas.shape[1])


def fisher_objective(fs: GradientFeatureSet, w) -> float:
    """Empirical (2, nu)-Fisher distance ``||Phi^T (w - 1)||`` between the weighted and full posteriors."""
    w = np.asarray(w, dtype=float)
    return float(np.linalg.norm(fs.features.T @ (w - 1.0)))


def fisher_objective_with_stderr(fs: GradientFeatureSet, w) -> tuple[float, float]:
    """Projected objective plus a delta-method standard error over the ``S`` evaluation points."""
    w = np.asarray(w, dtype=float)
    per_draw = (fs.features.T @ (w - 1.0)).reshape(fs.S, fs.dim) * math.sqrt(fs.S)
    sq = np.sum(per_draw**2, axis=1)
    value = math.sqrt(float(np.mean(sq)))
    if value == 0 or fs.S < 2:
        return value, 0.0
    return value, float(np.std(sq, ddof=1)) / math.sqrt(fs.S) / (2.0 * value)


@dataclass(frozen=True)
class CoresetResult:
    """Frank-Wolfe output.

    ``objective_trace[k]`` and ``support_trace[k]`` are the objective and the
    number of nonzero weights after ``k + 1`` iterations (the first iteration
    picks the single best atom).
    """

    weights: np.ndarray
    objective_trace: np.ndarray
    support_trace: np.ndarray
    weights_trace: tuple = ()
    certificate: Optional[WassersteinCertificate] = None

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.weights))


def build_coreset_fw(fs: GradientFeatureSet, K: int, keep_weights: bool = False) -> CoresetResult:
    """Frank-Wolfe with exact line search over ``{w >= 0, sum w = n}``.

    Args:
        fs: Gradient features.
        K: Total iterations, the initial vertex included. At most ``K`` data
            points end up with nonzero weight.
        keep_weights: Store the weight vector after every iteration.

    Returns:
        CoresetResult with a nonincreasing objective trace.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    Phi = fs.features
    n = Phi.shape[0]
    target = Phi.sum(axis=0)
    norms_sq = np.einsum("ij,ij->i", Phi, Phi)
    # Best single vertex n e_j: minimize ||n phi_j - target||^2.
    j0 = int(np.argmin(n * n * norms_sq - 2.0 * n * (Phi @ target)))
    w = np.zeros(n)
    w[j0] = float(n)
    trace, support, history = [], [], []

    def record():
        trace.append(float(np.linalg.norm(Phi.T @ w - target)))
        support.append(int(np.count_nonzero(w)))
        if keep_weights:
            history.append(w.copy())

    record()
    for _ in range(K - 1):
        resid = target - Phi.T @ w
        j = int(np.argmax(Phi @ resid))
        direction = -w.copy()
        direction[j] += n
        step_vec = Phi.T @ direction
        denom = float(step_vec @ step_vec)
        gamma = 0.0 if denom == 0 else min(1.0, max(0.0, float(resid @ step_vec) / denom))
        if gamma > 0:
            cand = w + gamma * direction
            cand[cand < 0] = 0.0
            if np.linalg.norm(Phi.T @ cand - target) <= trace[-1]:
                w = cand
        record()
    return CoresetResult(w, np.array(trace), np.array(support), tuple(history))


def decay_slope(trace) -> float:
    """Least-squares slope of ``log(objective)`` against iteration; zeros are dropped."""
    y = np.asarray(trace, dtype=float)
    k = np.arange(1, y.size + 1)
    keep = y > 0
    if keep.sum() < 2:
        return -math.inf
    return float(np.polyfit(k[keep], np.log(y[keep]), 1)[0])


def coreset_certificate(cert: ConvexityCertificate, B: ComparabilityFactor, objective_value: float,
                        fisher_check: FisherEstimate | None = None, p: int = 2, k: float = 3.0) -> WassersteinCertificate:
    """W_p bound for a coreset posterior: ``B * F / alpha``.

    ``F`` is the fresh Monte Carlo Fisher distance ``fisher_check`` (plus
    ``k`` standard errors) when given. Otherwise the projected objective is
    used and the certificate is flagged as resting on a projection estimate.
    """
    if p not in (1, 2) or B.p != p:
        raise ValueError("comparability factor must match p")
    if not B.finite:
        raise NoCertificate("comparability factor is infinite")
    assumptions = [f"b_factor_provenance: {B.provenance}"]
    if cert.conditional:
        assumptions.append("alpha_user_asserted")
    if fisher_check is not None:
        if fisher_check.p != 2:
            raise ValueError("fisher_check must be a (2, nu)-Fisher estimate")
        F, se, n_s, seed = fisher_check.value, fisher_check.std_error, fisher_check.n_samples, fisher_check.seed
        kk = float(k)
    else:
        F, se, n_s, seed, kk = float(objective_value), 0.0, None, None, 0.0
        assumptions.append("projection_estimate: Fisher value is the projected coreset objective")
    bound = B.value * (F + kk * se) / cert.alpha
    return WassersteinCertificate(CORESET, p, bound, cert.alpha, B.value, F, se, kk, n_s, seed, tuple(assumptions),
                                  {"projected_objective": float(objective_value)})
