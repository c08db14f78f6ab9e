"""Brute-force ground truth used to test certificates.

Nothing in here is used to *produce* a certificate. The quantile integrals,
quadrature posteriors and finite differences use their own grids and formulas
so that agreement with the certificate code is evidence rather than tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, interpolate, optimize, special


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuantileGrid:
    """Nodes in (0, 1) with quadrature weights for integrals ``int_0^1 g(u) du``.

    ``upper`` holds ``1 - u`` computed without cancellation so that upper-tail
    quantiles can be evaluated through an inverse survival function.

    Schemes:
        midpoint: ``m`` equal cells, nodes at the cell centres.
        probit: substitution ``u = Phi(t)`` with the trapezoid rule on
            ``t in [-t_max, t_max]``. Converges much faster when quantile
            functions blow up at 0 and 1.
    """

    u_nodes: np.ndarray
    upper: np.ndarray
    weights: np.ndarray
    scheme: str

    @property
    def m(self) -> int:
        return self.u_nodes.shape[0]

    @classmethod
    def midpoint(cls, m: int = 2**16) -> "QuantileGrid":
        k = np.arange(m)
        u = (k + 0.5) / m
        upper = (m - k - 0.5) / m
        return cls(u, upper, np.full(m, 1.0 / m), "midpoint")

    @classmethod
    def probit(cls, m: int = 2**12, t_max: float = 12.0) -> "QuantileGrid":
        t = np.linspace(-t_max, t_max, m)
        dt = t[1] - t[0]
        w = np.exp(-0.5 * t**2) / math.sqrt(2 * math.pi) * dt
        w[0] *= 0.5
        w[-1] *= 0.5
        return cls(special.ndtr(t), special.ndtr(-t), w, "probit")

    def refined(self) -> "QuantileGrid":
        if self.scheme == "midpoint":
            return QuantileGrid.midpoint(2 * self.m)
        t_max = -special.ndtri(self.u_nodes[0])
        return QuantileGrid.probit(2 * self.m - 1, t_max)


def _quantiles(dist, grid: QuantileGrid) -> np.ndarray:
    if callable(dist) and not hasattr(dist, "ppf"):
        # A bare inverse CDF only sees u, which rounds to 1 in the far upper
        # tail; clamp to the largest double below 1.
        q = np.asarray(dist(np.minimum(grid.u_nodes, np.nextafter(1.0, 0.0))), dtype=float)
    else:
        lower = grid.u_nodes <= 0.5
        q = np.empty(grid.m)
        q[lower] = dist.ppf(grid.u_nodes[lower])
        if hasattr(dist, "isf"):
            q[~lower] = dist.isf(grid.upper[~lower])
        else:
            q[~lower] = dist.ppf(grid.u_nodes[~lower])
    if not np.all(np.isfinite(q)):
        raise OracleError("inverse CDF returned non-finite values on the grid")
    scale = max(1.0, float(np.max(np.abs(q))))
    if np.any(np.diff(q) < -1e-12 * scale):
        raise OracleError("inverse CDF is not monotone")
    return q


def _w_on_grid(p, F, G, grid):
    diff = np.abs(_quantiles(F, grid) - _quantiles(G, grid))
    return float(np.sum(grid.weights * diff**p)) ** (1.0 / p)


def wasserstein_1d(p: float, F, G, grid: QuantileGrid | None = None, tol: float = 1e-6, max_refinements: int = 10) -> float:
    """p-Wasserstein distance between two univariate laws from their quantile functions.

    ``W_p^p = int_0^1 |F^{-1}(u) - G^{-1}(u)|^p du``. ``F`` and ``G`` are
    objects with ``ppf`` (and preferably ``isf``) methods, or plain inverse-CDF
    callables. The grid is refined by doubling until successive values differ
    by less than ``tol``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    grid = grid or QuantileGrid.probit()
    prev = _w_on_grid(p, F, G, grid)
    for _ in range(max_refinements):
        grid = grid.refined()
        cur = _w_on_grid(p, F, G, grid)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise OracleError(f"quantile integral did not converge to {tol} after {max_refinements} refinements")


class QuadraturePosterior:
    """Normalized univariate density obtained by quadrature of an unnormalized log density.

    Nodes are ``x = center + scale * sinh(s)`` on a uniform ``s`` grid, which
    handles both light and polynomial tails. Use :func:`quadrature_posterior_1d`
    to build one.
    """

    def __init__(self, log_density: Callable, center: float, scale: float, s_max: float, step: float):
        self._logf = log_density
        self.center = float(center)
        self.scale = float(scale)
        self.s_max = float(s_max)
        self.step = float(step)
        n = int(round(2 * s_max / step)) + 1
        s = np.linspace(-s_max, s_max, n)
        x = self.center + self.scale * np.sinh(s)
        jac = self.scale * np.cosh(s)
        logf = np.array([self._logf(v) for v in x]) if not _is_vectorized(log_density) else np.asarray(log_density(x))
        self._log_ref = float(np.max(logf))
        dens = np.exp(logf - self._log_ref)
        g = dens * jac
        z = float(integrate.trapezoid(g, s))
        self.log_norm = self._log_ref + math.log(z)
        self.s = s
        self.x = x
        self.density = dens / z
        self._g = g / z
        cdf = integrate.cumulative_simpson(self._g, x=s, initial=0.0)
        sf = integrate.cumulative_simpson(self._g[::-1], x=-s[::-1], initial=0.0)[::-1]
        total = cdf[-1]
        self._cdf = np.maximum.accumulate(np.clip(cdf / total, 0.0, 1.0))
        self._sf = np.minimum.accumulate(np.clip(sf / total, 0.0, 1.0))
        self.total_mass_simpson = float(total)
        self._lower_fwd, self._lower_inv = self._log_tail_maps(self._cdf)
        self._upper_fwd, self._upper_inv = self._log_tail_maps(self._sf)
        self._mean = float(integrate.trapezoid(x * self._g, s))
        self._var = float(integrate.trapezoid((x - self._mean) ** 2 * self._g, s))
        self._mad = self._mad_centered()

    def _log_tail_maps(self, tail):
        # Log tail mass is smooth in s and strictly monotone where positive, so
        # shape-preserving cubics in log space interpolate it (and its inverse)
        # accurately far into the tails.
        keep = tail > 0
        lt, s = np.log(tail[keep]), self.s[keep]
        order = np.argsort(s, kind="stable")
        lt, s = lt[order], s[order]
        strict = np.concatenate(([True], np.abs(np.diff(lt)) > 0))
        lt, s = lt[strict], s[strict]
        fwd = interpolate.PchipInterpolator(s, lt, extrapolate=False)
        inc = np.argsort(lt, kind="stable")
        return fwd, interpolate.PchipInterpolator(lt[inc], s[inc], extrapolate=False)

    def _mad_centered(self) -> float:
        # Grid centred at the mean puts the kink of |x - mean| on a node; the
        # Euler-Maclaurin term restores fourth-order accuracy.
        n = int(round(self.s_max / self.step)) + 1
        s = np.linspace(0.0, self.s_max, n)
        h = s[1] - s[0]
        x_hi = self._mean + self.scale * np.sinh(s)
        x_lo = self._mean - self.scale * np.sinh(s)
        jac = self.scale * np.cosh(s)
        f_hi = np.exp(self._eval(x_hi) - self.log_norm)
        f_lo = np.exp(self._eval(x_lo) - self.log_norm)
        g_hi = self.scale * np.sinh(s) * f_hi * jac
        g_lo = self.scale * np.sinh(s) * f_lo * jac
        pm = f_hi[0]
        corr = h**2 * self.scale**2 * pm / 12.0
        return float(integrate.trapezoid(g_hi, s) + corr + integrate.trapezoid(g_lo, s) + corr)

    def _eval(self, x):
        if _is_vectorized(self._logf):
            return np.asarray(self._logf(x), dtype=float)
        return np.array([self._logf(v) for v in x])

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return self._eval(x.reshape(-1)).reshape(x.shape) - self.log_norm

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def _tail_mass(self, fwd, x, outside):
        s = np.arcsinh((np.asarray(x, dtype=float) - self.center) / self.scale)
        out = np.exp(fwd(s))
        return np.where(np.isnan(out), outside(s), out)

    def cdf(self, x):
        lower = self._tail_mass(self._lower_fwd, x, lambda s: (s > 0).astype(float))
        upper = self._tail_mass(self._upper_fwd, x, lambda s: (s < 0).astype(float))
        return np.where(lower <= 0.5, lower, 1.0 - upper)

    def sf(self, x):
        lower = self._tail_mass(self._lower_fwd, x, lambda s: (s > 0).astype(float))
        upper = self._tail_mass(self._upper_fwd, x, lambda s: (s < 0).astype(float))
        return np.where(upper <= 0.5, upper, 1.0 - lower)

    def _tail_quantile(self, inv, u, sign):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            s = inv(np.log(u))
        s = np.where(np.isnan(s), np.where(u >= 1, sign * self.s_max, -sign * self.s_max), s)
        return self.center + self.scale * np.sinh(s)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        lower = self._tail_quantile(self._lower_inv, u, 1.0)
        upper = self._tail_quantile(self._upper_inv, 1.0 - u, -1.0)
        return np.where(u <= 0.5, lower, upper)

    def isf(self, u):
        u = np.asarray(u, dtype=float)
        upper = self._tail_quantile(self._upper_inv, u, -1.0)
        lower = self._tail_quantile(self._lower_inv, 1.0 - u, 1.0)
        return np.where(u <= 0.5, upper, lower)

    def mean(self) -> float:
        return self._mean

    def var(self) -> float:
        return self._var

    def std(self) -> float:
        return math.sqrt(self._var)

    def mad(self) -> float:
        return self._mad

    def moment(self, k: float, center: float | None = None) -> float:
        """``E|X - center|^k``."""
        c = self._mean if center is None else float(center)
        return float(integrate.trapezoid(np.abs(self.x - c) ** k * self._g, self.s))

    def density_cap(self) -> float:
        res = optimize.minimize_scalar(lambda v: -float(self._eval(np.array([v]))[0]), bracket=(self.center - self.scale, self.center + self.scale))
        return math.exp(-res.fun - self.log_norm)

    def transform_uniforms(self, u):
        return self.ppf(u)


def _is_vectorized(fn) -> bool:
    return getattr(fn, "vectorized", False)


def vectorized(fn):
    """Mark a scalar log density as safe to call on a whole array at once."""
    try:
        fn.vectorized = True
        return fn
    except AttributeError:
        def wrapper(x):
            return fn(x)
        wrapper.vectorized = True
        return wrapper


def quadrature_posterior_1d(log_density: Callable, mode: float | None = None, scale: float | None = None,
                            rel_tol: float = 1e-11, tail_tol: float = 1e-16) -> QuadraturePosterior:
    """Normalize a univariate log density by quadrature.

    Args:
        log_density: Unnormalized log density. Decorate with :func:`vectorized`
            if it accepts arrays.
        mode: Location of the maximum; found numerically if omitted.
        scale: Length scale of the bulk; taken from the curvature at the mode
            if omitted.
        rel_tol: Grid halving stops once normalizer, mean and variance change
            by less than this (relative).
        tail_tol: Truncation requires the second-moment integrand, relative to
            its peak, to fall below this at both ends.

    Raises:
        OracleError: tails do not decay within the reachable range, or the
            grid refinement does not converge.
    """
    def f(v):
        return float(np.asarray(log_density(np.array([v]) if _is_vectorized(log_density) else v)).reshape(-1)[0])

    if mode is None:
        res = optimize.minimize_scalar(lambda v: -f(v))
        mode = float(res.x)
    if scale is None:
        h = 1e-4 * (1 + abs(mode))
        curv = -(f(mode + h) - 2 * f(mode) + f(mode - h)) / h**2
        scale = 1.0 / math.sqrt(curv) if curv > 0 and math.isfinite(curv) else 1.0
    f0 = f(mode)

    def tail_ok(s):
        for sign in (-1.0, 1.0):
            x = mode + sign * scale * math.sinh(s)
            rel = math.exp(min(0.0, f(x) - f0)) * (1 + ((x - mode) / scale) ** 2) * math.cosh(s)
            if rel > tail_tol:
                return False
        return True

    s_max = 4.0
    while not tail_ok(s_max):
        s_max += 1.0
        if s_max > 60:
            raise OracleError("log density tails do not decay fast enough for quadrature")

    step = 1.0 / 64
    prev = QuadraturePosterior(log_density, mode, scale, s_max, step)
    for _ in range(6):
        step /= 2
        cur = QuadraturePosterior(log_density, mode, scale, s_max, step)
        dz = abs(cur.log_norm - prev.log_norm)
        dm = abs(cur.mean() - prev.mean()) / max(cur.std(), 1e-300)
        dv = abs(cur.var() - prev.var()) / cur.var()
        if max(dz, dm, dv) < rel_tol:
            return cur
        prev = cur
    raise OracleError("quadrature grid refinement did not converge")


def finite_diff_check(f: Callable, grad: Callable, points, step_scale: float = 1e-5) -> float:
    """Largest discrepancy between ``grad`` and central differences of ``f``.

    ``f`` may be scalar- or vector-valued (for checking a Hessian against a
    gradient). The step for coordinate ``i`` is ``step_scale * (1 + |theta_i|)``.
    The error at a point is ``max |fd - grad| / max(1, max |grad|)``; the
    function returns the maximum over points.
    """
    worst = 0.0
    for theta in np.atleast_2d(np.asarray(points, dtype=float)):
        d = theta.shape[0]
        g = np.asarray(grad(theta), dtype=float)
        cols = []
        for i in range(d):
            h = step_scale * (1 + abs(theta[i]))
            e = np.zeros(d)
            e[i] = h
            cols.append((np.asarray(f(theta + e), dtype=float) - np.asarray(f(theta - e), dtype=float)) / (2 * h))
        fd = np.stack(cols, axis=-1)
        fd = fd.reshape(g.shape)
        err = float(np.max(np.abs(fd - g)) / max(1.0, float(np.max(np.abs(g)))))
        worst = max(worst, err)
    return worst
