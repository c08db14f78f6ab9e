"""Laplace certificates for growing subsets of a synthetic 1-D logistic regression.

For each sample size the script reports the non-asymptotic bound, the
large-sample bound with a concentration constant measured by quadrature, and
the W_1 distance between the Laplace Gaussian and the quadrature posterior.

Usage: python scripts/laplace_sequence.py [--sizes 25 50 100 200 400] [--seed 9]
"""

import argparse

import numpy as np

from fishercert.core_model import LogisticRegressionPosterior
from fishercert.laplace import (
    concentration_constant_1d,
    laplace_asymptotic_bound,
    laplace_certificate,
    normalized_laplace_convexity,
)
from fishercert.oracle import quadrature_posterior_1d, vectorized, wasserstein_1d


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[25, 50, 100, 200, 400])
    ap.add_argument("--slope", type=float, default=0.8, help="true coefficient used to simulate labels")
    ap.add_argument("--seed", type=int, default=9)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    n_max = max(args.sizes)
    X = rng.normal(size=(n_max, 1))
    y = np.where(rng.random(n_max) < 1 / (1 + np.exp(-args.slope * X[:, 0])), 1.0, -1.0)

    print("n,theta_star,bound_nonasymptotic,bound_large_sample,true_w1")
    for n in sorted(args.sizes):
        model = LogisticRegressionPosterior(X[:n], y[:n], 1.0)
        fit, cert = laplace_certificate(model, p=1)
        post = quadrature_posterior_1d(vectorized(lambda t, m=model: np.asarray(m.log_density(t[:, None]))))
        theta_star = float(fit.theta_star[0])
        Lp = concentration_constant_1d(post, theta_star, n, 1)
        large = laplace_asymptotic_bound(normalized_laplace_convexity(fit, n), model.third_derivative_sup() / n, Lp, n, 1,
                                         concentration_provenance="measured_by_quadrature")
        w1 = wasserstein_1d(1, post, fit.gaussian)
        print(f"{n},{theta_star:.6f},{cert.bound:.6e},{large.bound:.6e},{w1:.6e}")


if __name__ == "__main__":
    main()
