"""Command-line front end.

Subcommands:
    certify   Wasserstein and summary-error certificate for a target/approximation pair.
    laplace   Laplace approximation with its certificate, MAP and covariance eigenvalues.
    coreset   Frank-Wolfe coreset with weights, objective trace and certificate.
    figures   CSV curves comparing bounds with exact Gaussian and Student-t errors.

Exit codes: 0 success, 1 invalid spec or I/O failure, 2 no certificate could be
issued (a JSON record explaining why is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import weakref
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import certificates as cert_mod
from .certificates import ConvexityCertificate, NoCertificate
from .core_model import (
    DatasetError,
    GaussianLocationModel,
    GaussianMeasure,
    LogisticRegressionPosterior,
    QuarticPerturbedGaussian,
    StudentTMeasure,
    load_dataset,
    load_observations,
)
from .coreset import build_coreset_fw, coreset_certificate, decay_slope, gradient_feature_matrix
from .fisher import ReferenceMeasure, comparability_factor, fisher_distance_mc
from .oracle import quadrature_posterior_1d, vectorized
from .laplace import laplace_error_bound, laplace_fit, LaplaceCertificateInputs, strong_convexity_of, third_derivative_bound

FAMILIES = ("gaussian", "student_t", "logistic", "quartic_gaussian", "gaussian_location")
SPEC_FIELDS = {"family", "params", "data_path", "approx", "nu", "estimator", "convexity", "b_factor",
               "density_cap", "third_derivative_bound", "coreset"}
ESTIMATOR_FIELDS = {"p", "n_samples", "seed", "slack_k"}
PARAM_FIELDS = {
    "gaussian": {"mean", "cov"},
    "student_t": {"dof", "loc", "scale"},
    "logistic": {"prior_precision"},
    "quartic_gaussian": {"mean", "precision", "strength"},
    "gaussian_location": {"noise_var", "prior_precision", "prior_mean"},
}
BUNDLED_PREFIX = "bundled:"


class SpecError(ValueError):
    pass


class OutputError(SpecError):
    """An output path could not be written."""


@dataclass(frozen=True)
class EstimatorConfig:
    seed: int
    p: int = 2
    n_samples: int = 100_000
    slack_k: float = 3.0


@dataclass(frozen=True)
class ModelSpec:
    """Parsed model specification (see README for the JSON layout)."""

    family: str
    params: dict
    estimator: EstimatorConfig
    data_path: Optional[Path] = None
    approx: Any = "laplace"
    nu: Any = "target"
    convexity: Optional[dict] = None
    b_factor: Optional[float] = None
    density_cap: Optional[float] = None
    third_derivative_bound: Optional[float] = None
    coreset: dict = field(default_factory=dict)


def _require(cond, msg):
    if not cond:
        raise SpecError(msg)


def _check_keys(obj, allowed, where):
    _require(isinstance(obj, dict), f"{where}: expected an object")
    unknown = sorted(set(obj) - set(allowed))
    _require(not unknown, f"{where}: unknown field(s) {unknown}")


def _measure_spec(obj, where):
    _require(isinstance(obj, dict) and "family" in obj, f"{where}: expected an object with a 'family'")
    fam = obj["family"]
    if fam == "gaussian":
        _check_keys(obj, {"family", "mean", "cov"}, where)
        _require("mean" in obj and "cov" in obj, f"{where}: gaussian needs mean and cov")
        try:
            return GaussianMeasure(obj["mean"], obj["cov"])
        except ValueError as e:
            raise SpecError(f"{where}: {e}") from None
    if fam == "student_t":
        _check_keys(obj, {"family", "dof", "loc", "scale"}, where)
        _require("dof" in obj, f"{where}: student_t needs dof")
        try:
            return StudentTMeasure(float(obj["dof"]), float(obj.get("loc", 0.0)), float(obj.get("scale", 1.0)))
        except ValueError as e:
            raise SpecError(f"{where}: {e}") from None
    raise SpecError(f"{where}: unsupported family {fam!r}")


def parse_spec(doc: dict, base_dir: Path | None = None) -> ModelSpec:
    """Validate a JSON spec document. Raises :class:`SpecError` with a readable message."""
    _check_keys(doc, SPEC_FIELDS, "spec")
    _require("family" in doc, "spec: missing 'family'")
    family = doc["family"]
    _require(family in FAMILIES, f"spec: family must be one of {list(FAMILIES)}, got {family!r}")
    params = doc.get("params", {})
    _check_keys(params, PARAM_FIELDS[family], "params")
    _require("estimator" in doc, "spec: missing 'estimator' (a seed is mandatory)")
    est = doc["estimator"]
    _check_keys(est, ESTIMATOR_FIELDS, "estimator")
    _require("seed" in est, "estimator: missing mandatory 'seed'")
    _require(isinstance(est["seed"], int) and not isinstance(est["seed"], bool) and est["seed"] >= 0,
             "estimator: seed must be a nonnegative integer")
    p = est.get("p", 2)
    _require(p in (1, 2), "estimator: p must be 1 or 2")
    n = est.get("n_samples", 100_000)
    _require(isinstance(n, int) and n >= 100, "estimator: n_samples must be an integer >= 100")
    k = est.get("slack_k", 3.0)
    _require(isinstance(k, (int, float)) and k >= 0, "estimator: slack_k must be nonnegative")
    data_path = doc.get("data_path")
    if data_path is not None:
        _require(isinstance(data_path, str), "data_path must be a string")
        if data_path.startswith(BUNDLED_PREFIX):
            data_path = Path(str(resources.files("fishercert") / "data" / data_path[len(BUNDLED_PREFIX):]))
        else:
            data_path = Path(data_path)
            if not data_path.is_absolute() and base_dir is not None:
                data_path = base_dir / data_path
    _require(family not in ("logistic", "gaussian_location") or data_path is not None, f"family {family} needs data_path")
    approx = doc.get("approx", "laplace")
    if approx != "laplace":
        approx = _measure_spec(approx, "approx")
        _require(isinstance(approx, GaussianMeasure), "approx: only Gaussian approximations are supported")
    nu = doc.get("nu", "target")
    if nu not in ("target", "laplace_of_target"):
        nu = _measure_spec(nu, "nu")
    conv = doc.get("convexity")
    if conv is not None:
        _check_keys(conv, {"alpha", "K", "R"}, "convexity")
        _require("alpha" in conv and conv["alpha"] > 0, "convexity: alpha must be positive")
        _require(("K" in conv) == ("R" in conv), "convexity: K and R go together")
    for name in ("b_factor", "density_cap", "third_derivative_bound"):
        v = doc.get(name)
        _require(v is None or (isinstance(v, (int, float)) and v >= 0), f"{name} must be a nonnegative number")
    cs = doc.get("coreset", {})
    _check_keys(cs, {"K", "S"}, "coreset")
    return ModelSpec(family, dict(params), EstimatorConfig(est["seed"], p, n, float(k)), data_path, approx, nu, conv,
                     doc.get("b_factor"), doc.get("density_cap"), doc.get("third_derivative_bound"), dict(cs))


def load_spec(path) -> ModelSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as e:
        raise SpecError(f"cannot read spec {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise SpecError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    return parse_spec(doc, path.parent)


# ---------------------------------------------------------------------------
# Spec -> objects
# ---------------------------------------------------------------------------


def build_target(spec: ModelSpec):
    p = spec.params
    try:
        if spec.family == "gaussian":
            return GaussianMeasure(p["mean"], p["cov"])
        if spec.family == "student_t":
            return StudentTMeasure(float(p["dof"]), float(p.get("loc", 0.0)), float(p.get("scale", 1.0)))
        if spec.family == "logistic":
            X, y = load_dataset(spec.data_path)
            return LogisticRegressionPosterior(X, y, float(p.get("prior_precision", 1.0)))
        if spec.family == "quartic_gaussian":
            return QuarticPerturbedGaussian(p["mean"], p["precision"], float(p["strength"]))
        data = load_observations(spec.data_path)
        return GaussianLocationModel(data, float(p.get("noise_var", 1.0)), float(p.get("prior_precision", 1.0)),
                                     p.get("prior_mean"))
    except KeyError as e:
        raise SpecError(f"params: missing {e.args[0]!r} for family {spec.family}") from None
    except (DatasetError, ValueError) as e:
        raise SpecError(str(e)) from None


def _as_fit_model(target):
    return target.as_log_density() if isinstance(target, GaussianMeasure) else target


_QUADRATURE_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _quadrature_target(target):
    """Normalized univariate target by quadrature, or None in higher dimensions."""
    if target.dim != 1:
        return None
    if target not in _QUADRATURE_CACHE:
        logf = vectorized(lambda x: np.asarray(target.log_density(np.asarray(x, dtype=float)[..., None]), dtype=float))
        _QUADRATURE_CACHE[target] = quadrature_posterior_1d(logf)
    return _QUADRATURE_CACHE[target]


def _target_reference(target):
    if isinstance(target, GaussianMeasure):
        return ReferenceMeasure.gaussian(target, is_target=True)
    if isinstance(target, StudentTMeasure):
        return ReferenceMeasure.student_t(target, is_target=True)
    if isinstance(target, GaussianLocationModel):
        return ReferenceMeasure.gaussian(target.posterior(), is_target=True)
    post = _quadrature_target(target)
    return None if post is None else ReferenceMeasure.from_measure(post, is_target=True)


def _target_density(target):
    if isinstance(target, (GaussianMeasure, StudentTMeasure)):
        return target
    if isinstance(target, GaussianLocationModel):
        return target.posterior()
    return _quadrature_target(target)


def _reference(spec: ModelSpec, target, fit_cache: dict):
    if spec.nu == "target":
        ref = _target_reference(target)
        if ref is None:
            raise NoCertificate(f"cannot draw from the {spec.family} target; use nu='laplace_of_target' or an explicit nu")
        return ref
    if spec.nu == "laplace_of_target":
        fit = fit_cache.setdefault("fit", laplace_fit(_as_fit_model(target)))
        return ReferenceMeasure.gaussian(fit.gaussian, descriptor="laplace_of_target")
    if isinstance(spec.nu, GaussianMeasure):
        return ReferenceMeasure.gaussian(spec.nu)
    return ReferenceMeasure.student_t(spec.nu)


def _convexity(spec: ModelSpec, derived_alpha: float) -> ConvexityCertificate:
    c = spec.convexity
    if c is None:
        return ConvexityCertificate.global_strong(derived_alpha)
    if "K" in c:
        return ConvexityCertificate.tail_strong(float(c["K"]), float(c["R"]), float(c["alpha"]))
    return ConvexityCertificate.global_strong(float(c["alpha"]), provenance="user_supplied")


def _finite_or_none(v: float):
    return float(v) if math.isfinite(v) else None


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _no_certificate(reason: str, **extra) -> dict:
    out = {"status": "no_certificate", "reason": reason}
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_certify(spec: ModelSpec) -> tuple[int, dict]:
    """Certificate, summary-error report and (for Gaussian pairs) a closed-form cross-check."""
    target = build_target(spec)
    est = spec.estimator
    fit_cache: dict = {}
    if spec.approx == "laplace":
        fit = fit_cache.setdefault("fit", laplace_fit(_as_fit_model(target)))
        approx = fit.gaussian
    else:
        approx = spec.approx
    if approx.dim != target.dim:
        raise SpecError(f"approx has dimension {approx.dim}, target has {target.dim}")
    cc = _convexity(spec, approx.strong_convexity)
    try:
        nu = _reference(spec, target, fit_cache)
        if nu.is_target:
            fe = fisher_distance_mc(target.potential_grad, approx.potential_grad, nu, est.p, est.n_samples, est.seed)
            wc = cert_mod.wasserstein_from_fisher(cc, fe, est.p, est.slack_k)
            fe2 = fe if est.p == 2 else None
            sup_ratio = 1.0
        else:
            fe = fisher_distance_mc(target.potential_grad, approx.potential_grad, nu, 2, est.n_samples, est.seed)
            eta = _target_density(target)
            if spec.b_factor is None and eta is None:
                raise NoCertificate(f"no comparability factor available for the {target.dim}-dimensional {spec.family} target; supply b_factor")
            B = comparability_factor(est.p, eta, nu, spec.b_factor)
            wc = cert_mod.wasserstein_from_fisher_reference(cc, B, fe, est.p, est.slack_k)
            fe2 = fe
            sup_ratio = None
            if eta is not None:
                B2 = B if est.p == 2 else comparability_factor(2, eta, nu)
                sup_ratio = B2.value**2 if B2.finite else None
    except NoCertificate as e:
        return 2, _no_certificate(str(e), family=spec.family, p=est.p, seed=est.seed)
    eta = _target_density(target)
    cov_eta = None
    if isinstance(eta, GaussianMeasure):
        cov_eta = eta.covariance_opnorm
    elif isinstance(eta, StudentTMeasure) and eta.dof > 2:
        cov_eta = eta.var()
    cap = spec.density_cap
    if cap is None and eta is not None:
        cap = float(eta.density_cap())
    tv = None
    if fe2 is not None and sup_ratio is not None:
        tv = cert_mod.tv_from_fisher(cc, sup_ratio, fe2, est.slack_k)
    eps2 = wc.bound if est.p == 2 else None
    report = cert_mod.moment_error_report(wc.bound, eps2, cov_eta, approx.covariance_opnorm, cap, tv)
    out = {"status": "ok", "certificate": wc.to_dict(), "summary_errors": report.to_dict()}
    if isinstance(eta, GaussianMeasure):
        w2 = cert_mod.gaussian_w2_closed_form(eta, approx)
        out["checks"] = {"closed_form_w2": w2, "bound_dominates_closed_form": bool(wc.bound >= w2)}
    return 0, out


def cmd_laplace(spec: ModelSpec) -> tuple[int, dict, list]:
    target = build_target(spec)
    if isinstance(target, StudentTMeasure):
        raise SpecError("the Laplace certificate needs a strongly log-concave target; student_t is not")
    fit = laplace_fit(_as_fit_model(target))
    alpha = float(spec.convexity["alpha"]) if spec.convexity else strong_convexity_of(target)
    try:
        M = third_derivative_bound(target, spec.third_derivative_bound)
    except ValueError as e:
        return 2, _no_certificate(str(e), family=spec.family), []
    wc = laplace_error_bound(LaplaceCertificateInputs.from_fit(fit, alpha, M), spec.estimator.p)
    d = wc.to_dict()
    d["seed"] = spec.estimator.seed
    out = {"status": "ok", "certificate": d, "theta_star": [float(v) for v in fit.theta_star],
           "lambdas": [float(v) for v in fit.lambdas]}
    rows = [(i, float(fit.theta_star[i]), float(fit.lambdas[i])) for i in range(fit.theta_star.shape[0])]
    return 0, out, rows


def cmd_coreset(spec: ModelSpec, K: int) -> tuple[int, dict, list, list]:
    target = build_target(spec)
    _require(hasattr(target, "datum_grads"), f"family {spec.family} has no per-datum likelihood; use logistic or gaussian_location")
    _require(K >= 1, "--k must be at least 1")
    est = spec.estimator
    nu_choice = spec.nu if spec.nu != "target" else "laplace_of_target"
    nu = _reference(ModelSpec(**{**spec.__dict__, "nu": nu_choice}), target, {})
    S = int(spec.coreset.get("S", 256))
    fs = gradient_feature_matrix(target, nu, S, est.seed)
    res = build_coreset_fw(fs, K)
    weighted = target.with_weights(res.weights)
    fe = fisher_distance_mc(target.potential_grad, weighted.potential_grad, nu, 2, est.n_samples, est.seed)
    weights_rows = [(j, float(w)) for j, w in enumerate(res.weights) if w > 0]
    trace_rows = [(k + 1, float(v), int(s)) for k, (v, s) in enumerate(zip(res.objective_trace, res.support_trace))]
    summary = {"K": K, "S": S, "support_size": res.support_size, "final_objective": float(res.objective_trace[-1]),
               "log_objective_slope": _finite_or_none(decay_slope(res.objective_trace)), "fisher_check": fe.value,
               "fisher_check_stderr": fe.std_error}
    cc = _convexity(spec, strong_convexity_of(target))
    eta = _target_density(target)
    if spec.b_factor is None and eta is None:
        return 2, _no_certificate(f"no comparability factor available for the {spec.family} target; supply b_factor",
                                  coreset=summary), weights_rows, trace_rows
    B = comparability_factor(est.p, eta, nu, spec.b_factor)
    try:
        wc = coreset_certificate(cc, B, float(res.objective_trace[-1]), fe, est.p, est.slack_k)
    except NoCertificate as e:
        return 2, _no_certificate(str(e), coreset=summary), weights_rows, trace_rows
    out = {"status": "ok", "certificate": wc.to_dict(), "coreset": summary}
    if isinstance(eta, GaussianMeasure):
        w2 = cert_mod.gaussian_w2_closed_form(eta, weighted.posterior())
        out["checks"] = {"closed_form_w2": w2, "bound_dominates_closed_form": bool(wc.bound >= w2)}
    return 0, out, weights_rows, trace_rows


FIG1_R = (0.25, 4.0, 200)
FIG2_H = (2.6, 50.0, 200)


def figure_rows(which: str) -> tuple[list, list]:
    """Header and rows for ``fig1`` (Gaussian W_2 bounds against the ratio of scales) or ``fig2`` (Student-t std error)."""
    if which == "fig1":
        header = ["r", "true_w2", "bound_nu_eq_eta", "bound_rho2", "bound_rho4", "bound_rho8"]
        rows = []
        for r in np.linspace(*FIG1_R):
            r = float(r)
            true = cert_mod.gaussian_w2_closed_form(GaussianMeasure.univariate(0.0, 1.0), GaussianMeasure.univariate(1.0, r))
            row = [r, true, math.sqrt(cert_mod.gaussian_reference_bound(1.0, r, -1.0))]
            row += [math.sqrt(cert_mod.gaussian_reference_bound(1.0, r, -1.0, 1.0, rho)) for rho in (2.0, 4.0, 8.0)]
            rows.append(row)
        return header, rows
    if which == "fig2":
        header = ["h", "true_std_err", "bound_nu_eta", "bound_nu_t25"]
        rows = []
        for h in np.linspace(*FIG2_H):
            h = float(h)
            true = abs(math.sqrt(h / (h - 2.0)) - 1.0)
            b_eta = cert_mod.STD_CONST * math.sqrt(cert_mod.t_reference_bound(h))
            b_t = cert_mod.STD_CONST * math.sqrt(cert_mod.t_reference_measure_bound(h, 2.5))
            rows.append([h, true, b_eta, b_t])
        return header, rows
    raise SpecError(f"unknown figure {which!r}")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _write(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fishercert", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("certify", help="certificate for a target/approximation pair")
    c.add_argument("--spec", required=True, type=Path)
    c.add_argument("--out", type=Path, help="JSON output file (stdout if omitted)")
    l = sub.add_parser("laplace", help="Laplace approximation with certificate")
    l.add_argument("--spec", required=True, type=Path)
    l.add_argument("--out", type=Path, help="output directory for certificate.json and laplace.csv")
    k = sub.add_parser("coreset", help="Frank-Wolfe coreset with certificate")
    k.add_argument("--spec", required=True, type=Path)
    k.add_argument("--k", type=int, default=None, help="iterations (default: coreset.K from the --spec file, else 50)")
    k.add_argument("--out", type=Path, help="output directory for certificate.json, weights.csv, trace.csv")
    f = sub.add_parser("figures", help="bound-versus-truth curves as CSV")
    f.add_argument("--which", required=True, choices=("fig1", "fig2"))
    f.add_argument("--out", type=Path, help="CSV output file (stdout if omitted)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "figures":
            text = _csv_text(*figure_rows(args.which))
            if args.out:
                _write(args.out, text)
            else:
                sys.stdout.write(text)
            return 0
        spec = load_spec(args.spec)
        if args.command == "certify":
            code, doc = cmd_certify(spec)
            text = _dumps(doc)
            if args.out:
                _write(args.out, text)
            else:
                sys.stdout.write(text)
            return code
        if args.command == "laplace":
            code, doc, rows = cmd_laplace(spec)
            if args.out:
                _write(args.out / "certificate.json", _dumps(doc))
                if rows:
                    _write(args.out / "laplace.csv", _csv_text(["index", "theta_star", "lambda"], rows))
            else:
                sys.stdout.write(_dumps(doc))
            return code
        K = args.k if args.k is not None else int(spec.coreset.get("K", 50))
        code, doc, wrows, trows = cmd_coreset(spec, K)
        if args.out:
            _write(args.out / "certificate.json", _dumps(doc))
            _write(args.out / "weights.csv", _csv_text(["index", "weight"], wrows))
            _write(args.out / "trace.csv", _csv_text(["k", "objective", "support_size"], trows))
        else:
            sys.stdout.write(_dumps(doc))
        return code
    except OutputError as e:
        print(f"fishercert: {e}", file=sys.stderr)
        return 1
    except SpecError as e:
        print(f"fishercert: invalid spec: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
