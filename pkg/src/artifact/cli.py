"""Command-line front end: sweeps, scaling tables, single-point diagnostics."""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

from . import relationships as rel
from .config import Config, load_config
from .errors import ArtifactError, ConfigError, ConvergenceError, DomainError, ThresholdError
from .fixed_point import solve_lambda_star, solve_nu_pair, upsilon_chi
from .linear_theory import linear_equivalents, norm_linear_minnorm, risk_linear_minnorm
from .rfm_theory import norm_rfm_minnorm, rfm_equivalents, risk_rfm_minnorm
from .simulator import SimConfig, simulate_linear, simulate_rfm
from .spectral_model import SpectralModel, quad_forms, resolvent_trace_sq

COLUMNS = ("gamma,n,dim,lambda,regime,risk_bias_th,risk_var_th,risk_th,norm_bias_th,"
           "norm_var_th,norm_th,risk_emp,risk_se,norm_emp,norm_se,trials,seed,flags").split(",")
SCALING_COLUMNS = ("q,ell,region,gamma_n,gamma_N,fitted_gamma_n,fitted_gamma_N,"
                   "risk_rate,norm_rate,flags").split(",")
THRESHOLD_GAMMA = 1e-3


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{x:.17g}"


# --------------------------------------------------------------------------- sweep


def _linear_isotropic(cfg: Config) -> bool:
    return cfg.model.kind == "linear" and cfg.model.spectrum == "isotropic"


def _base_model(cfg: Config) -> SpectralModel | None:
    return None if _linear_isotropic(cfg) else cfg.build_model()


def _point_model(cfg: Config, base: SpectralModel | None, dim: int) -> SpectralModel:
    """Linear sweeps vary the feature count, so the spectrum follows dim."""
    if cfg.model.kind == "rfm":
        return base
    if _linear_isotropic(cfg):
        return cfg.build_model(dim)
    if base.is_power_law or dim < base.rank:
        return base.truncated(dim)
    if dim > base.rank:
        raise DomainError(f"dim={dim} exceeds the rank {base.rank} of the spectrum file")
    return base


def _theory(model: SpectralModel, kind: str, n: int, dim: int, lam: float):
    if kind == "rfm":
        if lam > 0:
            parts = rfm_equivalents(model, n, dim, lam)
            return parts.risk, parts.norm
        return risk_rfm_minnorm(model, n, dim), norm_rfm_minnorm(model, n, dim)
    if lam > 0:
        return linear_equivalents(model, n, lam)
    return risk_linear_minnorm(model, n), norm_linear_minnorm(model, n)


def _empirical(model: SpectralModel, cfg: Config, n: int, dim: int, lam: float):
    sim = cfg.simulation
    sc = SimConfig(n=n, d_or_p=dim, lam=lam, trials=sim.trials, seed=sim.seed,
                   truncation=sim.truncation, workers=sim.workers)
    return simulate_rfm(model, sc) if cfg.model.kind == "rfm" else simulate_linear(model, sc)


def sweep_rows(cfg: Config) -> list[dict]:
    """One row per grid value, in grid order."""
    base = _base_model(cfg)
    n = cfg.sweep.n[0]
    rows = []
    for value in cfg.grid():
        if cfg.sweep.axis == "gamma":
            gamma, lam = value, cfg.sweep.lam
        else:
            if cfg.sweep.gamma is None:
                raise ConfigError("[sweep] axis = lambda needs a fixed gamma")
            gamma, lam = cfg.sweep.gamma, value
        if lam is None or lam < 0:
            raise ConfigError("lambda must be non-negative")
        dim = max(1, round(gamma * n))
        row = dict.fromkeys(COLUMNS)
        row.update(gamma=gamma, n=n, dim=dim, **{"lambda": lam})
        row["regime"] = "under" if dim < n else ("over" if dim > n else "threshold")
        flags = []
        if abs(gamma - 1.0) < THRESHOLD_GAMMA:
            row["regime"] = "threshold"
            flags.append("threshold")
        else:
            try:
                model = _point_model(cfg, base, dim)
                risk, norm = _theory(model, cfg.model.kind, n, dim, lam)
                row.update(risk_bias_th=risk.bias, risk_var_th=risk.variance, risk_th=risk.total,
                           norm_bias_th=norm.bias, norm_var_th=norm.variance, norm_th=norm.total)
                if cfg.simulation.enabled:
                    emp = _empirical(model, cfg, n, dim, lam)
                    row.update(risk_emp=emp.risk.total, risk_se=emp.risk_total_se,
                               norm_emp=emp.norm.total, norm_se=emp.norm_total_se,
                               trials=emp.trials_used, seed=cfg.simulation.seed)
            except ThresholdError:
                row["regime"] = "threshold"
                flags.append("threshold")
            except DomainError:
                flags.append("domain_error")
            except ConvergenceError:
                flags.append("numerical_failure")
        row["flags"] = ";".join(flags)
        rows.append(row)
    return rows


def format_rows(rows: list[dict], columns, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        cells = []
        for col in columns:
            v = row.get(col)
            cells.append(v if isinstance(v, str) else _num(v))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


# --------------------------------------------------------------------------- scaling


def scaling_rows(cfg: Config) -> list[dict]:
    ns = cfg.sweep.n
    if len(ns) < 2:
        raise ConfigError("insufficient grid: scaling needs at least two n values")
    if not cfg.sweep.samples:
        raise ConfigError("[sweep] samples must list q:ell pairs")
    m = cfg.model
    rows = []
    for q, ell in cfg.sweep.samples:
        fit = rel.fit_scaling(m.alpha, m.r, q, ell, ns, noise_var=m.noise_var, tail_tol=m.tail_tol)
        e = fit.exponents
        rows.append(dict(q=q, ell=ell, region=e.region, gamma_n=e.gamma_n, gamma_N=e.gamma_N,
                         fitted_gamma_n=fit.fitted_gamma_n, fitted_gamma_N=fit.fitted_gamma_N,
                         risk_rate=e.risk_rate, norm_rate=e.norm_rate,
                         flags="boundary" if e.boundary else ""))
    return rows


# --------------------------------------------------------------------------- single point


def _bv(x) -> dict:
    return {"bias": x.bias, "variance": x.variance, "total": x.total}


def fixed_point_report(model: SpectralModel, n: int, dim: int, lam: float) -> dict:
    if model.kind == "rfm":
        sol = solve_nu_pair(model, n, dim, lam)
        out = {"nu2": sol.primal, "nu1": sol.companion, "residual": sol.residual,
               "iterations": sol.iterations, "regime": sol.regime}
        ups, chi = upsilon_chi(model, n, dim, sol.companion, sol.primal)
        out.update(upsilon=ups, chi=chi)
        return out
    sol = solve_lambda_star(model, n, lam)
    return {"lambda_star": sol.primal, "residual": sol.residual,
            "iterations": sol.iterations, "regime": sol.regime}


def diagnose_report(model: SpectralModel, n: int, dim: int, lam: float) -> dict:
    report = {"model": repr(model), "n": n, "dim": dim, "lambda": lam,
              "fixed_point": fixed_point_report(model, n, dim, lam)}
    risk, norm = _theory(model, model.kind, n, dim, lam)
    report.update(risk=_bv(risk), norm=_bv(norm))
    residuals = {}
    iso = not model.is_power_law and bool((model.eig == model.eig[0]).all())
    if model.kind == "linear":
        b = model.target_norm_sq()
        if lam > 0:
            t = report["fixed_point"]["lambda_star"]
            q = quad_forms(model, t)
            link = norm.bias - q.q_lam2_inv2 - resolvent_trace_sq(model, t) / n * risk.bias
            residuals["norm_bias_link"] = link
            if iso:
                residuals["isotropic_cubic"] = rel.isotropic_ridge_residual(
                    model.rank, b, model.noise_var, lam, risk.total, norm.total)
        elif dim < n:
            residuals["underparam_law"] = rel.underparam_linear_law(model).residual(
                risk.total, norm.total)
        elif iso:
            residuals["isotropic_hyperbola"] = risk.total - rel.minnorm_isotropic_risk_from_norm(
                b, model.noise_var, norm.total, "over")
    elif lam == 0:
        if dim > n:
            residuals["overparam_line"] = rel.rfm_overparam_line(model, n).residual(
                risk.total, norm.total)
        elif iso:
            fr = rel.rfm_finite_rank_underparam(model.rank, n, model.target_norm_sq(), model.noise_var)
            residuals["finite_rank_variance"] = fr.variance_residual(risk.variance, norm.variance)
            residuals["finite_rank_bias"] = fr.bias_residual(risk.bias, norm.bias)
    report["relationship_residuals"] = residuals
    return report


# --------------------------------------------------------------------------- entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="artifact", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("sweep", "scaling", "diagnose", "fixed-point"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=name in ("sweep", "scaling"))
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--sim", dest="sim", action="store_true", default=None)
        sp.add_argument("--no-sim", dest="sim", action="store_false")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--workers", type=int)
        if name in ("diagnose", "fixed-point"):
            sp.add_argument("--n", type=int)
            sp.add_argument("--dim", type=int, help="d (linear) or p (random features)")
            sp.add_argument("--lambda", dest="lam", type=float)
    return ap


def _apply_overrides(cfg: Config, args) -> None:
    if args.format:
        cfg.output.format = args.format
    if args.out:
        cfg.output.path = args.out
    if args.sim is not None:
        cfg.simulation.enabled = args.sim
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        cfg.simulation.seed = args.seed
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("trials must be at least 1")
        cfg.simulation.trials = args.trials
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("workers must be at least 1")
        cfg.simulation.workers = args.workers


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _point_args(cfg: Config, args):
    n = args.n if args.n is not None else cfg.sweep.n[0]
    lam = args.lam if args.lam is not None else cfg.sweep.lam
    if args.dim is not None:
        dim = args.dim
    elif cfg.sweep.gamma is not None:
        dim = max(1, round(cfg.sweep.gamma * n))
    else:
        raise ConfigError("pass --dim or set [sweep] gamma")
    if lam is None or lam < 0:
        raise ConfigError("lambda must be non-negative")
    return n, dim, lam


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    cfg = load_config(args.config) if args.config else Config()
    _apply_overrides(cfg, args)
    if args.command == "sweep":
        _emit(format_rows(sweep_rows(cfg), COLUMNS, cfg.output.format), cfg.output.path)
    elif args.command == "scaling":
        _emit(format_rows(scaling_rows(cfg), SCALING_COLUMNS, cfg.output.format), cfg.output.path)
    else:
        n, dim, lam = _point_args(cfg, args)
        model = _point_model(cfg, _base_model(cfg), dim)
        fn = diagnose_report if args.command == "diagnose" else fixed_point_report
        report = fn(model, n, dim, lam)
        _emit(json.dumps(report, indent=1, default=_json_default) + "\n", cfg.output.path)
    return 0


def _json_default(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return float(x)


def main(argv=None) -> int:
    try:
        return run(argv)
    except ArtifactError as exc:
        kind = type(exc).__name__
        print(f"error ({kind}): {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
