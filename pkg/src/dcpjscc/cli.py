"""Command-line front end: design, sweep, simulate and validate.

Physical parameters (sigma_x, sigma_z, P, T) go in; every record carries
both normalized and physical gains. Exit codes: 0 success, 1 validation
failure, 2 invalid or infeasible input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

from . import anomaly as ad
from . import binary_class as bc
from . import sim_oracle as so
from . import validate as val
from .errors import DCPError, PeAboveRange, TargetUnreachable

EXIT_OK, EXIT_VALIDATION, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Bad or infeasible command-line input (exit code 2)."""


# --- output -----------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if not math.isfinite(value):
            return ""
        return format(value, ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def to_csv(records: list[dict]) -> str:
    """RFC-4180 CSV with a header row; floats at 17 significant digits."""
    buf = io.StringIO()
    fields = list(records[0]) if records else []
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(fields)
    for rec in records:
        writer.writerow([_cell(rec.get(k)) for k in fields])
    return buf.getvalue()


def _parse_cell(text: str):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def from_csv(text: str) -> list[dict]:
    """Inverse of :func:`to_csv`; empty cells become ``None``."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return []
    header = rows[0]
    return [dict(zip(header, (_parse_cell(c) for c in row))) for row in rows[1:]]


def to_json(records: list[dict]) -> str:
    payload = [{k: _json_value(v) for k, v in rec.items()} for rec in records]
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def _emit(records: list[dict], args) -> None:
    text = to_json(records) if args.format == "json" else to_csv(records)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- argument handling ------------------------------------------------------


def _positive(name):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        if not (math.isfinite(v) and v > 0):
            raise argparse.ArgumentTypeError(f"{name} must be finite and > 0, got {text!r}")
        return v

    return parse


def _nonneg(name):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        if not (math.isfinite(v) and v >= 0):
            raise argparse.ArgumentTypeError(f"{name} must be finite and >= 0, got {text!r}")
        return v

    return parse


def _count(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _system_args(p, *, pe=True, t=False):
    p.add_argument("--sigma-x", type=_positive("sigma-x"), default=1.0, help="source std (default 1)")
    p.add_argument("--sigma-z", type=_positive("sigma-z"), default=1.0, help="noise std (default 1)")
    p.add_argument("--power", type=_positive("power"), default=1.0, help="power budget P (default 1)")
    if pe:
        p.add_argument("--pe", type=float, required=True, help="target error/risk in (0, 0.5)")
    if t:
        p.add_argument("--t", type=_positive("t"), default=2.0, help="normality threshold T/sigma_x (default 2)")
        p.add_argument("--epsilon", type=_nonneg("epsilon"), default=0.0, help="unknown-anomaly weight")
        p.add_argument("--m", type=_positive("m"), default=None, help="uniform anomaly bound (default 2t)")


def _output_args(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output file (default stdout)")


def _mc_args(p, default_n=1_000_000):
    p.add_argument("--mc-n", type=_count, default=default_n, help=f"Monte-Carlo samples (default {default_n})")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_count, default=1, help="threads; does not change results")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcpjscc",
        description="Distortion-classification-power design for analog JSCC over AWGN.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design-class", help="piecewise-linear design for a classification budget")
    _system_args(p)
    _output_args(p)

    p = sub.add_parser("design-ad", help="anomaly-detection design for a risk budget")
    _system_args(p, t=True)
    _output_args(p)

    p = sub.add_parser("pareto-class", help="sweep the binary trade-off front")
    _system_args(p, pe=False)
    p.add_argument("--points", type=_count, default=20)
    _mc_args(p)
    _output_args(p)

    p = sub.add_parser("pareto-ad", help="sweep the anomaly-detection trade-off front")
    _system_args(p, pe=False, t=True)
    p.add_argument("--points", type=_count, default=20)
    _mc_args(p)
    _output_args(p)

    p = sub.add_parser("simulate", help="Monte-Carlo run of one designed or explicit system")
    p.add_argument("scenario", choices=("class", "ad"))
    _system_args(p, pe=False, t=True)
    p.add_argument("--pe", type=float, default=None, help="design for this target first")
    p.add_argument("--alpha", type=_nonneg("alpha"), default=None, help="normalized linear gain")
    p.add_argument("--beta", type=_nonneg("beta"), default=None, help="normalized sign gain (class)")
    p.add_argument("--delta", type=_nonneg("delta"), default=None, help="normalized offset (ad)")
    p.add_argument("--psi", type=_nonneg("psi"), default=None, help="detector threshold (ad)")
    _mc_args(p)
    _output_args(p)

    p = sub.add_parser("validate", help="cross-check closed forms against quadrature and MC")
    p.add_argument("--suite", choices=val.SUITES, default="all")
    p.add_argument("--seed", type=int, default=0)
    _output_args(p)
    return parser


def _config(args) -> bc.SourceChannelConfig:
    return bc.SourceChannelConfig(args.sigma_x, args.sigma_z, args.power)


def _target(pe) -> bc.DesignTarget:
    try:
        return bc.DesignTarget(pe)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _ad_models(args):
    model = ad.NormalityModel(args.t)
    m = args.m if args.m is not None else 2.0 * args.t
    if m <= args.t:
        raise InputError(f"m={m!r} must exceed t={args.t!r}")
    try:
        cont = ad.ContaminationModel(args.epsilon, m)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return model, cont


# --- commands ---------------------------------------------------------------


def design_class_record(cfg: bc.SourceChannelConfig, pe: float) -> dict:
    snr = cfg.snr()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PeAboveRange)
        sol = bc.design(cfg, _target(pe))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    A, B = sol.encoder.to_physical(cfg)
    pe_min, pe_max = bc.pareto_range(snr)
    return {
        "sigma_x": cfg.sigma_x,
        "sigma_z": cfg.sigma_z,
        "power": cfg.power,
        "snr": snr,
        "pe_target": pe,
        "alpha": sol.alpha_star,
        "beta": sol.beta_star,
        "A": A,
        "B": B,
        "achieved_risk": sol.achieved_risk,
        "solver_residual": sol.solver_residual,
        "normalized_power": bc.power(sol.encoder),
        "corner": sol.corner or "",
        "degenerate": sol.degenerate,
        "pe_min": pe_min,
        "pe_max": pe_max,
        "mse_reconstruction_corner": bc.mmse_linear(math.sqrt(snr)),
        "mse_classification_corner_bound": bc.mmse_tanh_bound(math.sqrt(snr)),
    }


def design_ad_record(cfg, pe, model, cont) -> dict:
    sol = ad.design_ad(cfg, _target(pe), model)
    enc, det = sol.encoder, sol.detector
    base = ad.risk_ad(det, enc, model)
    snr_ok, snr_ko = ad.snr_split(enc, model)
    rec = {
        "sigma_x": cfg.sigma_x,
        "sigma_z": cfg.sigma_z,
        "power": cfg.power,
        "snr": cfg.snr(),
        "t": model.t,
        "T": model.t * cfg.sigma_x,
        "theta": model.theta,
        "pe_target": pe,
        "alpha": sol.alpha,
        "delta": sol.delta,
        "psi": sol.psi,
        "A": sol.alpha * cfg.sigma_z / cfg.sigma_x,
        "D": sol.delta * cfg.sigma_z,
        "psi_physical": sol.psi * cfg.sigma_z,
        "risk": sol.risk,
        "fpr": base.fpr,
        "fnr": base.fnr,
        "snr_ok": snr_ok,
        "snr_ko": snr_ko,
        "normalized_power": sol.power,
        "risk_residual": sol.risk_residual,
        "stationarity_residual": sol.stationarity_residual,
        "power_residual": sol.power - cfg.snr(),
        "corner": sol.corner or "",
        "degenerate": sol.corner is not None,
        "n_roots": len(sol.roots),
        "epsilon": cont.epsilon,
        "m": cont.m,
    }
    if cont.epsilon > 0:
        cont_risk = ad.risk_ad(det, enc, model, cont).risk
        rec["risk_contaminated"] = cont_risk
        rec["risk_contamination_delta"] = cont_risk - sol.risk
    return rec


def simulate_record(args) -> dict:
    cfg = _config(args)
    if args.scenario == "class":
        if args.pe is not None:
            enc = bc.design(cfg, _target(args.pe)).encoder
        elif args.alpha is not None or args.beta is not None:
            enc = bc.PiecewiseLinearEncoder(args.alpha or 0.0, args.beta or 0.0)
        else:
            raise InputError("simulate class needs --pe or --alpha/--beta")
        res = so.run_chain(so.SimConfig(so.BINARY, args.mc_n, args.seed, enc, workers=args.workers))
        A, B = enc.to_physical(cfg)
        return {
            "scenario": "class",
            "alpha": enc.alpha,
            "beta": enc.beta,
            "A": A,
            "B": B,
            "closed_form_risk": bc.risk_closed_form(enc),
            "normalized_power": bc.power(enc),
            "mc_mse": res.mse.mean,
            "mc_mse_se": res.mse.std_error,
            "mc_mse_physical": res.mse.mean * cfg.sigma_x**2,
            "mc_error_rate": res.error_rate.mean,
            "mc_error_rate_se": res.error_rate.std_error,
            "mc_power": res.empirical_power.mean,
            "mc_power_se": res.empirical_power.std_error,
            "mc_n": args.mc_n,
            "seed": args.seed,
        }

    model, cont = _ad_models(args)
    if args.pe is not None:
        sol = ad.design_ad(cfg, _target(args.pe), model)
        enc, det = sol.encoder, sol.detector
    elif args.alpha is not None or args.delta is not None:
        enc = ad.ADEncoder(args.alpha or 0.0, 0.0, args.delta or 0.0)
        det = ad.DetectorConfig(args.psi) if args.psi is not None else ad.bayes_threshold(enc, model)
    else:
        raise InputError("simulate ad needs --pe or --alpha/--delta")
    res = so.run_chain(
        so.SimConfig(so.ANOMALY, args.mc_n, args.seed, enc, model=model, contamination=cont,
                     detector=det, workers=args.workers)
    )
    return {
        "scenario": "ad",
        "t": model.t,
        "epsilon": cont.epsilon,
        "m": cont.m,
        "alpha": enc.alpha,
        "delta": enc.delta,
        "psi": det.psi,
        "closed_form_risk": ad.risk_ad(det, enc, model, cont).risk,
        "normalized_power": ad.power_ad(enc, model),
        "mc_mse_normal": res.mse.mean,
        "mc_mse_normal_se": res.mse.std_error,
        "mc_risk": res.error_rate.mean,
        "mc_risk_se": res.error_rate.std_error,
        "mc_fpr": res.fpr.mean,
        "mc_fpr_se": res.fpr.std_error,
        "mc_fnr": res.fnr.mean,
        "mc_fnr_se": res.fnr.std_error,
        "mc_power": res.empirical_power.mean,
        "mc_power_se": res.empirical_power.std_error,
        "mc_n": args.mc_n,
        "seed": args.seed,
    }


def _run(args) -> int:
    cmd = args.command
    if cmd == "design-class":
        _emit([design_class_record(_config(args), args.pe)], args)
        return EXIT_OK
    if cmd == "design-ad":
        model, cont = _ad_models(args)
        _emit([design_ad_record(_config(args), args.pe, model, cont)], args)
        return EXIT_OK
    if cmd in ("pareto-class", "pareto-ad"):
        cfg = _config(args)
        if cmd == "pareto-class":
            records = so.pareto_sweep(so.BINARY, cfg, args.points, args.mc_n, seed=args.seed,
                                      workers=args.workers)
        else:
            model, cont = _ad_models(args)
            records = so.pareto_sweep(so.ANOMALY, cfg, args.points, args.mc_n, seed=args.seed,
                                      model=model, contamination=cont, workers=args.workers)
        _emit(records, args)
        return EXIT_OK if any(r["status"] == "ok" for r in records) else EXIT_INPUT
    if cmd == "simulate":
        _emit([simulate_record(args)], args)
        return EXIT_OK
    if cmd == "validate":
        checks = val.run_suite(args.suite, args.seed)
        print(val.format_table(checks))
        # the table goes to stdout; records only when a file is requested
        if args.out:
            _emit([
                {"suite": c.suite, "check": c.name, "deviation": c.deviation,
                 "tolerance": c.tolerance, "passed": c.passed}
                for c in checks
            ], args)
        failed = [c for c in checks if not c.passed]
        for c in failed:
            print(f"FAILED {c.suite}/{c.name}: deviation {c.deviation:.3e} > {c.tolerance:.1e}",
                  file=sys.stderr)
        return EXIT_VALIDATION if failed else EXIT_OK
    raise AssertionError(cmd)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return _run(args)
    except TargetUnreachable as exc:
        lo, hi = exc.achievable
        print(f"error: TargetUnreachable: {exc} (achievable risk interval [{lo:.6g}, {hi:.6g}])",
              file=sys.stderr)
        return EXIT_INPUT
    except (DCPError, InputError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
