"""Command-line front end.

Subcommands
-----------
threshold   calibrated levels, minimal horizons, mode conditions, sharp cutoffs
ldp         generating-function / tilt / rate evaluations at a point
type1       one Type I error estimate for a chosen test
type2       one Type II error estimate for a chosen test
reproduce   re-run a reference experiment table (CSV/JSON)
check       run acceptance criteria (exit 3 on tolerance failure)

Every run echoes its full configuration, seed, and stream identifiers into
the output, so a JSON artifact re-parses to the exact run that produced it.
JSON floats round-trip exactly (shortest-repr encoding); text output rounds
to four significant digits.  Data goes to stdout (or --out), logs to stderr.
The base seed defaults to the SPDETEST_SEED environment variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import acceptance, montecarlo as mc, sld, thresholds
from .model import (
    Hypotheses,
    ParameterError,
    TestLevel,
    TimeGrid,
    build_model,
    model_to_config,
)
from .sim import StabilityError

__all__ = ["main", "RunConfig"]

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_TOLERANCE = 3


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation; (subcommand, options) reproduce a run exactly."""

    subcommand: str
    options: dict

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, **self.options}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        opts = {k: v for k, v in d.items() if k != "subcommand"}
        return cls(subcommand=d["subcommand"], options=opts)


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta0", type=float, default=0.1, help="null drift")
    p.add_argument("--theta1", type=float, default=0.2, help="alternative drift")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--N", type=int, default=3, help="number of observed Fourier modes")
    p.add_argument("--eigenvalues", type=float, nargs="+", default=None,
                   help="explicit eigenvalue list (default: power basis k^(1/d))")


def _add_output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p.add_argument("--out", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spdetest",
        description="Calibrated likelihood-ratio drift tests for spectral SPDE observations",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("threshold", help="levels, horizons, and cutoffs")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--rho", type=float, default=0.1)
    p.add_argument("--T", type=float, default=None,
                   help="horizon for levels/conditions (default: the type-1 minimal horizon)")

    p = sub.add_parser("ldp", help="generating-function and rate evaluations")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--j", type=int, choices=(0, 1), default=0, help="hypothesis index")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--eps", type=float, help="evaluate at this tilt value")
    group.add_argument("--eta", type=float, help="evaluate at the tilt solving this level")
    p.add_argument("--regime", choices=("time", "mode"), default="time",
                   help="which scale weight the level refers to")

    for name, kind in (("type1", "type1"), ("type2", "type2")):
        p = sub.add_parser(name, help=f"estimate a {kind} error probability")
        _add_model_args(p)
        _add_output_args(p)
        p.add_argument("--test", choices=("rt0", "rtsharp", "rn0"), default="rt0")
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--rho", type=float, default=0.1)
        p.add_argument("--T", type=float, required=True)
        p.add_argument("--n", type=int, default=None,
                       help="steps (default: preset rule dt = min(0.02, stability margin))")
        p.add_argument("--m", type=int, default=mc.DEFAULT_TRIALS)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("reproduce", help="re-run a reference experiment table")
    _add_output_args(p)
    p.add_argument("--table", type=int, required=True, choices=(1, 2, 3, 4, 5))
    p.add_argument("--m", type=int, default=None, help="trials (default 20000)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--bound-only", action="store_true",
                   help="table 4: emit only the closed-form bound row")
    p.add_argument("--check", action="store_true",
                   help="exit 3 if any acceptance-tagged row is out of tolerance")

    p = sub.add_parser("check", help="run acceptance criteria")
    _add_output_args(p)
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    return parser


def _emit(payload: dict, cfg: RunConfig, fmt: str, out: str | None, csv_rows=None) -> None:
    if fmt == "json":
        text = json.dumps({"config": cfg.to_dict(), **payload}, indent=2, sort_keys=True)
    elif fmt == "csv":
        if csv_rows is None:
            raise ParameterError("csv output is only available for tabular results")
        text = mc.rows_to_csv(csv_rows)
    else:
        text = _render_text(payload)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _fmt_value(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _render_text(payload: dict, indent: str = "") -> str:
    lines = []
    for key, value in payload.items():
        if isinstance(value, dict):
            lines.append(f"{indent}{key}:")
            lines.append(_render_text(value, indent + "  "))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            for item in value:
                lines.append(indent + "  " + "  ".join(f"{k}={_fmt_value(v)}" for k, v in item.items()))
        else:
            lines.append(f"{indent}{key}: {_fmt_value(value)}")
    return "\n".join(lines)


def _model_from_args(args) -> "tuple":
    hyp = Hypotheses(args.theta0, args.theta1)
    source = args.eigenvalues if args.eigenvalues is not None else "power"
    model = build_model(
        beta=args.beta, gamma=args.gamma, sigma=args.sigma, d=args.d, N=args.N,
        eigenvalue_source=source,
    )
    return model, hyp


def _cmd_threshold(args, cfg: RunConfig) -> int:
    model, hyp = _model_from_args(args)
    horizon = thresholds.horizon_requirement(args.alpha, args.rho, model.N, model.M, hyp)
    T = args.T if args.T is not None else float(horizon.type1.t_display)
    eta = thresholds.eta_level(args.alpha, T, model.M, hyp)
    zeta = thresholds.zeta_level(args.alpha, T, model.M, hyp)
    sharp = thresholds.sharp_threshold(args.alpha, T, model, hyp)
    payload = {
        "model": model_to_config(model),
        "M": model.M,
        "T": T,
        "q_alpha": thresholds.normal_quantile(args.alpha),
        "T_b1": dataclasses.asdict(horizon.type1),
        "T_b2": dataclasses.asdict(horizon.type2),
        "eta": dataclasses.asdict(eta),
        "zeta": dataclasses.asdict(zeta),
        "mode_condition_type1": dataclasses.asdict(
            thresholds.modes_condition(args.alpha, args.rho, model.N, T, model, hyp, "type1")
        ),
        "mode_condition_type2": dataclasses.asdict(
            thresholds.modes_condition(args.alpha, args.rho, model.N, T, model, hyp, "type2")
        ),
        "sharp": dataclasses.asdict(sharp),
    }
    _emit(payload, cfg, args.format, args.out)
    return EXIT_OK


def _cmd_ldp(args, cfg: RunConfig) -> int:
    model, hyp = _model_from_args(args)
    weight = model.M if args.regime == "time" else args.T
    payload: dict = {"model": model_to_config(model), "T": args.T, "j": args.j,
                     "regime": args.regime, "weight": weight}
    if args.eta is not None:
        eps = sld.tilt_epsilon(args.eta, args.j, hyp, weight).epsilon
        payload["eta"] = args.eta
        payload["epsilon"] = eps
        payload["rate"] = sld.rate_function(args.eta, args.j, hyp, weight)
        payload["a_factor"] = sld.a_factor(
            args.eta, args.j, hyp, model, args.T,
            scale="time" if args.regime == "time" else "mode",
        )
    else:
        eps = args.eps
        payload["epsilon"] = eps
    comp = sld.gf_components(eps, args.j, hyp)
    payload["L"] = comp.L
    payload["D"] = comp.D
    payload["H"] = comp.H
    payload["R"] = sld.residual_R(eps, args.j, hyp, model, args.T)
    payload["mgf_exponent_time"] = sld.mgf_exponent(eps, args.j, hyp, model, args.T, "time")
    payload["mgf_exponent_mode"] = sld.mgf_exponent(eps, args.j, hyp, model, args.T, "mode")
    _emit(payload, cfg, args.format, args.out)
    return EXIT_OK


def _cmd_error(args, cfg: RunConfig, error_kind: str) -> int:
    model, hyp = _model_from_args(args)
    test_kind = {"rt0": "RT0", "rtsharp": "RTsharp", "rn0": "RN0"}[args.test]
    if args.n is not None:
        grid = TimeGrid(args.T, args.n)
    else:
        dt = min(0.02, 0.1 / (hyp.theta1 * float(model.weight_drift()[-1])))
        grid = TimeGrid.from_dt(args.T, dt)
    seed = mc.default_base_seed() if args.seed is None else args.seed
    spec = mc.ExperimentSpec(
        model=model, grid=grid, hyp=hyp, level=TestLevel(args.alpha, args.rho),
        test_kind=test_kind, error_kind=error_kind, m=args.m, base_seed=seed,
    )
    est = mc.estimate_error(spec, workers=args.workers)
    payload = {
        "model": model_to_config(model),
        "estimate": est.canonical_dict(),
        "runtime_s": est.runtime_s,
    }
    row = {
        "table": "", "row_key": test_kind, "col_key": f"{args.T:g}", "paper_value": "",
        "estimate": est.p_hat, "stderr": est.stderr, "ci_lo": est.ci95[0],
        "ci_hi": est.ci95[1], "m": est.m, "n": est.n, "seed": est.base_seed,
    }
    _emit(payload, cfg, args.format, args.out, csv_rows=[row])
    return EXIT_OK


def _cmd_reproduce(args, cfg: RunConfig) -> int:
    result = mc.reproduce_table(
        args.table, m=args.m, base_seed=args.seed, workers=args.workers,
        bound_only=args.bound_only,
    )
    payload = {"rows": result.rows, "notes": result.notes, "meta": result.meta}
    _emit(payload, cfg, args.format, args.out, csv_rows=result.rows)
    if args.check:
        failures = mc.check_rows(result)
        for failure in failures:
            print(f"check: {failure}", file=sys.stderr)
        if failures:
            return EXIT_TOLERANCE
    return EXIT_OK


def _cmd_check(args, cfg: RunConfig) -> int:
    numbers = acceptance.QUICK if args.level == "quick" else tuple(range(1, 11))
    results = acceptance.run_criteria(numbers, m=args.m, seed=args.seed, workers=args.workers)
    payload = {
        "results": [dataclasses.asdict(r) for r in results],
        "passed": all(r.passed for r in results),
    }
    for r in results:
        print(r.line(), file=sys.stderr)
        for d in r.details:
            print(f"    {d}", file=sys.stderr)
    _emit(payload, cfg, args.format, args.out)
    return EXIT_OK if payload["passed"] else EXIT_TOLERANCE


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    options = {k: v for k, v in sorted(vars(args).items()) if k != "subcommand"}
    cfg = RunConfig(subcommand=args.subcommand, options=options)
    handlers = {
        "threshold": _cmd_threshold,
        "ldp": _cmd_ldp,
        "type1": lambda a, c: _cmd_error(a, c, "type1"),
        "type2": lambda a, c: _cmd_error(a, c, "type2"),
        "reproduce": _cmd_reproduce,
        "check": _cmd_check,
    }
    try:
        return handlers[args.subcommand](args, cfg)
    except (ParameterError, sld.DomainError, StabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
