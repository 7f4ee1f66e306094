"""Command-line interface.

Exit status: 0 on success, 1 on a usage error (bad flags, invalid config),
2 when the computation itself fails (bad data, singular fit, too many
failed replications).
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import jsonschema
import numpy as np

from . import critvals, garch, linreg, montecarlo, retro
from .boundaries import Boundary, BoundaryKind
from .detectors import DetectorKind, DetectorSpec
from .garch import GarchParams
from .linreg import EstimationError
from .monitor import DESIGNS, run_monitor
from .timeseries import DataError, load_csv, split

EXIT_USAGE = 1
EXIT_COMPUTE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ----------------------------------------------------------------------------
# Experiment config schema
# ----------------------------------------------------------------------------

_DGP = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "mu": {"type": "number"},
        "rho": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
        "break_kind": {"enum": list(montecarlo.BREAK_KINDS)},
        "break_to": {"type": ["number", "null"]},
        "break_loc": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "garch": {
            "type": "object",
            "additionalProperties": False,
            "required": ["omega", "alpha", "beta"],
            "properties": {"omega": {"type": "number"}, "alpha": {"type": "number"}, "beta": {"type": "number"}},
        },
    },
}
_DETECTOR = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": [k.value for k in DetectorKind]},
        "h": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "rescale": {"type": "boolean"},
        "norm": {"enum": ["max", "euclid"]},
        "mosum_time_factor": {"type": "boolean"},
        "cusum_sq_printed": {"type": "boolean"},
    },
}
_BOUNDARY = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": [k.value for k in BoundaryKind]},
        "lambda": {"type": "number", "exclusiveMinimum": 0},
        "gamma": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
        "phi_inv": {"type": "number", "exclusiveMinimum": 0},
        "b1_squared": {"type": "boolean"},
    },
}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dgp", "detector", "boundary", "sample"],
    "properties": {
        "dgp": _DGP,
        "detector": _DETECTOR,
        "boundary": _BOUNDARY,
        "sample": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 3},
                "T": {"type": "number", "minimum": 1},
                "n_grid": {"type": "array", "items": {"type": "integer", "minimum": 3}, "minItems": 1},
            },
        },
        "design": {"enum": list(DESIGNS)},
        "replications": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "table": {"type": "string"},
                "report": {"type": "string"},
                "density": {"type": "string"},
            },
        },
    },
}


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise UsageError(f"config invalid at {where}: {exc.message}") from None
    return cfg


def _boundary_from(cfg: dict, n: int | None) -> Boundary:
    kind = BoundaryKind.parse(cfg["kind"])
    kw = {k: cfg[k] for k in ("gamma", "phi_inv", "b1_squared") if k in cfg}
    if "lambda" in cfg:
        return Boundary(kind, cfg["lambda"], n=n, **kw)
    return Boundary.default(kind, n=n, **kw)


def _dgp_from(cfg: dict) -> montecarlo.DgpSpec:
    cfg = dict(cfg)
    g = cfg.pop("garch", None)
    if g is not None:
        cfg["garch"] = GarchParams(mu=0.0, **g)
    return montecarlo.DgpSpec(**cfg)


# ----------------------------------------------------------------------------
# Helpers
# ----------------------------------------------------------------------------

def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SEQBREAK_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"SEQBREAK_SEED must be an integer, got {env!r}") from None


def _out(args, name: str | None) -> Path | None:
    if name is None:
        return None
    p = Path(name)
    if not p.is_absolute() and args.out_dir:
        p = Path(args.out_dir) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _write_json(path: Path | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=_jsonable)
    if path is None:
        print(text)
    else:
        path.write_text(text + "\n")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serialisable: {type(o)}")


def _series(args):
    return load_csv(args.input, column=args.column, header=args.header,
                    label_column=args.label_column, frequency=args.frequency)


# ----------------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------------

def cmd_monitor(args) -> int:
    ts = _series(args)
    sp = split(ts, args.n, args.T)
    det = DetectorSpec(args.detector, h=args.h, rescale=args.rescale, norm=args.norm,
                       mosum_time_factor=args.mosum_time_factor, cusum_sq_printed=args.as_printed)
    n_rows = args.n - (1 if args.design == "ar1" else 0)
    kw = {"gamma": args.gamma, "phi_inv": args.phi_inv, "b1_squared": not args.b1_literal}
    if args.lam is None:
        bnd = Boundary.default(args.boundary, n=n_rows, **kw)
    else:
        bnd = Boundary(args.boundary, args.lam, n=n_rows, **kw)
    res = run_monitor(ts, sp, det, bnd, design=args.design, complete_path=args.complete_path)
    out = _out(args, args.out)
    if out is not None:
        labels = None
        if ts.labels is not None:
            labels = list(ts.labels[sp.n: sp.n + len(res.path)])
        res.path.to_csv(out, labels)
    _write_json(_out(args, args.report), res.report())
    return 0


def cmd_fit(args) -> int:
    ts = _series(args)
    stop = args.n if args.n is not None else len(ts)
    design = linreg.ar1_design(ts, 0, stop) if args.design == "ar1" else linreg.mean_design(ts, 0, stop)
    fit = linreg.ols_fit(design)
    lags = args.lags if args.lags is not None else linreg.default_hac_lags(ts.frequency, design.rows)
    _write_json(_out(args, args.out), {"design": args.design, **linreg.fit_summary(design, fit, lags)})
    return 0


def cmd_garch(args) -> int:
    ts = _series(args)
    fit = garch.garch_fit(ts, with_ar=args.ar)
    res_path = _out(args, args.residuals)
    if res_path is not None:
        garch.standardized_residuals(fit, allow_unconverged=args.allow_unconverged).to_csv(res_path)
    _write_json(_out(args, args.out), garch.fit_report(fit))
    return 0


def cmd_retro(args) -> int:
    ts = _series(args)
    if args.method == "single":
        payload = retro.single_break_ls(ts).as_dict()
        regimes = None
    elif args.method == "baiperron":
        ests = retro.bai_perron(ts, args.max_breaks, args.trim, args.design)
        payload = {"partitions": [e.as_dict() for e in ests]}
        regimes = ests[-1]
    elif args.method == "supf":
        res = retro.sup_f(ts, args.trim, args.design, args.critical_value)
        res.pop("F")
        payload = res
        regimes = None
    else:
        path, idx = retro.retro_cusum_sq(ts, args.design)
        payload = {"argmax_index": idx, "argmax_label": ts.label(idx - 1),
                   "max_abs": float(np.max(np.abs(path.values)))}
        out = _out(args, args.path_out)
        if out is not None:
            path.to_csv(out)
        regimes = None
    payload["method"] = args.method
    out = _out(args, args.regimes)
    if out is not None and regimes is not None:
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["regime", "end", "beta", "sigma_hat", "nobs"])
            ends = list(regimes.breakpoints) + [len(ts)]
            for i, (fit, end) in enumerate(zip(regimes.per_regime, ends), 1):
                if fit is None:
                    w.writerow([i, end, "", "", ""])
                else:
                    w.writerow([i, end, " ".join(repr(float(b)) for b in fit.beta), repr(fit.sigma_hat), fit.nobs])
    _write_json(_out(args, args.out), payload)
    return 0


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_critvals(args) -> int:
    alphas = _parse_floats(args.alphas)
    horizons = _parse_floats(args.horizons)
    cfg = critvals.BridgeSimConfig(args.reps, args.steps_per_unit, max(horizons), alphas[0], _seed(args), args.threads)
    shape = {"gamma": args.gamma, "phi_inv": args.phi_inv, "h": args.h}
    table = critvals.lambda_table(cfg, args.boundary, horizons, alphas, args.process, args.dim, **_shape_kw(shape))
    out = _out(args, args.out) or Path("table1.csv")
    critvals.write_critical_table(out, table, alphas, horizons)
    return 0


def _shape_kw(shape: dict) -> dict:
    # Boundary takes gamma/phi_inv; the window fraction is passed separately
    return {k: v for k, v in shape.items() if k in ("gamma", "phi_inv")}


def _mc_setup(args):
    cfg = load_config(args.config)
    sample = cfg["sample"]
    T = sample.get("T", 2.0)
    seed = cfg.get("seed", _seed(args)) if args.seed is None else args.seed
    B = cfg.get("replications", 2500)
    det = DetectorSpec(**cfg["detector"])
    dgp = _dgp_from(cfg["dgp"])
    design = cfg.get("design", "ar1")
    return cfg, sample, T, seed, B, det, dgp, design


def _rows_for(design: str, n: int) -> int:
    return n - (1 if design == "ar1" else 0)


def cmd_mc(args) -> int:
    cfg, sample, T, seed, B, det, dgp, design = _mc_setup(args)
    outputs = cfg.get("outputs", {})
    kind = args.command
    if kind == "mc-curve":
        grid = sample.get("n_grid") or ([sample["n"]] if "n" in sample else None)
        if not grid:
            raise UsageError("mc-curve needs sample.n_grid")
        curve = montecarlo.power_curve(
            dgp, det, lambda n: _boundary_from(cfg["boundary"], _rows_for(design, n)), grid, T, B,
            seed=seed, threads=args.threads, design=design)
        rows = [(f"n={n}", rep) for n, rep in curve]
        montecarlo.write_reports(_out(args, outputs.get("table", "curve.csv")), rows)
        return 0
    if "n" not in sample:
        raise UsageError(f"{kind} needs sample.n")
    n = sample["n"]
    bnd = _boundary_from(cfg["boundary"], _rows_for(design, n))
    fn = {"mc-size": montecarlo.empirical_size, "mc-power": montecarlo.empirical_power,
          "mc-arl": montecarlo.arl_distribution}[kind]
    try:
        rep = fn(dgp, det, bnd, n, T, B, seed=seed, threads=args.threads, design=design)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    montecarlo.write_reports(_out(args, outputs.get("table", f"{kind}.csv")), [(kind, rep)])
    if kind == "mc-arl":
        dens = _out(args, outputs.get("density", "density.csv"))
        if rep.delays.size >= 2 and np.ptp(rep.delays) > 0:
            montecarlo.write_density(dens, rep.delays)
    report = outputs.get("report")
    if report:
        _write_json(_out(args, report), {**rep.summary(), "delays": rep.delays.tolist()})
    return 0


# ----------------------------------------------------------------------------
# Reproductions
# ----------------------------------------------------------------------------

CUSUM_LAMBDA = {"b1": 7.78, "b2": 3.15, "b3": 1.577}
TABLE_N = (50, 100, 200, 1000)


def _scaled(args, B: int) -> tuple[int, tuple[int, ...]]:
    s = args.scale
    grid = tuple(n for n in TABLE_N if n <= 1000 / s) or TABLE_N[:1]
    return max(int(round(B / s)), 1), grid


def re_lambda(kind: str, alpha: float, T: float, seed: int, reps: int, threads: int) -> float:
    """RE critical value for the two-regressor AR(1) design (max norm over 2 components)."""
    cfg = critvals.BridgeSimConfig(reps, 1000, T, alpha, seed, threads)
    return critvals.simulate_lambda(cfg, kind, "re", dim=2)


def _cell_lambda(det: str, kind: str, alpha_re: float, args, cache: dict) -> float:
    if det == "ols-cusum":
        return CUSUM_LAMBDA[kind]
    key = (kind, alpha_re)
    if key not in cache:
        reps = max(int(round(args.reps / args.scale)), 1000)
        cache[key] = re_lambda(kind, alpha_re, 2.0, _seed(args), reps, args.threads)
    return cache[key]


def _reproduce_mc(args, name: str, dgps: list[tuple[str, montecarlo.DgpSpec]], locs, alpha_re: float) -> int:
    B, grid = _scaled(args, args.B)
    seed = _seed(args)
    cache: dict = {}
    out = _out(args, f"{name}.csv")
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["boundary", "n", "loc", "detector", "scenario", "lambda", "rate", "se",
                    "arl_mean", "arl_sd", "detections", "B"])
        for kind in ("b1", "b2", "b3"):
            for n in grid:
                for loc in locs:
                    for det in ("ols-cusum", "re"):
                        lam = _cell_lambda(det, kind, alpha_re, args, cache)
                        for label, dgp in dgps:
                            spec = replace(dgp, break_loc=loc)
                            rep = montecarlo.run_replications(
                                spec, DetectorSpec(det), Boundary(kind, lam), n, 2.0, B,
                                seed=seed, threads=args.threads)
                            fmt = lambda v: "" if v is None else f"{v:.2f}"  # noqa: E731
                            w.writerow([kind, n, loc, det, label, f"{lam:.4f}", f"{rep.rejection_rate:.4f}",
                                        f"{rep.se:.4f}", fmt(rep.arl_mean), fmt(rep.arl_sd), rep.detections, B])
    return 0


def cmd_reproduce(args) -> int:
    if args.table == "table1":
        reps = max(int(round(args.reps / args.scale)), 1)
        horizons = [float(T) for T in range(1, 11)]
        cfg = critvals.BridgeSimConfig(reps, args.steps_per_unit, 10.0, 0.05, _seed(args), args.threads)
        table = critvals.lambda_table(cfg, "b3", horizons, [0.05, 0.10], "re", 1)
        critvals.write_critical_table(_out(args, "table1.csv"), table, [0.05, 0.10], horizons)
        return 0
    if args.table == "table2":
        dgps = [(f"rho->{to}", montecarlo.DgpSpec(break_kind="rho_shift", break_to=to)) for to in (0.5, 0.6, 0.7)]
        # power cells use the 5% level for both detectors
        return _reproduce_mc(args, "table2", dgps, (0.25, 0.5), alpha_re=0.05)
    if args.table == "table3":
        return _reproduce_mc(args, "table3", [("none", montecarlo.DgpSpec())], (0.25, 0.5, 0.75), alpha_re=0.10)
    dgps = [("mu->1.5", montecarlo.DgpSpec(break_kind="mu_shift", break_to=1.5))]
    return _reproduce_mc(args, "table4", dgps, (0.25, 0.5, 0.75), alpha_re=0.10)


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="master seed (falls back to SEQBREAK_SEED, then 0)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")
    p.add_argument("--out-dir", default=None, help="directory for relative output paths")
    return p


def _input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="CSV file")
    p.add_argument("--column", default="0", help="value column (name or 0-based index)")
    p.add_argument("--header", action="store_true", help="first row is a header")
    p.add_argument("--label-column", default=None, help="period label column")
    p.add_argument("--frequency", default="untagged", choices=["weekly", "monthly", "untagged"])


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="seqbreak", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("monitor", parents=[common], help="sequential monitoring of one series")
    _input(p)
    p.add_argument("--n", type=int, required=True, help="historical length")
    p.add_argument("--T", type=float, default=2.0, help="horizon multiple, N = ceil(n*T)")
    p.add_argument("--detector", default="ols-cusum", choices=[k.value for k in DetectorKind])
    p.add_argument("--boundary", default="b3", choices=[k.value for k in BoundaryKind])
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--gamma", type=float, default=0.25)
    p.add_argument("--phi-inv", type=float, default=1.618)
    p.add_argument("--b1-literal", action="store_true", help="read b1's --lambda as lambda, not lambda^2")
    p.add_argument("--h", type=float, default=0.5)
    p.add_argument("--rescale", action="store_true")
    p.add_argument("--norm", default="max", choices=["max", "euclid"])
    p.add_argument("--mosum-time-factor", action="store_true")
    p.add_argument("--as-printed", action="store_true", help="CUSUM-SQ centred at the squared mean square")
    p.add_argument("--design", default="ar1", choices=list(DESIGNS))
    p.add_argument("--complete-path", action="store_true")
    p.add_argument("--out", default=None, help="path CSV")
    p.add_argument("--report", default=None, help="report JSON (stdout if omitted)")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("fit", parents=[common], help="OLS fit with HAC standard errors")
    _input(p)
    p.add_argument("--n", type=int, default=None, help="fit the first n observations only")
    p.add_argument("--lags", type=int, default=None)
    p.add_argument("--design", default="ar1", choices=list(DESIGNS))
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("garch-fit", parents=[common], help="GARCH(1,1) quasi-ML fit")
    _input(p)
    p.add_argument("--ar", action="store_true", help="AR(1) mean equation")
    p.add_argument("--residuals", default=None, help="standardised residuals CSV")
    p.add_argument("--allow-unconverged", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_garch)

    p = sub.add_parser("retro", parents=[common], help="retrospective break estimation")
    _input(p)
    p.add_argument("--method", default="baiperron", choices=["single", "baiperron", "supf", "cusumsq"])
    p.add_argument("--trim", type=float, default=0.15)
    p.add_argument("--max-breaks", type=int, default=3)
    p.add_argument("--design", default="mean", choices=list(retro.DESIGN_KINDS))
    p.add_argument("--critical-value", type=float, default=None)
    p.add_argument("--regimes", default=None, help="per-regime fit CSV")
    p.add_argument("--path-out", default=None, help="CUSUM-SQ path CSV")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_retro)

    p = sub.add_parser("simulate-critical-values", parents=[common], help="boundary critical values")
    p.add_argument("--boundary", default="b3", choices=[k.value for k in BoundaryKind])
    p.add_argument("--process", default="re", choices=list(critvals.PROCESS_KINDS))
    p.add_argument("--alphas", default="0.05,0.10")
    p.add_argument("--horizons", default="1,2,3,4,5,6,7,8,9,10")
    p.add_argument("--reps", type=int, default=25000)
    p.add_argument("--steps-per-unit", type=int, default=1000)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--gamma", type=float, default=0.25)
    p.add_argument("--phi-inv", type=float, default=1.618)
    p.add_argument("--h", type=float, default=0.5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_critvals)

    for name, text in (("mc-size", "empirical size"), ("mc-power", "empirical power"),
                       ("mc-arl", "run-length distribution"), ("mc-curve", "power against n")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--config", required=True, help="experiment JSON")
        p.set_defaults(func=cmd_mc)

    p = sub.add_parser("reproduce", parents=[common], help="regenerate a results table")
    p.add_argument("table", choices=["table1", "table2", "table3", "table4"])
    p.add_argument("--scale", type=float, default=1.0, help="divide replications (and trim the n grid)")
    p.add_argument("--reps", type=int, default=25000, help="bridge paths for critical values")
    p.add_argument("--steps-per-unit", type=int, default=1000)
    p.add_argument("--B", type=int, default=2500, help="Monte Carlo replications per cell")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    if getattr(args, "scale", 1.0) <= 0:
        parser.error("--scale must be positive")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"seqbreak: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, EstimationError, montecarlo.McFailure, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"seqbreak: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
