"""Command-line interface.

Subcommands
-----------
bounds     closed-form bound report for both tails of a (mu_plus, mu_minus) model
simulate   Monte Carlo estimate of one tail query against its bounds
verify     sweep models x M x t x sides, flag bound violations, write a report
ci         deviation radius for a target two-sided confidence level
histogram  empirical distribution of the sample mean

Exit codes: 0 success (verify: zero violations), 1 verify found
violations, 2 invalid arguments or model file, 3 output I/O failure.

Observations on a general range [a, b] are supported by affine
rescaling at this boundary only: pass ``--range a b`` to bounds/ci and
deviations are interpreted in data units (t_unit = t / (b - a)).
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .bounds import Side, t_for_confidence, tail_bound_report
from .errors import ExchboundError
from .model import (
    Bernoulli,
    Beta,
    BernoulliParamMixture,
    DiscreteOnUnit,
    FiniteMixture,
    MixingMeasure,
    ModelSummary,
    PointMass,
    TruncatedBetaDensity,
    UniformDensity,
    summarize,
)
from .montecarlo import DEFAULT_CI_LEVEL, run_sweep, sample_mean_histogram
from .reporting import Report, atomic_write_text, to_csv, to_json, write_report
from .suite import standard_suite

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_IO = 3

DEFAULT_M_GRID = (1, 2, 5, 10, 50, 200)
DEFAULT_T_GRID = "auto:10"


class ModelFileError(ExchboundError):
    """A model file failed validation; ``field`` addresses the offender."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------------------
# Model file ingestion
# ---------------------------------------------------------------------------


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ModelFileError(f"{where}.{key}" if where else key, "missing field")
    return obj[key]


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelFileError(where, f"expected a number, got {value!r}")
    return float(value)


def _component_from_obj(obj, where: str):
    if not isinstance(obj, dict):
        raise ModelFileError(where, "expected an object")
    kind = _require(obj, "kind", where)
    try:
        if kind == "bernoulli":
            return Bernoulli(_number(_require(obj, "p", where), f"{where}.p"))
        if kind == "pointmass":
            return PointMass(_number(_require(obj, "c", where), f"{where}.c"))
        if kind == "discrete":
            points = _require(obj, "points", where)
            weights = _require(obj, "weights", where)
            if not isinstance(points, list) or not isinstance(weights, list):
                raise ModelFileError(f"{where}.points", "expected lists")
            return DiscreteOnUnit(
                points=[_number(x, f"{where}.points[{i}]") for i, x in enumerate(points)],
                weights=[_number(w, f"{where}.weights[{i}]") for i, w in enumerate(weights)],
            )
        if kind == "beta":
            return Beta(
                alpha=_number(_require(obj, "alpha", where), f"{where}.alpha"),
                beta=_number(_require(obj, "beta", where), f"{where}.beta"),
            )
    except ModelFileError:
        raise
    except ExchboundError as e:
        raise ModelFileError(where, str(e)) from e
    raise ModelFileError(f"{where}.kind", f"unknown component kind {kind!r}")


def _density_from_obj(obj, where: str):
    if not isinstance(obj, dict):
        raise ModelFileError(where, "expected an object")
    kind = _require(obj, "kind", where)
    try:
        if kind == "uniform":
            return UniformDensity(
                lo=_number(_require(obj, "lo", where), f"{where}.lo"),
                hi=_number(_require(obj, "hi", where), f"{where}.hi"),
            )
        if kind == "truncated_beta":
            return TruncatedBetaDensity(
                alpha=_number(_require(obj, "alpha", where), f"{where}.alpha"),
                beta=_number(_require(obj, "beta", where), f"{where}.beta"),
                lo=_number(_require(obj, "lo", where), f"{where}.lo"),
                hi=_number(_require(obj, "hi", where), f"{where}.hi"),
            )
    except ModelFileError:
        raise
    except ExchboundError as e:
        raise ModelFileError(where, str(e)) from e
    raise ModelFileError(f"{where}.kind", f"unknown density kind {kind!r}")


def model_from_obj(obj) -> MixingMeasure:
    """Build a MixingMeasure from the canonical document schema."""
    if not isinstance(obj, dict):
        raise ModelFileError("$", "model document must be an object")
    mtype = _require(obj, "type", "")
    if mtype == "finite":
        atoms_obj = _require(obj, "atoms", "")
        if not isinstance(atoms_obj, list) or not atoms_obj:
            raise ModelFileError("atoms", "expected a non-empty list")
        atoms = []
        for i, atom in enumerate(atoms_obj):
            if not isinstance(atom, dict):
                raise ModelFileError(f"atoms[{i}]", "expected an object")
            weight = _number(_require(atom, "weight", f"atoms[{i}]"), f"atoms[{i}].weight")
            component = _component_from_obj(
                _require(atom, "component", f"atoms[{i}]"), f"atoms[{i}].component"
            )
            atoms.append((weight, component))
        try:
            return FiniteMixture(atoms)
        except ExchboundError as e:
            raise ModelFileError("atoms[*].weight", str(e)) from e
    if mtype == "bernoulli_param":
        density = _density_from_obj(_require(obj, "density", ""), "density")
        return BernoulliParamMixture(density)
    raise ModelFileError("type", f"unknown model type {mtype!r}")


def load_model_file(path: str) -> MixingMeasure:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ModelFileError("$", f"cannot read {path}: {e}") from e
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFileError("$", f"not valid JSON: {e}") from e
    return model_from_obj(obj)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else "%.17g" % x


def _timestamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def window_t_grid(summary: ModelSummary, side: Side, n: int) -> list[float]:
    """n deviations spanning the side's validity window.

    An empty window (degenerate models) falls back to spanning (0, 1) so
    the sweep still exercises and flags the invalid cells.
    """
    t_max = summary.t_max_upper if side is Side.UPPER else summary.t_max_lower
    if t_max <= 0.0:
        t_max = 1.0
    return [t_max * i / (n + 1) for i in range(1, n + 1)]


def _print_bound_line(side: Side, mu_eff: float, anchor: float, M: int, t: float) -> None:
    report = tail_bound_report(mu_eff, M, t)
    print(
        f"side={side} anchor_mu={_fmt(anchor)} "
        f"t_max={_fmt(1.0 - mu_eff)} valid={'true' if report.in_validity_range else 'false'} "
        f"hoeffding={_fmt(report.hoeffding_form)} h0={_fmt(report.h0)} "
        f"kl_form={_fmt(report.kl_form)}"
    )


def _parse_side(text: str) -> Side:
    try:
        return Side(text.lower())
    except ValueError:
        raise ExchboundError(f"side must be 'upper' or 'lower', got {text!r}")


def _sides_from_arg(text: str) -> list[Side]:
    if text == "both":
        return [Side.UPPER, Side.LOWER]
    return [_parse_side(text)]


def _load_models(args) -> list[tuple[str, MixingMeasure]]:
    models: list[tuple[str, MixingMeasure]] = []
    if getattr(args, "models_dir", None):
        paths = sorted(Path(args.models_dir).glob("*.json"))
        if not paths:
            raise ExchboundError(f"no *.json model files in {args.models_dir}")
        for p in paths:
            models.append((p.stem, load_model_file(str(p))))
    for p in getattr(args, "model", None) or []:
        models.append((Path(p).stem, load_model_file(p)))
    if not models:
        models = list(standard_suite())
    return models


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_bounds(args) -> int:
    scale = args.range[1] - args.range[0]
    if scale <= 0:
        raise ExchboundError(f"--range requires a < b, got {args.range}")
    mu_plus, mu_minus = args.mu_plus, args.mu_minus
    if not (0.0 <= mu_minus <= mu_plus <= 1.0):
        raise ExchboundError(
            f"need 0 <= mu_minus <= mu_plus <= 1, got {mu_minus}, {mu_plus}"
        )
    t = args.t / scale
    print(f"M={args.m} t={_fmt(t)}" + (f" (data units: {_fmt(args.t)})" if scale != 1.0 else ""))
    _print_bound_line(Side.UPPER, mu_plus, mu_plus, args.m, t)
    _print_bound_line(Side.LOWER, 1.0 - mu_minus, mu_minus, args.m, t)
    return EXIT_OK


def cmd_ci(args) -> int:
    scale = args.range[1] - args.range[0]
    if scale <= 0:
        raise ExchboundError(f"--range requires a < b, got {args.range}")
    t = t_for_confidence(args.m, args.delta)
    t_data = t * scale
    print(f"t={_fmt(t_data)}" + (f" (unit scale: {_fmt(t)})" if scale != 1.0 else ""))
    print(
        f"Xbar lies in [mu_minus - t, mu_plus + t] with probability >= "
        f"1 - 2*delta = {_fmt(1.0 - 2.0 * args.delta)}, provided "
        f"t < 1 - mu_plus and t < mu_minus (validity windows)."
    )
    return EXIT_OK


def _write_or_fail(report: Report, out: Optional[str], fmt: str) -> None:
    if out is None:
        sys.stdout.write(to_csv(report) if fmt == "csv" else to_json(report))
        return
    try:
        write_report(report, out, fmt)
    except OSError as e:
        raise _IOFailure(f"cannot write {out}: {e}") from e


class _IOFailure(Exception):
    pass


def cmd_simulate(args) -> int:
    model = load_model_file(args.model)
    model_id = Path(args.model).stem
    sweep = run_sweep(
        models=[(model_id, model)],
        M_grid=[args.m],
        t_grid=[args.t],
        sides=_sides_from_arg(args.side),
        replications=args.reps,
        master_seed=args.seed,
        method="montecarlo",
        level=args.level,
    )
    report = Report.from_sweep(sweep, __version__, _timestamp())
    _write_or_fail(report, args.out, args.format)
    for row in report.rows:
        print(
            f"{row.model_id} M={row.M} t={_fmt(row.t)} side={row.side} "
            f"p_hat={_fmt(row.value)} ci=[{_fmt(row.ci_low)}, {_fmt(row.ci_high)}] "
            f"hoeffding={_fmt(row.hoeffding)} valid={'true' if row.valid else 'false'} "
            f"violation={'true' if row.violation else 'false'}"
        )
    return EXIT_OK


def cmd_verify(args) -> int:
    models = _load_models(args)
    sides = _sides_from_arg(args.side)
    m_grid = args.m_grid or list(DEFAULT_M_GRID)

    t_tokens = args.t_grid or [DEFAULT_T_GRID]
    auto_n: Optional[int] = None
    explicit_ts: list[float] = []
    for token in t_tokens:
        if isinstance(token, str) and token.startswith("auto:"):
            auto_n = int(token.split(":", 1)[1])
        else:
            explicit_ts.append(float(token))
    if auto_n is not None and explicit_ts:
        raise ExchboundError("--t-grid takes either auto:N or explicit values, not both")

    all_rows = []
    replications = args.reps
    for model_id, m in models:
        summary = summarize(m)
        for side in sides:
            ts = explicit_ts if auto_n is None else window_t_grid(summary, side, auto_n)
            sweep = run_sweep(
                models=[(model_id, m)],
                M_grid=m_grid,
                t_grid=ts,
                sides=[side],
                replications=replications,
                master_seed=args.seed,
                method=args.method,
                level=args.level,
                bound_scale=args.bound_scale,
            )
            all_rows.extend(sweep.rows)

    report = Report(
        rows=tuple(all_rows),
        master_seed=args.seed,
        replications=replications,
        level=args.level,
        tool_version=__version__,
        timestamp=_timestamp(),
    )
    _write_or_fail(report, args.out, args.format)
    n_violations = len(report.violations)
    print(
        f"cells={len(report.rows)} violations={n_violations} "
        f"models={len(models)} reps={replications}"
    )
    for row in report.violations:
        print(
            f"VIOLATION {row.model_id} M={row.M} t={_fmt(row.t)} side={row.side} "
            f"value={_fmt(row.value)} ci_low={_fmt(row.ci_low)} bound={_fmt(row.hoeffding)}"
        )
    return EXIT_OK if n_violations == 0 else EXIT_VIOLATION


def cmd_histogram(args) -> int:
    model = load_model_file(args.model)
    hist = sample_mean_histogram(
        model, M=args.m, replications=args.reps, bins=args.bins, master_seed=args.seed
    )
    records = [
        {"bin_low": hist.bin_edges[i], "bin_high": hist.bin_edges[i + 1], "count": c}
        for i, c in enumerate(hist.counts)
    ]
    if args.out:
        if args.format == "json":
            payload = {
                "metadata": {
                    "M": hist.M,
                    "replications": hist.replications,
                    "master_seed": hist.master_seed,
                    "tool_version": __version__,
                    "timestamp": _timestamp(),
                },
                "bins": records,
            }
            text = json.dumps(payload, indent=2) + "\n"
        else:
            lines = ["bin_low,bin_high,count"]
            lines += [
                f"{_fmt(r['bin_low'])},{_fmt(r['bin_high'])},{r['count']}"
                for r in records
            ]
            text = "\n".join(lines) + "\n"
        try:
            atomic_write_text(args.out, text)
        except OSError as e:
            raise _IOFailure(f"cannot write {args.out}: {e}") from e
    else:
        for r in records:
            print(f"[{_fmt(r['bin_low'])}, {_fmt(r['bin_high'])}): {r['count']}")
    total = sum(hist.counts)
    print(f"M={hist.M} replications={total} bins={len(hist.counts)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exchbound",
        description="Tail bounds for sample means of exchangeable [0,1] variables: "
        "calculators, exact oracles, and Monte Carlo verification.",
    )
    parser.add_argument("--version", action="version", version=f"exchbound {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bounds = sub.add_parser("bounds", help="closed-form bound report for both tails")
    p_bounds.add_argument("--mu-plus", type=float, required=True, dest="mu_plus")
    p_bounds.add_argument("--mu-minus", type=float, required=True, dest="mu_minus")
    p_bounds.add_argument("--m", type=int, required=True, help="sample count M")
    p_bounds.add_argument("--t", type=float, required=True, help="deviation (data units)")
    p_bounds.add_argument(
        "--range", type=float, nargs=2, default=(0.0, 1.0), metavar=("A", "B"),
        help="data range [a,b]; deviations are rescaled to the unit interval",
    )
    p_bounds.set_defaults(func=cmd_bounds)

    p_sim = sub.add_parser("simulate", help="Monte Carlo estimate of one tail query")
    p_sim.add_argument("--model", required=True, help="model file (JSON)")
    p_sim.add_argument("--m", type=int, required=True)
    p_sim.add_argument("--t", type=float, required=True)
    p_sim.add_argument("--side", default="upper", choices=["upper", "lower", "both"])
    p_sim.add_argument("--reps", type=int, default=100_000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--level", type=float, default=DEFAULT_CI_LEVEL)
    p_sim.add_argument("--format", default="csv", choices=["csv", "json"])
    p_sim.add_argument("--out", default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="sweep models and flag bound violations")
    p_ver.add_argument("--model", action="append", help="model file (repeatable)")
    p_ver.add_argument("--models-dir", dest="models_dir", help="directory of *.json models")
    p_ver.add_argument("--m-grid", dest="m_grid", type=int, nargs="+")
    p_ver.add_argument(
        "--t-grid", dest="t_grid", nargs="+",
        help="deviations, or auto:N for N values spanning each validity window",
    )
    p_ver.add_argument("--side", default="both", choices=["upper", "lower", "both"])
    p_ver.add_argument("--reps", type=int, default=100_000)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--level", type=float, default=DEFAULT_CI_LEVEL)
    p_ver.add_argument("--format", default="csv", choices=["csv", "json"])
    p_ver.add_argument("--out", default=None)
    p_ver.add_argument("--method", default="auto", choices=["auto", "exact", "montecarlo"])
    p_ver.add_argument("--bound-scale", dest="bound_scale", type=float, default=1.0,
                       help=argparse.SUPPRESS)  # verification hook
    p_ver.set_defaults(func=cmd_verify)

    p_ci = sub.add_parser("ci", help="deviation for a two-sided confidence level")
    p_ci.add_argument("--m", type=int, required=True)
    p_ci.add_argument("--delta", type=float, required=True)
    p_ci.add_argument(
        "--range", type=float, nargs=2, default=(0.0, 1.0), metavar=("A", "B"),
        help="data range [a,b]; the printed t is in data units",
    )
    p_ci.set_defaults(func=cmd_ci)

    p_hist = sub.add_parser("histogram", help="empirical distribution of the sample mean")
    p_hist.add_argument("--model", required=True)
    p_hist.add_argument("--m", type=int, required=True)
    p_hist.add_argument("--reps", type=int, default=10_000)
    p_hist.add_argument("--bins", type=int, default=20)
    p_hist.add_argument("--seed", type=int, default=0)
    p_hist.add_argument("--format", default="csv", choices=["csv", "json"])
    p_hist.add_argument("--out", default=None)
    p_hist.set_defaults(func=cmd_histogram)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _IOFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except ExchboundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
