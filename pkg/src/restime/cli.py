"""Command-line front end.

Subcommands: extract, estimate, gen-expr, exact, mc, autocorr.  Data goes to
stdout (or --out); diagnostics go to stderr.  Exit codes: 2 for usage errors
(unknown flags, malformed inputs), 1 for domain errors (e.g. empty sample).
"""

from __future__ import annotations

import argparse
import io
import sys

from . import estimators, mc, moments, taylor, trace
from .core import (
    DistributionSpec,
    DomainError,
    ParseError,
    ResidenceSample,
    format_rational,
)


def _write_output(args: argparse.Namespace, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_filter_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--k", type=int, default=None, help="absence tolerance in steps")
    sub.add_argument("--tstar", type=float, default=None, help="absence tolerance in time units")
    sub.add_argument("--dt", type=float, default=None, help="time step")
    sub.add_argument(
        "--boundary",
        choices=("drop", "include"),
        default="drop",
        help="treatment of residences touching the trace ends",
    )


def _filter_config(args: argparse.Namespace) -> trace.FilterConfig:
    if args.k is not None:
        return trace.FilterConfig(k=args.k)
    if args.tstar is not None:
        if args.dt is None:
            raise ParseError("--tstar needs --dt to derive the step tolerance")
        return trace.FilterConfig.from_times(args.tstar, args.dt)
    return trace.FilterConfig(k=1)


def _parse_orders(text: str) -> list[int]:
    try:
        if ".." in text:
            lo_s, hi_s = text.split("..")
            lo, hi = int(lo_s), int(hi_s)
            orders = list(range(lo, hi + 1))
        else:
            orders = [int(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise ParseError(f"bad orders {text!r}: use forms like 1..8 or 1,3,8") from exc
    if not orders or any(m < 1 or m > 8 for m in orders):
        raise ParseError("orders must lie within 1..8")
    return orders


def _parse_sizes(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ParseError(f"bad size list {text!r}") from exc
    return sizes


def cmd_extract(args: argparse.Namespace) -> None:
    cfg = _filter_config(args)
    policy = trace.ExtractionPolicy(boundary=args.boundary)
    with open(args.input, "r", encoding="utf-8") as fh:
        traces = trace.parse_traces(fh)
    sample = trace.collect_sample(traces, cfg, policy, dt=args.dt)
    buf = io.StringIO()
    trace.write_steps_csv(sample.steps, buf)
    _write_output(args, buf.getvalue())


def cmd_estimate(args: argparse.Namespace) -> None:
    with open(args.rts, "r", encoding="utf-8") as fh:
        steps = trace.read_steps_csv(fh)
    sample = ResidenceSample(steps=tuple(steps), dt=args.dt)
    if args.method == "ratio":
        methods: tuple[str, ...] = ("ratio",)
    elif args.method == "taylor":
        methods = (f"taylor{args.order}",)
    else:
        methods = ("ratio", f"taylor{args.order}")
    report = estimators.build_report(sample, dt=args.dt, methods=methods)
    _write_output(args, report.to_json())


def cmd_gen_expr(args: argparse.Namespace) -> None:
    expr = taylor.generate_expression(args.order, threads=args.threads)
    if args.format == "json":
        _write_output(args, expr.to_json())
    else:
        _write_output(args, expr.text())


def cmd_exact(args: argparse.Namespace) -> None:
    dist = DistributionSpec.parse(args.dist)
    orders = _parse_orders(args.orders)
    if args.n < 1:
        raise ParseError("--n must be >= 1")
    mom = moments.exact_moments(dist, max_central_order=2 * max(orders))
    lines = ["estimator,value"]
    ratio = estimators.ratio_variance_from_moments(mom, args.n)
    lines.append(f"ratio,{format_rational(ratio, args.digits)}")
    for m in orders:
        expr = taylor.generate_expression(m)
        value = taylor.evaluate_expression(expr, mom, args.n)
        lines.append(f"taylor{m},{format_rational(value, args.digits)}")
    try:
        exact = mc.exact_variance_small(dist, args.n)
    except DomainError:
        # too large to enumerate; the row is simply absent
        pass
    else:
        lines.append(f"exact,{format_rational(exact, args.digits)}")
    _write_output(args, "\n".join(lines))


def cmd_mc(args: argparse.Namespace) -> None:
    dist = DistributionSpec.parse(args.dist)
    sizes = _parse_sizes(args.n)
    labels = ("ratio", f"taylor{args.order}")
    cfg = mc.ExperimentConfig(
        dist=dist,
        sizes=sizes,
        replicates=args.reps,
        seed=args.seed,
        estimators=labels,
    )
    rows = mc.run_experiment(cfg, threads=args.threads)
    header = ["N", "reference_var", "reference_var_se"]
    for lbl in labels:
        header += [f"est_{lbl}_mean", f"est_{lbl}_se"]
    lines = [",".join(header)]
    for row in rows:
        cells = [str(row.n), repr(row.reference_var), repr(row.reference_var_se)]
        for lbl in labels:
            cells += [repr(row.means[lbl]), repr(row.ses[lbl])]
        lines.append(",".join(cells))
    _write_output(args, "\n".join(lines))


def cmd_autocorr(args: argparse.Namespace) -> None:
    cfg = _filter_config(args)
    policy = trace.ExtractionPolicy(boundary=args.boundary)
    with open(args.input, "r", encoding="utf-8") as fh:
        traces = trace.parse_traces(fh)
    per_trace = []
    for tr in traces:
        filtered = trace.filter_transient_escapes(tr, cfg)
        per_trace.append(list(trace.extract_residences(filtered, policy)))
    rows = estimators.rt_autocorrelation(per_trace, args.max_lag)
    lines = ["lag,mean_r,sd_r"]
    for lag, mean_r, sd_r in rows:
        lines.append(f"{lag},{mean_r!r},{sd_r!r}")
    _write_output(args, "\n".join(lines))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="restime",
        description="Residence and residual time estimation from 0/1 traces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="turn 0/1 traces into a residence-step CSV")
    p.add_argument("--input", required=True, help="trace file, one 0/1 trace per line")
    _add_filter_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("estimate", help="estimate mrT/mRT and uncertainties")
    p.add_argument("--rts", required=True, help="CSV of residence steps")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--method", choices=("ratio", "taylor", "both"), default="both")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("gen-expr", help="emit the truncated variance expression")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen_expr)

    p = sub.add_parser("exact", help="evaluate estimators on exact moments")
    p.add_argument("--dist", required=True, help="geom:p=... or uniform:a=...,b=...")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--orders", default="1..8")
    p.add_argument("--digits", type=int, default=16)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("mc", help="replicate experiment comparing estimators")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", required=True, help="comma-separated sample sizes")
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("autocorr", help="per-trace residence-time autocorrelation")
    p.add_argument("--input", required=True)
    _add_filter_flags(p)
    p.add_argument("--max-lag", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_autocorr)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
