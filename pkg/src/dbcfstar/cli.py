"""Command-line interface: ``dbcfstar <subcommand> ...``.

Exit codes: 0 success, 1 domain or validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import capacity, channels, closed_forms, encoding, fstar, plotting, symmetry
from .errors import DbcError, InvalidInputError

LN2 = math.log(2.0)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


BUILTINS = {
    "bsc": lambda a: channels.make_broadcast_bsc(*a),
    "z": lambda a: channels.make_broadcast_z(*a),
    "bec": lambda a: channels.make_broadcast_bec(*a),
    "z3": lambda a: channels.make_group_additive(
        channels.GroupTable.cyclic(3), a[:3] or [0.8, 0.1, 0.1], a[3:] or [0.7, 0.2, 0.1]),
    "gf3": lambda a: channels.make_multiplicative(
        channels.MultTable.prime_field(3), *(a[:2] or [0.1, 0.2]), a[2:4] or [0.8, 0.2], a[4:6] or [0.9, 0.1]),
    "is-example": lambda a: channels.make_is_example(),
}


def load_channel(spec: str) -> channels.DbcModel:
    """A JSON file path, or ``builtin:NAME[:p1,p2,...]``."""
    if spec.startswith("builtin:"):
        parts = spec.split(":")
        name = parts[1]
        if name not in BUILTINS:
            raise InvalidInputError(f"unknown builtin channel {name!r}; choose from {sorted(BUILTINS)}")
        try:
            args = [float(v) for v in parts[2].split(",")] if len(parts) > 2 and parts[2] else []
            return BUILTINS[name](args)
        except (TypeError, ValueError):
            raise InvalidInputError(f"wrong number of parameters for builtin {name!r}")
    path = Path(spec)
    if not path.is_file():
        raise InvalidInputError(f"channel file {spec!r} not found")
    return channels.load_model(path)


def _threads(args) -> int:
    return args.threads if args.threads else capacity.default_threads()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _scale(args) -> tuple[float, str]:
    return (1.0 / LN2, "bits") if args.units == "bits" else (1.0, "nats")


def _g(x: float) -> str:
    return f"{x:.12g}"


def _q_for(model, args) -> np.ndarray:
    if args.q is None:
        return np.full(model.k, 1.0 / model.k)
    q = np.array(args.q, dtype=float)
    if q.size == 1 and model.k == 2:
        q = np.array([1 - q[0], q[0]])
    if q.size != model.k:
        raise InvalidInputError(f"--q has {q.size} entries, model has k={model.k}")
    return q


def cmd_validate(args) -> int:
    model = load_channel(args.channel)
    report = channels.validate_dbc(model)
    factor = channels.find_degrading_channel(model.T_YX, model.T_ZX)
    report["degrading_channel"] = None if factor is None else np.round(factor, 12).tolist()
    ok = report["valid"] and factor is not None
    if factor is None:
        report["message"] = "no degrading channel found"
    elif not report["valid"]:
        report["message"] = f"attached T_ZY does not reproduce T_ZX (residual {report['factor_residual']:.3e})"
    report["ok"] = bool(ok)
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return 0 if ok else 1


def cmd_fstar(args) -> int:
    model = load_channel(args.channel)
    q = _q_for(model, args)
    scale, unit = _scale(args)
    ss = fstar.s_samples(model, q, args.s_samples)
    rows = []
    if args.method == "primal":
        for s in ss:
            v, w = fstar.fstar_primal(model, q, s, args.grid)
            rows.append((s, v, json.dumps(w.to_json(), separators=(",", ":"))))
    elif args.method == "dual":
        prof = fstar.psi_profile(model, q, fstar.lambda_grid(args.lambdas), args.grid)
        rows = [(s, fstar.fstar_dual(model, q, s, profile=prof), "null") for s in ss]
    elif args.method == "oracle":
        rows = [(s, fstar.fstar_oracle(model, q, s), "null") for s in ss]
    else:
        closed = fstar._closed_fstar(model)
        if closed is None:
            raise InvalidInputError("method 'closed' needs a broadcast_z or broadcast_bsc family channel")
        rows = [(s, closed(q, s), "null") for s in ss]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow([f"s_{unit}", f"fstar_{unit}", "witness_json"])
    for s, v, w in rows:
        wr.writerow([_g(s * scale), _g(v * scale), w])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_region(args) -> int:
    model = load_channel(args.channel)
    scale, unit = _scale(args)
    lambdas = np.linspace(0.0, 1.0, args.lambdas)
    bound = capacity.trace_region(model, lambdas, args.q_grid, args.grid, threads=_threads(args))
    text = capacity.region_csv(bound, scale=scale, hull_only=args.hull_only)
    _emit(text, args.out)
    if args.figure:
        R = bound.rates() * scale
        pts = np.array([[p.R1, p.R2] for p in bound.hull_points()]) * scale
        series = [plotting.Series("sampled", R[:, 0], R[:, 1]),
                  plotting.Series("boundary", pts[:, 0], pts[:, 1])]
        plotting.render_figure(series, f"R1 ({unit})", f"R2 ({unit})", args.figure,
                               title="capacity region boundary")
    return 0


def cmd_symmetry(args) -> int:
    model = load_channel(args.channel)
    report = symmetry.symmetry_report(model)
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_zregion(args) -> int:
    betas = args.betas
    K = len(betas)
    scale, unit = _scale(args)
    ts = np.linspace(1.0, args.q, args.steps)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow([f"t{j}" for j in range(1, K)] + [f"R{j}_{unit}" for j in range(1, K + 1)])
    for combo in itertools.product(range(args.steps), repeat=K - 1):
        if any(b < a for a, b in zip(combo, combo[1:])):
            continue
        t = tuple(float(ts[i]) for i in combo)
        R = closed_forms.kuser_z_rates(closed_forms.KUserZParams(args.q, tuple(betas), t))
        wr.writerow([_g(v) for v in t] + [_g(max(r, 0.0) * scale) for r in R])
    _emit(buf.getvalue(), args.out)
    return 0


def _combiner(model, args) -> encoding.CombinerSpec:
    p1 = np.array(args.p1, dtype=float)
    p2 = None if args.p2 is None else np.array(args.p2, dtype=float)
    kind = args.combiner
    if kind == "permutation":
        pset = symmetry.require_input_symmetric(model)
        perms = symmetry.smallest_transitive_subset(pset)
        return encoding.CombinerSpec.permutation(perms, p1, p2)
    if p2 is None:
        raise InvalidInputError(f"--p2 is required for combiner {kind!r}")
    if kind == "binary-or":
        return encoding.CombinerSpec.binary_or(p1, p2)
    table = model.family.get("table")
    if table is None:
        raise InvalidInputError(f"combiner {kind!r} needs a channel family with a 'table' entry")
    if kind == "group-add":
        return encoding.CombinerSpec.group_add(channels.GroupTable(table), p1, p2)
    return encoding.CombinerSpec.mult(channels.MultTable(table), p1, p2)


def cmd_simulate(args) -> int:
    model = load_channel(args.channel)
    comb = _combiner(model, args)
    report = encoding.simulation_report(model, comb, args.samples, args.seed, _threads(args))
    if args.units == "bits":
        for key, new in (("empirical_rates_nats", "empirical_rates_bits"),
                         ("analytic_rates_nats", "analytic_rates_bits"), ("abs_error", "abs_error_bits")):
            report[new] = [float(_g(v / LN2)) for v in report[key]]
    _emit(encoding.report_json(report), args.out)
    return 0


def cmd_plot(args) -> int:
    path = Path(args.input)
    if not path.is_file():
        raise InvalidInputError(f"CSV file {args.input!r} not found")
    x_col, series = plotting.read_csv_series(path.read_text(), args.x, args.y)
    ylabel = series[0].label if len(series) == 1 else "value"
    _emit(plotting.svg_plot(series, x_col, ylabel, args.title or ""), args.out)
    if args.figure:
        plotting.render_figure(series, x_col, ylabel, args.figure, title=args.title or "")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dbcfstar", description=(
        "Conditional entropy bound F*(q,s) and capacity regions of degraded broadcast channels."))
    p.add_argument("--units", choices=["nats", "bits"], default="nats",
                   help="display units (computation is always in nats)")
    p.add_argument("--threads", type=_positive, default=None,
                   help="worker threads (default: DBC_THREADS or CPU count)")
    sub = p.add_subparsers(dest="command", required=True)

    def channel_arg(sp):
        sp.add_argument("--channel", required=True,
                        help="channel JSON file, or builtin:NAME[:params] (bsc, z, bec, z3, gf3, is-example)")

    sp = sub.add_parser("validate", help="check stochasticity and degradedness")
    sp.add_argument("channel")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("fstar", help="sample F*(q, .) over its domain")
    channel_arg(sp)
    sp.add_argument("--q", type=_floats, help="input law (comma separated; one number = Pr(index 1) for k=2)")
    sp.add_argument("--s-samples", type=_positive, default=50)
    sp.add_argument("--grid", type=_positive, default=None, help="simplex grid resolution m")
    sp.add_argument("--lambdas", type=_positive, default=fstar.LAMBDA_SAMPLES)
    sp.add_argument("--method", choices=["primal", "dual", "closed", "oracle"], default="primal")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_fstar)

    sp = sub.add_parser("region", help="trace the capacity region boundary")
    channel_arg(sp)
    sp.add_argument("--lambdas", type=_positive, default=101)
    sp.add_argument("--q-grid", type=_positive, default=20, help="resolution of the input-law grid")
    sp.add_argument("--grid", type=_positive, default=None)
    sp.add_argument("--hull-only", action="store_true", help="emit only convexified boundary points")
    sp.add_argument("--figure", help="also render a matplotlib figure (png/svg/pdf)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("symmetry", help="input-permutation symmetry report")
    channel_arg(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_symmetry)

    sp = sub.add_parser("zregion", help="K-user broadcast Z rates over threshold sweeps")
    sp.add_argument("--q", type=float, required=True, help="Pr(noisy input)")
    sp.add_argument("--betas", type=_floats, required=True, help="beta_1 >= ... >= beta_K")
    sp.add_argument("--steps", type=_positive, default=20)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_zregion)

    sp = sub.add_parser("simulate", help="Monte-Carlo rates of an encoding combiner")
    channel_arg(sp)
    sp.add_argument("--combiner", choices=list(encoding.KINDS), default="permutation")
    sp.add_argument("--p1", type=_floats, required=True, help="law of the user-1 symbol X1")
    sp.add_argument("--p2", type=_floats, help="law of the user-2 symbol X2 (uniform for permutation)")
    sp.add_argument("--samples", type=_positive, default=10 ** 6)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("plot", help="SVG polyline plot of a CSV file")
    sp.add_argument("input")
    sp.add_argument("--x", help="x column (default: R1_* for region files, else first numeric)")
    sp.add_argument("--y", action="append", help="y column; repeatable")
    sp.add_argument("--title")
    sp.add_argument("--figure", help="also render a matplotlib figure")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DbcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
