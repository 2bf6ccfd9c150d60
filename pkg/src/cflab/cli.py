"""Single-binary CLI: expand, phi, events, series, pressure, dim, experiment.

All numeric output is printed at 12 significant digits. Exit codes: 0 on
success, 1 on domain errors (including bad flags), 2 on resource errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import __version__
from .errors import DomainError, ResourceLimitError
from . import blocks, cf, growth, mc, pressure, series


def _fmt(x):
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    return x


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; bad usage is a domain error
        raise DomainError(message)


def _phi_from_args(args) -> growth.GrowthFunction:
    family = getattr(args, "phi_family", None) or args.family
    raw = getattr(args, "phi_params", None) or args.params
    params = [float(x) for x in raw.split(",") if x.strip()]
    if family == "powerlog":
        return growth.GrowthFunction.power_log(*params)
    if family == "exp":
        return growth.GrowthFunction.exponential(*params)
    if family == "doubleexp":
        return growth.GrowthFunction.doubly_exponential(*params)
    if family == "table":
        return growth.GrowthFunction.table(params)
    raise DomainError(f"unknown phi family {family!r}")


def _add_phi_flags(p):
    p.add_argument("--phi-family", required=True, choices=["powerlog", "exp", "doubleexp", "table"])
    p.add_argument("--phi-params", required=True, help="comma-separated family parameters")


def _emit_csv(header, rows, out=None):
    stream = open(out, "w", encoding="utf-8", newline="") if out else sys.stdout
    try:
        stream.write(",".join(header) + "\r\n")
        for row in rows:
            stream.write(",".join(mc.format_cell(c) for c in row) + "\r\n")
    finally:
        if out:
            stream.close()


def cmd_expand(args) -> int:
    quotients = cf.expand_rational(args.num, args.den, args.max_terms)
    print(json.dumps(quotients))
    if args.convergents:
        rows = [(c.p, c.q) for c in cf.convergents(quotients, len(quotients))] if quotients else []
        _emit_csv(["p", "q"], rows, args.convergents if args.convergents != "-" else None)
    return 0


def cmd_phi(args) -> int:
    phi = _phi_from_args(args)
    gc = phi.growth_constants()
    out = {
        "family": phi.family,
        "params": list(phi.params) if phi.family != "table" else len(phi.values),
        "log_B": _fmt(gc.log_B),
        "log_b": _fmt(gc.log_b),
        "B": _fmt(gc.B),
        "b": _fmt(gc.b),
        "classifications": {
            "HWX1": growth.classify_series(phi, "HWX", 1),
            "HWX2": growth.classify_series(phi, "HWX", 2),
            "HWX3": growth.classify_series(phi, "HWX", 3),
            "TTW": growth.classify_series(phi, "TTW"),
            "TZ": growth.classify_series(phi, "TZ"),
            "MAIN3": growth.classify_series(phi, "MAIN3"),
        },
    }
    print(json.dumps(out, indent=2))
    return 0


def cmd_events(args) -> int:
    phi = _phi_from_args(args)
    rows = []
    for sid in range(args.samples):
        stream = cf.lebesgue_quotients(mc.sample_rng(args.seed, sid))
        word = cf.take(stream, args.horizon + args.ell - 1)
        hit_f = blocks.first_F_event(word, args.ell, phi, args.horizon)
        hit_e = blocks.first_E_event(word, args.ell, phi, args.horizon)
        if hit_f is not None:
            n, rec = hit_f
            rows.append([sid, n, hit_e if hit_e is not None else "", rec.j, rec.k, rec.overlap])
        else:
            rows.append([sid, "", hit_e if hit_e is not None else "", "", "", ""])
    _emit_csv(["sample_id", "tau_F", "tau_E", "j", "k", "overlap"], rows, args.out)
    return 0


def _parse_params(text: str) -> dict:
    out = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise DomainError(f"bad --params item {item!r}, expected key=value")
        key, _, value = item.partition("=")
        num = float(value)
        out[key.strip()] = int(num) if num.is_integer() and key.strip() != "s" and key.strip() != "t" else num
    return out


def cmd_series(args) -> int:
    params = _parse_params(args.params) if args.params else {}
    if args.M is not None:
        grid = [args.M]
    elif args.M_grid:
        lo, hi, pts = args.M_grid.split(":")
        grid = series.geometric_grid(float(lo), float(hi), int(pts))
    else:
        raise DomainError("provide --M or --M-grid lo:hi:points")
    scan = series.asymptotic_ratio_scan(args.id, params, grid)
    rows = []
    for row in scan.rows:
        err = _series_error_bound(args.id, params, row.M)
        rows.append([row.M, row.value, err, row.predicted, row.ratio])
    _emit_csv(["M", "value", "error_bound", "predicted", "ratio"], rows, args.out)
    return 0


def _series_error_bound(series_id, params, M) -> float:
    if series_id == "S1":
        return series.series_block_tail(params["ell"], M).abs_error_bound
    if series_id in ("S2", "E0101", "E0102"):
        r = params.get("r", 1 if series_id == "E0101" else 2)
        j = params.get("j", 1)
        return series.series_overlap(r, j, M).abs_error_bound
    if series_id == "S3":
        return series.series_harmonic_box(params["ell"], M).abs_error_bound
    if series_id == "S4":
        return series.series_shifted(params["ell"], M).abs_error_bound
    if series_id == "S5":
        return series.series_power_box(params["ell"], M, params["s"]).abs_error_bound
    if series_id in ("S6", "S7"):
        k = 2 if series_id == "S6" else 3
        return series.series_power_tail(k, M, params["t"]).abs_error_bound
    raise DomainError(f"unknown series id {series_id!r}")


def cmd_pressure(args) -> int:
    params = pressure.PressureSolverParams(
        grid_points=args.grid_points,
        tail_correction=not args.no_tail,
        alphabet_max=max(args.alphabet, pressure.DEFAULT_PARAMS.alphabet_max),
    )
    svals = [float(x) for x in args.s.split(",")]
    rows = [[s, args.alphabet, pressure.transfer_pressure(s, args.alphabet, params)] for s in svals]
    _emit_csv(["s", "N", "pressure"], rows, args.out)
    return 0


def cmd_dim(args) -> int:
    phi = _phi_from_args(args)
    params = pressure.PressureSolverParams(bisect_tol=args.tol)
    res = pressure.hausdorff_dim(args.set, phi, params)
    out = {
        "set": args.set,
        "s": _fmt(res.s),
        "lo": _fmt(res.bracket[0]),
        "hi": _fmt(res.bracket[1]),
        "alphabet": res.alphabet_used,
        "branch": res.branch,
    }
    print(json.dumps(out, indent=2))
    return 0


def cmd_experiment(args) -> int:
    if args.action == "run":
        with open(args.config, "r", encoding="utf-8") as fh:
            config = mc.config_from_text(fh.read())
        if args.threads is not None:
            import dataclasses

            config = dataclasses.replace(config, threads=args.threads)
        manifest = mc.run_experiment(config, args.out)
        print(json.dumps({"config_hash": manifest.config_hash, "out": args.out}, indent=2))
        return 0
    # report
    manifest_path = os.path.join(args.dir, "manifest.json")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    print(f"run {manifest['config_hash'][:12]}  tool {manifest['tool_version']}  seed {manifest['seed']}")
    for name in manifest["output_files"]:
        path = os.path.join(args.dir, name)
        with open(path, "r", encoding="utf-8") as fh:
            content = fh.read().strip().splitlines()
        print(f"-- {name}")
        widths = None
        for line in content:
            cells = line.split(",")
            if widths is None:
                widths = [max(12, len(c) + 2) for c in cells]
            print("".join(c.ljust(w) for c, w in zip(cells, widths)))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="cflab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cflab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", help="continued fraction of a rational in [0,1)")
    p.add_argument("--num", type=int, required=True)
    p.add_argument("--den", type=int, required=True)
    p.add_argument("--max-terms", type=int, default=64)
    p.add_argument("--convergents", help="write convergent table CSV to PATH ('-' for stdout)")
    p.set_defaults(fn=cmd_expand)

    p = sub.add_parser("phi", help="growth constants and series classification")
    p.add_argument("--family", required=True, choices=["powerlog", "exp", "doubleexp", "table"])
    p.add_argument("--params", required=True, help="comma-separated family parameters")
    p.set_defaults(fn=cmd_phi)

    p = sub.add_parser("events", help="hitting times of the two-block and one-block events")
    p.add_argument("--ell", type=int, required=True)
    _add_phi_flags(p)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_events)

    p = sub.add_parser("series", help="evaluate a registered series on M or an M grid")
    p.add_argument("--id", required=True, choices=sorted(series.DEFAULT_BANDS))
    p.add_argument("--params", default="", help="e.g. ell=2 or r=2,j=1 or t=1.5")
    p.add_argument("--M", type=float)
    p.add_argument("--M-grid", dest="M_grid", help="lo:hi:points geometric grid")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_series)

    p = sub.add_parser("pressure", help="raw transfer-operator pressure values")
    p.add_argument("--s", required=True, help="comma-separated s values")
    p.add_argument("--alphabet", type=int, default=1000)
    p.add_argument("--grid-points", type=int, default=64)
    p.add_argument("--no-tail", action="store_true", help="literal truncated operator")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_pressure)

    p = sub.add_parser("dim", help="Hausdorff dimension of E_l/F_l for a growth function")
    p.add_argument("--set", required=True, choices=sorted(pressure.SET_POTENTIALS))
    _add_phi_flags(p)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(fn=cmd_dim)

    p = sub.add_parser("experiment", help="run or report a Monte Carlo experiment")
    act = p.add_subparsers(dest="action", required=True)
    run = act.add_parser("run")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("CFLAB_THREADS", "0")) or None,
    )
    rep = act.add_parser("report")
    rep.add_argument("--dir", required=True)
    p.set_defaults(fn=cmd_experiment)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args)
    except DomainError as exc:
        print(f"error[domain]: {exc}", file=sys.stderr)
        return 1
    except ResourceLimitError as exc:
        print(f"error[resource]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
