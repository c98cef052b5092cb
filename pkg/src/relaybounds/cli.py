"""Command-line front end.

    relaybounds table1 [--verify]
    relaybounds sweep --var P --start 0 --stop 20 --step 1
    relaybounds discrete NETWORK [FACTORS] --theorem thm1
    relaybounds check-condition --geometry table1 --d 0.75

Exit codes: 0 success, 1 runtime or parse error, 2 validation failure
(bad arguments, distribution outside a bound's family, failed --verify,
non-monotone sweep, condition not met), 3 infeasible optimization.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

from . import gaussian as G
from .discrete import EVALUATORS, BoundResult
from .netfile import NetFileError, load, load_factors
from .network import FactorizationError, GaussianRelayParams, NetworkError, NodeRoles

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2, 3

THEOREMS = ("thm1", "thm2", "thm3", "thm4", "nnc", "ddf", "diamond-fb", "diamond-nofb",
            "relay-cf-fb", "relay-cfdf-fb")
GAUSS_BOUNDS = ("nnc", "ddf", "ce", "pro1", "pro2", "af")
COLUMN = {"nnc": "R_NNC", "ddf": "R_DDF", "ce": "R_CE", "pro1": "R_Pro1", "pro2": "R_Pro2",
          "af": "R_AF"}
TABLE1_COLUMNS = ("R_NNC", "R_DDF", "R_CE", "R_Pro1", "R_Pro2")


class CliError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


class _Infeasible(Exception):
    pass


def _fmt(v: float) -> str:
    # fixed-point, '.' decimal independent of locale
    return "%.6f" % v


def _write_csv(rows: list[list], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    for r in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in r])


def _emit(text: str, args) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _search_config(args) -> G.SearchConfig:
    kw = {}
    if getattr(args, "grid", None) is not None:
        kw["grid_points"] = args.grid
    if getattr(args, "refine", None) is not None:
        kw["refine_iters"] = args.refine
    try:
        return G.default_config(**kw)
    except ValueError as e:
        raise CliError(str(e), EXIT_INVALID) from None


def _gauss_rate(name: str, ch: GaussianRelayParams, cfg) -> float:
    if name == "nnc":
        return G.eval_nnc_gauss(ch)
    res = {
        "ddf": lambda: G.eval_ddf_gauss(ch),
        "ce": lambda: G.eval_ce(ch, cfg),
        "pro1": lambda: G.eval_pro1(ch, cfg),
        "pro2": lambda: G.eval_pro2(ch, cfg),
        "af": lambda: G.eval_af_gauss(ch),
    }[name]()
    if (res.search is not None and res.search.empty) or not math.isfinite(res.rate):
        raise _Infeasible(f"{name}: no feasible parameter point")
    return res.rate


# -- table1 -----------------------------------------------------------------------


def cmd_table1(args) -> int:
    cfg = _search_config(args)
    rows = []
    for d in G.TABLE1_D:
        r = G.table1_row(d, cfg)
        rows.append([d] + [r[c] for c in TABLE1_COLUMNS])
    buf = io.StringIO()
    _write_csv([["d", *TABLE1_COLUMNS]] + rows, buf)
    _emit(buf.getvalue(), args)
    if not args.verify:
        return EXIT_OK
    # per-cell deviation from the published table, on stderr so the CSV
    # on stdout keeps its exact format
    failed = 0
    dev = [["d"] + [f"dev_{c[2:]}" for c in TABLE1_COLUMNS] + ["status"]]
    for i, row in enumerate(rows):
        cells, ok = [], True
        for j, c in enumerate(TABLE1_COLUMNS):
            delta = row[1 + j] - G.TABLE1_REFERENCE[c][i]
            ok &= abs(delta) <= G.TABLE1_TOLERANCE[c]
            cells.append(delta)
        failed += not ok
        dev.append([row[0]] + cells + ["PASS" if ok else "FAIL"])
    err = io.StringIO()
    _write_csv(dev, err)
    sys.stderr.write(err.getvalue())
    return EXIT_INVALID if failed else EXIT_OK


# -- sweep ----------------------------------------------------------------------------


def _sweep_points(start: float, stop: float, step: float) -> list[float]:
    if not step > 0:
        raise CliError("--step must be > 0", EXIT_INVALID)
    if start > stop:
        raise CliError("--start must not exceed --stop", EXIT_INVALID)
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def _channel_at(args, x: float) -> GaussianRelayParams:
    try:
        if args.var == "P":
            return GaussianRelayParams(args.g12, args.g13, args.g23, args.g21, x, x)
        return GaussianRelayParams.table1(x, args.P1, args.P2)
    except NetworkError as e:
        raise CliError(str(e), EXIT_INVALID) from None


def cmd_sweep(args) -> int:
    cfg = _search_config(args)
    names = [b.strip().lower() for b in args.bounds.split(",") if b.strip()]
    bad = [b for b in names if b not in GAUSS_BOUNDS]
    if bad or not names:
        raise CliError(f"unknown bounds {bad}; choose from {','.join(GAUSS_BOUNDS)}", EXIT_INVALID)
    xs = _sweep_points(args.start, args.stop, args.step)
    rows = []
    for x in xs:
        ch = _channel_at(args, x)
        rows.append([x] + [_gauss_rate(b, ch, cfg) for b in names])
    buf = io.StringIO()
    _write_csv([[args.var] + [COLUMN[b] for b in names]] + rows, buf)
    _emit(buf.getvalue(), args)
    if args.var == "P":
        for j, b in enumerate(names, start=1):
            for prev, cur in zip(rows, rows[1:]):
                if cur[j] < prev[j] - cfg.tol:
                    sys.stderr.write(
                        f"error: {COLUMN[b]} decreases from {prev[j]:.6f} at P={prev[0]:g} "
                        f"to {cur[j]:.6f} at P={cur[0]:g}\n"
                    )
                    return EXIT_INVALID
    return EXIT_OK


# -- discrete -----------------------------------------------------------------------


def _parse_decode_set(text: str | None):
    if text is None:
        return None
    text = text.strip()
    if text in ("", "none", "empty"):
        return frozenset()
    try:
        return frozenset(int(t) for t in text.split(","))
    except ValueError:
        raise CliError(f"--decode-set expects comma-separated node ids, got {text!r}", EXIT_INVALID) from None


def _report(res: BoundResult) -> str:
    lines = [
        f"bound:            {res.bound}",
        f"rate:             {res.rate:.6f}",
        f"achieved rate:    {res.achieved_rate:.6f}",
        f"feasible:         {'yes' if res.feasible else 'no'}",
        f"binding receiver: {res.binding_receiver}",
        f"binding cut:      {'-' if res.binding_cut is None else res.binding_cut}",
        f"binding term:     {res.binding_label or '-'}",
    ]
    for k, v in res.details.items():
        lines.append(f"{k + ':':<18}{v}")
    if res.feasibility:
        lines.append("constraints:")
        for c in res.feasibility:
            lines.append(f"  [{'ok' if c.satisfied else 'VIOLATED'}] {c.label}  slack {c.slack:.6f}")
    return "\n".join(lines) + "\n"


def _csv_report(res: BoundResult) -> str:
    buf = io.StringIO()
    rows = [["bound", "rate", "achieved_rate", "feasible", "binding_receiver", "binding_cut",
             "binding_label"],
            [res.bound, res.rate, res.achieved_rate, int(res.feasible),
             "" if res.binding_receiver is None else res.binding_receiver,
             "" if res.binding_cut is None else str(res.binding_cut), res.binding_label]]
    _write_csv(rows, buf)
    if res.feasibility:
        buf.write("\n")
        _write_csv([["constraint", "satisfied", "slack"]]
                   + [[c.label, int(c.satisfied), c.slack] for c in res.feasibility], buf)
    return buf.getvalue()


def cmd_discrete(args) -> int:
    dn, fd = load(args.network)
    if args.factors:
        fd = load_factors(args.factors, dn)
    if fd is None:
        raise CliError(f"{args.network}: no 'factors' given and no factors file", EXIT_ERROR)
    if args.perfect_feedback:
        dn = dn.with_roles(NodeRoles.perfect_feedback(dn.n, dn.roles.relays))
    kw = {}
    if args.decode_set is not None:
        if args.theorem != "thm4":
            raise CliError("--decode-set only applies to --theorem thm4", EXIT_INVALID)
        kw["decode_set"] = _parse_decode_set(args.decode_set)
    if args.ddf_order is not None:
        if args.theorem != "ddf":
            raise CliError("--ddf-order only applies to --theorem ddf", EXIT_INVALID)
        try:
            kw["ordering"] = [int(t) for t in args.ddf_order.split(",")]
        except ValueError:
            raise CliError("--ddf-order expects comma-separated node ids", EXIT_INVALID) from None
    res = EVALUATORS[args.theorem](dn, fd, **kw)
    _emit(_csv_report(res) if args.csv else _report(res), args)
    return EXIT_OK


# -- check-condition -------------------------------------------------------------------


def cmd_check_condition(args) -> int:
    try:
        if args.geometry == "table1":
            ch = GaussianRelayParams.table1(args.d, args.P1, args.P2)
        elif args.geometry == "fig4":
            ch = GaussianRelayParams.fig4(args.P)
        else:
            ch = GaussianRelayParams(args.g12, args.g13, args.g23, args.g21, args.P1, args.P2)
    except NetworkError as e:
        raise CliError(str(e), EXIT_INVALID) from None
    holds, margin = G.check_condition_enh(ch, resolution=args.resolution, form=args.form)
    _emit(
        f"s12={ch.s12:.6f} s13={ch.s13:.6f} s23={ch.s23:.6f} s21={ch.s21:.6f}\n"
        f"condition holds: {'yes' if holds else 'no'}\n"
        f"margin: {margin:.6f}\n",
        args,
    )
    return EXIT_OK if holds else EXIT_INVALID


# -- argument parsing ------------------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relaybounds", description="Achievable-rate bounds for relay networks.")
    sub = p.add_subparsers(dest="command", required=True)

    def search_opts(sp):
        sp.add_argument("--grid", type=_positive_int, help="grid points per dimension (default 33)")
        sp.add_argument("--refine", type=_positive_int, help="pattern-search iterations (default 60)")
        sp.add_argument("--out", help="write output here instead of stdout")

    t = sub.add_parser("table1", help="enhanced Gaussian relay rates for d in 0.73..0.76")
    search_opts(t)
    t.add_argument("--verify", action="store_true", help="compare against the published values")
    t.set_defaults(func=cmd_table1)

    s = sub.add_parser("sweep", help="rates over transmit power or relay position")
    search_opts(s)
    s.add_argument("--var", choices=("P", "d"), default="P")
    s.add_argument("--start", type=float, required=True)
    s.add_argument("--stop", type=float, required=True)
    s.add_argument("--step", type=float, required=True)
    s.add_argument("--bounds", default="nnc,ddf,ce,pro1,pro2",
                   help=f"comma-separated subset of {','.join(GAUSS_BOUNDS)}")
    s.add_argument("--g12", type=float, default=1.0)
    s.add_argument("--g13", type=float, default=1.0)
    s.add_argument("--g23", type=float, default=0.7)
    s.add_argument("--g21", type=float, default=1.0)
    s.add_argument("--P1", type=float, default=5.0, help="transmitter power in d sweeps")
    s.add_argument("--P2", type=float, default=1.0, help="relay power in d sweeps")
    s.set_defaults(func=cmd_sweep)

    d = sub.add_parser("discrete", help="evaluate a bound for a discrete network file")
    d.add_argument("network")
    d.add_argument("factors", nargs="?", help="file holding the factors (default: the network file)")
    d.add_argument("--theorem", choices=THEOREMS, required=True)
    d.add_argument("--perfect-feedback", action="store_true", help="unlimited feedback rates")
    d.add_argument("--decode-set", help="nodes whose indices the transmitter decodes (thm4), e.g. 2,3")
    d.add_argument("--ddf-order", help="node order for ddf, e.g. 3,2")
    d.add_argument("--csv", action="store_true", help="machine-readable output")
    d.add_argument("--out")
    d.set_defaults(func=cmd_discrete)

    c = sub.add_parser("check-condition", help="does the no-feedback scheme beat Cover-El Gamal?")
    c.add_argument("--geometry", choices=("table1", "fig4", "custom"), default="table1")
    c.add_argument("--d", type=float, default=0.75)
    c.add_argument("--P", type=float, default=10.0, help="common power for fig4")
    c.add_argument("--g12", type=float, default=1.0)
    c.add_argument("--g13", type=float, default=1.0)
    c.add_argument("--g23", type=float, default=1.0)
    c.add_argument("--g21", type=float, default=1.0)
    c.add_argument("--P1", type=float, default=5.0)
    c.add_argument("--P2", type=float, default=1.0)
    c.add_argument("--resolution", type=_positive_int, default=101)
    c.add_argument("--form", choices=G.CE_FORMS, default="derived")
    c.add_argument("--out")
    c.set_defaults(func=cmd_check_condition)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad usage, which is our validation code too
        return int(e.code or 0)
    try:
        return args.func(args)
    except CliError as e:
        sys.stderr.write(f"error: {e}\n")
        return e.code
    except _Infeasible as e:
        sys.stderr.write(f"infeasible: {e}\n")
        return EXIT_INFEASIBLE
    except NetFileError as e:
        sys.stderr.write(f"parse error: {e}\n")
        return EXIT_ERROR
    except FactorizationError as e:
        sys.stderr.write(f"validation failed: {e}\n")
        return EXIT_INVALID
    except NetworkError as e:
        sys.stderr.write(f"validation failed: {e}\n")
        return EXIT_INVALID
    except (OSError, ValueError, ArithmeticError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
