"""Command line front end.

Exit codes: 0 success, 2 malformed input, 3 not stabilizable, 4 a solver
did not converge, 1 anything else.
"""

import argparse
import os
import sys

import numpy as np

from . import __version__
from .analysis import Report, run_analysis, sweep_pairs_csv
from .casestudy import ACTUATORS, DEFAULT_X0, build_temperature_system
from .errors import ResiliaError
from .specfile import SystemSpec, load_system

SEED_ENV = "RESILIA_SEED"

# reference spectrum usually quoted for this model; its magnitudes
# do not follow from the listed parameters, only the ratios do
REFERENCE_SPECTRUM = (-0.052, -0.033, -0.010)


def _apply_seed(spec: SystemSpec, flag_seed=None, pairs=None):
    seed = spec.options.seed
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            seed = int(env)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    if flag_seed is not None:
        seed = flag_seed
    kw = {"seed": seed}
    if pairs is not None:
        kw["num_pairs"] = pairs
    return spec.with_options(**kw)


def _x0_arg(text):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("the temperature model needs three initial temperatures")
    return vals


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", metavar="JSON", default=argparse.SUPPRESS,
                        help="write the full report as JSON to this path")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                        help="print nothing on success")

    parser = argparse.ArgumentParser(prog="resilia", parents=[common],
                                     description="Resilience of linear systems to loss of actuator authority.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("check", parents=[common], help="resilience verdicts only")
    p.add_argument("file")

    p = sub.add_parser("bounds", parents=[common], help="Lyapunov reach-time bounds")
    p.add_argument("file")
    p.add_argument("--pairs", type=_nonneg_int)
    p.add_argument("--seed", type=_nonneg_int)

    p = sub.add_parser("reachtime", parents=[common], help="exact minimum reach times")
    p.add_argument("file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--nominal", dest="which", action="store_const", const="nominal")
    g.add_argument("--malfunctioning", dest="which", action="store_const", const="malfunction")
    g.add_argument("--both", dest="which", action="store_const", const="both")
    p.set_defaults(which="both")

    p = sub.add_parser("sweep", parents=[common], help="per-pair bounds table as CSV")
    p.add_argument("file")
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--pairs", type=_nonneg_int)
    p.add_argument("--seed", type=_nonneg_int)

    p = sub.add_parser("casestudy", parents=[common], help="built-in models")
    p.add_argument("model", choices=["temperature"])
    p.add_argument("--lost", required=True, choices=ACTUATORS, help="actuator that stops obeying the controller")
    p.add_argument("--x0", type=_x0_arg, default=DEFAULT_X0, metavar="a,b,c",
                   help="initial deviation from the goal temperature, K")
    p.add_argument("--pairs", type=_nonneg_int)
    p.add_argument("--seed", type=_nonneg_int)
    return parser


# ---------------------------------------------------------------------------
# text output

def _num(v, fmt=".6g"):
    return "n/a" if v is None else format(v, fmt)


def format_report(report: Report) -> str:
    d = report.data
    lines = []
    s = d["system"]
    lines.append(f"system: n={s['n']} m={s['m']} p={s['p']} lost={s['lost_actuators']}")
    v = d["verdicts"]
    lines.append(f"resilient: {v['resilient']}")
    lines.append(f"resiliently stabilizable: {v['stabilizable']}")
    if v["reason"]:
        lines.append(f"  reason: {v['reason']}")
    g = d["geometry"]
    lines.append(f"Z: {_num(g['Z_facets'])} facets, {_num(g['Z_vertices'])} vertices"
                 + (" (empty interior)" if g["Z_degenerate"] else ""))
    fa = d["full_actuation"]
    lines.append(f"full actuation: {'holds' if fa['holds'] else 'fails'} (rank B = {fa['rank_B']})")
    b = d.get("bounds")
    if b is not None:
        if "reason" in b:
            lines.append(f"bounds: {b['reason']}")
        for kind, entry in b["pairs"].items():
            if not entry["available"]:
                lines.append(f"  {kind}: unavailable ({entry.get('reason', '')})")
        for name, best in b.get("best", {}).items():
            lines.append(f"bounds [{name}]: {_num(best['tn_lower'])} <= T_N <= {_num(best['tn_upper'])}, "
                         f"{_num(best['tm_lower'])} <= T_M <= {_num(best['tm_upper'])}, "
                         f"{_num(best['rq_lower'])} <= r_q <= {_num(best['rq_upper'])}"
                         + ("" if best["rq_upper_informative"] else " (upper > 1, uninformative)"))
    for name, r in d.get("reach_times", {}).items():
        label = "T_N*" if name == "nominal" else "T_M*"
        if "error" in r:
            lines.append(f"{label}: {r['error']}: {r['message']}")
            continue
        lines.append(f"{label} = {r['t_star']:.6g} s  (switches {len(r['switch_times'])}, "
                     f"replay error {_num(r['replay_terminal_error'], '.2e')}"
                     + ("" if r["converged"] else ", NOT CONVERGED") + ")")
    sm = d.get("summary", {})
    if sm.get("slowdown_ratio") is not None:
        lines.append(f"slowdown T_M*/T_N* = {sm['slowdown_ratio']:.4g}")
    if sm.get("bound_factor") is not None:
        lines.append(f"worst-case bound factor = {sm['bound_factor']:.4g}")
    ref = d.get("reference")
    if ref:
        lines.append(f"computed spectrum: {[round(e[0], 6) for e in s['eigenvalues']]}")
        lines.append(f"reference spectrum: {list(ref['spectrum'])} ({ref['note']})")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# commands

def _finish(report: Report, args, out):
    if getattr(args, "report", None):
        report.write(args.report)
    if not getattr(args, "quiet", False):
        print(format_report(report), file=out)
    return report.exit_code


def cmd_check(args, out):
    spec = load_system(args.file)
    report = run_analysis(spec, verdicts_only=True)
    # verdicts are the output here, so a negative one is still a success
    return _finish(report, args, out)


def cmd_bounds(args, out):
    spec = _apply_seed(load_system(args.file), args.seed, args.pairs)
    report = run_analysis(spec, nominal=False, malfunction=False)
    if not report.data["hypotheses"]["hurwitz"]:
        report.exit_code = max(report.exit_code, 3)
    return _finish(report, args, out)


def cmd_reachtime(args, out):
    spec = load_system(args.file)
    report = run_analysis(spec, bounds=False, nominal=args.which in ("nominal", "both"),
                          malfunction=args.which in ("malfunction", "both"))
    return _finish(report, args, out)


def cmd_sweep(args, out):
    spec = _apply_seed(load_system(args.file), args.seed, args.pairs)
    text = sweep_pairs_csv(spec, args.out)
    if not getattr(args, "quiet", False):
        print(f"wrote {text.count(chr(10)) - 1} rows to {args.out}", file=out)
    if getattr(args, "report", None):
        run_analysis(spec).write(args.report)
    return 0


def cmd_casestudy(args, out):
    sys_ = build_temperature_system(lost=(args.lost,))
    spec = _apply_seed(SystemSpec.from_system(sys_, np.asarray(args.x0)), args.seed, args.pairs)
    ref = {"spectrum": list(REFERENCE_SPECTRUM),
           "note": "quoted magnitudes do not follow from the model parameters; ratios agree"}
    report = run_analysis(spec, reference=ref)
    return _finish(report, args, out)


COMMANDS = {
    "check": cmd_check,
    "bounds": cmd_bounds,
    "reachtime": cmd_reachtime,
    "sweep": cmd_sweep,
    "casestudy": cmd_casestudy,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except ResiliaError as exc:
        print(f"resilia: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except argparse.ArgumentTypeError as exc:
        print(f"resilia: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"resilia: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
