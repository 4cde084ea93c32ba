"""End-to-end analysis of one system file, plus the pair sweep table."""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bounds import best_bounds, extremals, pair_bounds
from .errors import DegenerateSet, NotHurwitz, OriginNotInterior, ResiliaError
from .geometry import VPolytope, vertices, zonotope_to_hrep
from .linalg import spectrum
from .mintime import (
    ControlOutOfRange,
    malfunction_reach_time,
    nominal_reach_time,
    reconstruct_controls,
    simulate,
)
from .pairs import inner_ellipsoid_pair, outer_ellipsoid_pair, sample_pairs
from .resilience import Ternary, analyze, check_full_actuation, dual_control_set_or_none
from .specfile import SystemSpec, atomic_write_text

ELLIPSOID_KINDS = ("outer_Z", "inner_Z", "outer_nominal", "inner_nominal")


# ---------------------------------------------------------------------------
# deterministic JSON

def _fmt_float(x):
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def to_json(obj, indent=2, _level=0):
    """JSON with fixed key order and 17 significant digits for every float."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent, _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(obj):
    """Recursively convert numpy and enum values to plain Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, Ternary):
        return obj.value
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@dataclass
class Report:
    data: dict = field(default_factory=dict)
    exit_code: int = 0

    def __getitem__(self, key):
        return self.data[key]

    def to_json(self):
        return to_json(_clean(self.data)) + "\n"

    def write(self, path):
        atomic_write_text(path, self.to_json())


# ---------------------------------------------------------------------------
# building blocks

@dataclass
class Geometry:
    sys: object
    Z: object                 # HPolytope or None
    Z_vertices: object        # VPolytope or None
    nominal_hrep: object      # HPolytope or None (rank B_bar < n)
    nominal_vertices: VPolytope


def build_geometry(sys) -> Geometry:
    Z = dual_control_set_or_none(sys)
    Zv = None
    if Z is not None and not Z.degenerate:
        try:
            Zv = vertices(Z)
        except (DegenerateSet, ResiliaError):
            Zv = None
    try:
        NB = zonotope_to_hrep(sys.nominal_set)
    except ResiliaError:
        NB = None
    G = sys.nominal_set
    NV = VPolytope(G.sign_patterns() @ G.generators.T)
    return Geometry(sys, Z, Zv, NB, NV)


def ellipsoid_pairs(A, geo: Geometry):
    """The four ellipsoid constructions; each entry is an EllipsoidPair or a reason string."""
    out = {}
    jobs = {
        "outer_Z": lambda: outer_ellipsoid_pair(A, geo.Z_vertices, "outer_Z"),
        "inner_Z": lambda: inner_ellipsoid_pair(A, geo.Z, "inner_Z"),
        "outer_nominal": lambda: outer_ellipsoid_pair(A, geo.nominal_vertices, "outer_nominal"),
        "inner_nominal": lambda: inner_ellipsoid_pair(A, geo.nominal_hrep, "inner_nominal"),
    }
    needs = {"outer_Z": geo.Z_vertices, "inner_Z": geo.Z_vertices, "outer_nominal": geo.nominal_vertices,
             "inner_nominal": geo.nominal_hrep}
    for kind, job in jobs.items():
        if needs[kind] is None:
            out[kind] = "set is not full-dimensional"
            continue
        try:
            out[kind] = job()
        except (DegenerateSet, OriginNotInterior) as exc:
            out[kind] = str(exc)
    return out


def bounds_for(pair, x0, geo: Geometry, flags):
    ext = extremals(pair, geo.nominal_vertices, geo.nominal_hrep, geo.Z_vertices,
                    geo.Z if geo.Z_vertices is not None else None)
    return pair_bounds(pair, x0, ext, **flags)


def hypothesis_flags(sys, verdict, geo: Geometry):
    spec = spectrum(sys.A)
    rank = int(np.linalg.matrix_rank(sys.B_bar))
    return {
        "full_rank": rank == sys.n,
        "hurwitz": spec.hurwitz,
        "stabilizable": verdict.stabilizable is Ternary.YES,
        "origin_interior_Z": geo.Z is not None and not geo.Z.degenerate and geo.Z.origin_interior(),
    }


def _extremals_dict(e):
    return {"b_max": e.b_max, "b_min": e.b_min, "z_max": e.z_max, "z_min": e.z_min}


def _result_dict(res, replay_error=None):
    return {
        "t_star": res.t_star,
        "eta_star": res.eta_star.tolist(),
        "converged": res.converged,
        "bracket": list(res.bracket),
        "time_tol": res.time_tol,
        "switch_times": res.switch_times.tolist(),
        "terminal_error": res.terminal_error,
        "replay_terminal_error": replay_error,
        "degenerate": res.degenerate,
        "notes": list(res.notes),
    }


# ---------------------------------------------------------------------------
# pipeline

def run_analysis(spec: SystemSpec, *, verdicts_only=False, nominal=True, malfunction=True,
                 bounds=True, reference=None) -> Report:
    """Full pipeline for one spec; see the README for the report layout.

    ``reference`` is an optional dict of reference values copied verbatim
    into the report for comparison.
    """
    sys = spec.to_system()
    opts = spec.options
    x0 = spec.x0
    data = {"tool": {"name": "resilia", "version": __version__}}
    data["system"] = {
        "n": sys.n,
        "m": sys.m,
        "p": sys.p,
        "lost_actuators": list(sys.lost),
        "x0": x0.tolist(),
        "eigenvalues": [[float(v.real), float(v.imag)] for v in spectrum(sys.A, opts.tol_eig).eigenvalues],
    }
    if reference:
        data["reference"] = dict(reference)

    geo = build_geometry(sys)
    verdict = analyze(sys, geo.Z)
    fa = check_full_actuation(sys)
    data["geometry"] = {
        "Z_facets": None if geo.Z is None else int(geo.Z.n_facets),
        "Z_vertices": None if geo.Z_vertices is None else int(geo.Z_vertices.vertices.shape[0]),
        "Z_degenerate": geo.Z is None or bool(geo.Z.degenerate),
        "nominal_facets": None if geo.nominal_hrep is None else int(geo.nominal_hrep.n_facets),
    }
    data["verdicts"] = verdict.to_dict()
    data["full_actuation"] = {"holds": fa.holds, "rank_B": fa.rank, "delta": fa.delta}
    report = Report(data)
    if verdicts_only:
        return report

    flags = hypothesis_flags(sys, verdict, geo)
    data["hypotheses"] = flags

    best = None
    if bounds:
        best = _bounds_section(sys, x0, geo, flags, opts, data)

    times = {}
    data["reach_times"] = times
    if nominal:
        horizon = opts.horizon_max or _horizon(best, "tn_upper")
        try:
            rn = nominal_reach_time(sys, x0, time_tol=opts.time_tol, horizon=horizon,
                                    direction_grid=opts.sphere_grid)
            rec = reconstruct_controls(rn, sys, malfunction=False)
            replay = simulate(sys.with_lost(()), rec.u, None, x0, rn.t_star).terminal_error
            times["nominal"] = _result_dict(rn, replay)
            if not rn.converged:
                report.exit_code = max(report.exit_code, 4)
        except ResiliaError as exc:
            times["nominal"] = {"error": type(exc).__name__, "message": str(exc)}
            report.exit_code = max(report.exit_code, exc.exit_code)
    if malfunction:
        if verdict.stabilizable is not Ternary.YES or geo.Z_vertices is None:
            times["malfunction"] = {"error": "NotResilientlyStabilizable",
                                    "message": "resilient stabilizability is not established"}
            report.exit_code = max(report.exit_code, 3)
        else:
            horizon = opts.horizon_max or _horizon(best, "tm_upper")
            try:
                rm = malfunction_reach_time(sys, geo.Z_vertices, x0, time_tol=opts.time_tol,
                                            horizon=horizon, direction_grid=opts.sphere_grid)
                try:
                    rec = reconstruct_controls(rm, sys)
                    replay = simulate(sys, rec.u, rec.w, x0, rm.t_star).terminal_error
                except ControlOutOfRange as exc:
                    replay = None
                    rm.notes.append(str(exc))
                    report.exit_code = max(report.exit_code, exc.exit_code)
                times["malfunction"] = _result_dict(rm, replay)
                if not rm.converged:
                    report.exit_code = max(report.exit_code, 4)
            except ResiliaError as exc:
                times["malfunction"] = {"error": type(exc).__name__, "message": str(exc)}
                report.exit_code = max(report.exit_code, exc.exit_code)

    tn = times.get("nominal", {}).get("t_star")
    tm = times.get("malfunction", {}).get("t_star")
    summary = {"T_N": tn, "T_M": tm, "slowdown_ratio": tm / tn if tn and tm else None}
    if best is not None:
        overall = best["overall"]
        summary["bound_factor"] = (overall.tm_upper / overall.tn_lower
                                   if overall.tm_upper and overall.tn_lower else None)
        summary["rq_interval"] = [overall.rq_lower, overall.rq_upper]
        summary["rq_upper_informative"] = overall.rq_upper_informative
        if tn is not None and tm is not None:
            summary["bounds_bracket_solver"] = _brackets(best["ellipsoid"], tn, tm)
    data["summary"] = summary
    return report


def _horizon(best, name):
    if best is not None:
        v = getattr(best["overall"], name)
        if v is not None:
            return 10.0 * v
    return 1e3


def _brackets(rb, tn, tm, rel=1e-9):
    def inside(lo, hi, t):
        ok_lo = lo is None or lo <= t * (1 + rel)
        ok_hi = hi is None or t <= hi * (1 + rel)
        return ok_lo and ok_hi
    return {"nominal": inside(rb.tn_lower, rb.tn_upper, tn), "malfunction": inside(rb.tm_lower, rb.tm_upper, tm)}


def _bounds_section(sys, x0, geo, flags, opts, data):
    out = {"pairs": {}}
    data["bounds"] = out
    if not flags["hurwitz"]:
        out["reason"] = "A is not Hurwitz: no Lyapunov pair exists"
        return None
    ell = ellipsoid_pairs(sys.A, geo)
    ell_bounds = []
    for kind in ELLIPSOID_KINDS:
        e = ell[kind]
        if isinstance(e, str):
            out["pairs"][kind] = {"available": False, "reason": e}
            continue
        entry = {"available": e.pair is not None, "q_margin": e.q_margin, "iterations": e.iterations}
        if e.pair is None:
            entry["reason"] = "Q = -(A^T P + P A) is not positive definite"
        else:
            rb = bounds_for(e.pair, x0, geo, flags)
            ell_bounds.append(rb)
            entry.update(rb.as_dict())
            entry["extremals"] = _extremals_dict(rb.extremals)
        out["pairs"][kind] = entry

    random_bounds = [bounds_for(p, x0, geo, flags) for p in sample_pairs(sys.A, opts.num_pairs, opts.seed)]
    best = {}
    if ell_bounds:
        best["ellipsoid"] = best_bounds(ell_bounds)
        best["ellipsoid"].best_of = {k: ell_bounds[i].kind for k, i in best["ellipsoid"].best_of.items()}
    if random_bounds:
        best["random"] = best_bounds(random_bounds)
    allb = ell_bounds + random_bounds
    best["overall"] = best_bounds(allb)
    best["overall"].best_of = {k: (allb[i].kind if allb[i].kind != "random" else f"random#{i - len(ell_bounds)}")
                               for k, i in best["overall"].best_of.items()}
    if "ellipsoid" not in best:
        best["ellipsoid"] = best["overall"]
    out["random"] = {"count": opts.num_pairs, "seed": opts.seed}
    out["best"] = {k: v.as_dict() for k, v in best.items()}
    return best


# ---------------------------------------------------------------------------
# sweep table

SWEEP_COLUMNS = ("pair_index", "kind", "lam_min_P", "lam_max_P", "lam_min_Q", "lam_max_Q",
                 "tm_lower", "tm_upper", "tn_lower", "tn_upper")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return _fmt_float(v) if math.isfinite(v) else ""
    return str(v)


def sweep_rows(spec: SystemSpec, with_solver=True):
    """Rows of the sweep table: one per random pair, then ellipsoid and solver summary rows."""
    sys = spec.to_system()
    opts = spec.options
    geo = build_geometry(sys)
    verdict = analyze(sys, geo.Z)
    flags = hypothesis_flags(sys, verdict, geo)
    if not flags["hurwitz"]:
        raise NotHurwitz("the sweep needs a Hurwitz A")
    rows = []

    def row(index, kind, pair, rb):
        return [index, kind, pair.lam_min_P, pair.lam_max_P, pair.lam_min_Q, pair.lam_max_Q,
                rb.tm_lower, rb.tm_upper, rb.tn_lower, rb.tn_upper]

    for pair in sample_pairs(sys.A, opts.num_pairs, opts.seed):
        rows.append(row(pair.index, "random", pair, bounds_for(pair, spec.x0, geo, flags)))
    for kind, e in ellipsoid_pairs(sys.A, geo).items():
        if not isinstance(e, str) and e.pair is not None:
            rows.append(row(None, kind, e.pair, bounds_for(e.pair, spec.x0, geo, flags)))
    if with_solver:
        tn = nominal_reach_time(sys, spec.x0, time_tol=opts.time_tol, direction_grid=opts.sphere_grid).t_star
        tm = None
        if verdict.stabilizable is Ternary.YES and geo.Z_vertices is not None:
            tm = malfunction_reach_time(sys, geo.Z_vertices, spec.x0, time_tol=opts.time_tol,
                                        direction_grid=opts.sphere_grid).t_star
        rows.append([None, "solver", None, None, None, None, tm, tm, tn, tn])
    return rows


def sweep_pairs_csv(spec: SystemSpec, out_path=None, with_solver=True):
    """Write the sweep table atomically; returns the CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in sweep_rows(spec, with_solver):
        w.writerow([_cell(v) for v in r])
    text = buf.getvalue()
    if out_path is not None:
        atomic_write_text(out_path, text)
    return text
