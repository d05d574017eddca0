"""Command-line front end: ``bcalc <command> MANIFEST [flags]``.

Every command prints a JSON report (or writes it to ``--out``) and may write
CSV side files to ``--csv-dir``.  Exit codes: 0 ok, 2 input error, 3 a
numerical-instability report.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import itertools
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable

import click
import numpy as np

from . import __version__
from .atlas import CornerComponent, corner_map
from .btangent import b_jacobian, b_lie_bracket, is_b_fibration, submersion_report
from .elliptic import (
    DEFAULT_N,
    DEFAULT_T,
    bdr_interval,
    excluded_weights,
    indicial_roots,
    predicted_quotient_cohomology,
    solve_weighted,
    twisted_circle_cohomology,
    weight_sweep,
)
from .errors import BCalcError, ManifestError
from .expr import classify_function, leading_behavior
from .expr.classify import DEFAULT_ORDER
from .glue import PRECISION_ENV, round_trip_error, smoothness_probe, transform_map, working_dps
from .manifest import Manifest, ManifestInvalid, load_manifest
from .phg import pullback_index_map, pushforward_index_map, sets_to_json
from .weights import (
    Weight,
    boundary_holonomy,
    cocycle_error,
    fmt_rational,
    l_lambda_transitions,
    pullback_weight,
    pushforward_weight,
    weight_space,
)

COMMANDS = ("classify", "corners", "weights", "glue", "phg", "elliptic", "cohomology")
GLUE_ORDER = 2
SWEEP_DEFAULT = {"lo": -2.0, "hi": 2.0, "steps": 41}


def to_jsonable(obj):
    """Fractions as ``"p/q"``, infinities as ``"inf"``, numpy scalars as Python numbers."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return fmt_rational(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


class Context:
    def __init__(self, manifest: Manifest, options: dict):
        self.m = manifest
        self.options = options
        self.warnings: list = []
        self.errors: list = []
        self.predictions: list = []
        self.csv: dict = {}

    def attempt(self, context: str, fn: Callable):
        """Run ``fn``; a module error becomes an entry in the report with its context."""
        try:
            return fn()
        except BCalcError as e:
            entry = {"context": context, "type": type(e).__name__, "message": str(e), "exit_code": e.exit_code}
            self.errors.append(entry)
            return {"error": entry}


def _need(cond: bool, message: str):
    if not cond:
        raise ManifestInvalid([{"path": "", "message": message}])


# --- commands

def cmd_classify(ctx: Context) -> dict:
    """Classify functions and maps; b-Jacobians, b-submersion/b-fibration flags and brackets."""
    m = ctx.m
    _need(m.functions or m.maps or m.vector_fields, "no functions, maps or vector fields to classify")
    order = ctx.options.get("order") or DEFAULT_ORDER
    out: dict = {"functions": {}, "maps": {}, "brackets": {}}
    specs = {f["id"]: f for f in m.raw.get("functions", [])}
    for fid, e in m.functions.items():
        def run(e=e, fid=fid):
            c = classify_function(e, order=order)
            rec = c.to_json()
            rec["expr"] = str(e)
            rec["leading"] = {}
            for face in sorted(n for n, b in e.variables if b):
                lb = leading_behavior(e, face)
                rec["leading"][face] = {"alpha": lb.alpha, "log_power": lb.log_power}
            expect = specs[fid].get("expect")
            if expect is not None:
                rec["expected"] = expect
                rec["matches_expected"] = expect == c.verdict.value
            return rec
        out["functions"][fid] = ctx.attempt(f"function {fid}", run)
    for mid, f in m.maps.items():
        def run(f=f):
            rec = {"flags": f.flags.to_json(),
                   "exponent_matrix": [[fmt_rational(a) for a in row] for row in f.exponent_matrix]}
            if f.flags.interior:
                rec["b_jacobian"] = b_jacobian(f).to_json()
                rec["b_submersion"] = submersion_report(f).to_json()
                rec["b_fibration"] = is_b_fibration(f)
            return rec
        out["maps"][mid] = ctx.attempt(f"map {mid}", run)
    for (a, u), (b, v) in itertools.combinations(m.vector_fields.items(), 2):
        if u.chart == v.chart:
            out["brackets"][f"[{a},{b}]"] = ctx.attempt(f"bracket {a},{b}", lambda u=u, v=v: b_lie_bracket(u, v).to_json())
    return out


def cmd_corners(ctx: Context) -> dict:
    """Corner strata counts of the atlas and corner images under maps."""
    m = ctx.m
    _need(m.atlas is not None or m.maps, "no atlas or maps")
    out: dict = {}
    if m.atlas is not None:
        A = m.atlas
        out["atlas"] = ctx.attempt("atlas", lambda: {
            "dimension": A.dimension,
            "corner_counts": A.corner_counts(),
            "boundary": A.boundary_report(),
            "validation": A.validate(),
        })
    out["maps"] = {}
    for mid, f in m.maps.items():
        def run(f=f, mid=mid):
            listed = m.map_specs[mid].get("corners")
            subsets = ([tuple(S) for S in listed] if listed is not None else
                       [S for k in range(f.source.k + 1) for S in itertools.combinations(f.source.boundary_coords, k)])
            rows = []
            for S in subsets:
                img = corner_map(f, CornerComponent(f.source.id, frozenset(S)))
                rows.append({"source": sorted(S), "source_depth": len(S), "image": img.to_json()})
            return rows
        out["maps"][mid] = ctx.attempt(f"map {mid}", run)
    return out


def cmd_weights(ctx: Context) -> dict:
    """Boundary holonomy, weight space, line-bundle cocycles and weight pullback/pushforward."""
    m = ctx.m
    _need(m.atlas is not None or m.maps, "no atlas or maps")
    out: dict = {}
    if m.atlas is not None:
        def run_atlas():
            A = m.atlas
            hol = boundary_holonomy(A)
            rec = {"holonomy": hol.to_json(), "weight_space": weight_space(A, hol).to_json()}
            if m.weights:
                w = Weight.on_atlas(A, m.weights, hol)
                ctx.warnings.extend(w.notes)
                trans = l_lambda_transitions(A, w)
                rec["weight"] = w.to_json()
                rec["line_bundle"] = [t.to_json() for t in trans]
                rec["cocycle_error"] = cocycle_error(A, trans)
            return rec
        out["atlas"] = ctx.attempt("atlas", run_atlas)
    out["maps"] = {}
    for mid, f in m.maps.items():
        spec = m.map_specs[mid]
        rec = {}
        if "pullback" in spec:
            rec["pullback"] = ctx.attempt(f"map {mid} pullback", lambda f=f, s=spec: pullback_weight(f, s["pullback"]))
        if "pushforward" in spec:
            rec["pushforward"] = ctx.attempt(f"map {mid} pushforward",
                                             lambda f=f, s=spec: pushforward_weight(f, s["pushforward"]))
        out["maps"][mid] = rec
    return out


def _default_probe_point(f) -> dict:
    c = f.source.center()
    return {x: (0.0 if f.source.is_boundary(x) else c[x]) for x in f.source.coords}


def cmd_glue(ctx: Context) -> dict:
    """Gluing-profile transforms of maps with smoothness probes (CSV per map)."""
    m = ctx.m
    _need(m.maps, "no maps")
    order = ctx.options.get("order") or GLUE_ORDER
    rng = np.random.default_rng(ctx.options.get("seed", 0))
    out: dict = {"profile": {"round_trip_max_rel_error": round_trip_error(), "grid_points": 121,
                             "precision_digits": working_dps()},
                 "maps": {}}
    for mid, f in m.maps.items():
        def run(f=f, mid=mid):
            t = transform_map(f)
            rec = {"strongly_smooth": t.strongly_smooth, "notes": list(t.notes)}
            pts = t.samples(64)
            picks = sorted(rng.choice(len(pts), size=min(4, len(pts)), replace=False).tolist())
            rec["samples"] = [{"point": pts[i], "value": t(pts[i])} for i in picks]
            if f.source.dimension == 1 and f.target.dimension == 1 and f.source.k == 1:
                x = f.source.coords[0]
                y = f.target.coords[0]
                rec["slope_near_face"] = [{"x": h, "ratio": t({x: h})[y] / h} for h in (1e-3, 1e-4, 1e-6, 1e-9)]
            point = m.map_specs[mid].get("probe_point") or _default_probe_point(f)
            probe = smoothness_probe(t, point, order=order)
            rec["probe"] = probe.to_json()
            ctx.csv[f"glue_{mid}.csv"] = probe.to_csv()
            return rec
        out["maps"][mid] = ctx.attempt(f"map {mid}", run)
    return out


def cmd_phg(ctx: Context) -> dict:
    """Pull back and push forward index sets along maps."""
    m = ctx.m
    _need(m.maps, "no maps")
    _need(m.index_sets, "no index sets")
    out: dict = {"maps": {}}
    S = m.index_sets
    for mid, f in m.maps.items():
        rec = {}
        if all(c in S for c in f.target.boundary_coords):
            rec["pullback"] = ctx.attempt(f"map {mid} pullback",
                                          lambda f=f: sets_to_json(pullback_index_map(f, S)))
        if all(c in S for c in f.source.boundary_coords):
            rec["pushforward"] = ctx.attempt(f"map {mid} pushforward",
                                             lambda f=f: sets_to_json(pushforward_index_map(f, S)))
        if not rec:
            ctx.warnings.append(f"map {mid}: index sets cover neither its source nor its target faces")
        out["maps"][mid] = rec
    return out


def cmd_elliptic(ctx: Context) -> dict:
    """Indicial roots, excluded weights and weighted index sweeps (CSV per operator)."""
    m = ctx.m
    _need(m.operators, "no operators")
    N = ctx.options.get("grid") or DEFAULT_N
    T = ctx.options.get("trunc") or DEFAULT_T
    out: dict = {"grid": N, "trunc": T, "operators": {}}
    for oid, P in m.operators.items():
        spec = m.operator_specs[oid]

        def run(P=P, spec=spec, oid=oid):
            P.check_elliptic()
            rec = {"operator": P.to_json(), "adjoint": P.adjoint().to_json(),
                   "indicial_roots": {str(face): [{"root": z, "multiplicity": k} for z, k in indicial_roots(P, face)]
                                      for face in (0, 1)}}
            d0, d1 = excluded_weights(P)
            rec["excluded_weights"] = {"0": d0, "1": d1}
            sw = {**SWEEP_DEFAULT, **spec.get("sweep", {})}
            report = weight_sweep(P, sw["lo"], sw["hi"], sw["steps"], N=N, T=T)
            ctx.csv[f"elliptic_{oid}.csv"] = report.to_csv()
            rec["sweep"] = {"range": [sw["lo"], sw["hi"]], "steps": sw["steps"], "jumps": report.jumps,
                            "points": len(report.points)}
            A = P.adjoint()
            rec["sweep"]["duality_holds"] = all(p.index == -solve_weighted(A, -p.lam, N, T).index
                                               for p in report.points)
            kers = [p.ker for p in report.points]
            rec["sweep"]["kernel_non_increasing"] = all(a >= b for a, b in zip(kers, kers[1:]))
            rec["solves"] = [ctx.attempt(f"operator {oid} at {lam}", lambda lam=lam: solve_weighted(P, tuple(lam), N, T).to_json())
                             for lam in spec.get("solve", [])]
            return rec
        out["operators"][oid] = ctx.attempt(f"operator {oid}", run)
    return out


def cmd_cohomology(ctx: Context) -> dict:
    """b-de Rham cohomology of the interval, twisted circles and quotient-cylinder predictions."""
    m = ctx.m
    sec = m.cohomology
    _need(bool(sec) or (m.atlas is not None and m.raw.get("atlas", {}).get("fixture") == "quotient_cylinder"),
          "no cohomology section and no quotient-cylinder atlas")
    out: dict = {}
    if sec.get("interval"):
        out["interval"] = ctx.attempt("interval", lambda: dict(zip(("bH0", "bH1"), bdr_interval().as_tuple())))
    if "twisted_circle" in sec:
        out["twisted_circle"] = [{"holonomy": h, "dims": ctx.attempt(f"circle h={h}", lambda h=h: list(twisted_circle_cohomology(h)))}
                                 for h in sec["twisted_circle"]]
    alphas = list(sec.get("quotient_alpha", []))
    if m.atlas is not None and m.raw.get("atlas", {}).get("fixture") == "quotient_cylinder":
        hol = boundary_holonomy(m.atlas)
        (comp,) = hol.components.values()
        out["atlas_holonomy"] = {comp.face: comp.holonomy}
        alphas.append(float(comp.holonomy))
    if alphas:
        out["quotient"] = []
        for a in alphas:
            r = ctx.attempt(f"quotient alpha={a}", lambda a=a: predicted_quotient_cohomology(a).to_json())
            out["quotient"].append({"alpha": a, **r})
            if "error" not in r:
                ctx.predictions.append(f"quotient cylinder alpha={a}: {r['dims']}")
    return out


DISPATCH = {"classify": cmd_classify, "corners": cmd_corners, "weights": cmd_weights, "glue": cmd_glue,
            "phg": cmd_phg, "elliptic": cmd_elliptic, "cohomology": cmd_cohomology}


def run(command: str, manifest, options: dict | None = None) -> tuple[dict, dict, int]:
    """Run ``command`` on a manifest; returns ``(report, csv_files, exit_code)``."""
    options = {k: v for k, v in (options or {}).items() if v is not None}
    base = {"tool": "bcalc", "version": __version__, "command": command,
            "options": options,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}
    if command not in DISPATCH:
        return {**base, "errors": [{"path": "", "message": f"unknown command {command}"}]}, {}, 2
    try:
        m = manifest if isinstance(manifest, Manifest) else load_manifest(manifest)
        ctx = Context(m, options)
        results = DISPATCH[command](ctx)
    except ManifestInvalid as e:
        return {**base, "errors": e.errors}, {}, 2
    except BCalcError as e:
        return {**base, "errors": [{"path": "", "message": f"{type(e).__name__}: {e}"}]}, {}, e.exit_code
    digest = hashlib.sha256((m.digest + json.dumps(options, sort_keys=True)).encode()).hexdigest()
    report = {**base, "manifest": m.raw.get("name", m.path), "inputs_digest": digest,
              "results": results, "warnings": ctx.warnings, "predictions": ctx.predictions,
              "errors": ctx.errors}
    code = max((e["exit_code"] for e in ctx.errors), default=0)
    return to_jsonable(report), ctx.csv, code


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def comparable(report: dict) -> dict:
    """The report without its timestamp, for determinism checks."""
    return {k: v for k, v in report.items() if k != "timestamp"}


# --- click wrapper

def _common(fn):
    opts = [
        click.argument("manifest", type=click.Path(exists=True, dir_okay=False)),
        click.option("--out", type=click.Path(dir_okay=False), help="Write the JSON report here instead of stdout."),
        click.option("--csv-dir", type=click.Path(file_okay=False), help="Directory for CSV side files."),
        click.option("--order", type=click.IntRange(1, 12), help="Derivative order (classification depth or probe order)."),
        click.option("--grid", type=click.IntRange(16, 2048), help="Collocation size for elliptic solves."),
        click.option("--trunc", type=click.FloatRange(5.0, 400.0), help="Cylinder truncation length for elliptic solves."),
        click.option("--seed", type=int, default=0, show_default=True, help="Seed for sampled report points."),
    ]
    for o in reversed(opts):
        fn = o(fn)
    return fn


@click.group(help=f"Calculus on manifolds with analytic corners. Precision for probes: ${PRECISION_ENV}.")
@click.version_option(__version__, prog_name="bcalc")
def main():
    pass


def _make(command: str):
    @_common
    def cmd(manifest, out, csv_dir, order, grid, trunc, seed):
        options = {"order": order, "grid": grid, "trunc": trunc, "seed": seed}
        report, csv_files, code = run(command, manifest, options)
        text = dumps(report)
        if out:
            Path(out).write_text(text)
        else:
            click.echo(text, nl=False)
        if csv_dir and csv_files:
            d = Path(csv_dir)
            d.mkdir(parents=True, exist_ok=True)
            for name, body in sorted(csv_files.items()):
                (d / name).write_text(body)
        for e in report.get("errors", []):
            click.echo(f"error: {e.get('message')}", err=True)
        sys.exit(code)

    cmd.__name__ = command
    cmd.__doc__ = (DISPATCH[command].__doc__ or f"Run the {command} analysis on MANIFEST.")
    return main.command(name=command)(cmd)


for _c in COMMANDS:
    _make(_c)
