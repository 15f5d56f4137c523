"""Command-line interface: ``wim <subcommand> ...``.

Results go to stdout (or ``--out``) as JSON or CSV.  Failures print a JSON
object ``{"error", "message", "exit_code"}`` to stderr and exit nonzero:
3 for a missing file, 4 for unparsable input, and the library's own codes
(10-20, e.g. 20 for capacity errors) otherwise.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from importlib import resources


from .errors import WimError
from .experiment import experiment
from .faces import face_lattice, lipschitz_f_vector_direct
from .model import ModelSpec, mle_segre
from .optimize import Problem, ProjectionOptions, project_by_facets, project_global
from .polar import polar_degrees, polar_degrees_kbit, polar_degrees_matrix
from .polytope import (
    build_ball,
    lipschitz_polytope,
    lipschitz_vertices_bipartite,
    lipschitz_vertices_discrete,
    lipschitz_vertices_general,
)
from .statespace import (
    discrete_metric,
    format_rational,
    l0_metric,
    l1_metric,
    metric_from_dict,
)
from .wdist import hardy_weinberg_closed_form, twobit_closed_form, wasserstein

EXIT_NOT_FOUND = 3
EXIT_PARSE = 4


class ParseError(Exception):
    pass


# -- argument helpers ----------------------------------------------------------


def _read_json_file(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from None


def load_metric(text: str):
    """A metric file, or a builtin ``discrete:N``, ``l0:2,2``, ``l1:3,3``."""
    kind, sep, rest = text.partition(":")
    if sep and kind.lower() in ("discrete", "l0", "l1") and not os.path.exists(text):
        try:
            if kind.lower() == "discrete":
                return discrete_metric(int(rest))
            sizes = [int(s) for s in rest.split(",")]
        except ValueError:
            raise ParseError(f"cannot parse builtin metric {text!r}") from None
        return l0_metric(sizes) if kind.lower() == "l0" else l1_metric(sizes)
    spec = _read_json_file(text)
    if not isinstance(spec, dict):
        raise ParseError("metric file must contain a JSON object")
    return metric_from_dict(spec)


def load_model(text: str) -> ModelSpec:
    """A model file, or an inline description such as ``2_2,2``."""
    if os.path.exists(text) or text.endswith(".json"):
        spec = _read_json_file(text)
        if not isinstance(spec, dict):
            raise ParseError("model file must contain a JSON object")
        return ModelSpec.from_dict(spec)
    return ModelSpec.parse(text)


def load_vector(text: str):
    """Inline JSON array, or a file containing one.  Strings stay exact."""
    stripped = text.strip()
    if stripped.startswith("["):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON vector: {exc}") from None
    else:
        data = _read_json_file(text)
    if isinstance(data, list) and data and isinstance(data[0], list):
        data = [x for row in data for x in row]
    if not isinstance(data, list):
        raise ParseError("distribution must be a JSON array")
    return data


def metric_for(model: ModelSpec, kind: str):
    if kind == "discrete":
        return discrete_metric(model.n)
    if kind == "l0":
        return l0_metric(model.sizes)
    if kind == "l1":
        return l1_metric(model.sizes)
    raise ParseError(f"unknown metric kind {kind!r}")


def _emit(args, payload):
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=1) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt_vector(vec):
    return [format_rational(x) for x in vec]


# -- subcommands ---------------------------------------------------------------


def cmd_metric(args):
    m = load_metric(args.metric)
    out = m.to_dict()
    out["n"] = m.n
    out["matrix"] = [_fmt_vector(r) for r in m.d]
    if m.graph_edges is not None:
        out["graph_edges"] = [list(e) for e in sorted(m.graph_edges)]
    _emit(args, out)


_ENUMERATORS = {
    "auto": lipschitz_polytope,
    "discrete": lipschitz_vertices_discrete,
    "bipartite": lipschitz_vertices_bipartite,
    "general": lipschitz_vertices_general,
}


def cmd_lipschitz(args):
    m = load_metric(args.metric)
    poly = _ENUMERATORS[args.method](m)
    out = {"n": m.n, "method": poly.method, "vertex_count": len(poly)}
    if args.vertices:
        out["vertices"] = [_fmt_vector(v) for v in poly.vertices]
    if args.fvector:
        ball = build_ball(poly)
        out["fvector"] = lipschitz_f_vector_direct(ball, args.max_faces)
    _emit(args, out)


def cmd_ball(args):
    m = load_metric(args.metric)
    ball = build_ball(lipschitz_polytope(m))
    lat = face_lattice(ball, args.max_faces)
    out = {
        "n": m.n,
        "vertices": [_fmt_vector(v) for v in ball.vertices],
        "fvector": lat.f_vector,
        "lipschitz_fvector": lat.lipschitz_f_vector,
    }
    if args.faces is not None:
        dims = range(len(lat.levels)) if args.faces == "all" else [int(args.faces)]
        out["faces"] = [f.to_dict() for d in dims for f in lat.faces(d)]
    _emit(args, out)


def cmd_distance(args):
    m = load_metric(args.metric)
    cert = wasserstein(lipschitz_polytope(m), load_vector(args.mu), load_vector(args.nu))
    _emit(args, cert.to_dict())


def cmd_closed_form(args):
    fn = {"hw": hardy_weinberg_closed_form, "2bit": twobit_closed_form}[args.model]
    _emit(args, fn(load_vector(args.mu)).to_dict())


def cmd_project(args):
    model = load_model(args.model)
    problem = Problem(model, load_metric(args.metric))
    opts = ProjectionOptions(seed=args.seed)
    mu = load_vector(args.mu)
    out = {}
    if args.method in ("global", "both"):
        out["global"] = project_global(problem, mu, opts).to_dict()
    if args.method in ("facets", "both"):
        out["facets"] = project_by_facets(problem, mu, opts, cross_check=False).to_dict()
    if model.is_segre:
        mle = mle_segre(model, mu)
        out["mle"] = {"nu": [float(x) for x in mle],
                      "value": float(wasserstein(problem.poly, mu, mle).value)}
    _emit(args, out if args.method == "both" else {**out.pop(args.method), **out})


def cmd_experiment(args):
    model = load_model(args.model)
    report = experiment(model, load_metric(args.metric), args.samples, args.seed,
                        workers=args.workers)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report.to_csv())
        sys.stdout.write(json.dumps(report.summary(), indent=1) + "\n")
    else:
        sys.stdout.write(report.to_csv())


def cmd_polar(args):
    model = load_model(args.model)
    if args.formula == "kbit":
        if not (model.is_segre and all(m == 2 for m, _ in model.factors)):
            raise ParseError("the k-bit formula needs a model (2,...,2)")
        pd = polar_degrees_kbit(len(model.factors))
    elif args.formula == "matrix":
        if not (model.is_segre and len(model.factors) == 2):
            raise ParseError("the matrix formula needs a model (m1,m2)")
        pd = polar_degrees_matrix(model.factors[0][0], model.factors[1][0])
    else:
        pd = polar_degrees(model)
    _emit(args, [str(x) for x in (pd.shifted if args.shifted else pd.delta)])


# -- tables ----------------------------------------------------------------------


def golden() -> dict:
    with resources.files("wim").joinpath("data/golden.json").open(encoding="utf-8") as fh:
        return json.load(fh)


def _fmt(x):
    if isinstance(x, (list, tuple)):
        return " ".join(_fmt(v) for v in x)
    if isinstance(x, float):
        return f"{x:.3f}"
    return str(x)


def table_rows(which: str, max_faces: int, samples: int, seed: int, only=None):
    g = golden()
    tol = g["tolerances"]

    def wanted(model, metric):
        return only is None or f"{model}/{metric}" in only

    if which in ("polar", "all"):
        for k, exp in g["table2_kbit_shifted"].items():
            got = polar_degrees_kbit(int(k)).shifted
            general = polar_degrees(ModelSpec.of(*[2] * int(k))).shifted
            yield ("table2", f"k={k}", exp, got, got == exp and general == exp)
        for name, exp in g["table3_matrix_shifted"].items():
            m1, m2 = (int(x) for x in name.split(","))
            got = polar_degrees_matrix(m1, m2).shifted
            general = polar_degrees(ModelSpec.of(m1, m2)).shifted
            yield ("table3", f"({name})", exp, got, got == exp and general == exp)
        for name, exp in g["table6_polar"].items():
            got = list(polar_degrees(ModelSpec.parse(name)).delta)
            yield ("table6", f"({name})", exp, got, got == exp)
    if which in ("fvector", "all"):
        for row in g["table1_fvectors"]:
            model = ModelSpec.parse(row["model"])
            ball = build_ball(lipschitz_polytope(metric_for(model, row["metric"])))
            got = face_lattice(ball, max_faces).f_vector
            yield ("table1", f"({row['model']})/{row['metric']}", row["fvector"], got,
                   got == row["fvector"])
    if which in ("vertices", "all"):
        for k, exp in g["hamming_cube_vertices"].items():
            if int(k) > 5:
                continue  # beyond k=5 the count is out of reach
            got = len(lipschitz_vertices_bipartite(l0_metric([2] * int(k))))
            yield ("cube", f"k={k}", exp, got, got == exp)
    if which in ("facets", "types"):
        key = "table4_feasible" if which == "facets" else "table5_types"
        for row in g[key]:
            if not wanted(row["model"], row["metric"]):
                continue
            model = ModelSpec.parse(row["model"])
            metric = metric_for(model, row["metric"])
            rep = experiment(model, metric, samples, seed)
            label = f"({row['model']})/{row['metric']}"
            if which == "facets":
                got = rep.mean_feasible
                ok = abs(got - row["mean_feasible"]) <= tol["feasible_relative"] * row["mean_feasible"]
                yield ("table4", label, row["mean_feasible"], got, ok)
            else:
                hist = rep.histogram()
                got = [round(hist.get(i, 0.0), 1) for i in range(len(row["percent"]))]
                ok = all(abs(a - b) <= tol["type_points"] for a, b in zip(got, row["percent"]))
                yield ("table5", label, row["percent"], got, ok)


def cmd_tables(args):
    only = set(args.models.split(";")) if args.models else None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["table", "row", "expected", "observed", "pass"])
    ok_all = True
    for table, row, exp, got, ok in table_rows(args.which, args.max_faces, args.samples, args.seed, only):
        ok_all &= bool(ok)
        w.writerow([table, row, _fmt(exp), _fmt(got), "pass" if ok else "FAIL"])
    _emit(args, buf.getvalue())
    return 0 if ok_all else 1


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", help="write the result here instead of stdout")
        return sp

    sp = add("metric", cmd_metric, "print a metric (file or builtin like l1:3,3)")
    sp.add_argument("--metric", required=True)

    sp = add("lipschitz", cmd_lipschitz, "enumerate Lipschitz polytope vertices")
    sp.add_argument("--metric", required=True)
    sp.add_argument("--method", choices=sorted(_ENUMERATORS), default="auto")
    sp.add_argument("--vertices", action="store_true")
    sp.add_argument("--fvector", action="store_true")
    sp.add_argument("--max-faces", type=int, default=10**6)

    sp = add("ball", cmd_ball, "Wasserstein ball, f-vector and faces")
    sp.add_argument("--metric", required=True)
    sp.add_argument("--faces", help="a dimension or 'all'")
    sp.add_argument("--max-faces", type=int, default=10**6)

    sp = add("distance", cmd_distance, "Wasserstein distance between two distributions")
    sp.add_argument("--metric", required=True)
    sp.add_argument("--mu", required=True)
    sp.add_argument("--nu", required=True)

    sp = add("closed-form", cmd_closed_form, "closed-form projection (hw or 2bit)")
    sp.add_argument("--model", choices=["hw", "2bit"], required=True)
    sp.add_argument("--mu", required=True)

    sp = add("project", cmd_project, "project a distribution onto a model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--metric", required=True)
    sp.add_argument("--mu", required=True)
    sp.add_argument("--method", choices=["global", "facets", "both"], default="global")
    sp.add_argument("--seed", type=int, default=0)

    sp = add("experiment", cmd_experiment, "sampling experiment; CSV per sample")
    sp.add_argument("--model", required=True)
    sp.add_argument("--metric", required=True)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=None,
                    help="worker processes (default: $WIM_THREADS or 1)")

    sp = add("polar-degrees", cmd_polar, "polar degrees of a Segre-Veronese model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--shifted", action="store_true", help="start at delta_{codim-1}")
    sp.add_argument("--formula", choices=["general", "kbit", "matrix"], default="general")

    sp = add("tables", cmd_tables, "regenerate the reference tables with pass/fail")
    sp.add_argument("--which", choices=["polar", "fvector", "vertices", "facets", "types", "all"],
                    default="all")
    sp.add_argument("--max-faces", type=int, default=10**6)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--models", help="restrict statistical tables, e.g. '2,2/l0;2_3/l1'")
    return p


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = args.func(args)
    except FileNotFoundError as exc:
        return _fail("file-not-found", str(exc), EXIT_NOT_FOUND)
    except (ParseError, json.JSONDecodeError) as exc:
        return _fail("parse", str(exc), EXIT_PARSE)
    except WimError as exc:
        return _fail(type(exc).__name__, str(exc), exc.exit_code)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        return _fail("parse", str(exc), EXIT_PARSE)
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
