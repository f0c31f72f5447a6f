"""Command line front end: ``lapbc <subcommand> --graph <path|family> [options]``."""

from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, is_dataclass

import numpy as np

from . import __version__
from .graph import (FamilyError, GraphFormatError, GraphValidationError, as_generator,
                    build_family, combinatorial_ball, load_graph, radial_reduce)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INCONCLUSIVE = 3
EXIT_USAGE = 64
EXIT_IO = 74

SUBCOMMANDS = ("inspect", "spectrum", "heat", "harmonic", "sc", "metric", "cheeger",
               "example4", "appendixA", "selftest")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lapbc", description="Laplacians on weighted graphs via finite exhaustions.")
    p.add_argument("--version", action="version", version=f"lapbc {__version__}")
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--graph", help="graph file (JSON) or family descriptor")
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--root", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)
    p.add_argument("--strict", action="store_true", help="exit 3 on an inconclusive verdict")
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--A", type=float, default=1.0 / 3.0)
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--q", type=float, default=0.5)
    return p


# ---------------------------------------------------------------------------
# helpers


def _plain(obj):
    """JSON-ready copy with numpy types and tuples converted."""
    if is_dataclass(obj) and not isinstance(obj, type):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if obj is None or isinstance(obj, (str, int)):
        return obj
    return repr(obj)


def _parse_root(text):
    if text is None:
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _looks_like_path(s: str) -> bool:
    return s.endswith(".json") or os.sep in s or os.path.exists(s)


def load_source(source: str):
    """(generator, descriptor kind) for a file path or family descriptor."""
    if source is None:
        raise UsageError("--graph is required for this command")
    if _looks_like_path(source):
        if not os.path.exists(source):
            raise FileNotFoundError(source)
        return load_graph(source).generator(), "file"
    return build_family(source), "family"


def _root(gen, args):
    root = _parse_root(args.root)
    if root is None:
        return gen.root
    if gen.is_finite and root not in gen.finite_vertices:
        # file ids are strings
        if str(root) in gen.finite_vertices:
            return str(root)
        raise GraphValidationError([f"root {root!r} is not a vertex"])
    return root


def _levels(args, default):
    n = args.levels if args.levels is not None else default
    if n < 1:
        raise UsageError("--levels must be >= 1")
    return n


# ---------------------------------------------------------------------------
# subcommands; each returns (result dict, series rows, verdict or None)


def cmd_inspect(args):
    from .formal import boundedness_report, weighted_degree
    gen, kind = load_source(args.graph)
    root = _root(gen, args)
    levels = _levels(args, 5)
    from .graph import Exhaustion
    ex = Exhaustion.up_to(gen, levels, root=root)
    rep = boundedness_report(gen, ex, levels)
    sizes = [len(lv.vertices) for lv in ex]
    result = {"name": gen.name, "source": kind, "root": repr(root),
              "finite": gen.is_finite, "symmetric": gen.symmetric,
              "ball_sizes": sizes, "halo_sizes": [len(lv.halo) for lv in ex],
              "sup_deg": rep.sup, "sup_deg_per_level": rep.sup_per_level,
              "deg_root": weighted_degree(gen, root), "verdict": rep.verdict}
    rows = [{"level": r, "sup_deg": s, "size": n}
            for r, s, n in zip(ex.radii, rep.sup_per_level, sizes)]
    return result, rows, rep.verdict


def _level_operators(gen, root, levels, bc="dirichlet"):
    from .truncation import radial_operator, truncate
    if gen.is_finite:
        K = gen.finite_vertices
        yield 0, truncate(gen, K, (), bc)
        return
    for r in range(1, levels + 1):
        K, halo = combinatorial_ball(gen, root, r)
        yield r, truncate(gen, K, halo, bc)


def cmd_spectrum(args):
    from .spectral import bottom_of_spectrum, spectral_radius
    gen, _ = load_source(args.graph)
    root = _root(gen, args)
    rows = []
    for r, T in _level_operators(gen, root, _levels(args, 6)):
        b = bottom_of_spectrum(T)
        rows.append({"level": r, "size": T.n, "E0": b.energy, "spectral_radius": spectral_radius(T),
                     "phi_root": float(b.ground_state[T.index[root]])})
    return {"levels": rows, "boundary": "dirichlet"}, rows, None


def cmd_heat(args):
    from .spectral import heat_kernel, semigroup_apply
    gen, _ = load_source(args.graph)
    root = _root(gen, args)
    rows = []
    for r, T in _level_operators(gen, root, _levels(args, 6)):
        hk = heat_kernel(T, args.t, root, root)
        mass = semigroup_apply(T, args.t, np.ones(T.n))[T.index[root]]
        rows.append({"level": r, "size": T.n, "p_t_root": hk.value, "method": hk.method,
                     "semigroup_mass": float(mass)})
    return {"t": args.t, "levels": rows, "boundary": "dirichlet"}, rows, None


def cmd_harmonic(args):
    from .harmonic import classify_solution, radial_solve, resolvent_gap
    gen, _ = load_source(args.graph)
    root = _root(gen, args)
    levels = _levels(args, 12)
    result = {}
    if gen.symmetric and gen.profile_fn is not None and root == gen.root:
        prof = radial_reduce(gen, depth=levels)
        sol = radial_solve(prof)
        cls = classify_solution(sol, prof)
        result["radial_solution"] = {
            "log_u": sol.log_u, "bounded_evidence": cls.bounded_evidence,
            "square_summable_evidence": cls.square_summable_evidence,
            "growth_rate": cls.growth_rate, "verdict": cls.verdict,
            "sc_failure_evidence": cls.sc_failure_evidence,
            "esa_failure_evidence": cls.esa_failure_evidence}
    gap = resolvent_gap(gen, x=root, beta=args.beta, levels=levels)
    result["resolvent_gap"] = gap
    rows = [{"level": i + 1, "sup_norm": s, "min_entry": m}
            for i, (s, m) in enumerate(zip(gap.sup_norms, gap.min_entries))]
    verdict = "evidence" if gap.evidence else "inconclusive"
    if gen.is_finite:
        verdict = "no-gap"
    result["verdict"] = verdict
    return result, rows, verdict


def cmd_sc(args):
    from .completeness import heat_mass, radial_tree_criterion
    gen, _ = load_source(args.graph)
    root = _root(gen, args)
    levels = _levels(args, 8)
    rep = heat_mass(gen, args.t, root, levels, sc_tol=min(1e-6, max(args.tol, 1e-15)))
    result = {"t": rep.t, "x": repr(rep.x), "levels": rep.levels, "values": rep.values,
              "semigroup_terms": rep.semigroup_terms, "killing_terms": rep.killing_terms,
              "limit": rep.limit, "verdict": rep.verdict, "delta": rep.delta, "notes": rep.notes}
    if isinstance(gen.params.get("d"), str):
        crit = radial_tree_criterion(gen.params["d"])
        result["radial_tree_criterion"] = {"verdict": crit.verdict,
                                           "partial_sum": float(crit.partial_sums[-1])}
    rows = [{"level": lv, "value": v} for lv, v in zip(rep.levels, rep.values)]
    return result, rows, rep.verdict


def cmd_metric(args):
    from .geometry import canonical_ray, path_metric, ray_completeness_probe
    gen, _ = load_source(args.graph)
    root = _root(gen, args)
    levels = _levels(args, 3)
    K, _ = combinatorial_ball(gen, root, levels)
    rows = []
    for y in K:
        d = path_metric(gen, root, y)
        rows.append({"vertex": repr(y), "distance": d.value, "exact": d.exact})
    result = {"root": repr(root), "distances": rows}
    verdict = None
    if not gen.is_finite:
        probe = ray_completeness_probe(canonical_ray(gen), max(levels, 40))
        result["ray"] = {"lengths": probe.lengths, "verdict": probe.verdict,
                         "tail_bound": probe.tail_bound}
        verdict = probe.verdict
    return result, rows, verdict


def cmd_cheeger(args):
    from .geometry import ball_graph, cheeger_bruteforce
    gen, _ = load_source(args.graph)
    root = _root(gen, args)
    if gen.is_finite:
        from .graph import WeightedGraph
        verts = tuple((x, gen.m(x), gen.c(x)) for x in gen.finite_vertices)
        edges = tuple((x, y, b) for x in gen.finite_vertices for y, b in gen.neighbors(x) if x < y)
        res = cheeger_bruteforce(WeightedGraph(verts, edges))
        rows = [{"level": 0, "alpha": res.alpha, "size": len(verts)}]
        return {"alpha": res.alpha, "minimizer": [repr(v) for v in res.minimizer],
                "subsets_checked": res.subsets_checked}, rows, None
    rows = []
    for r in range(1, _levels(args, 2) + 1):
        g, halo = ball_graph(gen, r, root)
        if len(g) > 22:
            break
        res = cheeger_bruteforce(g, boundary_weight=halo)
        rows.append({"level": r, "alpha": res.alpha, "size": len(g)})
    return {"upper_bounds": rows,
            "note": "values on balls with halo weight are upper bounds for the infinite graph"}, rows, None


def cmd_example4(args):
    from .completeness import example4_verify
    rep = example4_verify(args.rho, args.A, args.window, seed=args.seed)
    rows = [{"check": k, "value": v} for k, v in rep.as_dict().items()
            if not isinstance(v, (tuple, list))]
    return rep.as_dict(), rows, "pass" if rep.passed else "fail"


def cmd_appendixA(args):
    from .geometry import appendixA_demo
    rep = appendixA_demo(args.k, args.q, args.t, _levels(args, 40))
    rows = [{"level": i, "mass_partial": m} for i, m in enumerate(rep.mass_partial)]
    return rep.as_dict(), rows, rep.heat_mass_verdict


def cmd_selftest(args):
    from .selftest import run_selftest
    checks = run_selftest(seed=args.seed)
    rows = [{"check": name, "passed": ok, "detail": detail} for name, ok, detail in checks]
    ok = all(r["passed"] for r in rows)
    return {"checks": rows, "passed": ok}, rows, "pass" if ok else "fail"


COMMANDS = {
    "inspect": cmd_inspect, "spectrum": cmd_spectrum, "heat": cmd_heat,
    "harmonic": cmd_harmonic, "sc": cmd_sc, "metric": cmd_metric, "cheeger": cmd_cheeger,
    "example4": cmd_example4, "appendixA": cmd_appendixA, "selftest": cmd_selftest,
}

INCONCLUSIVE = {"inconclusive"}


def render(report: dict, rows: list, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_plain(report), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    rows = _plain(rows)
    if rows:
        fields = list(rows[0].keys())
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"lapbc: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    config = {k: v for k, v in sorted(vars(args).items())}
    try:
        result, rows, verdict = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"lapbc: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"lapbc: cannot read {exc}", file=sys.stderr)
        return EXIT_IO
    except (GraphValidationError, GraphFormatError) as exc:
        print(f"lapbc: invalid graph: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FamilyError as exc:
        print(f"lapbc: {exc}", file=sys.stderr)
        return EXIT_USAGE if "unknown family" in str(exc) else EXIT_VALIDATION
    report = {"command": args.command, "config": config,
              "tolerances": {"tol": args.tol, "identity": 1e-12, "sc": 1e-6, "incomplete": 1e-3},
              "version": __version__, "result": result, "verdict": verdict}
    text = render(report, rows, args.format)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"lapbc: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(text)
    if args.strict and verdict in INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
