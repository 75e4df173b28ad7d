"""Command-line interface: ``distspace <command> ...``.

Exit codes: 0 success (or realizable / PASS), 1 usage, parse or input
error, 2 negative verdict (not realizable, reproduction FAIL, nothing
reconstructed), 3 search budget exhausted (partial results written).
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .analysis import hamiltonian_circuits, multiset_equal, triangle_multiset
from .constructions import (
    default_symmetric_params,
    generic_simplex_distances,
    kite_trapezoid,
    kite_trapezoid_lengths,
    outer_boundary_vertices,
    random_symmetric_params,
    symmetric_two_fold,
)
from .degeneracy import (
    DEFAULT_BUDGET,
    PermutationConstraintSystem,
    enumerate_assemblies,
    enumerate_simplex_classes,
    solve_constrained,
)
from .errors import (
    ConstructionError,
    NoSolutionError,
    RealizabilityError,
    ReconstructionError,
    SearchBudgetExceeded,
    SolverError,
)
from .geometry import (
    PAPER_TOL,
    STRUCTURAL_TOL,
    DistanceAssignment,
    congruent,
    embed,
    pairwise_distances,
    realizability_check,
)
from .lattice import lattice_distance_spectrum, reconstruct_cell

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE, EXIT_BUDGET = 0, 1, 2, 3

FIGURES = ("fig1", "fig2", "fig5", "fig6", "fig7", "fig8")

# printed values of the worked examples (five decimals)
FIG5_FREE = (1.0, 1.58114, 0.70710, 0.87228)
FIG5_SOLVED = (1.32698, 1.54551)
FIG5_ORDERINGS = ((0, 1, 2, 3, 4, 5), (0, 1, 2, 5, 3, 4))
FIG6_FREE = (1.0, 1.581144, 0.70710)
FIG6_SOLVED = (1.34371, 0.37267, 0.68718)
FIG6_ORDERINGS = ((0, 1, 2, 3, 4, 5), (0, 1, 2, 4, 5, 3), (0, 1, 2, 3, 5, 4))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    def default(v):
        return argparse.SUPPRESS if suppress else v

    g = p.add_argument_group("global options")
    g.add_argument("--tol-structural", type=float, default=default(STRUCTURAL_TOL),
                   help="relative tolerance for determinant and PSD tests (default 1e-9)")
    g.add_argument("--tol-paper", type=float, default=default(PAPER_TOL),
                   help="tolerance for comparing against printed values (default 1e-4)")
    g.add_argument("--seed", type=int, default=default(0), help="seed for randomized generators; DISTSPACE_SEED overrides")
    g.add_argument("--budget", type=int, default=default(DEFAULT_BUDGET), help="evaluation budget for searches")


def _leaf(sub, name: str, **kw) -> argparse.ArgumentParser:
    p = sub.add_parser(name, **kw)
    _add_globals(p, suppress=True)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="distspace", description="Distance-space geometry toolkit.")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    p = _leaf(sub, "check", help="decide realizability of a distance assignment")
    p.add_argument("input", help="distance assignment (JSON, or CSV with header i,j,distance)")
    p.add_argument("-d", "--dimension", type=int, required=True)
    p.add_argument("-o", "--output", help="write the feasibility report JSON here (default stdout)")
    p.set_defaults(func=cmd_check)

    p = _leaf(sub, "embed", help="embed a distance assignment into coordinates")
    p.add_argument("input")
    p.add_argument("-d", "--dimension", type=int, required=True)
    p.add_argument("--strict", action="store_true", help="reject configurations of lower affine rank")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_embed)

    p = _leaf(sub, "degenerate", help="enumerate congruence classes realizing a distance multiset")
    p.add_argument("input", nargs="?", help="multiset JSON (list, {\"multiset\": [...]} or a distance assignment)")
    p.add_argument("-d", "--dimension", type=int, required=True)
    p.add_argument("--simplex", action="store_true",
                   help="treat the input as simplex edges; without input, draw generic near-equal edges")
    p.add_argument("-o", "--output", help="classes JSON")
    p.set_defaults(func=cmd_degenerate)

    p = sub.add_parser("construct", help="generate degenerate families")
    csub = p.add_subparsers(dest="family", metavar="family", required=True)
    q = _leaf(csub, "kite-trapezoid", help="kite and trapezoid sharing {a,a,b,b,c,1}")
    q.add_argument("--x", type=float, default=0.75)
    q.add_argument("--boundary", action="store_true", help="allow the collapsed case x = 1/2")
    q.add_argument("-o", "--output", help="configurations JSON")
    q.add_argument("--points-csv", help="plot-ready coordinates CSV")
    q.add_argument("--family-csv", help="CSV of (x, a, b, c) over --x-range")
    q.add_argument("--x-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"), default=(0.5, 2.0, 0.05))
    q.set_defaults(func=cmd_construct_kite)
    q = _leaf(csub, "symmetric", help="two-fold pair from a centrally symmetric construction")
    q.add_argument("-d", "--dimension", type=int, choices=(2, 3), default=2)
    q.add_argument("--random", action="store_true", help="randomize the parameters using the seed")
    q.add_argument("-o", "--output")
    q.add_argument("--points-csv")
    q.set_defaults(func=cmd_construct_symmetric)

    p = _leaf(sub, "circuits", help="enumerate Hamiltonian circuits of a configuration")
    p.add_argument("input", help="point configuration JSON")
    p.add_argument("--length-tol", type=float, help="absolute tolerance for equal circuit lengths")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_circuits)

    p = sub.add_parser("lattice", help="lattice spectra and cell reconstruction")
    lsub = p.add_subparsers(dest="action", metavar="action", required=True)
    q = _leaf(lsub, "spectrum", help="distance spectrum of a lattice basis")
    q.add_argument("input", help="lattice basis JSON")
    q.add_argument("--cutoff", type=float, required=True)
    q.add_argument("-o", "--output", help="spectrum CSV (default stdout)")
    q.set_defaults(func=cmd_lattice_spectrum)
    q = _leaf(lsub, "reconstruct", help="recover a reduced basis from a spectrum")
    q.add_argument("input", help="spectrum CSV with header distance,multiplicity")
    q.add_argument("-d", "--dimension", type=int, required=True)
    q.add_argument("--cutoff", type=float, help="cutoff the spectrum was computed with (default: its largest distance)")
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_lattice_reconstruct)

    p = _leaf(sub, "reproduce", help="regenerate a worked example and compare with its printed values")
    p.add_argument("figure", help=", ".join(FIGURES))
    p.add_argument("--x", type=float, help="kite-trapezoid parameter for fig1/fig2 (default 0.75)")
    p.add_argument("--out-dir", default=".", help="directory for the JSON and CSV outputs")
    p.set_defaults(func=cmd_reproduce)
    return parser


def resolve_seed(args) -> int:
    env = os.environ.get("DISTSPACE_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"DISTSPACE_SEED must be an integer, got {env!r}") from exc
    return int(args.seed)


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        io.atomic_write(path, text)
    else:
        sys.stdout.write(text)


def _read_assignment(path: str) -> DistanceAssignment:
    if path.endswith(".csv"):
        text = Path(path).read_text(encoding="utf-8")
        rows = list(csv.DictReader(_stdio.StringIO(text)))
        if not rows or not {"i", "j", "distance"} <= set(rows[0]):
            raise io.FormatError(f"{path}: CSV needs header 'i,j,distance'")
        try:
            pairs = {(int(r["i"]), int(r["j"])): float(r["distance"]) for r in rows}
        except (TypeError, ValueError) as exc:
            raise io.FormatError(f"{path}: bad row ({exc})") from exc
        n = max(max(p) for p in pairs) + 1
        return DistanceAssignment.from_pairs(n, pairs)
    return io.assignment_from_dict(io.read_json(path), path)


# --- commands ---------------------------------------------------------------


def cmd_check(args) -> int:
    dists = _read_assignment(args.input)
    report = realizability_check(dists, args.dimension, args.tol_structural)
    _emit(io.dumps(io.feasibility_to_dict(report)), args.output)
    verdict = "realizable" if report.realizable else f"not realizable ({report.failed_condition})"
    print(f"{args.input}: {verdict} in R^{args.dimension}", file=sys.stderr)
    return EXIT_OK if report.realizable else EXIT_NEGATIVE


def cmd_embed(args) -> int:
    dists = _read_assignment(args.input)
    try:
        config = embed(dists, args.dimension, args.tol_structural, strict=args.strict)
    except RealizabilityError as exc:
        print(f"not realizable: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    _emit(io.dumps(io.config_to_dict(config)), args.output)
    return EXIT_OK


def _summary(result, lines: list) -> None:
    lines.append(f"multiset: {', '.join(f'{v:.6g}' for v in result.multiset.values)}")
    lines.append(f"dimension: {result.dimension}")
    lines.append(f"evaluations: {result.evaluations}")
    for i, c in enumerate(result.classes):
        pts = "; ".join(" ".join(f"{v:.6f}" for v in p) for p in c.points)
        lines.append(f"class {i + 1}: {pts}")


def cmd_degenerate(args) -> int:
    d = args.dimension
    if args.input is None:
        if not args.simplex:
            raise UsageError("an input multiset is required unless --simplex is given")
        multiset = generic_simplex_distances(d, seed=resolve_seed(args), tol=args.tol_structural)
    else:
        multiset = io.multiset_from_json(io.read_json(args.input), args.input)
    run = enumerate_simplex_classes if args.simplex else enumerate_assemblies
    lines: list[str] = []
    try:
        result = run(multiset, d, args.tol_structural, budget=args.budget)
    except SearchBudgetExceeded as exc:
        partial = exc.partial
        if args.output:
            io.atomic_write(args.output, io.dumps(io.classes_to_dict(partial)))
        _summary(partial, lines)
        lines.append(f"budget of {args.budget} evaluations exhausted; explored fraction {partial.explored_fraction:.3g}")
        lines.append(f"k >= {partial.order}")
        print("\n".join(lines))
        return EXIT_BUDGET
    if args.output:
        io.atomic_write(args.output, io.dumps(io.classes_to_dict(result)))
    _summary(result, lines)
    lines.append(f"k = {result.order}")
    print("\n".join(lines))
    return EXIT_OK


def _kite_payload(pair) -> dict:
    a, b, c, d = pair.edge_lengths
    return {
        "x": pair.x,
        "edge_lengths": {"a": a, "b": b, "c": c, "d": d},
        "kite": io.config_to_dict(pair.kite),
        "trapezoid": io.config_to_dict(pair.trapezoid),
    }


def cmd_construct_kite(args) -> int:
    pair = kite_trapezoid(args.x, boundary=args.boundary, tol=args.tol_structural)
    _emit(io.dumps(_kite_payload(pair)), args.output)
    if args.points_csv:
        io.atomic_write(args.points_csv, io.coordinates_to_csv({"kite": pair.kite, "trapezoid": pair.trapezoid}))
    if args.family_csv:
        start, stop, step = args.x_range
        if step <= 0 or stop < start:
            raise UsageError("--x-range needs START <= STOP and STEP > 0")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        xs = [start + k * step for k in range(count)]
        io.atomic_write(args.family_csv, io.family_to_csv((x,) + kite_trapezoid_lengths(x)[:3] for x in xs))
    return EXIT_OK


def _symmetric_payload(pair) -> dict:
    return {
        "primary": io.config_to_dict(pair.primary),
        "dual": io.config_to_dict(pair.dual),
        "multisets_equal": pair.multisets_equal,
        "congruent": pair.congruent,
        "max_multiset_gap": pair.max_multiset_gap,
    }


def cmd_construct_symmetric(args) -> int:
    d = args.dimension
    params = random_symmetric_params(d, resolve_seed(args)) if args.random else default_symmetric_params(d)
    pair = symmetric_two_fold(params, tol=args.tol_structural)
    _emit(io.dumps(_symmetric_payload(pair)), args.output)
    if args.points_csv:
        io.atomic_write(args.points_csv, io.coordinates_to_csv({"primary": pair.primary, "dual": pair.dual}))
    return EXIT_OK


def cmd_circuits(args) -> int:
    config = io.config_from_dict(io.read_json(args.input), args.input)
    report = hamiltonian_circuits(config, args.length_tol)
    _emit(io.dumps(io.circuits_to_dict(report)), args.output)
    order, length = report.shortest
    print(f"{report.count} circuits, {report.distinct_length_count} distinct lengths, "
          f"shortest {length:.6f} via {order}", file=sys.stderr)
    return EXIT_OK


def cmd_lattice_spectrum(args) -> int:
    basis = io.basis_from_dict(io.read_json(args.input), args.input)
    spectrum = lattice_distance_spectrum(basis, args.cutoff)
    _emit(io.spectrum_to_csv(spectrum), args.output)
    return EXIT_OK


def cmd_lattice_reconstruct(args) -> int:
    spectrum = io.spectrum_from_csv(Path(args.input).read_text(encoding="utf-8"), args.cutoff)
    try:
        basis = reconstruct_cell(spectrum, args.dimension, args.tol_structural)
    except ReconstructionError as exc:
        print(f"reconstruction failed: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    _emit(io.dumps(io.basis_to_dict(basis)), args.output)
    lengths = ", ".join(f"{v:.6f}" for v in basis.lengths())
    print(f"basis lengths {lengths}", file=sys.stderr)
    return EXIT_OK


# --- figure reproduction ------------------------------------------------------


def _within(values, printed, tol) -> bool:
    return bool(np.all(np.abs(np.asarray(values, float) - np.asarray(printed, float)) <= tol))


def _fig_solved(free, orderings, printed, args) -> tuple[dict, dict, bool, str]:
    system = PermutationConstraintSystem.from_leading(free, orderings)
    sol = solve_constrained(system, realizability_tol=args.tol_structural)
    candidates = sol.roots + sol.multiple_roots
    root = min(candidates, key=lambda r: float(np.max(np.abs(r - np.asarray(printed)))))
    full = system.full(root)
    classes = enumerate_assemblies(full, 2, args.tol_structural, budget=args.budget)
    k_expected = len(orderings)
    ok = _within(root, printed, args.tol_paper) and classes.order == k_expected
    data = {
        "free": list(free),
        "orderings": [list(o) for o in orderings],
        "solved": [float(v) for v in root],
        "printed": list(printed),
        "roots": [[float(v) for v in r] for r in sol.roots],
        "multiple_roots": [[float(v) for v in r] for r in sol.multiple_roots],
        "order": classes.order,
    }
    configs = {f"class{i + 1}": c for i, c in enumerate(classes.classes)}
    solved = ", ".join(f"{v:.5f}" for v in root)
    detail = f"solved ({solved}) vs printed {printed}, k = {classes.order} (expected {k_expected})"
    return data, configs, ok, detail


def _fig1(args):
    x = 0.75 if args.x is None else args.x
    pair = kite_trapezoid(x, boundary=(x == 0.5), tol=args.tol_structural)
    same = multiset_equal(_multiset(pair.kite), _multiset(pair.trapezoid), tol=1e-12)
    distinct = not congruent(pair.kite, pair.trapezoid)
    tri_diff = not multiset_equal(triangle_multiset(pair.kite), triangle_multiset(pair.trapezoid), tol=args.tol_structural)
    ok = same and (distinct and tri_diff if x > 0.5 else True)
    data = _kite_payload(pair)
    data.update(multisets_equal=same, congruent=not distinct, triangle_multisets_equal=not tri_diff,
                hull_vertices={"kite": outer_boundary_vertices(pair.kite),
                               "trapezoid": outer_boundary_vertices(pair.trapezoid)})
    detail = f"x = {x}: multisets equal {same}, non-congruent {distinct}, triangle multisets differ {tri_diff}"
    return data, {"kite": pair.kite, "trapezoid": pair.trapezoid}, ok, detail


def _multiset(config):
    return pairwise_distances(config, allow_coincident=True).multiset()


def _fig2(args):
    x = 0.75 if args.x is None else args.x
    pair = kite_trapezoid(x, tol=args.tol_structural)
    kite = hamiltonian_circuits(pair.kite)
    trap = hamiltonian_circuits(pair.trapezoid)
    trap_short, kite_short = trap.shortest[1], kite.shortest[1]
    ok = trap.distinct_length_count == 3 and kite.distinct_length_count == 2 and trap_short < kite_short
    data = {
        "x": x,
        "kite": io.circuits_to_dict(kite),
        "trapezoid": io.circuits_to_dict(trap),
        "shortest_owner": "trapezoid" if trap_short < kite_short else "kite",
    }
    detail = (f"x = {x}: circuit lengths trapezoid {trap.distinct_length_count}, kite {kite.distinct_length_count}, "
              f"shortest {min(trap_short, kite_short):.5f} in {data['shortest_owner']}")
    return data, {"kite": pair.kite, "trapezoid": pair.trapezoid}, ok, detail


def _fig_symmetric(d, args):
    pair = symmetric_two_fold(default_symmetric_params(d), tol=args.tol_structural)
    ok = pair.multisets_equal and not pair.congruent
    detail = (f"d = {d}: {pair.primary.n} points, multiset gap {pair.max_multiset_gap:.1e}, "
              f"congruent {pair.congruent}")
    return _symmetric_payload(pair), {"primary": pair.primary, "dual": pair.dual}, ok, detail


def cmd_reproduce(args) -> int:
    fig = args.figure
    if fig not in FIGURES:
        raise UsageError(f"unknown figure '{fig}'; choose from {', '.join(FIGURES)}")
    if fig == "fig1":
        data, configs, ok, detail = _fig1(args)
    elif fig == "fig2":
        data, configs, ok, detail = _fig2(args)
    elif fig == "fig5":
        data, configs, ok, detail = _fig_solved(FIG5_FREE, FIG5_ORDERINGS, FIG5_SOLVED, args)
    elif fig == "fig6":
        data, configs, ok, detail = _fig_solved(FIG6_FREE, FIG6_ORDERINGS, FIG6_SOLVED, args)
    else:
        data, configs, ok, detail = _fig_symmetric(2 if fig == "fig7" else 3, args)
    out = Path(args.out_dir)
    data = {"figure": fig, "pass": bool(ok), **data,
            "configurations": {k: io.config_to_dict(c) for k, c in configs.items()}}
    io.atomic_write(out / f"{fig}.json", io.dumps(data))
    io.atomic_write(out / f"{fig}_points.csv", io.coordinates_to_csv(configs))
    print(f"{fig}: {'PASS' if ok else 'FAIL'} {detail}")
    return EXIT_OK if ok else EXIT_NEGATIVE


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, io.FormatError, OSError) as exc:
        print(f"distspace: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ConstructionError, NoSolutionError, SolverError) as exc:
        print(f"distspace: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except ValueError as exc:
        print(f"distspace: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
