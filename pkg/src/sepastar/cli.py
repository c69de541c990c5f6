"""Command-line entry point: ``sepastar <subcommand> ...``.

Node ids on the command line and in files are 1-based, as in DIMACS.
Exit status: 0 on success, 1 on usage errors, 2 on data errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import bench
from .graph import Graph, GraphFormatError, generate_bottleneck, generate_grid, load_dimacs, save_dimacs, symmetrize
from .landmarks import DirectedGraphError, preprocess_dh, preprocess_fm, select_landmarks
from .search import astar, dijkstra_point_to_point
from .separators import (
    PolylineSpec,
    Separator,
    SeparatorError,
    label_components,
    preprocess_sh,
    signed_field,
    validate_separator,
    write_signed_field_csv,
)
from .store import BundleError, load_bundle, make_bundle, save_bundle

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gr", required=True, help="DIMACS .gr arc file")
    p.add_argument("--co", required=True, help="DIMACS .co coordinate file")
    p.add_argument("--symmetrize", action="store_true", help="use the undirected (min-weight) version")


def _add_separator_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--polyline", action="append", default=[], metavar="X,Y;X,Y;...")
    p.add_argument("--vertices", action="append", default=[], metavar="ID,ID,...")
    p.add_argument("--axis", nargs=2, type=int, metavar=("NX", "NY"), help="equally spaced axis cuts")
    p.add_argument("--sep-file", help="JSON list of separator entries (bench config schema)")


def _load_graph(args: argparse.Namespace) -> Graph:
    for path in (args.gr, args.co):
        if not Path(path).is_file():
            raise UsageError(f"no such file: {path}")
    with open(args.gr, encoding="utf-8") as fg, open(args.co, encoding="utf-8") as fc:
        g = load_dimacs(fg, fc)
    return symmetrize(g) if args.symmetrize else g


def _parse_polyline(text: str) -> PolylineSpec:
    try:
        pts = [tuple(float(c) for c in chunk.split(",")) for chunk in text.split(";") if chunk.strip()]
    except ValueError as exc:
        raise UsageError(f"bad polyline {text!r}") from exc
    return PolylineSpec(pts)


def _separators(g: Graph, args: argparse.Namespace) -> list[Separator]:
    entries: list[dict] = []
    if args.sep_file:
        entries += json.loads(Path(args.sep_file).read_text(encoding="utf-8"))
    for text in args.polyline:
        entries.append({"polyline": _parse_polyline(text).points})
    for text in args.vertices:
        try:
            entries.append({"vertices": [int(v) for v in text.replace(" ", ",").split(",") if v]})
        except ValueError as exc:
            raise UsageError(f"bad vertex list {text!r}") from exc
    if args.axis:
        entries.append({"axis": list(args.axis)})
    if not entries:
        raise UsageError("no separator given (use --polyline, --vertices, --axis or --sep-file)")
    return bench.separators_from_spec(g, entries)


def _node(g: Graph, one_based: int) -> int:
    if not 1 <= one_based <= g.n:
        raise UsageError(f"node id {one_based} outside [1, {g.n}]")
    return one_based - 1


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    g = _load_graph(args)
    x0, y0, x1, y1 = g.bounding_box
    weak = label_components(g, Separator(())).count
    print(f"nodes: {g.n}")
    print(f"arcs: {g.m}")
    print(f"bounding_box: {x0!r} {y0!r} {x1!r} {y1!r}")
    print(f"symmetric: {'yes' if g.is_symmetric() else 'no'}")
    print(f"weak_components: {weak}")
    if g.m:
        print(f"weight_range: {float(g.weights.min())!r} {float(g.weights.max())!r}")
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    speed = (args.speed_min, args.speed_max)
    if args.kind == "grid":
        g = generate_grid(args.rows, args.cols, speed, args.one_way, args.seed)
    else:
        g = generate_bottleneck(args.block, args.gates, speed, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(f"{out}.gr", "w", encoding="utf-8") as fg, open(f"{out}.co", "w", encoding="utf-8") as fc:
        save_dimacs(g, fg, fc)
    print(f"wrote {out}.gr and {out}.co ({g.n} nodes, {g.m} arcs)")
    if args.kind == "bottleneck":
        gates = [v + 1 for v in g.meta["gate_vertices"]]
        Path(f"{out}.sep.json").write_text(json.dumps([{"vertices": gates}]) + "\n", encoding="utf-8")
        print(f"wrote {out}.sep.json (gate separator)")
    return EXIT_OK


def cmd_preprocess(args: argparse.Namespace) -> int:
    g = _load_graph(args)
    if args.kind == "dh":
        if args.landmarks:
            landmarks = [_node(g, int(v)) for v in args.landmarks.split(",")]
        else:
            landmarks = select_landmarks(g, args.k, seed=args.seed)
        payload = preprocess_dh(g, landmarks)
    elif args.kind == "fm":
        payload = preprocess_fm(g, args.k, pivot_iters=args.pivot_iters, seed=args.seed)
    else:
        payload = preprocess_sh(g, _separators(g, args))
    bundle = make_bundle(g, payload)
    with open(args.out, "wb") as fh:
        size = save_bundle(bundle, fh)
    print(f"wrote {args.out}: {bundle.kind} k={bundle.k} n={bundle.n} ({size} bytes)")
    return EXIT_OK


def cmd_query(args: argparse.Namespace) -> int:
    g = _load_graph(args)
    s, t = _node(g, args.s), _node(g, args.t)
    if args.bundle:
        with open(args.bundle, "rb") as fh:
            h = load_bundle(fh).attach(g)
        result = astar(g, s, t, h)
    else:
        result = dijkstra_point_to_point(g, s, t)
    print(f"cost: {result.cost!r}" if result.found else "cost: unreachable")
    print("path: " + " ".join(str(v + 1) for v in result.path))
    print(f"settled: {result.settled_count}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    if not Path(args.config).is_file():
        raise UsageError(f"no such config file: {args.config}")
    config = bench.BenchConfig.load(args.config)
    if args.dump_pairs:
        config.dump_pairs = True
    if args.output:
        config.output = str(Path(args.output).resolve())
    result = bench.run_benchmark(config)
    print(result.files["summary.csv"], end="")
    print(f"outputs in {config.output_dir()}")
    return EXIT_OK


def cmd_validate_sep(args: argparse.Namespace) -> int:
    g = _load_graph(args)
    for i, s in enumerate(_separators(g, args)):
        if i:
            print()
        print(f"separator: {i} ({len(s)} vertices)")
        report = validate_separator(g, s)
        text = report.format()
        if report.witness is not None:
            a, b = report.witness
            text = text.replace(f"witness: {a} {b}", f"witness: {a + 1} {b + 1}")
        print(text)
    return EXIT_OK


def cmd_export_field(args: argparse.Namespace) -> int:
    g = _load_graph(args)
    seps = _separators(g, args)
    if len(seps) != 1:
        raise UsageError("export-field takes exactly one separator")
    sf = signed_field(g, seps[0])
    if args.out == "-":
        write_signed_field_csv(g, sf, sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_signed_field_csv(g, sf, fh)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sepastar", description="A* fastest paths with landmark and separator heuristics")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="load DIMACS files and print statistics")
    _add_graph_args(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("gen", help="write a synthetic graph as DIMACS files")
    p.add_argument("kind", choices=["grid", "bottleneck"])
    p.add_argument("--out", required=True, help="output prefix (writes PREFIX.gr, PREFIX.co)")
    p.add_argument("--rows", type=int, default=64)
    p.add_argument("--cols", type=int, default=64)
    p.add_argument("--one-way", type=float, default=0.0)
    p.add_argument("--block", type=int, default=32)
    p.add_argument("--gates", type=int, default=3)
    p.add_argument("--speed-min", type=float, default=0.5)
    p.add_argument("--speed-max", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("preprocess", help="build a heuristic bundle (.shpb)")
    _add_graph_args(p)
    p.add_argument("--kind", choices=["dh", "fm", "sh"], required=True)
    p.add_argument("-k", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pivot-iters", type=int, default=10)
    p.add_argument("--landmarks", help="comma separated landmark ids (DH)")
    _add_separator_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("query", help="fastest path between two nodes")
    _add_graph_args(p)
    p.add_argument("--bundle", help="heuristic bundle; plain Dijkstra when omitted")
    p.add_argument("s", type=int)
    p.add_argument("t", type=int)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="run a benchmark config and write CSV reports")
    p.add_argument("config")
    p.add_argument("--dump-pairs", action="store_true")
    p.add_argument("--output", help="override the config's output directory")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate-sep", help="check separators and report cost diameters")
    _add_graph_args(p)
    _add_separator_args(p)
    p.set_defaults(func=cmd_validate_sep)

    p = sub.add_parser("export-field", help="write the signed cost field of a separator as CSV")
    _add_graph_args(p)
    _add_separator_args(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_export_field)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sepastar: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphFormatError, BundleError, SeparatorError, DirectedGraphError, bench.ConfigError,
            bench.SamplingError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"sepastar: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
