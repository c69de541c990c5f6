"""A* fastest paths on directed road graphs with landmark (DH), FastMap (FM) and separator (SH) heuristics."""
from .graph import Graph, generate_bottleneck, generate_grid, load_dimacs, reverse, save_dimacs, snap, symmetrize
from .landmarks import DifferentialHeuristic, FastMapHeuristic, preprocess_dh, preprocess_fm, select_landmarks
from .search import (
    EuclideanHeuristic,
    ZeroHeuristic,
    astar,
    dijkstra_one_to_all,
    dijkstra_point_to_point,
    multi_source_dijkstra,
)
from .separators import Separator, SeparatorHeuristic, axis_cuts, preprocess_sh, separator_from_polyline
from .store import HeuristicBundle, fingerprint, load_bundle, save_bundle

__version__ = "0.1.0"

__all__ = [
    "EuclideanHeuristic",
    "DifferentialHeuristic",
    "FastMapHeuristic",
    "Graph",
    "HeuristicBundle",
    "Separator",
    "SeparatorHeuristic",
    "ZeroHeuristic",
    "astar",
    "axis_cuts",
    "dijkstra_one_to_all",
    "dijkstra_point_to_point",
    "fingerprint",
    "generate_bottleneck",
    "generate_grid",
    "load_bundle",
    "load_dimacs",
    "multi_source_dijkstra",
    "preprocess_dh",
    "preprocess_fm",
    "preprocess_sh",
    "reverse",
    "save_bundle",
    "save_dimacs",
    "select_landmarks",
    "separator_from_polyline",
    "snap",
    "symmetrize",
]
