"""Immutable directed road graph, DIMACS ingestion, synthetic generators and transforms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable, NamedTuple, Sequence

import numpy as np

UNREACHABLE = math.inf


class GraphFormatError(ValueError):
    """Raised when DIMACS input is malformed or violates a precondition."""


class Arc(NamedTuple):
    tail: int
    head: int
    weight: float


@dataclass(frozen=True, eq=False)
class Graph:
    """Directed weighted graph with planar vertex positions.

    Arcs are stored de-duplicated and sorted by ``(tail, head)``; arc ids index
    into ``tails``/``heads``/``weights``. Instances are never mutated after
    construction, so they can be shared freely between searches.
    """

    positions: np.ndarray  # (n, 2) float64
    tails: np.ndarray  # (m,) int64
    heads: np.ndarray  # (m,) int64
    weights: np.ndarray  # (m,) float64
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_arcs(
        cls,
        positions: Sequence[Sequence[float]] | np.ndarray,
        arcs: Iterable[tuple[int, int, float]],
        meta: dict | None = None,
    ) -> "Graph":
        pos = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
        n = len(pos)
        if not np.all(np.isfinite(pos)):
            raise GraphFormatError("positions must be finite")
        best: dict[tuple[int, int], float] = {}
        for tail, head, weight in arcs:
            tail, head, weight = int(tail), int(head), float(weight)
            if not (0 <= tail < n and 0 <= head < n):
                raise GraphFormatError(f"arc ({tail}, {head}) references a node outside [0, {n})")
            if not (weight >= 0.0 and math.isfinite(weight)):
                raise GraphFormatError(f"arc ({tail}, {head}) has invalid weight {weight!r}")
            if tail == head:
                continue
            key = (tail, head)
            old = best.get(key)
            if old is None or weight < old:
                best[key] = weight
        keys = sorted(best)
        tails = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
        heads = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
        weights = np.fromiter((best[k] for k in keys), dtype=np.float64, count=len(keys))
        for arr in (pos, tails, heads, weights):
            arr.setflags(write=False)
        return cls(pos, tails, heads, weights, dict(meta or {}))

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def m(self) -> int:
        return len(self.tails)

    @property
    def arcs(self) -> list[Arc]:
        return [Arc(int(u), int(v), float(w)) for u, v, w in zip(self.tails, self.heads, self.weights)]

    def position(self, v: int) -> tuple[float, float]:
        x, y = self.positions[v]
        return float(x), float(y)

    @cached_property
    def bounding_box(self) -> tuple[float, float, float, float]:
        if self.n == 0:
            return (0.0, 0.0, 0.0, 0.0)
        lo = self.positions.min(axis=0)
        hi = self.positions.max(axis=0)
        return (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))

    @cached_property
    def out_adjacency(self) -> list[list[int]]:
        """Arc ids leaving each node."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for a, u in enumerate(self.tails.tolist()):
            adj[u].append(a)
        return adj

    @cached_property
    def in_adjacency(self) -> list[list[int]]:
        """Arc ids entering each node."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for a, v in enumerate(self.heads.tolist()):
            adj[v].append(a)
        return adj

    @cached_property
    def out_edges(self) -> list[list[tuple[int, float, int]]]:
        # (head, weight, arc id) triples; the search loops iterate these directly
        heads = self.heads.tolist()
        weights = self.weights.tolist()
        return [[(heads[a], weights[a], a) for a in arcs] for arcs in self.out_adjacency]

    @cached_property
    def undirected_neighbors(self) -> list[list[int]]:
        nbrs: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in zip(self.tails.tolist(), self.heads.tolist()):
            nbrs[u].add(v)
            nbrs[v].add(u)
        return [sorted(s) for s in nbrs]

    def arc_multiset(self) -> list[tuple[int, int, float]]:
        return sorted(zip(self.tails.tolist(), self.heads.tolist(), self.weights.tolist()))

    def same_structure(self, other: "Graph") -> bool:
        return (
            self.n == other.n
            and np.array_equal(self.tails, other.tails)
            and np.array_equal(self.heads, other.heads)
        )

    def is_symmetric(self) -> bool:
        """True when every arc has a reverse twin of identical weight."""
        lookup = {(u, v): w for u, v, w in self.arc_multiset()}
        return all(lookup.get((v, u)) == w for (u, v), w in lookup.items())

    def with_weights(self, weights: np.ndarray) -> "Graph":
        weights = np.array(weights, dtype=np.float64)
        if weights.shape != self.weights.shape:
            raise ValueError("weight vector does not match arc count")
        if not (np.all(weights >= 0) and np.all(np.isfinite(weights))):
            raise ValueError("weights must be finite and non-negative")
        weights.setflags(write=False)
        return Graph(self.positions, self.tails, self.heads, weights, dict(self.meta))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            np.array_equal(self.positions, other.positions)
            and self.same_structure(other)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None  # type: ignore[assignment]


# --------------------------------------------------------------------------
# DIMACS
# --------------------------------------------------------------------------


def _lines(stream: IO[str] | str) -> Iterable[tuple[int, list[str]]]:
    text = stream if isinstance(stream, str) else stream.read()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        yield lineno, parts


def load_dimacs(gr_text: IO[str] | str, co_text: IO[str] | str) -> Graph:
    """Parse a DIMACS ``.gr`` arc list and ``.co`` coordinate file.

    Node ids in the files are 1-based and shifted to 0-based. Duplicate arcs
    keep their minimum weight and self-loops are dropped.
    """
    n = None
    arcs: list[tuple[int, int, float]] = []
    for lineno, parts in _lines(gr_text):
        tag = parts[0]
        if tag == "p":
            if len(parts) != 4 or parts[1] != "sp":
                raise GraphFormatError(f"line {lineno}: malformed header {' '.join(parts)!r}")
            try:
                n, _m = int(parts[2]), int(parts[3])
            except ValueError as exc:
                raise GraphFormatError(f"line {lineno}: malformed header") from exc
            if n < 0 or _m < 0:
                raise GraphFormatError(f"line {lineno}: negative counts in header")
        elif tag == "a":
            if n is None:
                raise GraphFormatError(f"line {lineno}: arc before header")
            if len(parts) != 4:
                raise GraphFormatError(f"line {lineno}: malformed arc line")
            try:
                u, v, w = int(parts[1]), int(parts[2]), float(parts[3])
            except ValueError as exc:
                raise GraphFormatError(f"line {lineno}: malformed arc line") from exc
            if not (1 <= u <= n and 1 <= v <= n):
                raise GraphFormatError(f"line {lineno}: arc ({u}, {v}) outside [1, {n}]")
            if not (w >= 0 and math.isfinite(w)):
                raise GraphFormatError(f"line {lineno}: invalid weight {parts[3]!r}")
            arcs.append((u - 1, v - 1, w))
        else:
            raise GraphFormatError(f"line {lineno}: unknown line type {tag!r}")
    if n is None:
        raise GraphFormatError("missing 'p sp n m' header")

    coords: list[tuple[float, float] | None] = [None] * n
    for lineno, parts in _lines(co_text):
        if parts[0] == "p":
            continue
        if parts[0] != "v" or len(parts) != 4:
            raise GraphFormatError(f"co line {lineno}: expected 'v id x y'")
        try:
            vid, x, y = int(parts[1]), float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise GraphFormatError(f"co line {lineno}: malformed vertex line") from exc
        if not 1 <= vid <= n:
            raise GraphFormatError(f"co line {lineno}: vertex {vid} outside [1, {n}]")
        coords[vid - 1] = (x, y)
    missing = [i + 1 for i, c in enumerate(coords) if c is None]
    if missing:
        raise GraphFormatError(f"missing coordinates for {len(missing)} node(s), first {missing[0]}")
    return Graph.from_arcs(coords, arcs)  # type: ignore[arg-type]


def save_dimacs(g: Graph, gr_out: IO[str], co_out: IO[str]) -> None:
    gr_out.write(f"p sp {g.n} {g.m}\n")
    for u, v, w in zip(g.tails.tolist(), g.heads.tolist(), g.weights.tolist()):
        gr_out.write(f"a {u + 1} {v + 1} {w!r}\n")
    co_out.write(f"p aux sp co {g.n}\n")
    for i, (x, y) in enumerate(g.positions.tolist(), start=1):
        co_out.write(f"v {i} {x!r} {y!r}\n")


# --------------------------------------------------------------------------
# Generators
# --------------------------------------------------------------------------


def _check_speed_range(speed_range: tuple[float, float]) -> tuple[float, float]:
    lo, hi = float(speed_range[0]), float(speed_range[1])
    if not (0 < lo <= hi):
        raise ValueError(f"speed range must satisfy 0 < low <= high, got {speed_range}")
    return lo, hi


def _grid_edges(rows: int, cols: int, offset: int = 0) -> list[tuple[int, int]]:
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = offset + r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return edges


def _grid_positions(rows: int, cols: int, x0: float = 0.0) -> list[tuple[float, float]]:
    return [(x0 + c, float(r)) for r in range(rows) for c in range(cols)]


def generate_grid(
    rows: int,
    cols: int,
    speed_range: tuple[float, float] = (0.5, 2.0),
    one_way_fraction: float = 0.0,
    seed: int = 0,
) -> Graph:
    """Unit-spaced grid whose edges become two arcs weighted ``1 / speed``.

    ``round(one_way_fraction * edges)`` grid edges, picked by the seeded RNG,
    keep a single random direction.
    """
    if rows < 2 or cols < 2:
        raise ValueError("grid needs at least 2 rows and 2 columns")
    if not 0.0 <= one_way_fraction <= 1.0:
        raise ValueError("one_way_fraction must lie in [0, 1]")
    lo, hi = _check_speed_range(speed_range)
    rng = np.random.default_rng(seed)
    edges = _grid_edges(rows, cols)
    speeds = rng.uniform(lo, hi, size=(len(edges), 2))
    n_one_way = int(round(one_way_fraction * len(edges)))
    one_way = np.zeros(len(edges), dtype=bool)
    one_way[rng.permutation(len(edges))[:n_one_way]] = True
    keep_forward = rng.integers(0, 2, size=len(edges)).astype(bool)

    arcs = []
    for i, (u, v) in enumerate(edges):
        if not one_way[i] or keep_forward[i]:
            arcs.append((u, v, 1.0 / speeds[i, 0]))
        if not one_way[i] or not keep_forward[i]:
            arcs.append((v, u, 1.0 / speeds[i, 1]))
    meta = {"generator": "grid", "rows": rows, "cols": cols, "one_way_edges": one_way.tolist(),
            "grid_edges": edges}
    return Graph.from_arcs(_grid_positions(rows, cols), arcs, meta)


def generate_bottleneck(
    block: int,
    gates: int,
    speed_range: tuple[float, float] = (0.5, 2.0),
    seed: int = 0,
) -> Graph:
    """Two ``block x block`` grids side by side joined by ``gates`` gate edges.

    The right block sits one unit to the right of the left one, so a gate
    edge is a unit-length horizontal edge at one of the seeded gate rows.
    ``gate_vertices(g)`` returns the left endpoints of the gate edges.
    """
    if block < 4:
        raise ValueError("block must be at least 4")
    if not 1 <= gates <= block:
        raise ValueError(f"gates must lie in [1, {block}]")
    lo, hi = _check_speed_range(speed_range)
    rng = np.random.default_rng(seed)
    per_block = block * block
    positions = _grid_positions(block, block) + _grid_positions(block, block, x0=float(block))
    edges = _grid_edges(block, block) + _grid_edges(block, block, offset=per_block)
    gate_rows = sorted(int(r) for r in rng.choice(block, size=gates, replace=False))
    gate_edges = [(r * block + block - 1, per_block + r * block) for r in gate_rows]
    edges += gate_edges
    speeds = rng.uniform(lo, hi, size=(len(edges), 2))
    arcs = []
    for i, (u, v) in enumerate(edges):
        arcs.append((u, v, 1.0 / speeds[i, 0]))
        arcs.append((v, u, 1.0 / speeds[i, 1]))
    meta = {
        "generator": "bottleneck",
        "block": block,
        "gate_rows": gate_rows,
        "gate_vertices": [u for u, _ in gate_edges],
    }
    return Graph.from_arcs(positions, arcs, meta)


def gate_vertices(g: Graph) -> list[int]:
    """Gate-adjacent vertices of a bottleneck graph (a ready-made separator)."""
    try:
        return list(g.meta["gate_vertices"])
    except KeyError:
        raise ValueError("graph was not produced by generate_bottleneck") from None


def block_of(g: Graph, v: int) -> int:
    """0 for the left block of a bottleneck graph, 1 for the right block."""
    return int(v >= g.meta["block"] ** 2)


# --------------------------------------------------------------------------
# Transforms
# --------------------------------------------------------------------------


def reverse(g: Graph) -> Graph:
    arcs = zip(g.heads.tolist(), g.tails.tolist(), g.weights.tolist())
    return Graph.from_arcs(g.positions, arcs, g.meta)


def symmetrize(g: Graph) -> Graph:
    """Undirected version: both directions carry the minimum weight seen between the pair."""
    best: dict[tuple[int, int], float] = {}
    for u, v, w in zip(g.tails.tolist(), g.heads.tolist(), g.weights.tolist()):
        key = (u, v) if u < v else (v, u)
        if key not in best or w < best[key]:
            best[key] = w
    arcs = [(u, v, w) for (u, v), w in best.items()] + [(v, u, w) for (u, v), w in best.items()]
    return Graph.from_arcs(g.positions, arcs, g.meta)


def snap(g: Graph, p: tuple[float, float], max_snap: float) -> int | None:
    """Nearest node to ``p`` within ``max_snap``; ties go to the smaller id."""
    if max_snap < 0:
        raise ValueError("max_snap must be non-negative")
    if g.n == 0:
        return None
    d2 = (g.positions[:, 0] - p[0]) ** 2 + (g.positions[:, 1] - p[1]) ** 2
    best = int(np.argmin(d2))  # argmin returns the first minimum
    if d2[best] > max_snap * max_snap:
        return None
    return best


def d7() -> Graph:
    """Four-node directed test graph used throughout the test-suite (0-based ids)."""
    positions = [(0.0, 0.0), (1.0, 1.0), (1.0, -1.0), (2.0, 0.0)]
    arcs = [(0, 1, 1.0), (1, 3, 1.0), (0, 2, 2.5), (2, 3, 2.5), (1, 0, 2.0), (3, 2, 0.5), (2, 0, 1.0)]
    return Graph.from_arcs(positions, arcs)
