"""Separator heuristic: geometric separators, component labels, set cost fields and queries.

A separator ``S`` is a vertex set whose removal (together with every arc
touching it) leaves components with no arc between them. For each separator
we keep the minimal cost from every node to ``S`` and from ``S`` to every
node, plus the undirected component label of every node. A query then uses
the differential bound inside a component and the sum
``c(v, S) + c(S, t)`` across components.
"""
from __future__ import annotations

import csv
import math
from collections import Counter, deque
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .graph import Graph, reverse, symmetrize
from .search import VectorHeuristic, dijkstra_until, multi_source_dijkstra

SEP = -1
DIAMETER_EXACT_LIMIT = 512


class SeparatorError(ValueError):
    """A separator does not separate, or its polyline is degenerate."""


@dataclass(frozen=True)
class PolylineSpec:
    """Ordered polyline; separator vertices are taken from the left of the traversal direction."""

    points: tuple[tuple[float, float], ...]

    def __init__(self, points: Iterable[Sequence[float]]):
        pts = tuple((float(x), float(y)) for x, y in points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise SeparatorError("polyline needs at least two points")
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise SeparatorError(f"degenerate polyline segment at {a}")


@dataclass(frozen=True)
class Separator:
    vertices: tuple[int, ...]

    def __init__(self, vertices: Iterable[int]):
        object.__setattr__(self, "vertices", tuple(sorted({int(v) for v in vertices})))

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v: object) -> bool:
        return v in set(self.vertices)


@dataclass(frozen=True, eq=False)
class ComponentLabels:
    label: np.ndarray  # per node; SEP for separator vertices
    count: int

    def sizes(self) -> list[int]:
        counts = Counter(int(x) for x in self.label if x != SEP)
        return [counts[i] for i in range(self.count)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComponentLabels):
            return NotImplemented
        return self.count == other.count and np.array_equal(self.label, other.label)


@dataclass(frozen=True)
class SeparatorReport:
    valid: bool
    crossing_arcs: int
    component_sizes: list[int]
    cost_diameter: float
    witness: tuple[int, int] | None
    approximate: bool = False

    def format(self) -> str:
        lines = [
            f"valid: {'yes' if self.valid else 'no'}",
            f"crossing_arcs: {self.crossing_arcs}",
            f"components: {len(self.component_sizes)}",
            f"component_sizes: {' '.join(map(str, self.component_sizes))}",
            f"cost_diameter: {self.cost_diameter!r}{' (approximate)' if self.approximate else ''}",
            f"witness: {'' if self.witness is None else f'{self.witness[0]} {self.witness[1]}'}",
        ]
        return "\n".join(lines)


# --------------------------------------------------------------------------
# Geometry
# --------------------------------------------------------------------------


def _orient(ax: float, ay: float, bx: float, by: float, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def separator_from_polyline(g: Graph, spec: PolylineSpec) -> Separator:
    """Left endpoints of every arc whose segment crosses the polyline.

    A point lying exactly on a polyline segment counts as being on its left.
    """
    if g.m == 0:
        return Separator(())
    pu = g.positions[g.tails]
    pv = g.positions[g.heads]
    picked: set[int] = set()
    for (ax, ay), (bx, by) in zip(spec.points, spec.points[1:]):
        left_u = _orient(ax, ay, bx, by, pu[:, 0], pu[:, 1]) >= 0
        left_v = _orient(ax, ay, bx, by, pv[:, 0], pv[:, 1]) >= 0
        oa = (pv[:, 0] - pu[:, 0]) * (ay - pu[:, 1]) - (pv[:, 1] - pu[:, 1]) * (ax - pu[:, 0])
        ob = (pv[:, 0] - pu[:, 0]) * (by - pu[:, 1]) - (pv[:, 1] - pu[:, 1]) * (bx - pu[:, 0])
        crossing = (left_u != left_v) & (oa * ob <= 0)
        idx = np.nonzero(crossing)[0]
        picked.update(np.where(left_u[idx], g.tails[idx], g.heads[idx]).tolist())
    return Separator(picked)


def axis_cuts(g: Graph, count_x: int, count_y: int) -> list[PolylineSpec]:
    """Equally spaced vertical then horizontal lines across the bounding box.

    Vertical lines run upwards (separator on the low-x side); horizontal lines
    run right to left (separator on the low-y side). Lines overshoot the box
    so every crossing arc is caught.
    """
    if count_x < 0 or count_y < 0:
        raise ValueError("cut counts must be non-negative")
    x0, y0, x1, y1 = g.bounding_box
    pad = 1.0 + max(x1 - x0, y1 - y0)
    specs = []
    for i in range(1, count_x + 1):
        x = x0 + i * (x1 - x0) / (count_x + 1)
        specs.append(PolylineSpec([(x, y0 - pad), (x, y1 + pad)]))
    for i in range(1, count_y + 1):
        y = y0 + i * (y1 - y0) / (count_y + 1)
        specs.append(PolylineSpec([(x1 + pad, y), (x0 - pad, y)]))
    return specs


def side_labels(g: Graph, spec: PolylineSpec, s: Separator) -> ComponentLabels:
    """Label nodes 0 (left) / 1 (right) of ``spec`` by their nearest polyline segment.

    Useful for checking a hand-picked separator against the partition the
    polyline is meant to induce.
    """
    px, py = g.positions[:, 0], g.positions[:, 1]
    best_d = np.full(g.n, np.inf)
    left = np.zeros(g.n, dtype=bool)
    for (ax, ay), (bx, by) in zip(spec.points, spec.points[1:]):
        dx, dy = bx - ax, by - ay
        tpar = np.clip(((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
        d = np.hypot(px - (ax + tpar * dx), py - (ay + tpar * dy))
        closer = d < best_d
        best_d = np.where(closer, d, best_d)
        left = np.where(closer, _orient(ax, ay, bx, by, px, py) >= 0, left)
    label = np.where(left, 0, 1).astype(np.int64)
    label[list(s.vertices)] = SEP
    return ComponentLabels(label, 2)


# --------------------------------------------------------------------------
# Components and validation
# --------------------------------------------------------------------------


def label_components(g: Graph, s: Separator) -> ComponentLabels:
    """Undirected components after deleting ``s``; labels ordered by smallest member id."""
    label = np.full(g.n, -2, dtype=np.int64)
    sep = set(s.vertices)
    for v in sep:
        label[v] = SEP
    nbrs = g.undirected_neighbors
    lab = label.tolist()
    count = 0
    for root in range(g.n):
        if lab[root] != -2:
            continue
        lab[root] = count
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                if lab[v] == -2:
                    lab[v] = count
                    queue.append(v)
        count += 1
    return ComponentLabels(np.array(lab, dtype=np.int64), count)


def crossing_arcs(g: Graph, labels: ComponentLabels) -> int:
    lt = labels.label[g.tails]
    lh = labels.label[g.heads]
    return int(np.count_nonzero((lt != SEP) & (lh != SEP) & (lt != lh)))


def cost_diameter(g: Graph, s: Separator, seed: int = 0) -> tuple[float, tuple[int, int] | None, bool]:
    """Largest symmetrized cost between two separator vertices, with a witness pair.

    Exact for up to ``DIAMETER_EXACT_LIMIT`` vertices; beyond that only that
    many seeded sources are searched and the result is flagged approximate.
    """
    verts = list(s.vertices)
    if not verts:
        return 0.0, None, False
    sym = symmetrize(g)
    approximate = len(verts) > DIAMETER_EXACT_LIMIT
    sources = verts
    if approximate:
        rng = np.random.default_rng(seed)
        sources = sorted(rng.choice(verts, size=DIAMETER_EXACT_LIMIT, replace=False).tolist())
    best, witness = 0.0, (verts[0], verts[0])
    for u in sources:
        costs = dijkstra_until(sym, u, verts)
        for v in verts:
            if costs[v] > best:
                best, witness = costs[v], (u, v)
    return best, witness, approximate


def validate_separator(g: Graph, s: Separator, labels: ComponentLabels | None = None) -> SeparatorReport:
    """Check that no arc joins two different components under ``labels``.

    ``labels`` defaults to :func:`label_components` of ``s``; pass another
    partition (e.g. :func:`side_labels`) to test a separator against it.
    """
    if labels is None:
        labels = label_components(g, s)
    crossing = crossing_arcs(g, labels)
    diameter, witness, approx = cost_diameter(g, s)
    return SeparatorReport(
        valid=crossing == 0 and len(s) > 0,
        crossing_arcs=crossing,
        component_sizes=labels.sizes(),
        cost_diameter=diameter,
        witness=witness,
        approximate=approx,
    )


# --------------------------------------------------------------------------
# Preprocessing and queries
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ShData:
    separators: list[Separator]
    to_sep: np.ndarray  # (k, n): c(v, S_i)
    from_sep: np.ndarray  # (k, n): c(S_i, v)
    labels: np.ndarray  # (k, n) int64, SEP on separator vertices

    @property
    def k(self) -> int:
        return len(self.separators)

    @property
    def n(self) -> int:
        return self.to_sep.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ShData):
            return NotImplemented
        return (
            self.separators == other.separators
            and np.array_equal(self.to_sep, other.to_sep)
            and np.array_equal(self.from_sep, other.from_sep)
            and np.array_equal(self.labels, other.labels)
        )


def preprocess_sh(g: Graph, separators: Sequence[Separator | Iterable[int]]) -> ShData:
    """Two multi-source searches and one labelling pass per separator."""
    seps = [s if isinstance(s, Separator) else Separator(s) for s in separators]
    rev = reverse(g)
    k = len(seps)
    to_sep = np.zeros((k, g.n))
    from_sep = np.zeros((k, g.n))
    labels = np.zeros((k, g.n), dtype=np.int64)
    for i, s in enumerate(seps):
        if len(s) == 0:
            raise SeparatorError(f"separator {i} is empty")
        lab = label_components(g, s)
        if crossing_arcs(g, lab):
            raise SeparatorError(f"separator {i} leaves arcs between components")
        from_sep[i] = multi_source_dijkstra(g, s.vertices).cost
        to_sep[i] = multi_source_dijkstra(rev, s.vertices).cost
        labels[i] = lab.label
    return ShData(seps, to_sep, from_sep, labels)


def _sh_one(d: ShData, i: int, t: int) -> np.ndarray:
    lab = d.labels[i]
    to, frm = d.to_sep[i], d.from_sep[i]
    lt = lab[t]
    cross = (lab != lt) | (lab == SEP) | (lt == SEP)
    with np.errstate(invalid="ignore"):
        across = to + frm[t]
        # unreachable operands drop out of the same-component differences
        ok1 = np.isfinite(to) & np.isfinite(to[t])
        ok2 = np.isfinite(frm) & np.isfinite(frm[t])
        inside = np.maximum(np.where(ok1, to - to[t], 0.0), np.where(ok2, frm[t] - frm, 0.0))
    return np.where(cross, across, np.maximum(inside, 0.0))


def sh_to_target(d: ShData, t: int) -> np.ndarray:
    h = np.zeros(d.n)
    for i in range(d.k):
        np.maximum(h, _sh_one(d, i, t), out=h)
    return h


def sh_h(d: ShData, v: int, t: int) -> float:
    best = 0.0
    for i in range(d.k):
        lv, lt = d.labels[i, v], d.labels[i, t]
        cvs, cts = d.to_sep[i, v], d.to_sep[i, t]
        csv_, cst = d.from_sep[i, v], d.from_sep[i, t]
        if lv == SEP or lt == SEP or lv != lt:
            val = cvs + cst
        else:
            val = 0.0
            if math.isfinite(cvs) and math.isfinite(cts):
                val = max(val, cvs - cts)
            if math.isfinite(cst) and math.isfinite(csv_):
                val = max(val, cst - csv_)
        best = max(best, val)
    return float(best)


class SeparatorHeuristic(VectorHeuristic):
    name = "sh"

    def __init__(self, data: ShData):
        self.data = data

    @property
    def size(self) -> int:
        return self.data.n

    def estimate(self, v: int, t: int) -> float:
        return sh_h(self.data, v, t)

    def to_target(self, t: int, n: int) -> np.ndarray:
        return sh_to_target(self.data, t)


# --------------------------------------------------------------------------
# Signed cost field
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SignedField:
    separator: Separator
    value: np.ndarray


def signed_field(g: Graph, s: Separator, labels: ComponentLabels | None = None) -> SignedField:
    """Cost to ``s``, positive on component 0 and negative on component 1 (undirected graphs)."""
    if not g.is_symmetric():
        raise SeparatorError("signed fields are defined on undirected graphs only")
    if labels is None:
        labels = label_components(g, s)
    if labels.count != 2:
        raise SeparatorError(f"signed field needs exactly 2 components, got {labels.count}")
    dist = multi_source_dijkstra(g, s.vertices).cost
    sign = np.where(labels.label == 0, 1.0, -1.0)
    value = np.where(labels.label == SEP, 0.0, sign * dist)
    return SignedField(s, value)


def write_signed_field_csv(g: Graph, sf: SignedField, out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["node", "x", "y", "signed_cost"])  # 1-based node ids
    for v, ((x, y), c) in enumerate(zip(g.positions.tolist(), sf.value.tolist())):
        writer.writerow([v + 1, repr(x), repr(y), repr(c)])
