"""Dijkstra and A* over :class:`~sepastar.graph.Graph` with settle instrumentation.

All queues are binary heaps with lazy deletion. Heap entries are
``(key, node)`` tuples so equal keys pop in ascending node order, which keeps
settled counts reproducible.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .graph import UNREACHABLE, Graph


class PathCycleError(RuntimeError):
    """Parent links form a cycle; the cost field is corrupt."""


@dataclass(frozen=True)
class CostField:
    """Minimal costs from a source (or source set) plus the parent arc of each node."""

    sources: tuple[int, ...]
    cost: np.ndarray
    parent_arc: np.ndarray  # -1 where there is no parent
    graph: Graph = field(repr=False, compare=False)

    def reachable(self, v: int) -> bool:
        return math.isfinite(self.cost[v])


@dataclass
class QueryResult:
    cost: float
    path: list[int]
    settled_count: int
    relaxed_count: int
    settled: list[tuple[int, float]] | None = None  # (node, key) in settle order, when recorded

    @property
    def found(self) -> bool:
        return math.isfinite(self.cost)


class HeuristicEvaluator:
    """Lower bound ``h(v, t)`` on the minimal cost from ``v`` to ``t``.

    Subclasses implement :meth:`estimate`. :meth:`bind` may be overridden to
    return a faster per-target callable; A* uses it once per query.
    """

    name = "heuristic"

    def estimate(self, v: int, t: int) -> float:
        raise NotImplementedError

    def __call__(self, v: int, t: int) -> float:
        return self.estimate(v, t)

    def bind(self, t: int) -> Callable[[int], float]:
        cache: dict[int, float] = {}

        def h(v: int) -> float:
            val = cache.get(v)
            if val is None:
                val = cache[v] = self.estimate(v, t)
            return val

        return h

    def to_target(self, t: int, n: int) -> np.ndarray:
        """``h(v, t)`` for every node ``v`` as an array."""
        return np.array([self.estimate(v, t) for v in range(n)], dtype=np.float64)


class VectorHeuristic(HeuristicEvaluator):
    """Evaluator whose per-target values come out of a vectorised :meth:`to_target`."""

    def bind(self, t: int) -> Callable[[int], float]:
        return self.to_target(t, self.size).tolist().__getitem__

    @property
    def size(self) -> int:
        raise NotImplementedError


class ZeroHeuristic(HeuristicEvaluator):
    name = "zero"

    def estimate(self, v: int, t: int) -> float:
        return 0.0

    def bind(self, t: int) -> Callable[[int], float]:
        return lambda v: 0.0

    def to_target(self, t: int, n: int) -> np.ndarray:
        return np.zeros(n)


class EuclideanHeuristic(VectorHeuristic):
    """Planar distance divided by ``scale`` (the maximal speed for travel-time weights)."""

    name = "euclidean"

    def __init__(self, positions: np.ndarray, scale: float = 1.0):
        if not scale > 0:
            raise ValueError("scale must be positive")
        self.positions = np.asarray(positions, dtype=np.float64)
        self.scale = float(scale)

    @classmethod
    def for_graph(cls, g: Graph) -> "EuclideanHeuristic":
        """Use the tightest admissible scale: the largest length/weight ratio over all arcs."""
        lengths = np.hypot(*(g.positions[g.tails] - g.positions[g.heads]).T)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(lengths > 0, lengths / g.weights, 0.0)
        scale = float(ratios.max()) if len(ratios) else 1.0
        if not scale > 0:
            scale = 1.0
        if math.isinf(scale):
            # a zero-weight arc of positive length: only h = 0 is admissible
            return _ScaledToZero(g.positions)
        return cls(g.positions, scale)

    @property
    def size(self) -> int:
        return len(self.positions)

    def estimate(self, v: int, t: int) -> float:
        dx, dy = self.positions[v] - self.positions[t]
        return math.hypot(dx, dy) / self.scale

    def to_target(self, t: int, n: int) -> np.ndarray:
        d = self.positions - self.positions[t]
        return np.hypot(d[:, 0], d[:, 1]) / self.scale


class _ScaledToZero(EuclideanHeuristic):
    def __init__(self, positions: np.ndarray):
        super().__init__(positions, 1.0)

    def estimate(self, v: int, t: int) -> float:
        return 0.0

    def to_target(self, t: int, n: int) -> np.ndarray:
        return np.zeros(n)


class ExactHeuristic(VectorHeuristic):
    """``h(v, t) = c(v, t)`` computed on demand by a reverse search; for tests and baselines."""

    name = "exact"

    def __init__(self, g: Graph):
        from .graph import reverse

        self._rev = reverse(g)
        self._n = g.n
        self._cache: dict[int, np.ndarray] = {}

    @property
    def size(self) -> int:
        return self._n

    def to_target(self, t: int, n: int) -> np.ndarray:
        if t not in self._cache:
            self._cache[t] = dijkstra_one_to_all(self._rev, t).cost
        return self._cache[t]

    def estimate(self, v: int, t: int) -> float:
        return float(self.to_target(t, self._n)[v])


# --------------------------------------------------------------------------
# Dijkstra
# --------------------------------------------------------------------------


def _settle_all(g: Graph, sources: Iterable[int]) -> CostField:
    n = g.n
    cost = [UNREACHABLE] * n
    parent = [-1] * n
    done = [False] * n
    heap: list[tuple[float, int]] = []
    srcs = tuple(sorted(set(sources)))
    for s in srcs:
        if not 0 <= s < n:
            raise IndexError(f"source {s} outside [0, {n})")
        cost[s] = 0.0
        heap.append((0.0, s))
    heapq.heapify(heap)
    out = g.out_edges
    pop, push = heapq.heappop, heapq.heappush
    while heap:
        d, u = pop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w, a in out[u]:
            nd = d + w
            if nd < cost[v] and not done[v]:
                cost[v] = nd
                parent[v] = a
                push(heap, (nd, v))
    return CostField(srcs, np.array(cost, dtype=np.float64), np.array(parent, dtype=np.int64), g)


def dijkstra_one_to_all(g: Graph, s: int) -> CostField:
    return _settle_all(g, (s,))


def multi_source_dijkstra(g: Graph, sources: Iterable[int]) -> CostField:
    """Minimal cost from the nearest member of ``sources`` to every node.

    Seeding every source at cost 0 gives exactly the field of a single search
    from an extra virtual node joined to each source by a zero-weight arc.
    """
    sources = list(sources)
    if not sources:
        raise ValueError("source set is empty")
    return _settle_all(g, sources)


def reconstruct_path(field_: CostField, t: int) -> list[int]:
    if not math.isfinite(field_.cost[t]):
        return []
    g = field_.graph
    tails = g.tails
    path = [t]
    v = t
    for _ in range(g.n):
        a = int(field_.parent_arc[v])
        if a < 0:
            path.reverse()
            return path
        v = int(tails[a])
        path.append(v)
    raise PathCycleError(f"parent links from node {t} do not reach a source")


def dijkstra_point_to_point(g: Graph, s: int, t: int, record: bool = False) -> QueryResult:
    return astar(g, s, t, ZeroHeuristic(), record=record)


def astar(
    g: Graph,
    s: int,
    t: int,
    h: HeuristicEvaluator | None = None,
    record: bool = False,
) -> QueryResult:
    """A* with CLOSED-set semantics; ``h`` must be consistent for optimality.

    With ``record=True`` the result carries the ``(node, g + h)`` keys in
    settle order.
    """
    n = g.n
    if not (0 <= s < n and 0 <= t < n):
        raise IndexError("query endpoint outside the graph")
    hv = (h or ZeroHeuristic()).bind(t)
    gcost = [UNREACHABLE] * n
    parent = [-1] * n
    closed = [False] * n
    out = g.out_edges
    gcost[s] = 0.0
    heap: list[tuple[float, int]] = [(hv(s), s)]
    pop, push = heapq.heappop, heapq.heappush
    settled = relaxed = 0
    trace: list[tuple[int, float]] | None = [] if record else None
    found = False
    while heap:
        key, u = pop(heap)
        if closed[u]:
            continue
        closed[u] = True
        settled += 1
        if trace is not None:
            trace.append((u, key))
        if u == t:
            found = True
            break
        gu = gcost[u]
        for v, w, _ in out[u]:
            nd = gu + w
            # closed nodes rarely pass the first test, so check them second
            if nd < gcost[v] and not closed[v]:
                gcost[v] = nd
                parent[v] = u
                relaxed += 1
                push(heap, (nd + hv(v), v))
    if not found:
        return QueryResult(UNREACHABLE, [], settled, relaxed, trace)
    path = [t]
    v = t
    while v != s:
        v = parent[v]
        path.append(v)
    path.reverse()
    return QueryResult(gcost[t], path, settled, relaxed, trace)


def path_cost(g: Graph, path: list[int]) -> float:
    """Sum of the arc weights along ``path``; raises ``ValueError`` on a missing arc."""
    out = g.out_edges
    total = 0.0
    for u, v in zip(path, path[1:]):
        for head, w, _ in out[u]:
            if head == v:
                total += w
                break
        else:
            raise ValueError(f"no arc {u} -> {v}")
    return total


def dijkstra_until(g: Graph, s: int, targets: Iterable[int]) -> dict[int, float]:
    """Costs from ``s`` to each of ``targets``, stopping once all of them are settled."""
    remaining = set(targets)
    found: dict[int, float] = {}
    cost = {s: 0.0}
    done: set[int] = set()
    heap = [(0.0, s)]
    out = g.out_edges
    while heap and remaining:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u in remaining:
            remaining.discard(u)
            found[u] = d
        for v, w, _ in out[u]:
            nd = d + w
            if v not in done and nd < cost.get(v, UNREACHABLE):
                cost[v] = nd
                heapq.heappush(heap, (nd, v))
    for v in remaining:
        found[v] = UNREACHABLE
    return found
