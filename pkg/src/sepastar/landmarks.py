"""Landmark heuristics: differential (ALT) and FastMap embeddings."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .graph import Graph, reverse, symmetrize
from .search import VectorHeuristic, dijkstra_one_to_all

log = logging.getLogger(__name__)

# residual clamps beyond this size indicate a bug rather than rounding
CLAMP_WARN = 1e-6


def select_landmarks(g: Graph, k: int, seed: int = 0, start: int | None = None) -> list[int]:
    """Farthest-point sampling under the symmetrized cost.

    The first landmark is the node farthest from ``start`` (drawn from ``seed``
    when omitted); each further landmark maximises its minimal cost to the
    landmarks already chosen. Ties go to the smaller node id.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > g.n:
        raise ValueError(f"cannot pick {k} landmarks from {g.n} nodes")
    sym = symmetrize(g)
    if start is None:
        start = int(np.random.default_rng(seed).integers(g.n))
    first = int(np.argmax(dijkstra_one_to_all(sym, start).cost))
    chosen = [first]
    nearest = dijkstra_one_to_all(sym, first).cost.copy()
    while len(chosen) < k:
        score = nearest.copy()
        score[chosen] = -np.inf
        nxt = int(np.argmax(score))
        chosen.append(nxt)
        nearest = np.minimum(nearest, dijkstra_one_to_all(sym, nxt).cost)
    return chosen


@dataclass(frozen=True, eq=False)
class DhData:
    landmarks: list[int]
    from_landmark: np.ndarray  # (k, n): c(l_i, v)
    to_landmark: np.ndarray  # (k, n): c(v, l_i)

    @property
    def k(self) -> int:
        return len(self.landmarks)

    @property
    def n(self) -> int:
        return self.from_landmark.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DhData):
            return NotImplemented
        return (
            list(self.landmarks) == list(other.landmarks)
            and np.array_equal(self.from_landmark, other.from_landmark)
            and np.array_equal(self.to_landmark, other.to_landmark)
        )


def preprocess_dh(g: Graph, landmarks: list[int]) -> DhData:
    rev = reverse(g)
    landmarks = [int(x) for x in landmarks]
    frm = np.array([dijkstra_one_to_all(g, l).cost for l in landmarks]).reshape(len(landmarks), g.n)
    to = np.array([dijkstra_one_to_all(rev, l).cost for l in landmarks]).reshape(len(landmarks), g.n)
    return DhData(landmarks, frm, to)


def _diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # a - b with unreachable operands contributing nothing (0 is the floor anyway)
    ok = np.isfinite(a) & np.isfinite(b)
    if ok.all():
        return a - b
    with np.errstate(invalid="ignore"):
        return np.where(ok, a - b, 0.0)


def dh_to_target(d: DhData, t: int) -> np.ndarray:
    """``dh_h(v, t)`` for all ``v``."""
    h = np.zeros(d.n)
    for i in range(d.k):
        to, frm = d.to_landmark[i], d.from_landmark[i]
        # c(v,l) - c(t,l)  and  c(l,t) - c(l,v)
        np.maximum(h, _diff(to, np.full(d.n, to[t])), out=h)
        np.maximum(h, _diff(np.full(d.n, frm[t]), frm), out=h)
    return h


def dh_h(d: DhData, v: int, t: int) -> float:
    best = 0.0
    for i in range(d.k):
        cvl, ctl = d.to_landmark[i, v], d.to_landmark[i, t]
        clt, clv = d.from_landmark[i, t], d.from_landmark[i, v]
        if np.isfinite(cvl) and np.isfinite(ctl):
            best = max(best, cvl - ctl)
        if np.isfinite(clt) and np.isfinite(clv):
            best = max(best, clt - clv)
    return float(best)


class DifferentialHeuristic(VectorHeuristic):
    name = "dh"

    def __init__(self, data: DhData):
        self.data = data

    @property
    def size(self) -> int:
        return self.data.n

    def estimate(self, v: int, t: int) -> float:
        return dh_h(self.data, v, t)

    def to_target(self, t: int, n: int) -> np.ndarray:
        return dh_to_target(self.data, t)


# --------------------------------------------------------------------------
# FastMap
# --------------------------------------------------------------------------


class DirectedGraphError(ValueError):
    """An undirected-only method was handed a directed graph."""


@dataclass(frozen=True, eq=False)
class FmData:
    pairs: list[tuple[int, int]]
    coords: np.ndarray  # (k, n)
    max_clamp: float = 0.0

    @property
    def k(self) -> int:
        return len(self.pairs)

    @property
    def n(self) -> int:
        return self.coords.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FmData):
            return NotImplemented
        return [tuple(p) for p in self.pairs] == [tuple(p) for p in other.pairs] and np.array_equal(
            self.coords, other.coords
        )


def _farthest(cost: np.ndarray) -> int:
    finite = np.where(np.isfinite(cost), cost, -np.inf)
    return int(np.argmax(finite))


def _pivot_pair(g: Graph, start: int, pivot_iters: int) -> tuple[int, int]:
    fields: dict[int, np.ndarray] = {}

    def cost_from(v: int) -> np.ndarray:
        if v not in fields:
            fields[v] = dijkstra_one_to_all(g, v).cost
        return fields[v]

    prev, cur = start, _farthest(cost_from(start))
    for _ in range(pivot_iters):
        nxt = _farthest(cost_from(cur))
        if nxt == prev:
            break
        prev, cur = cur, nxt
    return prev, cur


def preprocess_fm(
    g: Graph,
    k: int,
    pivot_iters: int = 10,
    seed: int = 0,
    pairs: list[tuple[int, int]] | None = None,
) -> FmData:
    """FastMap embedding of an undirected graph into ``k`` coordinates.

    Each round picks a far-apart pair ``(a, b)`` on the residual graph, sets
    ``f(v) = (c(a, v) - c(b, v)) / 2`` and subtracts ``|f(u) - f(v)|`` from
    every residual edge. Passing ``pairs`` skips the pivot search and reuses
    the given pairs (used when recomputing on new weights).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if not g.is_symmetric():
        raise DirectedGraphError("FastMap requires an undirected (symmetric) graph")
    if pairs is not None and len(pairs) != k:
        raise ValueError("number of frozen pairs must equal k")
    if g.n == 0:
        return FmData([], np.zeros((k, 0)))
    rng = np.random.default_rng(seed)
    residual = g.weights.copy()
    coords = np.zeros((k, g.n))
    chosen: list[tuple[int, int]] = []
    worst = 0.0
    for i in range(k):
        rg = g.with_weights(residual)
        if pairs is None:
            a, b = _pivot_pair(rg, int(rng.integers(g.n)), pivot_iters)
        else:
            a, b = int(pairs[i][0]), int(pairs[i][1])
        ca = dijkstra_one_to_all(rg, a).cost
        cb = dijkstra_one_to_all(rg, b).cost
        ok = np.isfinite(ca) & np.isfinite(cb)
        f = np.where(ok, 0.5 * (np.where(ok, ca, 0.0) - np.where(ok, cb, 0.0)), 0.0)
        coords[i] = f
        chosen.append((a, b))
        residual = residual - np.abs(f[g.tails] - f[g.heads])
        neg = float(-residual.min()) if len(residual) else 0.0
        if neg > 0:
            worst = max(worst, neg)
            if neg > CLAMP_WARN:
                log.warning("FastMap round %d clamped a residual of %.3g", i, neg)
            else:
                log.debug("FastMap round %d clamped a residual of %.3g", i, neg)
            residual = np.maximum(residual, 0.0)
    return FmData(chosen, coords, worst)


def fm_h(d: FmData, v: int, t: int) -> float:
    return float(np.abs(d.coords[:, v] - d.coords[:, t]).sum())


class FastMapHeuristic(VectorHeuristic):
    name = "fm"

    def __init__(self, data: FmData):
        self.data = data

    @property
    def size(self) -> int:
        return self.data.n

    def estimate(self, v: int, t: int) -> float:
        return fm_h(self.data, v, t)

    def to_target(self, t: int, n: int) -> np.ndarray:
        return np.abs(self.data.coords - self.data.coords[:, t : t + 1]).sum(axis=0)
