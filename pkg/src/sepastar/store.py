"""Binary persistence for heuristic bundles (``.shpb``), weight perturbation and recompute."""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from typing import IO, Union

import numpy as np

from .graph import Graph
from .landmarks import DhData, DifferentialHeuristic, FastMapHeuristic, FmData, preprocess_dh, preprocess_fm
from .separators import SEP, Separator, SeparatorHeuristic, ShData, preprocess_sh
from .search import HeuristicEvaluator

MAGIC = b"SHPB"
FORMAT_VERSION = 1
KINDS = {"DH": 1, "FM": 2, "SH": 3}
_KIND_NAMES = {v: k for k, v in KINDS.items()}
_SEP_U32 = 0xFFFFFFFF

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

Payload = Union[DhData, FmData, ShData]


class BundleError(ValueError):
    """Base class for bundle decoding problems."""


class BadMagicError(BundleError):
    pass


class VersionMismatchError(BundleError):
    pass


class TruncatedBundleError(BundleError):
    pass


class FingerprintMismatchError(BundleError):
    """The bundle was built from a different graph (or different weights)."""


def fnv1a64(data: bytes, h: int = FNV_OFFSET) -> int:
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


def fingerprint(g: Graph) -> int:
    """FNV-1a 64 over ``n, m`` then ``(tail, head, weight bits)`` per arc in sorted order."""
    order = np.lexsort((g.heads, g.tails))
    rec = np.empty((g.m, 3), dtype="<u8")
    rec[:, 0] = g.tails[order]
    rec[:, 1] = g.heads[order]
    rec[:, 2] = g.weights[order].astype("<f8").view("<u8")
    data = struct.pack("<QQ", g.n, g.m) + rec.tobytes()
    return fnv1a64(data)


@dataclass(frozen=True, eq=False)
class HeuristicBundle:
    kind: str
    graph_fingerprint: int
    payload: Payload
    format_version: int = FORMAT_VERSION

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown bundle kind {self.kind!r}")

    @property
    def k(self) -> int:
        return self.payload.k

    @property
    def n(self) -> int:
        return self.payload.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HeuristicBundle):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.graph_fingerprint == other.graph_fingerprint
            and self.format_version == other.format_version
            and self.payload == other.payload
        )

    def attach(self, g: Graph) -> HeuristicEvaluator:
        """Evaluator for queries on ``g``; refuses a graph the bundle was not built from."""
        fp = fingerprint(g)
        if fp != self.graph_fingerprint:
            raise FingerprintMismatchError(
                f"bundle fingerprint {self.graph_fingerprint:016x} != graph fingerprint {fp:016x}"
            )
        return evaluator_for(self.payload)


def evaluator_for(payload: Payload) -> HeuristicEvaluator:
    if isinstance(payload, DhData):
        return DifferentialHeuristic(payload)
    if isinstance(payload, FmData):
        return FastMapHeuristic(payload)
    return SeparatorHeuristic(payload)


def make_bundle(g: Graph, payload: Payload) -> HeuristicBundle:
    kind = {DhData: "DH", FmData: "FM", ShData: "SH"}[type(payload)]
    return HeuristicBundle(kind, fingerprint(g), payload)


# --------------------------------------------------------------------------
# Encoding
# --------------------------------------------------------------------------


def _f64(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def _u32(values) -> bytes:
    return np.asarray(values, dtype="<u4").tobytes()


def encode_bundle(b: HeuristicBundle) -> bytes:
    p = b.payload
    out = [
        MAGIC,
        struct.pack("<IBQII", b.format_version, KINDS[b.kind], b.graph_fingerprint, p.k, p.n),
    ]
    if isinstance(p, DhData):
        out += [_u32(p.landmarks), _f64(p.from_landmark), _f64(p.to_landmark)]
    elif isinstance(p, FmData):
        out += [_u32([x for pair in p.pairs for x in pair]), _f64(p.coords)]
    else:
        for i, s in enumerate(p.separators):
            labels = np.where(p.labels[i] == SEP, _SEP_U32, p.labels[i])
            out += [
                _u32([len(s)]),
                _u32(s.vertices),
                _f64(p.to_sep[i]),
                _f64(p.from_sep[i]),
                _u32(labels),
            ]
    return b"".join(out)


def save_bundle(b: HeuristicBundle, sink: IO[bytes]) -> int:
    data = encode_bundle(b)
    sink.write(data)
    return len(data)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise TruncatedBundleError(f"bundle truncated at byte {len(self.data)} (needed {self.pos + size})")
        chunk = self.data[self.pos : self.pos + size]
        self.pos += size
        return chunk

    def u32(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype="<u4").astype(np.int64)

    def f64(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)


def decode_bundle(data: bytes) -> HeuristicBundle:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise BadMagicError("not a heuristic bundle (bad magic)")
    version, kind_code, fp, k, n = struct.unpack("<IBQII", r.take(21))
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"unsupported bundle format version {version}")
    if kind_code not in _KIND_NAMES:
        raise BundleError(f"unknown bundle kind code {kind_code}")
    kind = _KIND_NAMES[kind_code]
    payload: Payload
    if kind == "DH":
        landmarks = r.u32(k).tolist()
        frm = r.f64(k * n).reshape(k, n)
        to = r.f64(k * n).reshape(k, n)
        payload = DhData(landmarks, frm, to)
    elif kind == "FM":
        flat = r.u32(2 * k).tolist()
        pairs = [(flat[2 * i], flat[2 * i + 1]) for i in range(k)]
        payload = FmData(pairs, r.f64(k * n).reshape(k, n))
    else:
        seps, to_sep, from_sep, labels = [], np.zeros((k, n)), np.zeros((k, n)), np.zeros((k, n), dtype=np.int64)
        for i in range(k):
            size = int(r.u32(1)[0])
            seps.append(Separator(r.u32(size).tolist()))
            to_sep[i] = r.f64(n)
            from_sep[i] = r.f64(n)
            raw = r.u32(n)
            labels[i] = np.where(raw == _SEP_U32, SEP, raw)
        payload = ShData(seps, to_sep, from_sep, labels)
    if r.pos != len(data):
        raise BundleError(f"{len(data) - r.pos} trailing bytes after bundle payload")
    return HeuristicBundle(kind, fp, payload, version)


def load_bundle(source: IO[bytes]) -> HeuristicBundle:
    return decode_bundle(source.read())


def bundle_size(b: HeuristicBundle) -> int:
    return len(encode_bundle(b))


# --------------------------------------------------------------------------
# Dynamic weights
# --------------------------------------------------------------------------


def perturb_weights(g: Graph, factor_range: tuple[float, float], seed: int = 0) -> Graph:
    """Multiply each arc weight by an independent seeded draw from ``factor_range``."""
    lo, hi = float(factor_range[0]), float(factor_range[1])
    if not (0 < lo <= hi):
        raise ValueError(f"factor range must satisfy 0 < low <= high, got {factor_range}")
    rng = np.random.default_rng(seed)
    factors = rng.uniform(lo, hi, size=g.m) if lo < hi else np.full(g.m, lo)
    return g.with_weights(g.weights * factors)


def recompute(bundle: HeuristicBundle, g: Graph) -> HeuristicBundle:
    """Rebuild ``bundle`` on the (re-weighted) graph ``g`` keeping its selectors frozen.

    Landmarks, FastMap pairs and separator vertex sets are reused as-is;
    separators are revalidated since that only depends on topology.
    """
    p = bundle.payload
    if p.n != g.n:
        raise ValueError(f"bundle covers {p.n} nodes but the graph has {g.n}")
    if isinstance(p, DhData):
        fresh: Payload = preprocess_dh(g, p.landmarks)
    elif isinstance(p, FmData):
        fresh = preprocess_fm(g, p.k, pairs=p.pairs)
    else:
        fresh = preprocess_sh(g, p.separators)
    return make_bundle(g, fresh)


def roundtrip(b: HeuristicBundle) -> HeuristicBundle:
    buf = io.BytesIO()
    save_bundle(b, buf)
    buf.seek(0)
    return load_bundle(buf)
