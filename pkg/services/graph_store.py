# services/graph_store.py
"""
Graph storage.
- Graph: immutable CSR (out) + CSC (in) numpy adjacency with degrees and optional integer weights
- load_edge_list / load_graph: `.el` / `.wel` text, or the `GWCSR1` binary cache (write_cache/read_cache)
- build_ssgs: segmented subgraphs restricting the inner endpoint range
- build_bsg_chunks / chunk_ids: blocked chunks of the outer range (fixed or edge-aware)
"""

import logging
import os
import re
import struct
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from lang.errors import CacheFormatError, NegativeId, ParseError, ZeroSegments

logger = logging.getLogger(__name__)

FVC, EVC = "FVC", "EVC"
CACHE_MAGIC = b"GWCSR1"
_HEADER_RE = re.compile(r"#\s*vertices\s*=\s*(\d+)")


def _csr(n: int, keys: np.ndarray, values: np.ndarray, weights: Optional[np.ndarray]):
    order = np.argsort(keys, kind="stable")
    counts = np.bincount(keys, minlength=n) if len(keys) else np.zeros(n, dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    nbrs = values[order].astype(np.int64)
    w = weights[order].astype(np.int64) if weights is not None else None
    return offsets, nbrs, w


class Graph:
    """Directed multigraph; `in_*` arrays are the exact transpose of `out_*`."""

    def __init__(self, n: int, src: np.ndarray, dst: np.ndarray, weights: Optional[np.ndarray] = None):
        self.n = int(n)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        self.m = int(len(src))
        self.weighted = weights is not None
        w = np.asarray(weights, dtype=np.int64) if weights is not None else None
        self.out_offsets, self.out_neighbors, self.out_weights = _csr(self.n, src, dst, w)
        self.in_offsets, self.in_neighbors, self.in_weights = _csr(self.n, dst, src, w)
        self.out_degree = np.diff(self.out_offsets)
        self.in_degree = np.diff(self.in_offsets)

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[Tuple], weighted: bool = False) -> "Graph":
        if not edges:
            return cls(n, np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64) if weighted else None)
        arr = np.asarray(edges, dtype=np.int64)
        return cls(n, arr[:, 0], arr[:, 1], arr[:, 2] if weighted else None)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m}, weighted={self.weighted})"

    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
        """(src, dst, weights) in CSR order."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree)
        return src, self.out_neighbors, self.out_weights

    def edges(self) -> List[Tuple[int, ...]]:
        src, dst, w = self.edge_arrays()
        if w is None:
            return list(zip(src.tolist(), dst.tolist()))
        return list(zip(src.tolist(), dst.tolist(), w.tolist()))

    # plain-list views for the interpreter's inner loops
    @cached_property
    def out_lists(self) -> Tuple[list, list, Optional[list]]:
        w = self.out_weights.tolist() if self.out_weights is not None else None
        return self.out_offsets.tolist(), self.out_neighbors.tolist(), w

    @cached_property
    def in_lists(self) -> Tuple[list, list, Optional[list]]:
        w = self.in_weights.tolist() if self.in_weights is not None else None
        return self.in_offsets.tolist(), self.in_neighbors.tolist(), w

    @cached_property
    def out_degree_list(self) -> list:
        return self.out_degree.tolist()

    @cached_property
    def in_degree_list(self) -> list:
        return self.in_degree.tolist()

    def symmetrized(self) -> "Graph":
        src, dst, w = self.edge_arrays()
        weights = np.concatenate([w, w]) if w is not None else None
        return Graph(self.n, np.concatenate([src, dst]), np.concatenate([dst, src]), weights)


# ---------------------------------------------------------------- loading

def load_edge_list(path: str, weighted: bool = False, symmetrize: bool = False,
                   num_vertices: Optional[int] = None) -> Graph:
    if not os.path.exists(path):
        raise ParseError(f"graph file not found: {path}", path=path)
    src, dst, wts = [], [], []
    header_n = None
    with open(path, "r") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = _HEADER_RE.match(line)
                if m:
                    header_n = int(m.group(1))
                continue
            parts = line.split()
            need = 3 if weighted else 2
            if len(parts) < need:
                raise ParseError(f"expected {need} columns, got {len(parts)}", lineno, path)
            try:
                values = [int(p) for p in parts[:need]]
            except ValueError:
                raise ParseError(f"non-integer field in '{line}'", lineno, path)
            if values[0] < 0 or values[1] < 0:
                raise NegativeId(f"negative vertex id in '{line}'", lineno, path)
            src.append(values[0])
            dst.append(values[1])
            if weighted:
                wts.append(values[2])
    max_id = max(max(src), max(dst)) if src else -1
    n = num_vertices if num_vertices is not None else header_n
    if n is None:
        n = max_id + 1
    elif n <= max_id:
        raise ParseError(f"vertex count {n} does not cover id {max_id}", path=path)
    graph = Graph(n, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
                  np.array(wts, dtype=np.int64) if weighted else None)
    if symmetrize:
        graph = graph.symmetrized()
    logger.info("[GraphStore] loaded %s: n=%d m=%d", path, graph.n, graph.m)
    return graph


def write_edge_list(graph: Graph, path: str):
    with open(path, "w") as f:
        f.write(f"# vertices={graph.n}\n")
        for edge in graph.edges():
            f.write(" ".join(str(x) for x in edge) + "\n")


def write_cache(graph: Graph, path: str):
    weights = graph.out_weights if graph.out_weights is not None else np.ones(graph.m, dtype=np.int64)
    with open(path, "wb") as f:
        f.write(CACHE_MAGIC)
        f.write(struct.pack("<qq", graph.n, graph.m))
        f.write(graph.out_offsets.astype("<i8").tobytes())
        f.write(graph.out_neighbors.astype("<i8").tobytes())
        f.write(weights.astype("<i8").tobytes())


def read_cache(path: str, weighted: Optional[bool] = None) -> Graph:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(CACHE_MAGIC) or len(data) < len(CACHE_MAGIC) + 16:
        raise CacheFormatError(f"{path}: missing {CACHE_MAGIC.decode()} header")
    n, m = struct.unpack_from("<qq", data, len(CACHE_MAGIC))
    body = np.frombuffer(data, dtype="<i8", offset=len(CACHE_MAGIC) + 16)
    if len(body) != (n + 1) + 2 * m:
        raise CacheFormatError(f"{path}: expected {(n + 1) + 2 * m} words, found {len(body)}")
    offsets, nbrs, weights = body[:n + 1], body[n + 1:n + 1 + m], body[n + 1 + m:]
    if weighted is None:
        weighted = bool(np.any(weights != 1))
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(offsets))
    return Graph(n, src, nbrs.astype(np.int64), weights.astype(np.int64) if weighted else None)


def load_graph(path: str, weighted: Optional[bool] = None, symmetrize: bool = False) -> Graph:
    """Dispatch on suffix: `.csr` binary cache, `.wel` weighted text, anything else unweighted text."""
    if path.endswith(".csr"):
        if not os.path.exists(path):
            raise ParseError(f"graph file not found: {path}", path=path)
        graph = read_cache(path, weighted)
        return graph.symmetrized() if symmetrize else graph
    if weighted is None:
        weighted = path.endswith(".wel")
    return load_edge_list(path, weighted=weighted, symmetrize=symmetrize)


# ---------------------------------------------------------------- partitions

@dataclass(frozen=True, eq=False)
class SegmentedSubgraph:
    """Edges whose inner endpoint lies in [inner_lo, inner_hi), indexed by outer vertex."""
    id: int
    inner_lo: int
    inner_hi: int
    offsets: np.ndarray
    neighbors: np.ndarray
    weights: Optional[np.ndarray]

    @property
    def num_edges(self) -> int:
        return int(len(self.neighbors))

    @cached_property
    def lists(self) -> Tuple[list, list, Optional[list]]:
        w = self.weights.tolist() if self.weights is not None else None
        return self.offsets.tolist(), self.neighbors.tolist(), w


def _segment_bounds(n: int, num_segments: int, scheme: str, inner_degree: np.ndarray) -> List[int]:
    if scheme == FVC:
        width = -(-n // num_segments) if n else 0
        return [min(i * width, n) for i in range(num_segments)] + [n]
    prefix = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(inner_degree, out=prefix[1:])
    total = int(prefix[-1])
    bounds = [0]
    for j in range(1, num_segments):
        cut = int(np.searchsorted(prefix, total * j / num_segments, side="left"))
        bounds.append(min(max(cut, bounds[-1]), n))
    bounds.append(n)
    return bounds


def build_ssgs(graph: Graph, num_segments: int, scheme: str = FVC, direction: str = "pull") -> List[SegmentedSubgraph]:
    """Pull traversals use the in-adjacency (inner = src); push the out-adjacency (inner = dst)."""
    if num_segments < 1:
        raise ZeroSegments(f"number of segments must be >= 1, got {num_segments}")
    if direction == "pull":
        offsets, nbrs, wts, inner_degree = graph.in_offsets, graph.in_neighbors, graph.in_weights, graph.out_degree
    else:
        offsets, nbrs, wts, inner_degree = graph.out_offsets, graph.out_neighbors, graph.out_weights, graph.in_degree
    bounds = _segment_bounds(graph.n, num_segments, scheme, inner_degree)
    outer = np.repeat(np.arange(graph.n, dtype=np.int64), np.diff(offsets))
    segments = []
    for i in range(num_segments):
        lo, hi = bounds[i], bounds[i + 1]
        mask = (nbrs >= lo) & (nbrs < hi)
        counts = np.bincount(outer[mask], minlength=graph.n) if graph.n else np.zeros(0, np.int64)
        seg_offsets = np.zeros(graph.n + 1, dtype=np.int64)
        np.cumsum(counts, out=seg_offsets[1:])
        segments.append(SegmentedSubgraph(i, lo, hi, seg_offsets, nbrs[mask],
                                          wts[mask] if wts is not None else None))
    logger.debug("[GraphStore] %d %s segments (%s): %s", num_segments, scheme, direction,
                 [s.num_edges for s in segments])
    return segments


@dataclass(frozen=True)
class BlockedChunks:
    chunk_start: Tuple[int, ...]
    chunk_end: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.chunk_start)

    def ranges(self) -> List[Tuple[int, int]]:
        return list(zip(self.chunk_start, self.chunk_end))


def _edge_aware_cuts(lo: int, hi: int, degrees: np.ndarray, grain: int) -> List[Tuple[int, int]]:
    prefix = np.zeros(hi - lo + 1, dtype=np.int64)
    np.cumsum(degrees[lo:hi], out=prefix[1:])
    out, start = [], 0
    width = hi - lo
    while start < width:
        end = int(np.searchsorted(prefix, prefix[start] + grain, side="left"))
        end = min(max(end, start + 1), width)
        out.append((lo + start, lo + end))
        start = end
    return out


def build_bsg_chunks(outer_range: Tuple[int, int], graph: Graph, grain: int, scheme: str = FVC,
                     direction: str = "push") -> BlockedChunks:
    """Chunks of the outer vertex range; EVC balances by the outer endpoint's degree."""
    lo, hi = outer_range
    if grain < 1:
        raise ValueError(f"grain must be >= 1, got {grain}")
    if scheme == FVC:
        ranges = [(s, min(s + grain, hi)) for s in range(lo, hi, grain)]
    else:
        degrees = graph.out_degree if direction == "push" else graph.in_degree
        ranges = _edge_aware_cuts(lo, hi, degrees, grain)
    return BlockedChunks(tuple(r[0] for r in ranges), tuple(r[1] for r in ranges))


def chunk_ids(ids: Sequence[int], degrees: Sequence[int], grain: int, scheme: str = FVC) -> List[Tuple[int, int]]:
    """Position ranges over a sparse id list (sparse frontiers are chunked by position)."""
    count = len(ids)
    if scheme == FVC:
        return [(s, min(s + grain, count)) for s in range(0, count, grain)]
    out, start, acc = [], 0, 0
    for pos, v in enumerate(ids):
        acc += degrees[v]
        if acc >= grain:
            out.append((start, pos + 1))
            start, acc = pos + 1, 0
    if start < count:
        out.append((start, count))
    return out
