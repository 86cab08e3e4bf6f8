# services/oracles.py
"""
Serial reference implementations of the shipped programs, keyed by program stem.
Each oracle reads the run's constants (maxIters, damp, source, ...) so overrides
flow through, and produces the vectors `verify` compares against:
- exact comparison for integer outputs (BFS levels, CC labels, SSSP distances)
- relative tolerance for floating-point scores
BFS parents are not unique, so the run's parent vector is first turned into levels.
"""

import heapq
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from services.graph_store import Graph

logger = logging.getLogger(__name__)

INF_DISTANCE = 2147483647
FLOAT_RTOL = 1e-6

Vectors = Dict[str, np.ndarray]


@dataclass(frozen=True)
class Mismatch:
    vector: str
    vertex: int
    expected: Any
    observed: Any

    def __str__(self) -> str:
        return f"{self.vector}[{self.vertex}]: expected {self.expected}, got {self.observed}"


@dataclass(frozen=True)
class Oracle:
    program: str
    description: str
    compute: Callable[[Graph, Mapping[str, Any]], Vectors]
    exact: bool = False
    rtol: float = FLOAT_RTOL
    observe: Optional[Callable[[Vectors, Graph, Mapping[str, Any]], Vectors]] = None

    def expected(self, graph: Graph, params: Mapping[str, Any]) -> Vectors:
        return self.compute(graph, params)

    def observed(self, vectors: Vectors, graph: Graph, params: Mapping[str, Any]) -> Vectors:
        if self.observe is not None:
            return self.observe(vectors, graph, params)
        return vectors

    def check(self, vectors: Vectors, graph: Graph, params: Mapping[str, Any]) -> Optional[Mismatch]:
        expected = self.expected(graph, params)
        return compare_vectors(expected, self.observed(vectors, graph, params), self.exact, self.rtol)


def compare_vectors(expected: Vectors, observed: Vectors, exact: bool, rtol: float = FLOAT_RTOL,
                    atol: float = 1e-12) -> Optional[Mismatch]:
    """First diverging (vector, vertex) in `expected` order, or None."""
    for name, want in expected.items():
        got = observed.get(name)
        if got is None:
            return Mismatch(name, -1, "a vector", "nothing")
        want = np.asarray(want)
        got = np.asarray(got)
        if want.shape != got.shape:
            return Mismatch(name, -1, f"shape {want.shape}", f"shape {got.shape}")
        if exact:
            bad = want != got
        else:
            bad = ~np.isclose(got, want, rtol=rtol, atol=atol, equal_nan=True)
        if bad.ndim > 1:
            bad = bad.reshape(bad.shape[0], -1).any(axis=1)
        hits = np.flatnonzero(bad)
        if len(hits):
            v = int(hits[0])
            return Mismatch(name, v, want[v].tolist(), got[v].tolist())
    return None


def compare_runs(expected: Vectors, observed: Vectors, rtol: float = FLOAT_RTOL) -> Optional[Mismatch]:
    """Run-against-run comparison: integer and bool vectors exactly, floating vectors within rtol."""
    for name, want in expected.items():
        exact = not np.issubdtype(np.asarray(want).dtype, np.floating)
        mismatch = compare_vectors({name: want}, observed, exact, rtol)
        if mismatch is not None:
            return mismatch
    return None


def _edges(graph: Graph) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    return graph.edge_arrays()


def _param(params: Mapping[str, Any], name: str, default):
    return params.get(name, default)


# ---------------------------------------------------------------- PageRank family

def pagerank(graph: Graph, params: Mapping[str, Any]) -> Vectors:
    n = graph.n
    damp = float(_param(params, "damp", 0.85))
    iters = int(_param(params, "maxIters", 20))
    if n == 0:
        return {"old_rank": np.zeros(0)}
    src, dst, _ = _edges(graph)
    deg = graph.out_degree.astype(np.float64)
    old = np.full(n, 1.0 / n)
    for _ in range(iters):
        new = np.zeros(n)
        np.add.at(new, dst, old[src] / deg[src])
        old = (1.0 - damp) / n + damp * new
    return {"old_rank": old}


def prdelta(graph: Graph, params: Mapping[str, Any]) -> Vectors:
    """Delta propagation: only vertices whose delta is large against their rank push next round."""
    n = graph.n
    damp = float(_param(params, "damp", 0.85))
    epsilon = float(_param(params, "epsilon", 0.1))
    iters = int(_param(params, "maxIters", 10))
    if n == 0:
        return {"Rank": np.zeros(0)}
    src, dst, _ = _edges(graph)
    deg = graph.out_degree.astype(np.float64)
    base = (1.0 - damp) / n
    delta = np.full(n, 1.0 / n)
    rank = np.zeros(n)
    active = np.ones(n, dtype=bool)
    for i in range(1, iters + 1):
        delta_sum = np.zeros(n)
        live = active[src]
        np.add.at(delta_sum, dst[live], delta[src[live]] / deg[src[live]])
        if i == 1:
            delta = damp * delta_sum + base
            rank += delta
            delta = delta - 1.0 / n
        else:
            delta = delta_sum * damp
            rank += delta
        active = np.abs(delta) > epsilon * rank
    return {"Rank": rank}


def pr_ec(graph: Graph, params: Mapping[str, Any]) -> Vectors:
    n = graph.n
    damp = float(_param(params, "damp", 0.85))
    iters = int(_param(params, "maxIters", 10))
    if n == 0:
        return {"old_rank": np.zeros(0), "old_ec": np.zeros(0)}
    src, dst, _ = _edges(graph)
    deg = graph.out_degree.astype(np.float64)
    rank = np.full(n, 1.0 / n)
    ec = rank.copy()
    for _ in range(iters):
        new = np.zeros(n)
        np.add.at(new, dst, rank[src] / deg[src])
        rank = (1.0 - damp) / n + damp * new
    for _ in range(iters):
        new = np.zeros(n)
        np.add.at(new, dst, ec[src])
        ec = new
    return {"old_rank": rank, "old_ec": ec}


# ---------------------------------------------------------------- traversals

def bfs_levels(graph: Graph, source: int) -> np.ndarray:
    level = np.full(graph.n, -1, dtype=np.int64)
    if not 0 <= source < graph.n:
        return level
    offsets, nbrs, _ = graph.out_lists
    level[source] = 0
    frontier = [source]
    depth = 0
    while frontier:
        depth += 1
        nxt = []
        for u in frontier:
            for i in range(offsets[u], offsets[u + 1]):
                w = nbrs[i]
                if level[w] == -1:
                    level[w] = depth
                    nxt.append(w)
        frontier = nxt
    return level


def levels_from_parents(parent: np.ndarray, graph: Graph, source: int, reference: np.ndarray) -> np.ndarray:
    """Levels implied by a parent vector, given reference BFS levels.
    A vertex whose parent is not an in-neighbour one level up gets -2."""
    parent = np.asarray(parent, dtype=np.int64)
    level = np.full(graph.n, -1, dtype=np.int64)
    in_offsets, in_nbrs, _ = graph.in_lists
    for v in range(graph.n):
        p = int(parent[v])
        if v == source:
            level[v] = 0 if p == source else -2
        elif p == -1:
            continue
        elif 0 <= p < graph.n and p in in_nbrs[in_offsets[v]:in_offsets[v + 1]] and reference[p] >= 0:
            level[v] = reference[p] + 1
        else:
            level[v] = -2
    return level


def _bfs_expected(graph: Graph, params: Mapping[str, Any]) -> Vectors:
    return {"level": bfs_levels(graph, int(_param(params, "source", 0)))}


def _bfs_observed(vectors: Vectors, graph: Graph, params: Mapping[str, Any]) -> Vectors:
    source = int(_param(params, "source", 0))
    return {"level": levels_from_parents(vectors["parent"], graph, source, bfs_levels(graph, source))}


def components(graph: Graph, params: Mapping[str, Any]) -> Vectors:
    """Min-label fixpoint: every vertex ends with the smallest id that reaches it."""
    labels = np.arange(graph.n, dtype=np.int64)
    src, dst, _ = _edges(graph)
    while True:
        nxt = labels.copy()
        np.minimum.at(nxt, dst, labels[src])
        if np.array_equal(nxt, labels):
            return {"IDs": labels}
        labels = nxt


def sssp(graph: Graph, params: Mapping[str, Any]) -> Vectors:
    source = int(_param(params, "source", 0))
    dist = np.full(graph.n, INF_DISTANCE, dtype=np.int64)
    if not 0 <= source < graph.n:
        return {"SP": dist}
    offsets, nbrs, weights = graph.out_lists
    best = {source: 0}
    heap = [(0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > best.get(u, INF_DISTANCE):
            continue
        for i in range(offsets[u], offsets[u + 1]):
            w = nbrs[i]
            nd = d + (weights[i] if weights is not None else 1)
            if nd < best.get(w, INF_DISTANCE):
                best[w] = nd
                heapq.heappush(heap, (nd, w))
    for v, d in best.items():
        dist[v] = d
    return {"SP": dist}


def betweenness(graph: Graph, params: Mapping[str, Any]) -> Vectors:
    """Single-source dependency accumulation over BFS levels."""
    source = int(_param(params, "source", 0))
    level = bfs_levels(graph, source)
    src, dst, _ = _edges(graph)
    lv, lw = level[src], level[dst]
    tree = (lv >= 0) & (lw == lv + 1)
    paths = np.zeros(graph.n)
    dep = np.zeros(graph.n)
    if not 0 <= source < graph.n:
        return {"paths": paths, "dep": dep}
    paths[source] = 1.0
    depth = int(level.max()) if graph.n else 0
    for d in range(depth):
        e = tree & (lv == d)
        np.add.at(paths, dst[e], paths[src[e]])
    for d in range(depth - 1, -1, -1):
        e = tree & (lv == d)
        np.add.at(dep, src[e], paths[src[e]] / paths[dst[e]] * (1.0 + dep[dst[e]]))
    return {"paths": paths, "dep": dep}


# ---------------------------------------------------------------- collaborative filtering

def _cf_shape(params: Mapping[str, Any]) -> Tuple[int, float, float, int]:
    return (int(_param(params, "K", 8)), float(_param(params, "step", 0.001)),
            float(_param(params, "lambda_reg", 0.001)), int(_param(params, "maxIters", 10)))


def cf_loss(graph: Graph, user_latent: np.ndarray, item_latent: np.ndarray) -> float:
    src, dst, w = _edges(graph)
    ratings = w.astype(np.float64) if w is not None else np.ones(len(src))
    est = np.sum(np.asarray(user_latent)[src] * np.asarray(item_latent)[dst], axis=1)
    return float(np.sum((ratings - est) ** 2))


def collaborative_filtering(graph: Graph, params: Mapping[str, Any]) -> Vectors:
    k, step, reg, iters = _cf_shape(params)
    src, dst, w = _edges(graph)
    ratings = w.astype(np.float64) if w is not None else np.ones(len(src))
    users = np.full((graph.n, k), 0.5)
    items = np.full((graph.n, k), 0.5)
    for _ in range(iters):
        err = ratings - np.sum(users[src] * items[dst], axis=1)
        user_grad = np.zeros_like(users)
        item_grad = np.zeros_like(items)
        np.add.at(item_grad, dst, users[src] * err[:, None])
        np.add.at(user_grad, src, items[dst] * err[:, None])
        users = users + step * (user_grad - reg * users)
        items = items + step * (item_grad - reg * items)
    return {"user_latent": users, "item_latent": items}


ORACLES: Dict[str, Oracle] = {
    "pagerank": Oracle("pagerank", "dense power iteration", pagerank),
    "prdelta": Oracle("prdelta", "direct delta-propagation loop", prdelta),
    "pr_ec": Oracle("pr_ec", "separate PageRank and eigenvector iterations", pr_ec),
    "bfs": Oracle("bfs", "serial level-synchronous BFS", _bfs_expected, exact=True, observe=_bfs_observed),
    "cc": Oracle("cc", "serial label propagation to fixpoint", components, exact=True),
    "cc_async": Oracle("cc_async", "serial label propagation to fixpoint", components, exact=True),
    "sssp": Oracle("sssp", "Dijkstra", sssp, exact=True),
    "bc": Oracle("bc", "serial Brandes accumulation from one source", betweenness),
    "cf": Oracle("cf", "batch gradient descent in numpy", collaborative_filtering),
}


def oracle_for(program: str) -> Optional[Oracle]:
    oracle = ORACLES.get(program)
    if oracle is None:
        logger.info("[Oracles] no reference for '%s'; comparing against the serial default run", program)
    return oracle
