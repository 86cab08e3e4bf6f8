# services/generators.py
"""
Synthetic graphs for tests, benchmarks and the `gen` subcommand.
All generators are seeded and return services.graph_store.Graph.
"""

from typing import Optional, Tuple

import numpy as np

from services.graph_store import Graph

GENERATORS = ("rmat", "path", "grid", "star", "bipartite", "cycle", "complete")


def _finish(n: int, src, dst, symmetric: bool, weights: Optional[Tuple[int, int]], rng) -> Graph:
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    w = None
    if weights is not None:
        w = rng.integers(weights[0], weights[1] + 1, size=len(src), dtype=np.int64)
    if symmetric:
        src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
        if w is not None:
            w = np.concatenate([w, w])
    return Graph(n, src, dst, w)


def rmat(n: int, m: int, seed: int = 0, a: float = 0.57, b: float = 0.19, c: float = 0.19,
         symmetric: bool = True, weights: Optional[Tuple[int, int]] = None) -> Graph:
    """Recursive-matrix edges over ceil(log2 n) levels, ids folded into [0, n).
    Self-loops are dropped and repeated pairs collapsed, so every edge is simple."""
    rng = np.random.default_rng(seed)
    scale = max(1, int(np.ceil(np.log2(max(n, 2)))))
    src = np.zeros(m, dtype=np.int64)
    dst = np.zeros(m, dtype=np.int64)
    for _ in range(scale):
        r = rng.random(m)
        right = ((r >= a) & (r < a + b)) | (r >= a + b + c)
        down = r >= a + b
        src = (src << 1) | down
        dst = (dst << 1) | right
    src %= n
    dst %= n
    keep = src != dst
    src, dst = src[keep], dst[keep]
    if symmetric:
        src, dst = np.minimum(src, dst), np.maximum(src, dst)
    pairs = np.unique(np.stack([src, dst], axis=1), axis=0)
    return _finish(n, pairs[:, 0], pairs[:, 1], symmetric, weights, rng)


def path(n: int, symmetric: bool = True, weights: Optional[Tuple[int, int]] = None, seed: int = 0) -> Graph:
    idx = np.arange(max(n - 1, 0))
    return _finish(n, idx, idx + 1, symmetric, weights, np.random.default_rng(seed))


def cycle(n: int, symmetric: bool = True, weights: Optional[Tuple[int, int]] = None, seed: int = 0) -> Graph:
    idx = np.arange(n)
    return _finish(n, idx, (idx + 1) % n, symmetric, weights, np.random.default_rng(seed))


def grid(rows: int, cols: int, symmetric: bool = True, weights: Optional[Tuple[int, int]] = None,
         seed: int = 0) -> Graph:
    ids = np.arange(rows * cols).reshape(rows, cols)
    src = np.concatenate([ids[:, :-1].ravel(), ids[:-1, :].ravel()])
    dst = np.concatenate([ids[:, 1:].ravel(), ids[1:, :].ravel()])
    return _finish(rows * cols, src, dst, symmetric, weights, np.random.default_rng(seed))


def star(n: int, symmetric: bool = True, weights: Optional[Tuple[int, int]] = None, seed: int = 0) -> Graph:
    leaves = np.arange(1, n)
    return _finish(n, np.zeros(len(leaves), dtype=np.int64), leaves, symmetric, weights,
                   np.random.default_rng(seed))


def complete(n: int, weights: Optional[Tuple[int, int]] = None, seed: int = 0) -> Graph:
    src, dst = np.nonzero(~np.eye(n, dtype=bool))
    return _finish(n, src, dst, False, weights, np.random.default_rng(seed))


def bipartite(users: int, items: int, degree: int, seed: int = 0,
              weights: Optional[Tuple[int, int]] = (1, 5)) -> Graph:
    """Users are [0, users), items are [users, users + items); each user rates `degree` distinct items."""
    rng = np.random.default_rng(seed)
    degree = min(degree, items)
    src, dst = [], []
    for u in range(users):
        picks = rng.choice(items, size=degree, replace=False)
        src.extend([u] * degree)
        dst.extend((users + picks).tolist())
    return _finish(users + items, src, dst, False, weights, rng)


def generate(kind: str, n: int, m: Optional[int] = None, seed: int = 0, weights: Optional[Tuple[int, int]] = None,
             symmetric: bool = True) -> Graph:
    """Name-based dispatch used by the CLI; `n` is the side length for grids and the user count for bipartite."""
    if kind == "rmat":
        return rmat(n, m if m is not None else 8 * n, seed=seed, symmetric=symmetric, weights=weights)
    if kind == "path":
        return path(n, symmetric, weights, seed)
    if kind == "cycle":
        return cycle(n, symmetric, weights, seed)
    if kind == "grid":
        return grid(n, n, symmetric, weights, seed)
    if kind == "star":
        return star(n, symmetric, weights, seed)
    if kind == "complete":
        return complete(n, weights, seed)
    if kind == "bipartite":
        return bipartite(n, max(1, n // 2), m if m is not None else 8, seed, weights or (1, 5))
    raise ValueError(f"unknown generator '{kind}' (choose from {', '.join(GENERATORS)})")
