# services/frontier.py
"""
Vertex subsets (frontiers) in three representations.
- SA: sparse array of ids (may hold duplicates when dedup is disabled)
- BA: dense boolean array
- BV: bitvector of 64-bit words, bit v in word v >> 6
Conversions are lossless for duplicate-free sets; size and sum_out_degrees are cached.
"""

from typing import Callable, Iterable, List, Optional

import numpy as np

SA, BA, BV = "SA", "BA", "BV"
WORD = 64


class Frontier:
    def __init__(self, n: int, repr_: str, data: np.ndarray):
        self.n = int(n)
        self.repr = repr_
        self.data = data
        self._size: Optional[int] = None
        self._sum_out: Optional[int] = None

    # ------------------------------------------------------------ constructors

    @classmethod
    def from_ids(cls, n: int, ids: Iterable[int]) -> "Frontier":
        return cls(n, SA, np.fromiter(ids, dtype=np.int64) if not isinstance(ids, np.ndarray)
                   else ids.astype(np.int64))

    @classmethod
    def from_flags(cls, flags: np.ndarray) -> "Frontier":
        flags = np.asarray(flags, dtype=bool)
        return cls(len(flags), BA, flags)

    @classmethod
    def full(cls, n: int) -> "Frontier":
        return cls(n, SA, np.arange(n, dtype=np.int64))

    @classmethod
    def empty(cls, n: int) -> "Frontier":
        return cls(n, SA, np.zeros(0, dtype=np.int64))

    def copy(self) -> "Frontier":
        return Frontier(self.n, self.repr, self.data.copy())

    # ------------------------------------------------------------ queries

    @property
    def size(self) -> int:
        if self._size is None:
            if self.repr == SA:
                self._size = int(len(self.data))
            elif self.repr == BA:
                self._size = int(np.count_nonzero(self.data))
            else:
                self._size = int(np.unpackbits(self.data.view(np.uint8)).sum())
        return self._size

    def sum_out_degrees(self, out_degree: np.ndarray) -> int:
        if self._sum_out is None:
            self._sum_out = int(out_degree[self.ids()].sum()) if self.n else 0
        return self._sum_out

    def ids(self) -> np.ndarray:
        if self.repr == SA:
            return self.data
        return np.flatnonzero(self.flags())

    def flags(self) -> np.ndarray:
        if self.repr == BA:
            return self.data
        if self.repr == SA:
            flags = np.zeros(self.n, dtype=bool)
            flags[self.data] = True
            return flags
        bits = np.unpackbits(self.data.view(np.uint8), bitorder="little")
        return bits[:self.n].astype(bool)

    def words(self) -> np.ndarray:
        if self.repr == BV:
            return self.data
        flags = self.flags()
        padded = np.zeros(-(-self.n // WORD) * WORD, dtype=bool)
        padded[:self.n] = flags
        return np.packbits(padded, bitorder="little").view(np.uint64)

    def sorted_ids(self) -> List[int]:
        return sorted(set(self.ids().tolist()))

    def member_test(self) -> Callable[[int], bool]:
        """Fast membership closure over plain Python containers (dense representations only)."""
        if self.repr == BV:
            words = [int(w) for w in self.data]
            return lambda v: (words[v >> 6] >> (v & 63)) & 1 == 1
        flags = self.flags().tolist()
        return flags.__getitem__

    # ------------------------------------------------------------ mutation

    def add_vertex(self, v: int):
        if self.repr != SA:
            self.data, self.repr = self.ids(), SA
        self.data = np.append(self.data, np.int64(v))
        self._size = None
        self._sum_out = None

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"Frontier({self.repr}, n={self.n}, size={self.size})"


def frontier_convert(frontier: Frontier, target: str) -> Frontier:
    if frontier.repr == target:
        return frontier
    if target == SA:
        out = Frontier(frontier.n, SA, frontier.ids())
    elif target == BA:
        out = Frontier(frontier.n, BA, frontier.flags())
    elif target == BV:
        out = Frontier(frontier.n, BV, frontier.words())
    else:
        raise ValueError(f"unknown frontier representation '{target}'")
    out._sum_out = frontier._sum_out if frontier.repr != SA else None
    return out


def sum_out_degrees(frontier: Frontier, out_degree: np.ndarray) -> int:
    return frontier.sum_out_degrees(out_degree)
