# services/atomics.py
"""
Atomic read-modify-write on shared vertex data.
Updates go through striped locks keyed by vertex id. The lock stands in for the
compare-and-swap retry loop over a value's bit pattern that native floating-point
atomics use; Python lists expose no hardware CAS.
Every helper reports whether the stored value changed so applyModified can track
modified vertices.
"""

import threading
from typing import List

SUM, MIN, MAX = "sum", "min", "max"

_STRIPES = 256
_MASK = _STRIPES - 1
_LOCKS: List[threading.Lock] = [threading.Lock() for _ in range(_STRIPES)]


def atomic_update(container: list, idx, op: str, value, key: int) -> bool:
    with _LOCKS[key & _MASK]:
        old = container[idx]
        if op == SUM:
            new = old + value
        elif op == MIN:
            new = value if value < old else old
        else:
            new = value if value > old else old
        container[idx] = new
    return new != old


def compare_and_swap(container: list, idx, expected, new, key: int) -> bool:
    with _LOCKS[key & _MASK]:
        if container[idx] != expected:
            return False
        container[idx] = new
    return True


def claim(flags: list, v: int) -> bool:
    """Visited-flag test-and-set; True for exactly one caller per vertex."""
    if flags[v]:
        return False
    with _LOCKS[v & _MASK]:
        if flags[v]:
            return False
        flags[v] = True
    return True


def buffer_update(buffer: dict, key, op: str, value):
    """Task-local reduction into a buffer that is merged after the traversal."""
    old = buffer.get(key)
    if old is None:
        buffer[key] = value
    elif op == SUM:
        buffer[key] = old + value
    elif op == MIN:
        if value < old:
            buffer[key] = value
    elif value > old:
        buffer[key] = value


def merge_value(container: list, idx, op: str, value) -> bool:
    old = container[idx]
    if op == SUM:
        new = old + value
    elif op == MIN:
        new = value if value < old else old
    else:
        new = value if value > old else old
    container[idx] = new
    return new != old
