"""Tree-structured memo of family scores.

The first level of the tree branches on the child node, each further level
on the next parent in ascending index order, so every family reaches exactly
one entry. Branches are allocated only when first visited.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterable

from .graph import bits

_MISSING = object()


class _Entry:
    __slots__ = ("branches", "value")

    def __init__(self):
        self.branches: dict[int, _Entry] = {}
        self.value = _MISSING


class ScoreCache:
    """Memo of family scores keyed by (child, parent set).

    Parameters
    ----------
    max_entries : int, optional
        When the number of stored scores would exceed this, the whole tree is
        cleared first. ``None`` (default) never evicts.
    """

    def __init__(self, max_entries: int | None = None):
        self.max_entries = max_entries
        self._roots: dict[int, _Entry] = {}
        self._size = 0
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self._size

    def _walk(self, child: int, parents: Iterable[int], create: bool):
        node = self._roots.get(child)
        if node is None:
            if not create:
                return None
            node = self._roots[child] = _Entry()
        for p in parents:
            nxt = node.branches.get(p)
            if nxt is None:
                if not create:
                    return None
                nxt = node.branches[p] = _Entry()
            node = nxt
        return node

    @staticmethod
    def _ordered(child: int, parents) -> list[int]:
        ps = bits(parents) if isinstance(parents, int) else sorted(set(parents))
        if child in ps:
            raise ValueError(f"node {child} listed among its own parents")
        return ps

    def get(self, child: int, parents):
        """Stored score or ``None``; does not touch the counters."""
        node = self._walk(child, self._ordered(child, parents), create=False)
        if node is None or node.value is _MISSING:
            return None
        return node.value

    def get_or_compute(self, child: int, parents, compute: Callable[[], float]) -> float:
        """Cached score of the family, running ``compute()`` on first sight.

        ``parents`` may be an iterable of node indices in any order or a
        bitmask int.
        """
        ps = self._ordered(child, parents)
        node = self._walk(child, ps, create=False)
        if node is not None and node.value is not _MISSING:
            self.hits += 1
            return node.value
        value = compute()
        with self._lock:
            self.misses += 1
            if self.max_entries is not None and self._size >= self.max_entries:
                self.clear()
            node = self._walk(child, ps, create=True)
            if node.value is _MISSING:
                self._size += 1
                node.value = value
        return node.value

    def clear(self) -> None:
        """Drop every entry; counters are kept."""
        self._roots = {}
        self._size = 0

    def stats(self) -> tuple[int, int]:
        return self.hits, self.misses

    def families(self) -> list[tuple[int, tuple[int, ...]]]:
        out = []

        def visit(child, node, path):
            if node.value is not _MISSING:
                out.append((child, tuple(path)))
            for p in sorted(node.branches):
                visit(child, node.branches[p], path + [p])

        for child in sorted(self._roots):
            visit(child, self._roots[child], [])
        return out
