"""DAG representation and structural operations.

A :class:`Dag` is immutable. Internally every node carries two bitmask rows,
its parent set and its descendant set, packed into Python ints; the boolean
matrices described by the public API are views built from those rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class GraphError(Exception):
    """Base class for structural errors."""


class CycleError(GraphError):
    pass


class AdjacentError(GraphError):
    pass


class MissingArcError(GraphError):
    pass


class NotCoveredError(GraphError):
    pass


class OverlapError(GraphError, ValueError):
    pass


class SizeMismatchError(GraphError, ValueError):
    pass


def bits(mask: int) -> list[int]:
    """Indices of the set bits of ``mask`` in ascending order."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def mask_of(nodes: Iterable[int]) -> int:
    m = 0
    for v in nodes:
        m |= 1 << v
    return m


def closure_from_parents(parents: Sequence[int]) -> tuple[int, ...]:
    """Descendant rows (paths of length >= 1) for a parent-mask list.

    Raises CycleError if the parent lists do not describe a DAG.
    """
    n = len(parents)
    children = [0] * n
    for v, pm in enumerate(parents):
        for p in bits(pm):
            children[p] |= 1 << v
    order = _topological(parents)
    if order is None:
        raise CycleError("parent sets contain a directed cycle")
    desc = [0] * n
    for v in reversed(order):
        d = children[v]
        for c in bits(children[v]):
            d |= desc[c]
        desc[v] = d
    return tuple(desc)


def _topological(parents: Sequence[int]) -> list[int] | None:
    n = len(parents)
    remaining = list(parents)
    placed = 0
    order = []
    while len(order) < n:
        progress = False
        for v in range(n):
            if not (placed >> v) & 1 and remaining[v] & ~placed == 0:
                order.append(v)
                placed |= 1 << v
                progress = True
                break
        if not progress:
            return None
    return order


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int

    def __post_init__(self):
        if self.tail == self.head:
            raise ValueError(f"self-loop on node {self.tail}")
        if self.tail < 0 or self.head < 0:
            raise ValueError("node indices must be non-negative")

    def __iter__(self):
        return iter((self.tail, self.head))


@dataclass(frozen=True)
class Fingerprint:
    """Canonical label of a Markov equivalence class.

    ``skeleton`` holds sorted unordered pairs ``(a, b)`` with ``a < b``;
    ``vstructures`` holds sorted triples ``(a, c, b)`` meaning ``a -> c <- b``
    with ``a < b`` non-adjacent.
    """

    skeleton: tuple[tuple[int, int], ...]
    vstructures: tuple[tuple[int, int, int], ...]

    def key(self) -> tuple:
        return (self.skeleton, self.vstructures)

    def __lt__(self, other: "Fingerprint") -> bool:
        return self.key() < other.key()

    def __le__(self, other: "Fingerprint") -> bool:
        return self.key() <= other.key()

    def to_json(self) -> dict:
        return {
            "skeleton": [list(p) for p in self.skeleton],
            "vstructures": [list(t) for t in self.vstructures],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Fingerprint":
        return cls(
            tuple(tuple(p) for p in obj["skeleton"]),
            tuple(tuple(t) for t in obj["vstructures"]),
        )


class Dag:
    """Immutable directed acyclic graph over nodes ``0..n-1``.

    Parameters
    ----------
    n : int
        Number of nodes.
    arcs : iterable of (tail, head)
        Arcs of the graph. A cycle raises :class:`CycleError`.
    """

    __slots__ = ("n", "_parents", "_desc", "_hash")

    def __init__(self, n: int, arcs: Iterable[tuple[int, int]] = ()):
        parents = [0] * n
        for t, h in arcs:
            if not (0 <= t < n and 0 <= h < n) or t == h:
                raise ValueError(f"invalid arc {t}->{h} for {n} nodes")
            if (parents[t] >> h) & 1:
                raise AdjacentError(f"arcs {t}->{h} and {h}->{t} both given")
            parents[h] |= 1 << t
        self._init(n, tuple(parents), closure_from_parents(parents))

    def _init(self, n, parents, desc):
        self.n = n
        self._parents = parents
        self._desc = desc
        self._hash = None

    @classmethod
    def from_parent_masks(cls, parents: Sequence[int], desc: Sequence[int] | None = None) -> "Dag":
        g = cls.__new__(cls)
        parents = tuple(int(p) for p in parents)
        if desc is None:
            desc = closure_from_parents(parents)
        g._init(len(parents), parents, tuple(desc))
        return g

    @classmethod
    def empty(cls, n: int) -> "Dag":
        return cls.from_parent_masks((0,) * n, (0,) * n)

    # -- views -------------------------------------------------------------

    @property
    def parent_masks(self) -> tuple[int, ...]:
        return self._parents

    @property
    def descendant_masks(self) -> tuple[int, ...]:
        return self._desc

    @property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        for h, pm in enumerate(self._parents):
            for t in bits(pm):
                a[t, h] = True
        return a

    @property
    def descendants(self) -> np.ndarray:
        d = np.zeros((self.n, self.n), dtype=bool)
        for x, dm in enumerate(self._desc):
            for y in bits(dm):
                d[x, y] = True
        return d

    def arcs(self) -> list[tuple[int, int]]:
        return sorted((t, h) for h, pm in enumerate(self._parents) for t in bits(pm))

    @property
    def num_arcs(self) -> int:
        return sum(bin(pm).count("1") for pm in self._parents)

    def parents(self, v: int) -> list[int]:
        return bits(self._parents[v])

    def family(self, v: int) -> list[int]:
        return bits(self._parents[v] | (1 << v))

    def has_arc(self, tail: int, head: int) -> bool:
        return bool((self._parents[head] >> tail) & 1)

    def adjacent(self, a: int, b: int) -> bool:
        return self.has_arc(a, b) or self.has_arc(b, a)

    def is_descendant(self, x: int, y: int) -> bool:
        """True iff a directed path of length >= 1 leads from x to y."""
        return bool((self._desc[x] >> y) & 1)

    def __eq__(self, other):
        return isinstance(other, Dag) and self._parents == other._parents

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._parents)
        return self._hash

    def __repr__(self):
        arcs = ", ".join(f"{t}->{h}" for t, h in self.arcs())
        return f"Dag(n={self.n}, [{arcs}])"


def _check_node(g: Dag, v: int) -> None:
    if not 0 <= v < g.n:
        raise IndexError(f"node {v} out of range for {g.n} nodes")


def add_arc(g: Dag, a: Arc | tuple[int, int]) -> Dag:
    t, h = a
    _check_node(g, t)
    _check_node(g, h)
    if g.adjacent(t, h):
        raise AdjacentError(f"nodes {t} and {h} are already adjacent")
    if g.is_descendant(h, t):
        raise CycleError(f"adding {t}->{h} closes a directed cycle")
    parents = list(g.parent_masks)
    parents[h] |= 1 << t
    desc = list(g.descendant_masks)
    gain = (1 << h) | desc[h]
    for u in range(g.n):
        if u == t or (desc[u] >> t) & 1:
            desc[u] |= gain
    return Dag.from_parent_masks(parents, desc)


def remove_arc(g: Dag, a: Arc | tuple[int, int]) -> Dag:
    t, h = a
    _check_node(g, t)
    _check_node(g, h)
    if not g.has_arc(t, h):
        raise MissingArcError(f"no arc {t}->{h}")
    parents = list(g.parent_masks)
    parents[h] &= ~(1 << t)
    return Dag.from_parent_masks(parents)


def is_covered(g: Dag, a: Arc | tuple[int, int]) -> bool:
    t, h = a
    if not g.has_arc(t, h):
        raise MissingArcError(f"no arc {t}->{h}")
    pm = g.parent_masks
    return pm[h] == pm[t] | (1 << t)


def covered_arcs(g: Dag) -> list[tuple[int, int]]:
    """Covered arcs in (head, tail)-major order, the order random_car samples from."""
    pm = g.parent_masks
    out = []
    for h in range(g.n):
        for t in bits(pm[h]):
            if pm[h] == pm[t] | (1 << t):
                out.append((t, h))
    return out


def reverse_covered_arc(g: Dag, a: Arc | tuple[int, int]) -> Dag:
    t, h = a
    if not is_covered(g, (t, h)):
        raise NotCoveredError(f"arc {t}->{h} is not covered")
    parents = list(g.parent_masks)
    parents[h] &= ~(1 << t)
    parents[t] |= 1 << h
    return Dag.from_parent_masks(parents)


def random_car(g: Dag, rng: np.random.Generator) -> Dag:
    """Reverse one covered arc chosen uniformly; ``g`` itself if none exist."""
    cands = covered_arcs(g)
    u = rng.random()
    if not cands:
        return g
    return reverse_covered_arc(g, cands[min(int(u * len(cands)), len(cands) - 1)])


def causal_order(g: Dag) -> tuple[int, ...]:
    """Topological order; among ready nodes the smallest index goes first."""
    return tuple(_topological(g.parent_masks))


def ancestors_mask(g: Dag, nodes: int) -> int:
    """Mask of ``nodes`` together with all their ancestors."""
    out = nodes
    for v in range(g.n):
        if g.descendant_masks[v] & nodes:
            out |= 1 << v
    return out


def d_separated(g: Dag, X: Iterable[int], Y: Iterable[int], Z: Iterable[int] = ()) -> bool:
    """Whether X and Y are d-separated given Z.

    Uses the reachable-set procedure: a search over (node, direction) states
    that never traverses a blocked triple.
    """
    xm, ym, zm = mask_of(X), mask_of(Y), mask_of(Z)
    if not xm or not ym:
        raise ValueError("X and Y must be nonempty")
    if xm & ym or xm & zm or ym & zm:
        raise OverlapError("X, Y and Z must be pairwise disjoint")
    n = g.n
    pm = g.parent_masks
    children = [0] * n
    for v in range(n):
        for p in bits(pm[v]):
            children[p] |= 1 << v
    anc_z = ancestors_mask(g, zm)

    # direction 0: arrived from a child (moving up); 1: arrived from a parent
    visited = set()
    stack = [(x, 0) for x in bits(xm)]
    while stack:
        v, up = stack.pop()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        in_z = (zm >> v) & 1
        if not in_z and (ym >> v) & 1:
            return False
        if up == 0:
            if not in_z:
                stack.extend((p, 0) for p in bits(pm[v]))
                stack.extend((c, 1) for c in bits(children[v]))
        else:
            if not in_z:
                stack.extend((c, 1) for c in bits(children[v]))
            if (anc_z >> v) & 1:
                stack.extend((p, 0) for p in bits(pm[v]))
    return True


def fingerprint(g: Dag) -> Fingerprint:
    pm = g.parent_masks
    skeleton = []
    vstructs = []
    for h in range(g.n):
        ps = bits(pm[h])
        for t in ps:
            skeleton.append((t, h) if t < h else (h, t))
        for i, a in enumerate(ps):
            for b in ps[i + 1:]:
                if not ((pm[a] >> b) & 1 or (pm[b] >> a) & 1):
                    vstructs.append((a, h, b))
    skeleton.sort()
    vstructs.sort()
    return Fingerprint(tuple(skeleton), tuple(vstructs))


def same_model(g1: Dag, g2: Dag) -> bool:
    if g1.n != g2.n:
        raise SizeMismatchError(f"{g1.n} vs {g2.n} nodes")
    return fingerprint(g1) == fingerprint(g2)


def induced_subgraph(g: Dag, nodes: Sequence[int]) -> Dag:
    """Subgraph on ``nodes``, relabelled ``0..len(nodes)-1`` in the given order."""
    index = {v: i for i, v in enumerate(nodes)}
    arcs = [(index[t], index[h]) for t, h in g.arcs() if t in index and h in index]
    return Dag(len(nodes), arcs)


def to_dot(g: Dag, names: Sequence[str] | None = None) -> str:
    names = list(names) if names is not None else [str(i) for i in range(g.n)]
    lines = ["digraph G {"]
    lines.extend(f'  "{nm}";' for nm in names)
    lines.extend(f'  "{names[t]}" -> "{names[h]}";' for t, h in g.arcs())
    lines.append("}")
    return "\n".join(lines) + "\n"
