"""Brute-force ground truth for small variable sets.

Enumerates every labelled DAG (up to five nodes), groups them into Markov
equivalence classes, and answers exact questions about inclusion boundaries,
conditional independence in explicit tables, and optimality.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, JointTable
from .graph import (
    Dag,
    Fingerprint,
    OverlapError,
    SizeMismatchError,
    add_arc,
    covered_arcs,
    d_separated,
    fingerprint,
    remove_arc,
    reverse_covered_arc,
)
from .score import BIC, ScoreKind, dag_score


class TooLargeError(ValueError):
    pass


class UnknownClassError(KeyError):
    pass


MAX_ENUM_NODES = 5


def enumerate_dags(n: int) -> list[Dag]:
    """All labelled DAGs on ``n`` nodes.

    Each unordered pair is absent, forward or backward; the pairs vary in
    lexicographic order with the last pair changing fastest.
    """
    if n > MAX_ENUM_NODES:
        raise TooLargeError(f"enumeration limited to {MAX_ENUM_NODES} nodes")
    if n < 1:
        raise ValueError("need at least one node")
    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        parents = [0] * n
        for (a, b), s in zip(pairs, states):
            if s == 1:
                parents[b] |= 1 << a
            elif s == 2:
                parents[a] |= 1 << b
        try:
            out.append(Dag.from_parent_masks(parents))
        except Exception:
            continue
    return out


def _legal_moves(g: Dag):
    for a in range(g.n):
        for b in range(g.n):
            if a == b:
                continue
            if g.has_arc(a, b):
                yield remove_arc(g, (a, b))
            elif not g.has_arc(b, a) and not g.is_descendant(b, a):
                yield add_arc(g, (a, b))


@dataclass
class ModelAtlas:
    n: int
    classes: dict[Fingerprint, list[Dag]]
    _ib: dict[Fingerprint, frozenset] = field(default_factory=dict, repr=False)

    def __contains__(self, f: Fingerprint) -> bool:
        return f in self.classes

    def representative(self, f: Fingerprint) -> Dag:
        return self.classes[f][0]

    def ib(self, f: Fingerprint) -> frozenset:
        if f not in self.classes:
            raise UnknownClassError(f)
        if f not in self._ib:
            self._ib[f] = frozenset(
                fingerprint(h) for g in self.classes[f] for h in _legal_moves(g)
            ) - {f}
        return self._ib[f]

    def to_json(self) -> dict:
        order = sorted(self.classes)
        index = {f: i for i, f in enumerate(order)}
        return {
            "n": self.n,
            "classes": [
                {
                    "id": index[f],
                    "fingerprint": f.to_json(),
                    "members": [g.arcs() for g in self.classes[f]],
                    "ib": sorted(index[h] for h in self.ib(f)),
                }
                for f in order
            ],
        }


def enumerate_classes(n: int) -> ModelAtlas:
    """Equivalence classes of all DAGs on ``n`` nodes, keyed by fingerprint.

    Each class is checked to be closed under covered arc reversal.
    """
    classes: dict[Fingerprint, list[Dag]] = {}
    for g in enumerate_dags(n):
        classes.setdefault(fingerprint(g), []).append(g)
    for f, members in classes.items():
        member_set = set(members)
        for g in members:
            for arc in covered_arcs(g):
                if reverse_covered_arc(g, arc) not in member_set:
                    raise AssertionError(f"class {f} not closed under covered arc reversal")
    return ModelAtlas(n, classes)


def exact_ib(atlas: ModelAtlas, f: Fingerprint) -> frozenset:
    return atlas.ib(f)


def exact_ci(j: JointTable, X, Y, Z=(), tol: float = 1e-9) -> bool:
    """Whether X and Y are independent given Z in the table, within ``tol``."""
    X, Y, Z = list(X), list(Y), list(Z)
    if set(X) & set(Y) or set(X) & set(Z) or set(Y) & set(Z):
        raise OverlapError("X, Y and Z must be pairwise disjoint")
    if not X or not Y:
        return True
    m = j.marginal(Z + X + Y)
    card = j.cardinalities
    qz = int(np.prod([card[v] for v in Z])) if Z else 1
    qx = int(np.prod([card[v] for v in X]))
    qy = int(np.prod([card[v] for v in Y]))
    m = m.reshape(qz, qx, qy)
    pz = m.sum(axis=(1, 2))
    keep = pz > 0
    cond = m[keep] / pz[keep, None, None]
    px = cond.sum(axis=2)
    py = cond.sum(axis=1)
    dev = np.abs(cond - px[:, :, None] * py[:, None, :])
    return bool(dev.max(initial=0.0) < tol)


def ci_triples(n: int):
    """Every (X, Y, Z) of disjoint node sets with X, Y nonempty and min(X) < min(Y)."""
    for labels in itertools.product(range(4), repeat=n):
        X = tuple(v for v in range(n) if labels[v] == 1)
        Y = tuple(v for v in range(n) if labels[v] == 2)
        Z = tuple(v for v in range(n) if labels[v] == 3)
        if X and Y and X[0] < Y[0]:
            yield X, Y, Z


def dsep_statements(g: Dag) -> frozenset:
    return frozenset(t for t in ci_triples(g.n) if d_separated(g, *t))


def inclusion_optimal_models(j: JointTable, n: int | None = None, tol: float = 1e-9) -> set[Fingerprint]:
    """Classes that contain ``j`` and strictly include no other class containing it."""
    n = j.n if n is None else n
    if n != j.n:
        raise SizeMismatchError("node count does not match the table")
    if n > 4:
        raise TooLargeError("inclusion optimality is enumerated for at most 4 variables")
    atlas = enumerate_classes(n)
    memo: dict = {}

    def holds(t):
        if t not in memo:
            memo[t] = exact_ci(j, *t, tol=tol)
        return memo[t]

    stmts = {f: dsep_statements(atlas.representative(f)) for f in atlas.classes}
    including = [f for f in atlas.classes if all(holds(t) for t in stmts[f])]
    out = set()
    for f in including:
        # a sub-model of f encodes strictly more independencies
        if not any(stmts[f] < stmts[h] for h in including if h != f):
            out.add(f)
    return out


@dataclass
class LocalOptima:
    weak: frozenset
    strict: frozenset
    scores: dict


def class_scores(atlas: ModelAtlas, d: Dataset, kind: ScoreKind = BIC, cache=None) -> dict:
    if d.n != atlas.n:
        raise SizeMismatchError(f"atlas has {atlas.n} nodes, data has {d.n} variables")
    return {f: dag_score(atlas.representative(f), d, kind, cache) for f in atlas.classes}


def local_optima(atlas: ModelAtlas, d: Dataset, kind: ScoreKind = BIC, cache=None,
                 tol: float = 1e-8) -> LocalOptima:
    """Classes no exact-IB neighbour of which scores higher.

    ``strict`` holds the classes that beat every neighbour by more than
    ``tol`` (relative); ``weak`` those that no neighbour beats by more.
    """
    scores = class_scores(atlas, d, kind, cache)
    weak, strict = set(), set()
    for f, s in scores.items():
        eps = tol * max(1.0, abs(s))
        nb = [scores[h] for h in atlas.ib(f)]
        if all(t <= s + eps for t in nb):
            weak.add(f)
            if all(t < s - eps for t in nb):
                strict.add(f)
    return LocalOptima(frozenset(weak), frozenset(strict), scores)


def atlas_json(atlas: ModelAtlas) -> str:
    return json.dumps(atlas.to_json(), indent=1)
