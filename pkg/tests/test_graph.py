import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kesbn.graph import (
    AdjacentError,
    CycleError,
    Dag,
    MissingArcError,
    NotCoveredError,
    OverlapError,
    SizeMismatchError,
    add_arc,
    causal_order,
    covered_arcs,
    d_separated,
    fingerprint,
    is_covered,
    random_car,
    remove_arc,
    reverse_covered_arc,
    same_model,
    to_dot,
)
from kesbn.oracle import enumerate_dags

from .conftest import closure_by_search, random_dag

X, Y, Z, U = 0, 1, 2, 3


class TestArcEdits:
    def test_add_single_arc(self):
        g = add_arc(Dag.empty(2), (0, 1))
        assert g.arcs() == [(0, 1)]
        assert g.descendants[0, 1] and not g.descendants[1, 0]

    def test_add_closing_cycle(self):
        g = Dag(3, [(0, 1), (1, 2)])
        with pytest.raises(CycleError):
            add_arc(g, (2, 0))

    def test_add_shortcut_keeps_closure(self):
        g = Dag(3, [(0, 1), (1, 2)])
        h = add_arc(g, (0, 2))
        assert np.array_equal(h.descendants, closure_by_search(h))
        assert np.array_equal(h.descendants, g.descendants)

    def test_add_adjacent(self):
        with pytest.raises(AdjacentError):
            add_arc(Dag(2, [(0, 1)]), (1, 0))

    def test_remove(self):
        g = remove_arc(Dag(2, [(0, 1)]), (0, 1))
        assert g.num_arcs == 0 and not g.descendants.any()

    def test_remove_shortcut_keeps_path(self):
        g = remove_arc(Dag(3, [(0, 1), (1, 2), (0, 2)]), (0, 2))
        assert g.descendants[0, 2]

    def test_remove_breaks_path(self):
        g = remove_arc(Dag(3, [(0, 1), (1, 2)]), (0, 1))
        assert not g.descendants[0, 2]

    def test_remove_missing(self):
        with pytest.raises(MissingArcError):
            remove_arc(Dag.empty(2), (0, 1))

    def test_constructor_rejects_cycle(self):
        with pytest.raises(CycleError):
            Dag(3, [(0, 1), (1, 2), (2, 0)])

    def test_closure_after_random_edits(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            n = int(rng.integers(2, 7))
            g = random_dag(rng, n)
            for _ in range(5):
                a, b = (int(v) for v in rng.choice(n, 2, replace=False))
                op = rng.integers(3)
                try:
                    if op == 0:
                        g = add_arc(g, (a, b))
                    elif op == 1:
                        g = remove_arc(g, (a, b))
                    else:
                        g = reverse_covered_arc(g, (a, b))
                except (CycleError, AdjacentError, MissingArcError, NotCoveredError):
                    pass
            assert np.array_equal(g.descendants, closure_by_search(g))
            assert not np.diag(g.descendants).any()
            assert not (g.adjacency & g.adjacency.T).any()


class TestCovered:
    def test_sole_arc(self):
        assert is_covered(Dag(2, [(0, 1)]), (0, 1))

    def test_example1(self, g1, g2):
        assert is_covered(g1, (Y, U))
        assert not is_covered(g2, (X, Z))

    def test_reverse_sole_arc(self):
        g = Dag(2, [(0, 1)])
        h = reverse_covered_arc(g, (0, 1))
        assert h.arcs() == [(1, 0)]
        assert fingerprint(h) == fingerprint(g)

    def test_reverse_example1(self, g1):
        h = reverse_covered_arc(g1, (Y, U))
        assert set(h.arcs()) == {(X, Y), (X, U), (U, Z), (Y, Z), (U, Y)}
        assert fingerprint(h) == fingerprint(g1)

    def test_reverse_uncovered(self, g2):
        with pytest.raises(NotCoveredError):
            reverse_covered_arc(g2, (X, Z))

    def test_random_car(self):
        rng = np.random.default_rng(0)
        assert random_car(Dag.empty(3), rng) == Dag.empty(3)
        collider = Dag(3, [(0, 2), (1, 2)])
        assert random_car(collider, rng) == collider
        assert random_car(Dag(2, [(0, 1)]), rng).arcs() == [(1, 0)]

    def test_reversal_preserves_fingerprint_everywhere(self):
        for g in enumerate_dags(4):
            for arc in covered_arcs(g):
                h = reverse_covered_arc(g, arc)
                assert fingerprint(h) == fingerprint(g)

    def test_car_closure_equals_class(self):
        """Chickering's characterisation on every DAG with at most 4 nodes."""
        for n in (2, 3, 4):
            dags = enumerate_dags(n)
            by_fp = {}
            for g in dags:
                by_fp.setdefault(fingerprint(g), set()).add(g)
            seen = set()
            for g in dags:
                if g in seen:
                    continue
                comp, stack = {g}, [g]
                while stack:
                    cur = stack.pop()
                    for arc in covered_arcs(cur):
                        nxt = reverse_covered_arc(cur, arc)
                        if nxt not in comp:
                            comp.add(nxt)
                            stack.append(nxt)
                seen |= comp
                assert comp == by_fp[fingerprint(g)]


class TestOrder:
    def test_empty(self):
        assert causal_order(Dag.empty(3)) == (0, 1, 2)

    def test_chain(self):
        assert causal_order(Dag(3, [(2, 1), (1, 0)])) == (2, 1, 0)

    def test_respects_arcs(self, g1):
        pos = {v: i for i, v in enumerate(causal_order(g1))}
        assert all(pos[t] < pos[h] for t, h in g1.arcs())


def _dsep_by_moralisation(g, xs, ys, zs):
    """Lauritzen's criterion: separation in the moral graph of the ancestral set."""
    keep = set(xs) | set(ys) | set(zs)
    for v in list(keep):
        keep |= {u for u in range(g.n) if g.descendants[u, v]}
    edges = set()
    for h in keep:
        ps = [p for p in g.parents(h) if p in keep]
        for p in ps:
            edges.add(frozenset((p, h)))
        for a, b in itertools.combinations(ps, 2):
            edges.add(frozenset((a, b)))
    reach = set(xs)
    stack = list(xs)
    while stack:
        v = stack.pop()
        for e in edges:
            if v in e:
                (w,) = e - {v}
                if w not in reach and w not in zs:
                    reach.add(w)
                    stack.append(w)
    return not (reach & set(ys))


class TestDSeparation:
    def test_chain(self):
        g = Dag(3, [(X, Y), (Y, Z)])
        assert d_separated(g, {X}, {Z}, {Y})
        assert not d_separated(g, {X}, {Z}, set())

    def test_collider(self):
        g = Dag(3, [(X, 2), (Y, 2)])
        assert d_separated(g, {X}, {Y}, set())
        assert not d_separated(g, {X}, {Y}, {2})

    def test_example1(self, g1):
        assert d_separated(g1, {X}, {Z}, {Y, U})

    def test_overlap(self):
        with pytest.raises(OverlapError):
            d_separated(Dag.empty(3), {0}, {0}, set())

    def test_matches_moralisation_on_all_4_node_dags(self):
        labels = list(itertools.product(range(4), repeat=4))
        for g in enumerate_dags(4)[::7]:
            for lab in labels:
                xs = {v for v in range(4) if lab[v] == 1}
                ys = {v for v in range(4) if lab[v] == 2}
                zs = {v for v in range(4) if lab[v] == 3}
                if xs and ys:
                    assert d_separated(g, xs, ys, zs) == _dsep_by_moralisation(g, xs, ys, zs)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_symmetry_and_decomposition(self, seed):
        rng = np.random.default_rng(seed)
        g = random_dag(rng, 5)
        lab = rng.integers(0, 4, size=5)
        xs = {v for v in range(5) if lab[v] == 1}
        ys = {v for v in range(5) if lab[v] == 2}
        zs = {v for v in range(5) if lab[v] == 3}
        if not xs or not ys:
            return
        sep = d_separated(g, xs, ys, zs)
        assert sep == d_separated(g, ys, xs, zs)
        if sep:
            for y in ys:
                assert d_separated(g, xs, {y}, zs)


class TestFingerprint:
    def test_chain_equivalence(self):
        assert fingerprint(Dag(3, [(0, 1), (1, 2)])) == fingerprint(Dag(3, [(2, 1), (1, 0)]))

    def test_collider(self):
        f = fingerprint(Dag(3, [(0, 2), (1, 2)]))
        assert f.skeleton == ((0, 2), (1, 2))
        assert f.vstructures == ((0, 2, 1),)

    def test_example1_models_differ(self, g1, g2):
        assert fingerprint(g1) != fingerprint(g2)

    def test_same_model(self):
        g = Dag(2, [(0, 1)])
        assert same_model(g, g)
        assert same_model(g, Dag(2, [(1, 0)]))
        assert not same_model(g, Dag.empty(2))
        with pytest.raises(SizeMismatchError):
            same_model(g, Dag.empty(3))

    def test_json_round_trip(self, g1):
        from kesbn.graph import Fingerprint

        f = fingerprint(g1)
        assert Fingerprint.from_json(f.to_json()) == f


def test_dot_export(g1):
    dot = to_dot(g1, "XYZU")
    assert dot.startswith("digraph") and '"X" -> "Y";' in dot
