import numpy as np

from kesbn.cache import ScoreCache
from kesbn.data import trap_dataset
from kesbn.score import BIC, FamilyScorer, dag_score
from kesbn.search import SearchConfig, run_kes

from .conftest import random_dag, random_dataset


def counting(value):
    calls = []

    def compute():
        calls.append(1)
        return value

    return compute, calls


def test_parent_order_irrelevant():
    c = ScoreCache()
    f, calls = counting(1.5)
    assert c.get_or_compute(0, [2, 5], f) == 1.5
    assert c.get_or_compute(0, [5, 2], f) == 1.5
    assert len(calls) == 1 and c.stats() == (1, 1)


def test_first_call_is_miss_with_direct_value():
    rng = np.random.default_rng(0)
    d = random_dataset(rng, 3, 50)
    scorer = FamilyScorer(d, BIC)
    c = ScoreCache()
    assert c.get_or_compute(1, [0], lambda: scorer(1, [0])) == scorer(1, [0])
    assert c.stats() == (0, 1)


def test_distinct_families():
    c = ScoreCache()
    c.get_or_compute(1, [2], lambda: 1.0)
    c.get_or_compute(2, [1], lambda: 2.0)
    assert c.stats() == (0, 2) and len(c) == 2


def test_bitmask_and_list_keys_agree():
    c = ScoreCache()
    c.get_or_compute(0, 0b1010, lambda: 3.0)
    assert c.get(0, [3, 1]) == 3.0
    assert c.get(0, [1]) is None


def test_fresh_and_hit_counters():
    c = ScoreCache()
    assert c.stats() == (0, 0)
    c.get_or_compute(0, [], lambda: 0.0)
    c.get_or_compute(0, [], lambda: 0.0)
    assert c.stats() == (1, 1)


def test_second_pass_adds_no_misses():
    rng = np.random.default_rng(1)
    d = random_dataset(rng, 5, 100)
    g = random_dag(rng, 5)
    c = ScoreCache()
    s1 = dag_score(g, d, BIC, c)
    misses = c.stats()[1]
    assert dag_score(g, d, BIC, c) == s1
    assert c.stats()[1] == misses


def test_entry_cap_clears():
    c = ScoreCache(max_entries=2)
    for v in range(3):
        c.get_or_compute(v, [], lambda: 0.0)
    assert len(c) == 1


def test_search_trace_bit_identical_and_lazy():
    d = trap_dataset(2, 2000, 3)
    c = ScoreCache()
    run_kes(d, SearchConfig(k=0.4, seed=5, patience=20), c)
    scorer = FamilyScorer(d, BIC)
    fams = c.families()
    assert len(fams) == len(c) == len(set(fams)) == c.stats()[1]
    for child, parents in fams:
        assert c.get(child, parents) == scorer(child, list(parents))
