"""k-greedy equivalence search over DAG representatives.

One KES iteration walks the current equivalence class with random covered
arc reversals, draws a batch of inclusion-boundary neighbours (sampled with
replacement), and moves to the best strictly improving neighbour in the
batch. A run stops after ``patience`` consecutive iterations without an
improving draw.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import kernels
from .cache import ScoreCache
from .data import Dataset, derive_seed, make_rng
from .graph import Dag, Fingerprint, fingerprint
from .score import BIC, FamilyScorer, ScoreKind, dag_score


class DomainError(ValueError):
    pass


class NoMoveError(RuntimeError):
    pass


def k_star(k: float, cap: float = 20.0) -> float:
    """Oversampling factor whose expected distinct fraction equals ``k``.

    Drawing ``m = k* |IB|`` items with replacement from ``|IB|`` leaves an
    expected distinct fraction of about ``1 - exp(-k*)``.
    """
    if not 0.0 <= k <= 1.0 or math.isnan(k):
        raise DomainError(f"k must lie in [0, 1], got {k}")
    if not cap > 0:
        raise DomainError("cap must be positive")
    if k == 1.0:
        return float(cap)
    return min(float(cap), -math.log1p(-k))


def ib_size_estimate(n: int) -> int:
    if n < 1:
        raise DomainError("need at least one node")
    return n * (n - 1)


def batch_size(k: float, cap: float, n: int) -> int:
    return max(1, int(math.floor(k_star(k, cap) * ib_size_estimate(n) + 0.5)))


def sample_ib_neighbor(g: Dag, rng: np.random.Generator, cars: int = 1,
                       backend: str | None = None, return_walk: bool = False):
    """Random inclusion-boundary neighbour of ``g``.

    Applies ``cars`` random covered arc reversals, then one arc removal or
    acyclic arc addition chosen uniformly over all legal (tail, head) moves.

    With ``return_walk`` the reversed representative is returned as well, as
    ``(neighbour, walked)``. Feeding ``walked`` into the next call continues
    the reversal walk the way a search batch does; independent calls from one
    fixed graph need not reach every member of the boundary (a lone covered
    arc flips on every reversal, so a fixed count fixes its direction).
    """
    if g.n < 2:
        raise NoMoveError("a graph with fewer than two nodes has no arc moves")
    u = rng.random(kernels.uniforms_needed(cars, 1, 0))
    heads, olds, _, nbrs = kernels.sample_batch(g.parent_masks, u, cars, 1, 0, backend=backend)
    nb = Dag.from_parent_masks(nbrs[0])
    if not return_walk:
        return nb
    walked = list(nbrs[0])
    walked[heads[0]] = olds[0]
    return nb, Dag.from_parent_masks(walked)


@dataclass(frozen=True)
class SearchConfig:
    """Settings of one KES run.

    ``patience`` and ``pre_cars`` default to ``2 n (n-1)`` and ``n`` for an
    ``n``-variable dataset when left as ``None``.
    """

    k: float = 1.0
    k_star_cap: float = 20.0
    patience: int | None = None
    cars_per_draw: int = 1
    pre_cars: int | None = None
    seed: int = 0
    score: ScoreKind = BIC
    min_improvement: float = 1e-9
    backend: str | None = None

    def __post_init__(self):
        k_star(self.k, self.k_star_cap)
        if self.patience is not None and self.patience < 1:
            raise DomainError("patience must be >= 1")
        if self.cars_per_draw < 0:
            raise DomainError("cars_per_draw must be >= 0")
        if self.pre_cars is not None and self.pre_cars < 0:
            raise DomainError("pre_cars must be >= 0")

    def patience_for(self, n: int) -> int:
        return self.patience if self.patience is not None else max(1, 2 * n * (n - 1))

    def pre_cars_for(self, n: int) -> int:
        return self.pre_cars if self.pre_cars is not None else n


@dataclass
class RunResult:
    dag: Dag
    score: float
    fingerprint: Fingerprint
    iterations: int
    draws: int
    hits: int
    misses: int
    seed: int
    k: float
    trajectory: list[float] = field(default_factory=list)
    path: list[Dag] = field(default_factory=list, repr=False)

    def to_json(self, names: Sequence[str] | None = None) -> dict:
        names = list(names) if names is not None else [str(i) for i in range(self.dag.n)]
        return {
            "k": self.k,
            "seed": self.seed,
            "score": self.score,
            "arcs": [[names[t], names[h]] for t, h in self.dag.arcs()],
            "arc_indices": [list(a) for a in self.dag.arcs()],
            "fingerprint": self.fingerprint.to_json(),
            "iterations": self.iterations,
            "draws": self.draws,
            "cache_hits": self.hits,
            "cache_misses": self.misses,
            "trajectory": list(self.trajectory),
        }


class _Scoring:
    def __init__(self, data: Dataset, kind: ScoreKind, cache: ScoreCache | None):
        self.data = data
        self.scorer = FamilyScorer(data, kind)
        self.cache = cache if cache is not None else ScoreCache()

    def family(self, child: int, mask: int) -> float:
        return self.cache.get_or_compute(child, mask, lambda: self.scorer(child, mask))

    def total(self, g: Dag) -> float:
        return dag_score(g, self.data, self.scorer.kind, self.cache)


def _step(g: Dag, scoring: _Scoring, cfg: SearchConfig, rng: np.random.Generator):
    n = g.n
    m = batch_size(cfg.k, cfg.k_star_cap, n)
    pre = cfg.pre_cars_for(n)
    u = rng.random(kernels.uniforms_needed(pre, m, cfg.cars_per_draw))
    heads, olds, news, nbrs = kernels.sample_batch(
        g.parent_masks, u, pre, m, cfg.cars_per_draw, backend=cfg.backend)
    local: dict[tuple[int, int], float] = {}

    def fam(child, mask):
        key = (child, mask)
        s = local.get(key)
        if s is None:
            s = local[key] = scoring.family(child, mask)
        return s

    deltas = [fam(h, nw) - fam(h, o) for h, o, nw in zip(heads, olds, news)]
    best = max(deltas)
    if not best > cfg.min_improvement:
        return None, m
    # neighbours within a hair of the best are ties; break them by fingerprint
    cutoff = best - cfg.min_improvement
    chosen = None
    seen = set()
    for i, d in enumerate(deltas):
        if d < cutoff or nbrs[i] in seen:
            continue
        seen.add(nbrs[i])
        cand = Dag.from_parent_masks(nbrs[i])
        fp = fingerprint(cand)
        if chosen is None or fp < chosen[0]:
            chosen = (fp, cand)
    return chosen[1], m


def kes_step(g: Dag, d: Dataset, cfg: SearchConfig, cache: ScoreCache | None,
             rng: np.random.Generator) -> Dag | None:
    """One KES iteration from ``g``; ``None`` when no drawn neighbour improves."""
    if g.n != d.n:
        raise ValueError("graph and dataset disagree on the number of variables")
    nxt, _ = _step(g, _Scoring(d, cfg.score, cache), cfg, rng)
    return nxt


def run_kes(d: Dataset, cfg: SearchConfig, cache: ScoreCache | None = None,
            keep_path: bool = False) -> RunResult:
    """Run KES from the empty graph until ``patience`` idle iterations in a row."""
    if d.N == 0:
        raise ValueError("dataset is empty")
    scoring = _Scoring(d, cfg.score, cache)
    h0, m0 = scoring.cache.stats()
    rng = make_rng(cfg.seed)
    g = Dag.empty(d.n)
    score = scoring.total(g)
    trajectory = [score]
    path = [g] if keep_path else []
    patience = cfg.patience_for(d.n)
    idle = iterations = draws = 0
    while idle < patience:
        nxt, m = _step(g, scoring, cfg, rng)
        iterations += 1
        draws += m
        if nxt is None:
            idle += 1
            continue
        new_score = scoring.total(nxt)
        if not new_score > score:
            raise RuntimeError("accepted a move that does not increase the score")
        g, score = nxt, new_score
        trajectory.append(score)
        if keep_path:
            path.append(g)
        idle = 0
    h1, m1 = scoring.cache.stats()
    return RunResult(g, score, fingerprint(g), iterations, draws, h1 - h0, m1 - m0,
                     cfg.seed, cfg.k, trajectory, path)


# -- experiments ----------------------------------------------------------------


@dataclass
class KRecord:
    k: float
    k_star: float
    best: float
    better: int
    worse: int
    equal: int
    distinct_better: int
    distinct_worse: int
    distinct_total: int
    scores: list[float]
    runs: list[RunResult] = field(default_factory=list, repr=False)


@dataclass
class ExperimentSummary:
    records: list[KRecord]
    ges_score: float
    ges_fingerprint: Fingerprint
    dataset_digest: str
    base_seed: int
    runs: int
    score: ScoreKind


_worker_state: dict = {}


def _worker_run(args):
    d, cfg = args
    key = (d.digest(), cfg.score)
    if _worker_state.get("key") != key:
        _worker_state["key"] = key
        _worker_state["cache"] = ScoreCache()
    return run_kes(d, cfg, _worker_state["cache"])


def default_workers() -> int:
    env = os.environ.get("KESBN_THREADS")
    cpus = os.cpu_count() or 1
    if env:
        return max(1, min(int(env), cpus))
    return cpus


def run_many(d: Dataset, cfgs: Sequence[SearchConfig], workers: int | None = None,
             cache: ScoreCache | None = None) -> list[RunResult]:
    """Independent runs; results come back in ``cfgs`` order whatever the scheduling."""
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(cfgs) <= 1:
        cache = cache if cache is not None else ScoreCache()
        return [run_kes(d, c, cache) for c in cfgs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_worker_run, [(d, c) for c in cfgs], chunksize=max(1, len(cfgs) // (4 * workers))))


def compare(score: float, ref: float) -> int:
    """+1 / -1 / 0 for better / worse / tied with ``ref`` (relative tolerance 1e-8)."""
    tol = 1e-8 * max(1.0, abs(ref))
    if score > ref + tol:
        return 1
    if score < ref - tol:
        return -1
    return 0


def run_experiment(d: Dataset, ks: Sequence[float], runs: int, base_cfg: SearchConfig,
                   workers: int | None = None, cache: ScoreCache | None = None) -> ExperimentSummary:
    """Table-style comparison of KES for several ``k`` against one GES run.

    Run ``i`` of every ``k`` uses seed ``derive_seed(base_cfg.seed, i)``; the
    GES reference (k = 1) uses ``base_cfg.seed`` itself.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if not ks:
        raise ValueError("need at least one k")
    cache = cache if cache is not None else ScoreCache()
    ges = run_kes(d, replace(base_cfg, k=1.0), cache)
    records = []
    for k in ks:
        cfgs = [replace(base_cfg, k=float(k), seed=derive_seed(base_cfg.seed, i)) for i in range(runs)]
        results = run_many(d, cfgs, workers, cache)
        better, worse = [], []
        for r in results:
            c = compare(r.score, ges.score)
            if c > 0:
                better.append(r)
            elif c < 0:
                worse.append(r)
        records.append(KRecord(
            k=float(k),
            k_star=k_star(float(k), base_cfg.k_star_cap),
            best=max(r.score for r in results),
            better=len(better),
            worse=len(worse),
            equal=runs - len(better) - len(worse),
            distinct_better=len({r.fingerprint for r in better}),
            distinct_worse=len({r.fingerprint for r in worse}),
            distinct_total=len({r.fingerprint for r in results}),
            scores=sorted(r.score for r in results),
            runs=results,
        ))
    return ExperimentSummary(records, ges.score, ges.fingerprint, d.digest(),
                             base_cfg.seed, runs, base_cfg.score)
