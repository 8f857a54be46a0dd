"""Decomposable, score-equivalent scores for discrete BNs (BIC, BDeu)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .data import Dataset, FamilyCounts, family_counts
from .graph import Dag, SizeMismatchError, bits


@dataclass(frozen=True)
class ScoreKind:
    name: str = "bic"
    ess: float = 1.0

    def __post_init__(self):
        if self.name not in ("bic", "bdeu"):
            raise ValueError(f"unknown score {self.name!r}")
        if not self.ess > 0:
            raise ValueError("ess must be positive")

    def __str__(self):
        return "bic" if self.name == "bic" else f"bdeu(ess={self.ess:g})"


BIC = ScoreKind("bic")


def bdeu(ess: float = 1.0) -> ScoreKind:
    return ScoreKind("bdeu", ess)


def family_score_bic(fc: FamilyCounts, N: int) -> float:
    """Log-likelihood of the family minus ``ln(N)/2`` per free parameter."""
    if N == 0:
        return 0.0
    c = fc.counts.astype(float)
    nj = c.sum(axis=1, keepdims=True)
    nz = c > 0
    ll = float(np.sum(c[nz] * np.log((c / np.where(nj > 0, nj, 1))[nz])))
    return ll - 0.5 * math.log(N) * fc.q * (fc.r - 1)


def family_score_bdeu(fc: FamilyCounts, ess: float = 1.0) -> float:
    q, r = fc.q, fc.r
    a_jk = ess / (q * r)
    a_j = ess / q
    c = fc.counts.astype(float)
    nj = c.sum(axis=1)
    # configurations with N_j = 0 contribute exactly zero
    used = nj > 0
    if not used.any():
        return 0.0
    c = c[used]
    return float(
        np.sum(gammaln(a_j) - gammaln(a_j + nj[used]))
        + np.sum(gammaln(a_jk + c) - gammaln(a_jk))
    )


def family_score(fc: FamilyCounts, N: int, kind: ScoreKind) -> float:
    if kind.name == "bic":
        return family_score_bic(fc, N)
    return family_score_bdeu(fc, kind.ess)


class FamilyScorer:
    """Computes family scores from a dataset; pair it with a ScoreCache."""

    def __init__(self, data: Dataset, kind: ScoreKind = BIC):
        self.data = data
        self.kind = kind

    def __call__(self, child: int, parents) -> float:
        return family_score(family_counts(self.data, child, parents), self.data.N, self.kind)


def dag_score(g: Dag, d: Dataset, kind: ScoreKind = BIC, cache=None) -> float:
    """Sum of family scores, summed in node order."""
    if g.n != d.n:
        raise SizeMismatchError(f"graph has {g.n} nodes, data has {d.n} variables")
    scorer = FamilyScorer(d, kind)
    total = 0.0
    for v in range(g.n):
        pm = g.parent_masks[v]
        if cache is None:
            total += scorer(v, pm)
        else:
            total += cache.get_or_compute(v, pm, lambda v=v, pm=pm: scorer(v, pm))
    return total


def dimension(g: Dag, cardinalities: Sequence[int]) -> int:
    if len(cardinalities) != g.n:
        raise SizeMismatchError("one cardinality per node required")
    return sum(
        (cardinalities[v] - 1) * math.prod(cardinalities[p] for p in bits(g.parent_masks[v]))
        for v in range(g.n)
    )
