"""Categorical datasets, sufficient statistics and synthetic generators.

Random numbers come from numpy's PCG64 generator. A run-level sub-stream is
derived from ``(base_seed, i)`` with :class:`numpy.random.SeedSequence`, see
:func:`derive_seed`.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import Dag, bits, causal_order


class DataError(Exception):
    pass


class ParseError(DataError):
    pass


class EmptyDataError(DataError):
    pass


class SingleStateError(DataError):
    pass


class ConvergenceError(RuntimeError):
    pass


def derive_seed(base_seed: int, i: int) -> int:
    """Seed of sub-stream ``i``: first 63 bits of SeedSequence([base_seed, i])."""
    state = np.random.SeedSequence([int(base_seed), int(i)]).generate_state(1, np.uint64)[0]
    return int(state) >> 1


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class Dataset:
    """Complete categorical data.

    ``values`` is an ``N x n`` integer array of state codes; ``labels`` keeps
    the original category label of each code, per variable.
    """

    names: tuple[str, ...]
    cardinalities: tuple[int, ...]
    values: np.ndarray
    labels: tuple[tuple[str, ...], ...] | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != len(self.names):
            v = v.reshape(-1, len(self.names))
        if len(self.cardinalities) != len(self.names):
            raise ValueError("one cardinality per variable required")
        if v.size:
            if v.min() < 0 or np.any(v.max(axis=0) >= np.asarray(self.cardinalities)):
                raise ValueError("state code out of range")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_columns", tuple(v[:, i].copy() for i in range(v.shape[1])))

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return len(self.names)

    def column(self, i: int) -> np.ndarray:
        return self._columns[i]

    def rows(self) -> list[tuple[int, ...]]:
        return [tuple(r) for r in self.values.tolist()]

    def subset(self, columns: Sequence[int]) -> "Dataset":
        cols = list(columns)
        labels = None if self.labels is None else tuple(self.labels[c] for c in cols)
        return Dataset(
            tuple(self.names[c] for c in cols),
            tuple(self.cardinalities[c] for c in cols),
            self.values[:, cols],
            labels,
        )

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps([list(self.names), list(self.cardinalities)]).encode())
        h.update(np.ascontiguousarray(self.values, dtype="<i8").tobytes())
        return h.hexdigest()


def _label_of(ds: Dataset, var: int, code: int) -> str:
    if ds.labels is None:
        return str(code)
    return ds.labels[var][code]


def save_csv(ds: Dataset, path) -> None:
    buf = io.StringIO()
    buf.write(",".join(ds.names) + "\n")
    for row in ds.values.tolist():
        buf.write(",".join(_label_of(ds, j, c) for j, c in enumerate(row)) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _is_int(s: str) -> bool:
    try:
        int(s)
    except ValueError:
        return False
    return True


def load_csv(path) -> Dataset:
    """Read a comma-separated categorical table.

    Columns whose labels are all integers are coded in ascending numeric
    order; other columns are coded by first appearance.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise EmptyDataError(f"{path}: no header")
    for lineno, line in enumerate(lines, 1):
        if '"' in line:
            raise ParseError(f"{path}:{lineno}: quoted fields are not supported")
    rows = list(csv.reader(lines, quoting=csv.QUOTE_NONE))
    header = [h.strip() for h in rows[0]]
    if any(not h for h in header):
        raise ParseError(f"{path}:1: empty variable name")
    if len(set(header)) != len(header):
        raise ParseError(f"{path}:1: duplicate variable name")
    body = rows[1:]
    if not body:
        raise EmptyDataError(f"{path}: no data rows")
    n = len(header)
    for lineno, r in enumerate(body, 2):
        if len(r) != n:
            raise ParseError(f"{path}:{lineno}: expected {n} fields, got {len(r)}")
        for j, cell in enumerate(r):
            if not cell.strip():
                raise ParseError(f"{path}:{lineno}: empty cell in column {header[j]!r}")
    values = np.empty((len(body), n), dtype=np.int64)
    cards = []
    labels = []
    for j in range(n):
        col = [r[j].strip() for r in body]
        if all(_is_int(c) for c in col):
            distinct = sorted(set(col), key=int)
        else:
            distinct = list(dict.fromkeys(col))
        if len(distinct) < 2:
            raise SingleStateError(f"{path}: column {header[j]!r} has a single state")
        code = {lab: i for i, lab in enumerate(distinct)}
        values[:, j] = [code[c] for c in col]
        cards.append(len(distinct))
        labels.append(tuple(distinct))
    return Dataset(tuple(header), tuple(cards), values, tuple(labels))


# -- sufficient statistics ----------------------------------------------------


@dataclass(frozen=True)
class FamilyCounts:
    """``counts[j, k]``: rows with parent configuration ``j`` and child state ``k``."""

    counts: np.ndarray

    @property
    def r(self) -> int:
        return self.counts.shape[1]

    @property
    def q(self) -> int:
        return self.counts.shape[0]

    @property
    def N_j(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def parent_config_index(ds: Dataset, parents: Sequence[int]) -> tuple[np.ndarray, int]:
    """Mixed-radix configuration code per row; the lowest-index parent is most significant."""
    idx = np.zeros(ds.N, dtype=np.int64)
    q = 1
    for p in parents:
        r = ds.cardinalities[p]
        idx = idx * r + ds.column(p)
        q *= r
    return idx, q


def family_counts(ds: Dataset, child: int, parents) -> FamilyCounts:
    if isinstance(parents, int):
        parents = bits(parents)
    parents = sorted(parents)
    for v in [child, *parents]:
        if not 0 <= v < ds.n:
            raise IndexError(f"variable {v} out of range")
    if child in parents:
        raise ValueError("child cannot be its own parent")
    r = ds.cardinalities[child]
    idx, q = parent_config_index(ds, parents)
    flat = np.bincount(idx * r + ds.column(child), minlength=q * r)
    return FamilyCounts(flat.reshape(q, r))


# -- Bayesian networks ----------------------------------------------------------


@dataclass(frozen=True)
class BayesNet:
    """Discrete BN. ``cpts[v]`` has shape ``(q_v, r_v)``, rows indexed like family_counts."""

    dag: Dag
    cardinalities: tuple[int, ...]
    cpts: tuple[np.ndarray, ...]
    names: tuple[str, ...] = ()
    states: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        n = self.dag.n
        if not self.names:
            object.__setattr__(self, "names", tuple(f"V{i}" for i in range(n)))
        if not self.states:
            object.__setattr__(
                self, "states", tuple(tuple(str(s) for s in range(r)) for r in self.cardinalities)
            )
        cpts = []
        for v in range(n):
            q = math.prod(self.cardinalities[p] for p in self.dag.parents(v))
            t = np.asarray(self.cpts[v], dtype=float)
            if t.shape != (q, self.cardinalities[v]):
                raise ValueError(f"cpt of {self.names[v]} has shape {t.shape}, expected {(q, self.cardinalities[v])}")
            if np.any(t < 0) or np.any(np.abs(t.sum(axis=1) - 1.0) > 1e-12):
                raise ValueError(f"cpt rows of {self.names[v]} must be distributions")
            cpts.append(t)
        object.__setattr__(self, "cpts", tuple(cpts))

    def joint(self) -> "JointTable":
        """Explicit joint table (small networks only)."""
        n = self.dag.n
        p = np.ones(self.cardinalities)
        for v in range(n):
            ps = self.dag.parents(v)
            shape = [self.cardinalities[u] for u in ps] + [self.cardinalities[v]]
            t = self.cpts[v].reshape(shape)
            axes = ps + [v]
            order = np.argsort(axes)
            t = np.transpose(t, order)
            bshape = [1] * n
            for a in axes:
                bshape[a] = self.cardinalities[a]
            p = p * t.reshape(bshape)
        return JointTable(self.names, self.cardinalities, p)


def random_bayes_net(dag: Dag, cardinalities: Sequence[int], rng: np.random.Generator,
                     alpha: float = 1.0) -> BayesNet:
    """Positive parameterization with Dirichlet(alpha) conditional rows."""
    cpts = []
    for v in range(dag.n):
        q = math.prod(cardinalities[p] for p in dag.parents(v))
        t = rng.dirichlet([alpha] * cardinalities[v], size=q)
        t = np.maximum(t, 1e-6)
        cpts.append(t / t.sum(axis=1, keepdims=True))
    return BayesNet(dag, tuple(cardinalities), tuple(cpts))


def forward_sample(bn: BayesNet, n: int, seed: int) -> Dataset:
    """Ancestral sampling along the causal order of ``bn.dag``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = make_rng(seed)
    nv = bn.dag.n
    values = np.zeros((n, nv), dtype=np.int64)
    for v in causal_order(bn.dag):
        ps = bn.dag.parents(v)
        idx = np.zeros(n, dtype=np.int64)
        for p in ps:
            idx = idx * bn.cardinalities[p] + values[:, p]
        cum = np.cumsum(bn.cpts[v], axis=1)
        u = rng.random(n)
        state = (u[:, None] >= cum[idx]).sum(axis=1)
        values[:, v] = np.minimum(state, bn.cardinalities[v] - 1)
    return Dataset(bn.names, bn.cardinalities, values, bn.states)


BN_SCHEMA = "kesbn.bayesnet/1"


def bayes_net_to_json(bn: BayesNet) -> dict:
    return {
        "schema": BN_SCHEMA,
        "variables": [{"name": nm, "states": list(st)} for nm, st in zip(bn.names, bn.states)],
        "arcs": [[bn.names[t], bn.names[h]] for t, h in bn.dag.arcs()],
        "cpts": {bn.names[v]: bn.cpts[v].tolist() for v in range(bn.dag.n)},
    }


def save_bayes_net(bn: BayesNet, path) -> None:
    Path(path).write_text(json.dumps(bayes_net_to_json(bn), indent=2) + "\n", encoding="utf-8")


def bayes_net_from_json(obj, where: str = "<bn>") -> BayesNet:
    def fail(msg):
        raise ParseError(f"{where}: {msg}")

    if not isinstance(obj, dict):
        fail("top level must be an object")
    for key in ("variables", "arcs", "cpts"):
        if key not in obj:
            fail(f"missing field {key!r}")
    names, states = [], []
    for i, var in enumerate(obj["variables"]):
        if not isinstance(var, dict) or "name" not in var or "states" not in var:
            fail(f"variables[{i}]: needs 'name' and 'states'")
        if len(var["states"]) < 2:
            fail(f"variables[{i}]: at least two states required")
        names.append(str(var["name"]))
        states.append(tuple(str(s) for s in var["states"]))
    index = {nm: i for i, nm in enumerate(names)}
    if len(index) != len(names):
        fail("duplicate variable names")
    arcs = []
    for i, arc in enumerate(obj["arcs"]):
        if not isinstance(arc, list) or len(arc) != 2:
            fail(f"arcs[{i}]: expected [tail, head]")
        ends = []
        for e in arc:
            if isinstance(e, int) and 0 <= e < len(names):
                ends.append(e)
            elif isinstance(e, str) and e in index:
                ends.append(index[e])
            else:
                fail(f"arcs[{i}]: unknown variable {e!r}")
        arcs.append(tuple(ends))
    try:
        dag = Dag(len(names), arcs)
    except Exception as exc:
        fail(f"arcs: {exc}")
    cards = tuple(len(s) for s in states)
    raw = obj["cpts"]
    cpts = []
    for v, nm in enumerate(names):
        table = raw.get(nm) if isinstance(raw, dict) else (raw[v] if v < len(raw) else None)
        if table is None:
            fail(f"cpts: missing table for {nm!r}")
        try:
            arr = np.asarray(table, dtype=float)
        except (TypeError, ValueError):
            fail(f"cpts[{nm!r}]: not a numeric table")
        q = math.prod(cards[p] for p in dag.parents(v))
        if q == 1 and arr.ndim == 1:  # a root may give its single row unnested
            arr = arr[None, :]
        if arr.shape != (q, cards[v]):
            fail(f"cpts[{nm!r}]: shape {arr.shape}, expected {(q, cards[v])}")
        bad = np.flatnonzero(np.abs(arr.sum(axis=1) - 1.0) > 1e-12)
        if bad.size or np.any(arr < 0):
            row = int(bad[0]) if bad.size else int(np.argwhere(arr < 0)[0][0])
            fail(f"cpts[{nm!r}][{row}]: not a probability distribution")
        cpts.append(arr)
    return BayesNet(dag, cards, tuple(cpts), tuple(names), tuple(states))


def load_bayes_net(path) -> BayesNet:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return bayes_net_from_json(obj, str(path))


# -- joint tables ---------------------------------------------------------------


@dataclass(frozen=True)
class JointTable:
    names: tuple[str, ...]
    cardinalities: tuple[int, ...]
    probabilities: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float).reshape(self.cardinalities)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("joint table must be a probability distribution")
        object.__setattr__(self, "probabilities", p)

    @property
    def n(self) -> int:
        return len(self.names)

    def marginal(self, variables: Sequence[int]) -> np.ndarray:
        """Marginal over ``variables``, axes in the given order."""
        variables = list(variables)
        drop = tuple(i for i in range(self.n) if i not in variables)
        m = self.probabilities.sum(axis=drop)
        kept = sorted(variables)
        return np.transpose(m, [kept.index(v) for v in variables])


def ipf_fit(cardinalities: Sequence[int], cliques: Sequence[Sequence[int]],
            targets: Sequence[np.ndarray], tol: float = 1e-10, max_iter: int = 100_000,
            names: Sequence[str] | None = None) -> JointTable:
    """Iterative proportional fitting from the uniform table.

    ``targets[i]`` is the marginal over ``cliques[i]`` with axes in clique order.
    """
    cards = tuple(int(c) for c in cardinalities)
    n = len(cards)
    covered = set(v for c in cliques for v in c)
    if covered != set(range(n)):
        raise ValueError("cliques must cover every variable")
    prepared = []
    for clique, target in zip(cliques, targets):
        clique = list(clique)
        t = np.asarray(target, dtype=float).reshape([cards[v] for v in clique])
        if abs(t.sum() - 1.0) > 1e-9:
            raise ValueError(f"target over {clique} does not sum to 1")
        kept = sorted(clique)
        t = np.transpose(t, [clique.index(v) for v in kept])
        drop = tuple(i for i in range(n) if i not in kept)
        bshape = [cards[i] if i in kept else 1 for i in range(n)]
        prepared.append((drop, t.reshape(bshape)))
    p = np.full(cards, 1.0 / math.prod(cards))

    def deviation(p):
        return max(np.max(np.abs(p.sum(axis=drop, keepdims=True) - t)) for drop, t in prepared)

    for _ in range(max_iter):
        for drop, t in prepared:
            m = p.sum(axis=drop, keepdims=True)
            ratio = np.divide(t, m, out=np.zeros_like(m), where=m > 0)
            p = p * ratio
        if deviation(p) < tol:
            p = p / p.sum()
            names = tuple(names) if names is not None else tuple(f"V{i}" for i in range(n))
            return JointTable(names, cards, p)
    raise ConvergenceError(f"IPF did not reach tol={tol} within {max_iter} sweeps")


# Pairwise marginals of the four-variable trap distribution. Axis 0 runs over
# the first named variable, axis 1 over the second.
EXAMPLE1_NAMES = ("X", "Y", "Z", "U")
EXAMPLE1_CARDS = (4, 2, 2, 2)
EXAMPLE1_PXY = np.array([[0.22, 0.03], [0.03, 0.22], [0.22, 0.03], [0.03, 0.22]])
EXAMPLE1_PXU = np.array([[0.22, 0.03], [0.22, 0.03], [0.03, 0.22], [0.03, 0.22]])
EXAMPLE1_PYZ = np.array([[0.35, 0.15], [0.15, 0.35]])
EXAMPLE1_PUZ = np.array([[0.35, 0.15], [0.15, 0.35]])
EXAMPLE1_CLIQUES = ((0, 1), (0, 3), (1, 2), (3, 2))

# Variable indices X=0, Y=1, Z=2, U=3.
EXAMPLE1_G1_ARCS = ((0, 1), (0, 3), (1, 2), (3, 2), (1, 3))
EXAMPLE1_G2_ARCS = ((0, 1), (0, 3), (1, 2), (2, 3), (0, 2))

_example1_cache: list[JointTable] = []


def build_example1_joint() -> JointTable:
    """Joint over (X:4, Y:2, Z:2, U:2) factorizing over the cycle X-Y-Z-U-X."""
    if not _example1_cache:
        _example1_cache.append(ipf_fit(
            EXAMPLE1_CARDS, EXAMPLE1_CLIQUES,
            (EXAMPLE1_PXY, EXAMPLE1_PXU, EXAMPLE1_PYZ, EXAMPLE1_PUZ),
            tol=1e-10, max_iter=100_000, names=EXAMPLE1_NAMES,
        ))
    return _example1_cache[0]


def sample_joint(j: JointTable, n: int, seed: int) -> Dataset:
    rng = make_rng(seed)
    return _sample_cells(j, n, rng, j.names)


def _sample_cells(j: JointTable, n: int, rng, names) -> Dataset:
    cum = np.cumsum(j.probabilities.ravel())
    u = rng.random(n)
    cells = np.minimum(np.searchsorted(cum, u * cum[-1], side="right"), cum.size - 1)
    values = np.stack(np.unravel_index(cells, j.cardinalities), axis=1) if n else np.zeros((0, j.n), np.int64)
    return Dataset(tuple(names), j.cardinalities, values)


def trap_dataset(groups: int, rows: int, seed: int) -> Dataset:
    """Independent copies of the four-variable trap distribution.

    Group ``g`` contributes columns ``X{g}, Y{g}, Z{g}, U{g}`` (1-based).
    """
    if groups < 1:
        raise ValueError("groups must be >= 1")
    if rows < 0:
        raise ValueError("rows must be >= 0")
    j = build_example1_joint()
    rng = make_rng(seed)
    blocks = [_sample_cells(j, rows, rng, j.names).values for _ in range(groups)]
    names = tuple(f"{nm}{g + 1}" for g in range(groups) for nm in EXAMPLE1_NAMES)
    cards = EXAMPLE1_CARDS * groups
    return Dataset(names, cards, np.hstack(blocks) if rows else np.zeros((0, 4 * groups), np.int64))


def trap_group_arcs(arcs: Sequence[tuple[int, int]], group: int) -> list[tuple[int, int]]:
    """Offset a four-node arc list into the columns of ``group`` (0-based)."""
    return [(t + 4 * group, h + 4 * group) for t, h in arcs]
