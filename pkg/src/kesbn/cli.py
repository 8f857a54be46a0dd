"""Command-line front end.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .data import (
    DataError,
    build_example1_joint,
    forward_sample,
    load_bayes_net,
    load_csv,
    save_csv,
    trap_dataset,
)
from .graph import Fingerprint
from .oracle import (
    TooLargeError,
    class_scores,
    enumerate_classes,
    inclusion_optimal_models,
    local_optima,
)
from .score import ScoreKind, dimension
from .search import (
    DomainError,
    ExperimentSummary,
    KRecord,
    SearchConfig,
    k_star,
    run_experiment,
    run_kes,
)

SCHEMA_VERSION = 1


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def score_kind_json(kind: ScoreKind) -> dict:
    return {"name": kind.name, "ess": kind.ess}


def _run_json(run) -> dict:
    if isinstance(run, dict):  # reloaded summary
        return dict(run)
    return {
        "seed": run.seed,
        "score": run.score,
        "arcs": [list(a) for a in run.dag.arcs()],
        "fingerprint": run.fingerprint.to_json(),
    }


def summary_to_json(s: ExperimentSummary) -> dict:
    return {
        "schema": "kesbn.experiment",
        "schema_version": SCHEMA_VERSION,
        "dataset_digest": s.dataset_digest,
        "base_seed": s.base_seed,
        "runs": s.runs,
        "score": score_kind_json(s.score),
        "ges": {"score": s.ges_score, "fingerprint": s.ges_fingerprint.to_json()},
        "records": [
            {
                "k": r.k,
                "k_star": r.k_star,
                "best": r.best,
                "better": r.better,
                "worse": r.worse,
                "equal": r.equal,
                "distinct_better": r.distinct_better,
                "distinct_worse": r.distinct_worse,
                "distinct_total": r.distinct_total,
                "sorted_scores": r.scores,
                "runs": [_run_json(run) for run in r.runs],
            }
            for r in s.records
        ],
    }


def summary_from_json(obj: dict) -> ExperimentSummary:
    """Rebuild a summary; per-run details stay as plain dicts in ``KRecord.runs``."""
    if obj.get("schema") != "kesbn.experiment":
        raise DataError("not an experiment summary")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise DataError(f"unsupported schema version {obj.get('schema_version')}")
    records = [
        KRecord(
            k=r["k"], k_star=r["k_star"], best=r["best"], better=r["better"], worse=r["worse"],
            equal=r["equal"], distinct_better=r["distinct_better"],
            distinct_worse=r["distinct_worse"], distinct_total=r["distinct_total"],
            scores=list(r["sorted_scores"]), runs=list(r["runs"]),
        )
        for r in obj["records"]
    ]
    return ExperimentSummary(
        records=records,
        ges_score=obj["ges"]["score"],
        ges_fingerprint=Fingerprint.from_json(obj["ges"]["fingerprint"]),
        dataset_digest=obj["dataset_digest"],
        base_seed=obj["base_seed"],
        runs=obj["runs"],
        score=ScoreKind(obj["score"]["name"], obj["score"]["ess"]),
    )


# -- argument types -----------------------------------------------------------------


def _k_value(text: str) -> float:
    try:
        k = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    try:
        k_star(k)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return k


def _k_list(text: str) -> list[float]:
    items = [t for t in text.replace(" ", "").split(",") if t]
    if not items:
        raise argparse.ArgumentTypeError("empty k list")
    return [_k_value(t) for t in items]


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kesbn", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("trapgen", help="write a Trap dataset as CSV")
    t.add_argument("--groups", type=_positive_int, required=True)
    t.add_argument("--rows", type=_nonneg_int, required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)

    s = sub.add_parser("sample", help="forward-sample a Bayesian network file to CSV")
    s.add_argument("--bn", required=True)
    s.add_argument("--rows", type=_nonneg_int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    def score_args(sp):
        sp.add_argument("--score", choices=("bic", "bdeu"), default="bic")
        sp.add_argument("--ess", type=_positive_float, default=1.0)

    le = sub.add_parser("learn", help="one KES run")
    le.add_argument("--data", required=True)
    le.add_argument("--k", type=_k_value, default=1.0)
    score_args(le)
    le.add_argument("--seed", type=int, default=0)
    le.add_argument("--patience", type=_positive_int, default=None)
    le.add_argument("--out", required=True)

    ex = sub.add_parser("experiment", help="repeated KES runs compared with GES")
    ex.add_argument("--data", required=True)
    ex.add_argument("--k-list", type=_k_list, default=[0.0, 0.4, 0.8, 1.0])
    ex.add_argument("--runs", type=_positive_int, default=1000)
    score_args(ex)
    ex.add_argument("--seed", type=int, default=0)
    ex.add_argument("--patience", type=_positive_int, default=None)
    ex.add_argument("--out", required=True)

    o = sub.add_parser("oracle", help="exhaustive checks on at most 4 variables")
    o.add_argument("--data", required=True,
                   help="CSV path, or 'example1' for the built-in trap joint")
    o.add_argument("--mode", choices=("atlas", "local-optima", "inclusion-optimal"), required=True)
    score_args(o)
    o.add_argument("--out", required=True)
    return p


def _kind(args) -> ScoreKind:
    return ScoreKind(args.score, args.ess)


def cmd_trapgen(args) -> None:
    save_csv(trap_dataset(args.groups, args.rows, args.seed), args.out)


def cmd_sample(args) -> None:
    save_csv(forward_sample(load_bayes_net(args.bn), args.rows, args.seed), args.out)


def _config_json(cfg: SearchConfig, n: int) -> dict:
    return {
        "k": cfg.k,
        "k_star": k_star(cfg.k, cfg.k_star_cap),
        "k_star_cap": cfg.k_star_cap,
        "patience": cfg.patience_for(n),
        "cars_per_draw": cfg.cars_per_draw,
        "pre_cars": cfg.pre_cars_for(n),
        "seed": cfg.seed,
        "score": score_kind_json(cfg.score),
    }


def cmd_learn(args) -> None:
    d = load_csv(args.data)
    cfg = SearchConfig(k=args.k, seed=args.seed, patience=args.patience, score=_kind(args))
    r = run_kes(d, cfg)
    write_json({
        "schema": "kesbn.run",
        "schema_version": SCHEMA_VERSION,
        "dataset": {"digest": d.digest(), "variables": list(d.names), "rows": d.N},
        "config": _config_json(cfg, d.n),
        "result": r.to_json(d.names),
    }, args.out)


def cmd_experiment(args) -> None:
    d = load_csv(args.data)
    cfg = SearchConfig(seed=args.seed, patience=args.patience, score=_kind(args))
    summary = run_experiment(d, args.k_list, args.runs, cfg)
    out = summary_to_json(summary)
    out["variables"] = list(d.names)
    write_json(out, args.out)


def _example1_or_csv(text: str):
    if text == "example1" and not Path(text).exists():
        return None
    return load_csv(text)


def cmd_oracle(args) -> None:
    kind = _kind(args)
    if args.mode == "inclusion-optimal":
        if args.data != "example1":
            raise DataError("inclusion-optimal mode needs an analytic joint; only 'example1' is built in")
        j = build_example1_joint()
        found = sorted(inclusion_optimal_models(j))
        atlas = enumerate_classes(j.n)
        write_json({
            "schema": "kesbn.oracle",
            "schema_version": SCHEMA_VERSION,
            "mode": args.mode,
            "variables": list(j.names),
            "models": [
                {
                    "fingerprint": f.to_json(),
                    "arcs": atlas.representative(f).arcs(),
                    "dimension": dimension(atlas.representative(f), j.cardinalities),
                }
                for f in found
            ],
        }, args.out)
        return

    d = _example1_or_csv(args.data)
    if d is None:
        raise DataError("atlas and local-optima modes read a CSV dataset")
    if d.n > 4:
        raise TooLargeError(f"{args.mode} mode supports at most 4 variables, got {d.n}")
    atlas = enumerate_classes(d.n)
    out = {
        "schema": "kesbn.oracle",
        "schema_version": SCHEMA_VERSION,
        "mode": args.mode,
        "variables": list(d.names),
        "score": score_kind_json(kind),
    }
    if args.mode == "atlas":
        body = atlas.to_json()
        scores = class_scores(atlas, d, kind)
        for cls in body["classes"]:
            cls["score"] = scores[Fingerprint.from_json(cls["fingerprint"])]
        out.update(body)
    else:
        lo = local_optima(atlas, d, kind)
        out["local_optima"] = [
            {
                "fingerprint": f.to_json(),
                "arcs": atlas.representative(f).arcs(),
                "score": lo.scores[f],
                "dimension": dimension(atlas.representative(f), d.cardinalities),
                "strict": f in lo.strict,
            }
            for f in sorted(lo.weak)
        ]
    write_json(out, args.out)


COMMANDS = {
    "trapgen": cmd_trapgen,
    "sample": cmd_sample,
    "learn": cmd_learn,
    "experiment": cmd_experiment,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (DataError, TooLargeError, OSError, ValueError) as exc:
        print(f"kesbn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
