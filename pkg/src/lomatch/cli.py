"""Command-line pipeline: ``lomatch <subcommand> ...``.

Every subcommand reads plain files, writes its artifacts into ``--out`` and
is deterministic for identical inputs and seed.  Settings come from
defaults, then ``--config`` (a JSON object), then explicit flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as lio
from .errors import LomatchError
from .evaluation import confusion_matrix, kfold_cv, matcher_classifier, prf_metrics
from .matcher import DECISION_RULES, COEFFICIENTS, MatcherConfig, match_pipeline
from .records import (
    MATCH,
    NON_MATCH,
    InstancePair,
    Ontology,
    generate_candidate_pairs,
    label_pairs,
    sample_negatives,
)
from .recommender import item_feature_vectors, recommend_hybrid
from .similarity import extract_feature_matrix
from .synth import make_lom_repositories, make_pair_corpus, make_ratings

logger = logging.getLogger("lomatch")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

DEFAULTS = {
    "decision_rule": "MAX_SCORE",
    "stage2_coefficient": "LITERAL",
    "stage8_threshold": 0.05,
    "stage2_rounds": 10,
    "fuzzifier": 1.2,
    "batch_size": None,
    "min_membership": 0.0,
    "collective.enabled": False,
    "collective.k": 5,
    "collective.max_rounds": 10,
    "k_neighbors": 10,
    "alpha": 0.5,
    "top_k": 10,
    "scale": [1.0, 5.0],
    "folds": 10,
    "negative_ratio": None,
    "seed": None,
}


class ConfigError(Exception):
    pass


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = dict(DEFAULTS)
    if path:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {path} does not exist")
        try:
            loaded = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        flat = _flatten(loaded)
        unknown = sorted(set(flat) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        cfg.update(flat)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if cfg["decision_rule"] not in DECISION_RULES:
        raise ConfigError(f"decision_rule must be one of {DECISION_RULES}")
    if cfg["stage2_coefficient"] not in COEFFICIENTS:
        raise ConfigError(f"stage2_coefficient must be one of {COEFFICIENTS}")
    return cfg


def matcher_config(cfg: dict) -> MatcherConfig:
    return MatcherConfig(
        decision_rule=cfg["decision_rule"], stage2_coefficient=cfg["stage2_coefficient"],
        stage8_threshold=float(cfg["stage8_threshold"]), stage2_rounds=int(cfg["stage2_rounds"]),
        fuzzifier=float(cfg["fuzzifier"]), batch_size=cfg["batch_size"],
        min_membership=float(cfg["min_membership"]),
        collective={"enabled": bool(cfg["collective.enabled"]), "k": int(cfg["collective.k"]),
                    "max_rounds": int(cfg["collective.max_rounds"])},
        seed=int(cfg["seed"] or 0))


def _require_files(*paths):
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise ConfigError(f"input file {p} does not exist")


def _require_seed(cfg):
    if cfg["seed"] is None:
        raise ConfigError("this command is stochastic: pass --seed or set 'seed' in the config")
    return int(cfg["seed"])


def _out(args, name: str) -> Path:
    return Path(args.out) / name


# subcommands ---------------------------------------------------------------

def cmd_ingest(args, cfg):
    _require_files(args.records)
    types = args.types.split(",") if args.types else None
    records = lio.read_records(args.records, allowed_types=types)
    lio.write_text(_out(args, "records.jsonl"), lio.dump_records(records))
    logger.info("ingested %d records", len(records))


def _ontology(path, name):
    from .synth import TYPE_HIERARCHY

    records = lio.read_records(path)
    types = {r.resource_type for r in records}
    # the built-in type hierarchy only applies to the types it knows about
    hierarchy = {c: p for c, p in TYPE_HIERARCHY.items() if c in types or p in types}
    return Ontology.from_records(records, hierarchy, name=name)


def cmd_pairs(args, cfg):
    _require_files(args.source, args.target, args.gold)
    src, tgt = _ontology(args.source, "source"), _ontology(args.target, "target")
    pairs = generate_candidate_pairs(src, tgt)
    if args.gold:
        gold = {p.key: p.label for p in lio.read_pairs(args.gold) if p.label}
        pairs = label_pairs(pairs, gold)
        if cfg["negative_ratio"] is not None:
            pairs = sample_negatives(pairs, float(cfg["negative_ratio"]), _require_seed(cfg))
    lio.write_text(_out(args, "pairs.csv"), lio.dump_pairs(pairs))


def cmd_features(args, cfg):
    _require_files(args.source, args.target, args.pairs, args.gold)
    src, tgt = _ontology(args.source, "source"), _ontology(args.target, "target")
    pairs = lio.read_pairs(args.pairs) if args.pairs else generate_candidate_pairs(src, tgt)
    if args.gold:
        gold = {p.key: p.label for p in lio.read_pairs(args.gold) if p.label}
        pairs = label_pairs(pairs, gold)
    fm = extract_feature_matrix(pairs, src, tgt)
    lio.write_text(_out(args, "features.csv"), lio.dump_features(fm))


def _split_training(fm, train_pairs):
    if train_pairs is not None:
        known = {p.key: p.label for p in train_pairs if p.label}
    else:
        known = {p.key: p.label for p in fm.pairs if p.label}
    lab = np.array([p.key in known for p in fm.pairs], dtype=bool)
    y_l = [known[p.key] for p, m in zip(fm.pairs, lab) if m]
    return lab, y_l


def cmd_match(args, cfg):
    _require_files(args.features, args.train)
    fm = lio.read_features(args.features)
    lab, y_l = _split_training(fm, lio.read_pairs(args.train) if args.train else None)
    if not lab.any():
        raise ConfigError("no labeled pairs: supply --train or a features file with labels")
    mc = matcher_config(cfg)
    unl = np.flatnonzero(~lab)
    result = match_pipeline(fm.values[lab], y_l, fm.values[unl], mc,
                            pairs_u=[fm.pairs[i] for i in unl], schema_id=fm.schema.schema_id)
    lio.write_text(_out(args, "decisions.csv"), lio.dump_decisions(result.decisions))
    report = result.report.to_dict()
    report["n_labeled"] = int(lab.sum())
    report["n_unlabeled"] = int(len(unl))
    report["config"] = mc.to_dict()
    lio.write_text(_out(args, "validation.json"), lio.dump_json("validation", report))


def cmd_recommend(args, cfg):
    _require_files(args.ratings, args.items, args.anchors)
    ratings = lio.read_ratings(args.ratings, tuple(cfg["scale"]))
    items = lio.read_records(args.items)
    anchors = lio.read_records(args.anchors) if args.anchors else None
    feats = item_feature_vectors(items, anchors)
    users = args.users.split(",") if args.users else ratings.users
    recs = {}
    for u in users:
        if not ratings.user_ratings(u):
            logger.warning("skipping cold-start user %s (no ratings, no seed profile)", u)
            continue
        recs[u] = recommend_hybrid(ratings, feats, u, top_k=int(cfg["top_k"]), alpha=float(cfg["alpha"]),
                                   k_neighbors=int(cfg["k_neighbors"]))
    lio.write_text(_out(args, "recommendations.csv"), lio.dump_recommendations(recs))


def cmd_evaluate(args, cfg):
    _require_files(args.decisions, args.gold, args.features)
    if args.cv:
        if not args.features:
            raise ConfigError("--cv needs --features with gold labels (or --gold)")
        fm = lio.read_features(args.features)
        if args.gold:
            gold = {p.key: p.label for p in lio.read_pairs(args.gold) if p.label}
            labels = [gold.get(p.key, NON_MATCH) for p in fm.pairs]
        else:
            labels = fm.labels
            if any(lab is None for lab in labels):
                raise ConfigError("features file has unlabeled rows; pass --gold")
        seed = _require_seed(cfg)
        mc = matcher_config(cfg)
        report = kfold_cv(fm.values, labels, matcher_classifier(mc), k=int(cfg["folds"]), seed=seed,
                          config={"matcher": mc.to_dict()})
        lio.write_text(_out(args, "cv_report.json"), lio.dump_json("cv-report", report.to_dict()))
        return
    if not (args.decisions and args.gold):
        raise ConfigError("evaluate needs --decisions and --gold (or --cv with --features)")
    decisions = lio.read_decisions(args.decisions)
    gold = {p.key: p.label for p in lio.read_pairs(args.gold) if p.label}
    y_true = [gold.get(d.pair.key, NON_MATCH) for d in decisions]
    y_pred = [d.match_label or NON_MATCH for d in decisions]
    report = prf_metrics(confusion_matrix(y_true, y_pred, (MATCH, NON_MATCH)))
    report.config = {"seed": cfg["seed"], "n_decisions": len(decisions)}
    lio.write_text(_out(args, "report.json"), lio.dump_json("report", report.to_dict()))


def cmd_synth(args, cfg):
    seed = _require_seed(cfg)
    corpus = make_pair_corpus(n_pairs=args.n_pairs, labeled_fraction=args.labeled_fraction, seed=seed)
    fm = corpus.features
    lio.write_text(_out(args, "pair_features.csv"), lio.dump_features(fm, with_labels=False))
    train = [p for p, m in zip(fm.pairs, corpus.labeled) if m]
    lio.write_text(_out(args, "pair_train.csv"), lio.dump_pairs(train))
    lio.write_text(_out(args, "pair_gold.csv"), lio.dump_pairs(fm.pairs))

    src, tgt, gold = make_lom_repositories(args.n_records, seed=seed)
    lio.write_text(_out(args, "source.jsonl"), lio.dump_records(src.instances))
    lio.write_text(_out(args, "target.jsonl"), lio.dump_records(tgt.instances))
    gold_pairs = [InstancePair(s, t, lab) for (s, t), lab in sorted(gold.items())]
    lio.write_text(_out(args, "gold.csv"), lio.dump_pairs(gold_pairs))
    ratings = make_ratings([r.id for r in src.instances], n_users=args.n_users, seed=seed)
    lio.write_text(_out(args, "ratings.csv"), lio.dump_ratings(ratings))


COMMANDS = {
    "ingest": cmd_ingest,
    "pairs": cmd_pairs,
    "features": cmd_features,
    "match": cmd_match,
    "recommend": cmd_recommend,
    "evaluate": cmd_evaluate,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lomatch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("ingest", parents=[common], help="validate and normalize a record file")
    p.add_argument("--records", required=True)
    p.add_argument("--types", help="comma-separated allowed resource types")

    p = sub.add_parser("pairs", parents=[common], help="generate candidate pairs")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--gold", help="pair-label file; labels the pairs")
    p.add_argument("--negative-ratio", type=float, dest="negative_ratio",
                   help="keep this many NON_MATCH pairs per MATCH pair (needs --gold)")

    p = sub.add_parser("features", parents=[common], help="export the pair feature matrix")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--pairs", help="pair file (default: full cross product)")
    p.add_argument("--gold", help="pair-label file; adds a label column")

    p = sub.add_parser("match", parents=[common], help="run the semi-supervised matcher")
    p.add_argument("--features", required=True)
    p.add_argument("--train", help="pair-label file selecting the labeled subset")
    p.add_argument("--decision-rule", dest="decision_rule", choices=DECISION_RULES)
    p.add_argument("--coefficient", dest="stage2_coefficient", choices=COEFFICIENTS)
    p.add_argument("--threshold", dest="stage8_threshold", type=float)
    p.add_argument("--collective", dest="collective.enabled", action="store_const", const=True)

    p = sub.add_parser("recommend", parents=[common], help="hybrid top-k recommendations")
    p.add_argument("--ratings", required=True)
    p.add_argument("--items", required=True, help="record file describing the items")
    p.add_argument("--anchors", help="record file of topic anchors (default: the items)")
    p.add_argument("--users", help="comma-separated user ids (default: all)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--k-neighbors", dest="k_neighbors", type=int)

    p = sub.add_parser("evaluate", parents=[common], help="metrics or k-fold CV report")
    p.add_argument("--decisions")
    p.add_argument("--gold")
    p.add_argument("--features")
    p.add_argument("--cv", action="store_true", help="stratified k-fold CV of the matcher")
    p.add_argument("--folds", type=int)

    p = sub.add_parser("synth", parents=[common], help="write seeded synthetic corpora")
    p.add_argument("--n-pairs", type=int, default=200)
    p.add_argument("--labeled-fraction", type=float, default=0.1)
    p.add_argument("--n-records", type=int, default=100)
    p.add_argument("--n-users", type=int, default=30)
    return parser


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items() if k in DEFAULTS}
    try:
        cfg = load_config(args.config, overrides)
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"lomatch {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LomatchError as exc:
        print(f"lomatch {args.command}: {exc.module} error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, KeyError) as exc:
        print(f"lomatch {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
