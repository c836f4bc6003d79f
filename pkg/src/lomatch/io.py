"""Line-oriented artifact formats.

Every artifact written here starts with a header line
``# lomatch <kind> v<version>``.  Readers skip ``#`` lines and an optional
column-name row, so hand-written files without headers are accepted too.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import RecordFormatError
from .matcher import MatchDecision
from .records import (
    PAIR_LABELS,
    InstancePair,
    LearningObjectRecord,
    parse_repository,
    serialize_repository,
)
from .recommender import RatingMatrix, Recommendation
from .similarity import DEFAULT_SCHEMA, FeatureMatrix, FeatureSchema

FORMAT_VERSION = 1


def header(kind: str) -> str:
    return f"# lomatch {kind} v{FORMAT_VERSION}"


def fmt_float(x: float) -> str:
    return repr(float(x))


def _rows(text: str, first_col: str):
    """CSV rows with comments, blanks and a leading column-name row removed."""
    lines = [(n, ln) for n, ln in enumerate(text.splitlines(), start=1)
             if ln.strip() and not ln.lstrip().startswith("#")]
    out = []
    for (n, ln) in lines:
        row = next(csv.reader([ln]))
        row = [c.strip() for c in row]
        if not out and row and row[0] == first_col:
            continue
        out.append((n, row))
    return out


def _write_csv(kind: str, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(header(kind) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def write_text(path, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# records -------------------------------------------------------------------

def read_records(path, allowed_types=None) -> list[LearningObjectRecord]:
    with open(path, "rb") as fh:
        return parse_repository(fh, allowed_types=allowed_types)


def dump_records(records: Iterable[LearningObjectRecord]) -> str:
    return serialize_repository(records, header=header("records"))


# pairs ---------------------------------------------------------------------

def dump_pairs(pairs: Iterable[InstancePair]) -> str:
    pairs = list(pairs)
    if any(p.label is not None for p in pairs):
        return _write_csv("pairs", ["source_id", "target_id", "label"],
                          ([p.source_id, p.target_id, p.label or ""] for p in pairs))
    return _write_csv("pairs", ["source_id", "target_id"], ([p.source_id, p.target_id] for p in pairs))


def parse_pairs(text: str) -> list[InstancePair]:
    """``source_id,target_id[,label]`` lines; label is MATCH or NON_MATCH."""
    out = []
    for n, row in _rows(text, "source_id"):
        if len(row) not in (2, 3):
            raise RecordFormatError(n, f"expected 2 or 3 columns, got {len(row)}")
        label = row[2] if len(row) == 3 and row[2] else None
        if label is not None and label not in PAIR_LABELS:
            raise RecordFormatError(n, f"label must be one of {PAIR_LABELS}, got {label!r}")
        out.append(InstancePair(row[0], row[1], label))
    return out


def read_pairs(path) -> list[InstancePair]:
    return parse_pairs(Path(path).read_text(encoding="utf-8"))


# features ------------------------------------------------------------------

def dump_features(fm: FeatureMatrix, with_labels: bool | None = None) -> str:
    if with_labels is None:
        with_labels = any(p.label is not None for p in fm.pairs)
    cols = ["source_id", "target_id"] + [f"f{j + 1}" for j in range(fm.schema.dim)]
    if with_labels:
        cols.append("label")

    def rows():
        for p, v in zip(fm.pairs, fm.values):
            r = [p.source_id, p.target_id] + [fmt_float(x) for x in v]
            if with_labels:
                r.append(p.label or "")
            yield r

    return _write_csv(f"features schema={fm.schema.schema_id}", cols, rows())


def parse_features(text: str, schema: FeatureSchema = DEFAULT_SCHEMA) -> FeatureMatrix:
    d = schema.dim
    pairs, values = [], []
    for n, row in _rows(text, "source_id"):
        if len(row) not in (2 + d, 3 + d):
            raise RecordFormatError(n, f"expected {2 + d} or {3 + d} columns, got {len(row)}")
        try:
            vals = [float(x) for x in row[2:2 + d]]
        except ValueError as exc:
            raise RecordFormatError(n, str(exc)) from None
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise RecordFormatError(n, "feature values must lie in [0, 1]")
        label = row[2 + d] if len(row) == 3 + d and row[2 + d] else None
        if label is not None and label not in PAIR_LABELS:
            raise RecordFormatError(n, f"bad label {label!r}")
        pairs.append(InstancePair(row[0], row[1], label))
        values.append(vals)
    return FeatureMatrix(pairs, np.array(values, dtype=float).reshape(len(pairs), d), schema)


def read_features(path, schema: FeatureSchema = DEFAULT_SCHEMA) -> FeatureMatrix:
    return parse_features(Path(path).read_text(encoding="utf-8"), schema)


# decisions -----------------------------------------------------------------

DECISION_COLUMNS = ["source_id", "target_id", "winner", "match_label",
                    "membership_match", "membership_nonmatch", "reassigned"]


def dump_decisions(decisions: Iterable[MatchDecision]) -> str:
    def rows():
        for d in decisions:
            p = d.pair
            yield [p.source_id if p else "", p.target_id if p else "", d.winner, d.match_label or "",
                   fmt_float(d.membership_match), fmt_float(d.membership_nonmatch),
                   "1" if d.reassigned else "0"]

    return _write_csv("decisions", DECISION_COLUMNS, rows())


def parse_decisions(text: str) -> list[MatchDecision]:
    out = []
    for n, row in _rows(text, "source_id"):
        if len(row) != len(DECISION_COLUMNS):
            raise RecordFormatError(n, f"expected {len(DECISION_COLUMNS)} columns, got {len(row)}")
        s, t, winner, label, um, un, re = row
        out.append(MatchDecision(pair=InstancePair(s, t), winner=winner,
                                 memberships={"MATCH": float(um), "NON_MATCH": float(un)},
                                 reassigned=re == "1", match_label=label or None))
    return out


def read_decisions(path) -> list[MatchDecision]:
    return parse_decisions(Path(path).read_text(encoding="utf-8"))


# ratings / recommendations -------------------------------------------------

def parse_ratings(text: str, scale=(1.0, 5.0)) -> RatingMatrix:
    rm = RatingMatrix(scale=scale)
    for n, row in _rows(text, "user_id"):
        if len(row) != 3:
            raise RecordFormatError(n, f"expected user_id,item_id,rating, got {len(row)} columns")
        try:
            rm.add(row[0], row[1], float(row[2]))
        except ValueError as exc:
            raise RecordFormatError(n, str(exc)) from None
    return rm


def read_ratings(path, scale=(1.0, 5.0)) -> RatingMatrix:
    return parse_ratings(Path(path).read_text(encoding="utf-8"), scale)


def dump_ratings(rm: RatingMatrix) -> str:
    return _write_csv("ratings", ["user_id", "item_id", "rating"],
                      ([u, i, fmt_float(r)] for u, i, r in rm))


def dump_recommendations(recs: dict[str, list[Recommendation]]) -> str:
    def rows():
        for user in sorted(recs):
            for r in recs[user]:
                yield [user, r.item_id, fmt_float(r.score),
                       "" if r.cf is None else fmt_float(r.cf), fmt_float(r.cb), fmt_float(r.alpha)]

    return _write_csv("recommendations", ["user_id", "item_id", "score", "cf", "cb", "alpha"], rows())


def dump_json(kind: str, obj) -> str:
    body = json.dumps(obj, sort_keys=True, indent=2)
    return header(kind) + "\n" + body + "\n"


def parse_json(text: str):
    body = "\n".join(ln for ln in text.splitlines() if not ln.startswith("#"))
    return json.loads(body)
