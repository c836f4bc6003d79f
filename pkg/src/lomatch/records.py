"""Learning-object metadata records, ontologies, and candidate pairs.

Records are read from line-delimited JSON: one object per line with the
fields ``id``, ``title``, ``description``, ``keywords``, ``resource_type``
and ``repository``.  Lines starting with ``#`` are treated as header or
comment lines and skipped.
"""

from __future__ import annotations

import io
import json
import logging
import re
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateIdError,
    EmptyRepositoryError,
    RecordFormatError,
    UnknownIdError,
)

logger = logging.getLogger(__name__)

MATCH = "MATCH"
NON_MATCH = "NON_MATCH"
PAIR_LABELS = (MATCH, NON_MATCH)

RECORDS_JSONL = "records_jsonl"
FULL_CROSS = "full_cross"

RECORD_FIELDS = ("id", "title", "description", "keywords", "resource_type", "repository")

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it on whitespace and punctuation."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class LearningObjectRecord:
    id: str
    title: str
    description: str = ""
    keywords: frozenset[str] = frozenset()
    resource_type: str = ""
    repository: str = ""

    def title_tokens(self) -> list[str]:
        return tokenize(self.title)

    def description_tokens(self) -> list[str]:
        return tokenize(self.description)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "description": self.description,
            "keywords": sorted(self.keywords),
            "resource_type": self.resource_type,
            "repository": self.repository,
        }


@dataclass(frozen=True)
class InstancePair:
    """A candidate correspondence between a source and a target record."""

    source_id: str
    target_id: str
    label: str | None = None

    def __post_init__(self):
        if self.label is not None and self.label not in PAIR_LABELS:
            raise ValueError(f"pair label must be one of {PAIR_LABELS}, got {self.label!r}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.source_id, self.target_id)


def _check_hierarchy(name: str, members: frozenset[str], hierarchy: Mapping[str, str]):
    for child, parent in hierarchy.items():
        if child not in members or parent not in members:
            raise ValueError(f"{name}: {child!r} -> {parent!r} references an undeclared identifier")
    for start in hierarchy:
        seen = {start}
        node = hierarchy.get(start)
        while node is not None:
            if node in seen:
                raise ValueError(f"{name}: cycle through {node!r}")
            seen.add(node)
            node = hierarchy.get(node)


@dataclass(frozen=True)
class Ontology:
    """An ontology O = (classes, properties, class/property hierarchies, instances, axioms).

    Resource types are modelled as classes, so ``class_hierarchy`` doubles as
    the type hierarchy used by the type-match feature.  Properties and axioms
    are carried along but not interpreted.
    """

    instances: tuple[LearningObjectRecord, ...]
    classes: frozenset[str] = frozenset()
    properties: frozenset[str] = frozenset()
    class_hierarchy: Mapping[str, str] = field(default_factory=dict)
    property_hierarchy: Mapping[str, str] = field(default_factory=dict)
    axioms: tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "classes", frozenset(self.classes))
        object.__setattr__(self, "properties", frozenset(self.properties))
        _check_hierarchy("class_hierarchy", self.classes, self.class_hierarchy)
        _check_hierarchy("property_hierarchy", self.properties, self.property_hierarchy)
        index = {}
        for rec in self.instances:
            if rec.id in index:
                raise DuplicateIdError(rec.id)
            index[rec.id] = rec
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_records(cls, records: Iterable[LearningObjectRecord], type_hierarchy=None, name=""):
        """Build an ontology whose classes are the resource types seen in ``records``."""
        records = tuple(records)
        type_hierarchy = dict(type_hierarchy or {})
        classes = {r.resource_type for r in records if r.resource_type}
        classes.update(type_hierarchy)
        classes.update(type_hierarchy.values())
        return cls(instances=records, classes=frozenset(classes),
                   class_hierarchy=type_hierarchy, name=name)

    def __len__(self):
        return len(self.instances)

    def record(self, record_id: str) -> LearningObjectRecord:
        try:
            return self._index[record_id]
        except KeyError:
            raise UnknownIdError(f"record {record_id!r} not found in ontology {self.name!r}") from None

    def __contains__(self, record_id):
        return record_id in self._index

    def ancestors(self, cls_id: str) -> list[str]:
        out = []
        node = self.class_hierarchy.get(cls_id)
        while node is not None:
            out.append(node)
            node = self.class_hierarchy.get(node)
        return out


def normalize_keywords(keywords: Iterable[str]) -> frozenset[str]:
    tokens: set[str] = set()
    for kw in keywords:
        tokens.update(tokenize(kw))
    return frozenset(tokens)


def normalize_record(raw: LearningObjectRecord) -> LearningObjectRecord:
    """Return ``raw`` with keywords lowercased, tokenized and deduplicated.

    Title and description are kept verbatim; their token forms come from
    :func:`tokenize`.
    """
    return replace(raw, keywords=normalize_keywords(raw.keywords),
                   resource_type=raw.resource_type.strip())


def record_from_dict(obj: Mapping, *, line_no: int = 0, allowed_types=None) -> LearningObjectRecord:
    if not isinstance(obj, Mapping):
        raise RecordFormatError(line_no, "expected a JSON object")
    unknown = set(obj) - set(RECORD_FIELDS)
    if unknown:
        logger.warning("line %d: ignoring unknown fields %s", line_no, sorted(unknown))
    rec_id = obj.get("id")
    if not isinstance(rec_id, str) or not rec_id.strip():
        raise RecordFormatError(line_no, "missing or empty 'id'")
    title = obj.get("title")
    if not isinstance(title, str):
        raise RecordFormatError(line_no, "missing or non-text 'title'")
    description = obj.get("description", "")
    if description is None:
        description = ""
    if not isinstance(description, str):
        raise RecordFormatError(line_no, "'description' must be text")
    keywords = obj.get("keywords", [])
    if isinstance(keywords, str):
        keywords = [keywords]
    if not isinstance(keywords, list) or not all(isinstance(k, str) for k in keywords):
        raise RecordFormatError(line_no, "'keywords' must be a list of strings")
    rtype = obj.get("resource_type", "")
    if not isinstance(rtype, str):
        raise RecordFormatError(line_no, "'resource_type' must be text")
    if allowed_types is not None and rtype.strip() not in allowed_types:
        raise RecordFormatError(line_no, f"resource_type {rtype!r} is not in the configured enumeration")
    repository = obj.get("repository", "")
    if not isinstance(repository, str):
        raise RecordFormatError(line_no, "'repository' must be text")
    raw = LearningObjectRecord(id=rec_id, title=title, description=description,
                               keywords=frozenset(keywords), resource_type=rtype,
                               repository=repository)
    return normalize_record(raw)


def parse_repository(stream: IO[bytes] | IO[str] | bytes | str, format: str = RECORDS_JSONL,
                     allowed_types: Iterable[str] | None = None) -> list[LearningObjectRecord]:
    """Parse a record file into normalized records, preserving input order.

    ``stream`` may be a binary or text file object, or the raw content.
    Blank lines and ``#`` lines are skipped but still counted for error
    positions.
    """
    if format != RECORDS_JSONL:
        raise ValueError(f"unsupported record format {format!r}")
    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    allowed = frozenset(allowed_types) if allowed_types is not None else None

    records = []
    seen: dict[str, int] = {}
    for line_no, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise RecordFormatError(line_no, f"invalid UTF-8: {exc}") from None
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordFormatError(line_no, f"invalid JSON: {exc.msg}") from None
        rec = record_from_dict(obj, line_no=line_no, allowed_types=allowed)
        if rec.id in seen:
            raise DuplicateIdError(rec.id, line_no)
        seen[rec.id] = line_no
        records.append(rec)
    return records


def serialize_repository(records: Iterable[LearningObjectRecord], header: str | None = None) -> str:
    lines = [header] if header else []
    for rec in records:
        lines.append(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True))
    return "\n".join(lines) + "\n"


def generate_candidate_pairs(source: Ontology, target: Ontology,
                             strategy: str = FULL_CROSS) -> list[InstancePair]:
    """All unlabeled (source, target) pairs, in source-major order."""
    if strategy != FULL_CROSS:
        raise ValueError(f"unsupported blocking strategy {strategy!r}")
    if len(source) == 0 or len(target) == 0:
        raise EmptyRepositoryError("candidate generation needs at least one record on each side")
    return [InstancePair(s.id, t.id) for s in source.instances for t in target.instances]


def label_pairs(pairs: Sequence[InstancePair], gold: Mapping[tuple[str, str], str]) -> list[InstancePair]:
    """Attach gold labels; pairs absent from ``gold`` become NON_MATCH."""
    return [InstancePair(p.source_id, p.target_id, gold.get(p.key, NON_MATCH)) for p in pairs]


def sample_negatives(pairs: Sequence[InstancePair], negative_ratio: float | None, seed: int) -> list[InstancePair]:
    """Keep every MATCH pair and a seeded sample of NON_MATCH pairs.

    ``negative_ratio`` is the number of negatives kept per positive; ``None``
    keeps them all.  Relative input order is preserved.
    """
    if negative_ratio is None:
        return list(pairs)
    if negative_ratio < 0:
        raise ValueError("negative_ratio must be non-negative")
    pos = [i for i, p in enumerate(pairs) if p.label == MATCH]
    neg = [i for i, p in enumerate(pairs) if p.label != MATCH]
    n_keep = min(len(neg), int(round(negative_ratio * len(pos))))
    rng = np.random.default_rng(seed)
    keep_neg = rng.choice(len(neg), size=n_keep, replace=False) if n_keep else []
    keep = set(pos) | {neg[j] for j in keep_neg}
    return [p for i, p in enumerate(pairs) if i in keep]
