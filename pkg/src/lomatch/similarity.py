"""Similarity features turning a record pair into a vector in [0, 1]^d."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import SchemaMismatchError
from .records import InstancePair, Ontology, tokenize


@dataclass(frozen=True)
class FeatureSchema:
    schema_id: str
    names: tuple[str, ...]

    @property
    def dim(self) -> int:
        return len(self.names)


DEFAULT_SCHEMA = FeatureSchema("lom4-v1", ("title", "description", "keywords", "type"))


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    schema_id: str = DEFAULT_SCHEMA.schema_id

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(not (0.0 <= v <= 1.0) for v in vals):
            raise ValueError(f"feature components must lie in [0, 1]: {vals}")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype or float)


@dataclass
class FeatureMatrix:
    """Features for a batch of pairs; row ``i`` belongs to ``pairs[i]``."""

    pairs: list[InstancePair]
    values: np.ndarray
    schema: FeatureSchema = DEFAULT_SCHEMA

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(len(self.pairs), -1)
        if self.values.shape[1] != self.schema.dim and len(self.pairs):
            raise SchemaMismatchError(
                f"schema {self.schema.schema_id} has {self.schema.dim} features, got {self.values.shape[1]}")

    def __len__(self):
        return len(self.pairs)

    @property
    def labels(self) -> list[str | None]:
        return [p.label for p in self.pairs]

    def subset(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=int)
        return FeatureMatrix([self.pairs[i] for i in idx], self.values[idx], self.schema)


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def edit_similarity(a: str, b: str, both_empty: float = 1.0) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return both_empty
    return 1.0 - edit_distance(a, b) / longest


def token_set_similarity(a: Iterable[str], b: Iterable[str], both_empty: float = 1.0) -> float:
    """Jaccard index of two token sets."""
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return both_empty
    return len(a & b) / len(union)


def tf_cosine_similarity(a: str, b: str, either_empty: float = 0.0) -> float:
    """Cosine between raw term-frequency vectors of the normalized tokens."""
    ta, tb = Counter(tokenize(a)), Counter(tokenize(b))
    if not ta or not tb:
        return either_empty
    dot = sum(n * tb[t] for t, n in ta.items())
    # one sqrt of an integer product keeps identical inputs at exactly 1.0
    norm = math.sqrt(sum(n * n for n in ta.values()) * sum(n * n for n in tb.values()))
    return min(1.0, dot / norm)


def type_match(type_a: str, type_b: str, source: Ontology | None = None,
               target: Ontology | None = None) -> float:
    """1.0 if the types are equal or one is an ancestor of the other."""
    if type_a == type_b:
        return 1.0
    for onto in (source, target):
        if onto is None:
            continue
        if type_b in onto.ancestors(type_a) or type_a in onto.ancestors(type_b):
            return 1.0
    return 0.0


def extract_features(pair: InstancePair, source: Ontology, target: Ontology) -> FeatureVector:
    s = source.record(pair.source_id)
    t = target.record(pair.target_id)
    return FeatureVector((
        edit_similarity(s.title, t.title),
        tf_cosine_similarity(s.description, t.description),
        token_set_similarity(s.keywords, t.keywords),
        type_match(s.resource_type, t.resource_type, source, target),
    ))


def extract_feature_matrix(pairs: Sequence[InstancePair], source: Ontology,
                           target: Ontology) -> FeatureMatrix:
    rows = [extract_features(p, source, target).values for p in pairs]
    values = np.array(rows, dtype=float).reshape(len(pairs), DEFAULT_SCHEMA.dim)
    return FeatureMatrix(list(pairs), values, DEFAULT_SCHEMA)
