"""Seeded synthetic corpora for demos and acceptance runs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .records import MATCH, NON_MATCH, InstancePair, LearningObjectRecord, Ontology, normalize_keywords
from .recommender import RatingMatrix
from .similarity import DEFAULT_SCHEMA, FeatureMatrix

MATCH_CENTER = (0.9, 0.9, 0.9, 1.0)
NON_MATCH_CENTER = (0.2, 0.2, 0.1, 0.0)


@dataclass
class PairCorpus:
    features: FeatureMatrix      # pairs carry gold labels
    labeled: np.ndarray          # bool mask of the labeled subset

    @property
    def gold(self) -> list[str]:
        return [p.label for p in self.features.pairs]

    def split(self):
        """(X_l, y_l, X_u, y_u) arrays."""
        y = np.array(self.gold, dtype=object)
        X = self.features.values
        return X[self.labeled], y[self.labeled], X[~self.labeled], y[~self.labeled]


def make_pair_corpus(n_pairs: int = 200, labeled_fraction: float = 0.1, match_fraction: float = 0.5,
                     sigma: float = 0.08, seed: int = 0, match_center=MATCH_CENTER,
                     non_match_center=NON_MATCH_CENTER) -> PairCorpus:
    """Feature vectors drawn around the two class centres, clipped to [0, 1].

    The labeled subset is stratified so each class has at least one labeled
    example.
    """
    rng = np.random.default_rng(seed)
    n_match = int(round(match_fraction * n_pairs))
    y = np.array([MATCH] * n_match + [NON_MATCH] * (n_pairs - n_match), dtype=object)
    y = y[rng.permutation(n_pairs)]
    centers = np.where((y == MATCH)[:, None], np.asarray(match_center), np.asarray(non_match_center))
    X = np.clip(centers + rng.normal(0.0, sigma, size=centers.shape), 0.0, 1.0)

    labeled = np.zeros(n_pairs, dtype=bool)
    for c in (MATCH, NON_MATCH):
        idx = np.flatnonzero(y == c)
        k = max(1, int(round(labeled_fraction * len(idx))))
        labeled[rng.choice(idx, size=k, replace=False)] = True
    pairs = [InstancePair(f"s{i:04d}", f"t{i:04d}", y[i]) for i in range(n_pairs)]
    return PairCorpus(FeatureMatrix(pairs, X, DEFAULT_SCHEMA), labeled)


_TOPICS = ["algebra", "geometry", "calculus", "statistics", "probability", "physics", "chemistry",
           "biology", "history", "literature", "programming", "databases", "networks", "ethics",
           "economics", "astronomy", "ecology", "music", "art", "linguistics"]
_WORDS = ["introduction", "advanced", "course", "lecture", "notes", "exercises", "tutorial", "guide",
          "primer", "workshop", "lab", "module", "unit", "lesson", "overview", "applied", "theory",
          "practice", "foundations", "methods"]
TYPE_HIERARCHY = {"video": "media", "audio": "media", "slides": "document", "textbook": "document",
                  "quiz": "assessment", "exam": "assessment", "simulation": "interactive"}
_TYPES = sorted(TYPE_HIERARCHY)


def _perturb(text: str, rng, rate: float) -> str:
    chars = list(text)
    for i in range(len(chars)):
        if rng.random() < rate:
            chars[i] = chr(ord("a") + int(rng.integers(26)))
    return "".join(chars)


def make_lom_repositories(n: int = 100, seed: int = 0, noise: float = 0.05):
    """Two repositories of ``n`` records with a 1:1 gold alignment.

    Each target record is a noisy copy of one source record, shuffled.
    Returns ``(source, target, gold)`` where ``gold`` maps
    ``(source_id, target_id)`` to MATCH for the ``n`` true pairs.
    """
    rng = np.random.default_rng(seed)
    src = []
    for i in range(n):
        topic = _TOPICS[int(rng.integers(len(_TOPICS)))]
        words = [_WORDS[int(j)] for j in rng.choice(len(_WORDS), size=3, replace=False)]
        title = f"{words[0]} {topic} {words[1]} {i}"
        desc = " ".join([_WORDS[int(j)] for j in rng.integers(len(_WORDS), size=8)] + [topic] * 2)
        kws = [topic] + [_WORDS[int(j)] for j in rng.choice(len(_WORDS), size=2, replace=False)]
        rtype = _TYPES[int(rng.integers(len(_TYPES)))]
        src.append(LearningObjectRecord(f"A{i:03d}", title, desc, normalize_keywords(kws), rtype, "A"))

    order = rng.permutation(n)
    tgt, gold = [], {}
    for k, i in enumerate(order):
        s = src[i]
        kws = set(s.keywords)
        if rng.random() < 0.5 and len(kws) > 1:
            kws.discard(sorted(kws)[int(rng.integers(len(kws)))])
        rtype = s.resource_type
        if rng.random() < 0.2:
            rtype = TYPE_HIERARCHY[rtype]   # coarser type in the other repository
        words = s.description.split()
        keep = [w for w in words if rng.random() > noise * 4]
        t = LearningObjectRecord(f"B{k:03d}", _perturb(s.title, rng, noise), " ".join(keep),
                                 frozenset(kws), rtype, "B")
        tgt.append(t)
        gold[(s.id, t.id)] = MATCH
    hierarchy = dict(TYPE_HIERARCHY)
    return (Ontology.from_records(src, hierarchy, name="A"),
            Ontology.from_records(tgt, hierarchy, name="B"), gold)


def make_ratings(item_ids, n_users: int = 30, density: float = 0.3, seed: int = 0,
                 n_groups: int = 3) -> RatingMatrix:
    """Users in taste groups rating items on 1..5 with group-specific biases."""
    rng = np.random.default_rng(seed)
    item_ids = sorted(item_ids)
    taste = rng.normal(0.0, 1.2, size=(n_groups, len(item_ids)))
    rm = RatingMatrix()
    for u in range(n_users):
        g = u % n_groups
        user = f"u{u:03d}"
        rm.add_user(user)
        for j, item in enumerate(item_ids):
            if rng.random() < density:
                r = np.clip(np.round(3 + taste[g, j] + rng.normal(0, 0.5)), 1, 5)
                rm.add(user, item, float(r))
    return rm
