"""Hybrid recommender: user-user Pearson collaborative filtering blended
with content-based scoring of learning-object feature profiles.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ColdStartError, UnknownIdError
from .records import InstancePair, LearningObjectRecord, Ontology
from .similarity import extract_features

DEFAULT_SCALE = (1.0, 5.0)
MIN_SUPPORT = 2


class RatingMatrix:
    """Sparse (user, item) -> rating store on a fixed scale."""

    def __init__(self, ratings: Iterable[tuple[str, str, float]] = (), scale=DEFAULT_SCALE):
        self.r_min, self.r_max = map(float, scale)
        if not self.r_min < self.r_max:
            raise ValueError("rating scale must satisfy r_min < r_max")
        self._by_user: dict[str, dict[str, float]] = defaultdict(dict)
        self._items: set[str] = set()
        for user, item, r in ratings:
            self.add(user, item, r)

    @property
    def scale(self) -> tuple[float, float]:
        return (self.r_min, self.r_max)

    def add(self, user: str, item: str, rating: float):
        rating = float(rating)
        if not self.r_min <= rating <= self.r_max:
            raise ValueError(f"rating {rating} for ({user}, {item}) is outside {self.scale}")
        if item in self._by_user.get(user, {}):
            raise ValueError(f"duplicate rating for ({user}, {item})")
        self._by_user[user][item] = rating
        self._items.add(item)

    def add_user(self, user: str):
        self._by_user.setdefault(user, {})

    @property
    def users(self) -> list[str]:
        return sorted(self._by_user)

    @property
    def items(self) -> list[str]:
        return sorted(self._items)

    def user_ratings(self, user: str) -> dict[str, float]:
        if user not in self._by_user:
            raise UnknownIdError(f"unknown user {user!r}")
        return self._by_user[user]

    def mean(self, user: str) -> float:
        r = self.user_ratings(user)
        if not r:
            raise ColdStartError(f"user {user!r} has no ratings")
        return sum(r.values()) / len(r)

    def __iter__(self):
        for u in self.users:
            for i, r in sorted(self._by_user[u].items()):
                yield u, i, r

    def __len__(self):
        return sum(len(v) for v in self._by_user.values())


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    vector: np.ndarray
    mean_rating: float | None


@dataclass(frozen=True)
class Recommendation:
    item_id: str
    score: float
    cf: float | None
    cb: float
    alpha: float


def pearson_user_similarity(ratings: RatingMatrix, u: str, v: str) -> float:
    """Pearson correlation over co-rated items, centred on the co-rated means.

    Zero when fewer than two items are co-rated or either side is constant.
    """
    ru, rv = ratings.user_ratings(u), ratings.user_ratings(v)
    common = sorted(set(ru) & set(rv))
    if len(common) < MIN_SUPPORT:
        return 0.0
    a = np.array([ru[i] for i in common])
    b = np.array([rv[i] for i in common])
    da, db = a - a.mean(), b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0:
        return 0.0
    return float(np.clip(da @ db / denom, -1.0, 1.0))


def _neighbors(ratings: RatingMatrix, u: str, item: str, k: int) -> list[tuple[str, float]]:
    cands = []
    for v in ratings.users:
        if v == u or item not in ratings.user_ratings(v):
            continue
        w = pearson_user_similarity(ratings, u, v)
        if w > 0:
            cands.append((v, w))
    cands.sort(key=lambda t: (-t[1], t[0]))
    return cands[:k]


def predict_rating_cf(ratings: RatingMatrix, u: str, item: str, k_neighbors: int = 10,
                      return_support: bool = False):
    """Mean-centred weighted-deviation prediction from the ``k`` most similar
    positively correlated users who rated ``item``; clamped to the scale.

    Falls back to the user's mean when no such neighbour exists.  With
    ``return_support`` the neighbour count is returned alongside.
    """
    r_u = ratings.mean(u)
    nbrs = _neighbors(ratings, u, item, k_neighbors)
    if nbrs:
        num = sum(w * (ratings.user_ratings(v)[item] - ratings.mean(v)) for v, w in nbrs)
        den = sum(abs(w) for _, w in nbrs)
        pred = r_u + num / den
    else:
        pred = r_u
    pred = min(max(pred, ratings.r_min), ratings.r_max)
    return (pred, len(nbrs)) if return_support else pred


def build_content_profile(ratings: RatingMatrix, u: str,
                          item_features: Mapping[str, np.ndarray]) -> UserProfile:
    """Rating-weighted mean of the feature vectors of the items ``u`` rated.

    Weights are ratings rescaled to [0, 1]; a user whose ratings are all at
    the scale minimum carries no content signal.
    """
    rated = ratings.user_ratings(u)
    if not rated:
        raise ColdStartError(f"user {u!r} has no ratings")
    items = [i for i in sorted(rated) if i in item_features]
    if not items:
        raise ColdStartError(f"none of user {u!r}'s rated items have feature vectors")
    w = np.array([(rated[i] - ratings.r_min) / (ratings.r_max - ratings.r_min) for i in items])
    if w.sum() == 0:
        raise ColdStartError(f"user {u!r} rated everything at the scale minimum")
    V = np.array([np.asarray(item_features[i], dtype=float) for i in items])
    return UserProfile(u, (w @ V) / w.sum(), ratings.mean(u))


def score_content(profile: UserProfile | np.ndarray, item) -> float:
    p = np.asarray(profile.vector if isinstance(profile, UserProfile) else profile, dtype=float)
    x = np.asarray(item, dtype=float)
    if p.shape != x.shape:
        raise ValueError(f"profile dimension {p.shape} != item dimension {x.shape}")
    np_, nx = np.linalg.norm(p), np.linalg.norm(x)
    if np_ == 0 or nx == 0:
        return 0.0
    return float(np.clip(p @ x / (np_ * nx), 0.0, 1.0))


def recommend_hybrid(ratings: RatingMatrix, item_features: Mapping[str, np.ndarray], u: str,
                     top_k: int = 10, alpha: float = 0.5, k_neighbors: int = 10,
                     seed_profile=None, cf_fallback: str = "content") -> list[Recommendation]:
    """Top-``k`` unrated items by ``alpha * cf + (1 - alpha) * cb``.

    ``cf`` is the CF prediction rescaled to [0, 1].  When no neighbour
    supports an item and ``cf_fallback == "content"``, the item is scored by
    ``cb`` alone (its ``cf`` is reported as ``None``); with ``"mean"`` the
    user-mean fallback prediction is blended as usual.  A user with no
    ratings is served in pure content mode from ``seed_profile``.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if cf_fallback not in ("content", "mean"):
        raise ValueError("cf_fallback must be 'content' or 'mean'")
    rated = ratings.user_ratings(u)
    cold = not rated
    if cold:
        if seed_profile is None:
            raise ColdStartError(f"user {u!r} has no ratings and no seed profile was supplied")
        profile = np.asarray(seed_profile, dtype=float)
    else:
        profile = build_content_profile(ratings, u, item_features).vector

    span = ratings.r_max - ratings.r_min
    recs = []
    for item in sorted(item_features):
        if item in rated:
            continue
        cb = score_content(profile, item_features[item])
        if cold:
            recs.append(Recommendation(item, cb, None, cb, 0.0))
            continue
        pred, support = predict_rating_cf(ratings, u, item, k_neighbors, return_support=True)
        if support == 0 and cf_fallback == "content":
            recs.append(Recommendation(item, cb, None, cb, alpha))
            continue
        cf = (pred - ratings.r_min) / span
        recs.append(Recommendation(item, alpha * cf + (1 - alpha) * cb, cf, cb, alpha))
    recs.sort(key=lambda r: (-r.score, r.item_id))
    return recs[:top_k]


def item_feature_vectors(items: Sequence[LearningObjectRecord],
                         anchors: Sequence[LearningObjectRecord] | None = None,
                         type_hierarchy=None) -> dict[str, np.ndarray]:
    """Represent every item by its similarity features against anchor records.

    The vector of an item concatenates the 4-component pair features against
    each anchor in order, so all items live in one space of dimension
    ``4 * len(anchors)``.  Anchors default to the items themselves.
    """
    anchors = list(items) if anchors is None else list(anchors)
    if not anchors:
        raise ValueError("need at least one anchor record")
    item_onto = Ontology.from_records(items, type_hierarchy, name="items")
    anchor_onto = Ontology.from_records(anchors, type_hierarchy, name="anchors")
    out = {}
    for rec in items:
        parts = [extract_features(InstancePair(rec.id, a.id), item_onto, anchor_onto).values
                 for a in anchors]
        out[rec.id] = np.concatenate(parts)
    return out
