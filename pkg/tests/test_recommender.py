import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lomatch.errors import ColdStartError, UnknownIdError
from lomatch.records import LearningObjectRecord
from lomatch.recommender import (
    RatingMatrix,
    build_content_profile,
    item_feature_vectors,
    pearson_user_similarity,
    predict_rating_cf,
    recommend_hybrid,
    score_content,
)
from lomatch.synth import make_ratings

FIXED = [("u1", "i1", 5), ("u1", "i2", 3), ("u1", "i3", 4),
         ("u2", "i1", 4), ("u2", "i2", 2), ("u2", "i3", 5), ("u2", "i4", 4),
         ("u3", "i1", 5), ("u3", "i2", 2), ("u3", "i3", 3), ("u3", "i4", 1)]


def fixed():
    return RatingMatrix(FIXED)


def manual_prediction():
    # co-rated i1..i3; u1 centred (1, -1, 0)
    # u2 centred (1/3, -5/3, 4/3): w = 2 / sqrt(2 * 42/9) = 6 / sqrt(84)
    # u3 centred (5/3, -4/3, -1/3): w = 3 / sqrt(2 * 42/9) = 9 / sqrt(84)
    w2, w3 = 6 / math.sqrt(84), 9 / math.sqrt(84)
    mean_u1, mean_u2, mean_u3 = 4.0, 15 / 4, 11 / 4
    return mean_u1 + (w2 * (4 - mean_u2) + w3 * (1 - mean_u3)) / (w2 + w3)


class TestRatingMatrix:
    def test_out_of_scale(self):
        with pytest.raises(ValueError):
            RatingMatrix([("u", "i", 6)])

    def test_duplicate(self):
        with pytest.raises(ValueError):
            RatingMatrix([("u", "i", 3), ("u", "i", 4)])

    def test_unknown_user(self):
        with pytest.raises(UnknownIdError):
            fixed().user_ratings("zz")

    def test_mean_cold(self):
        rm = RatingMatrix()
        rm.add_user("new")
        with pytest.raises(ColdStartError):
            rm.mean("new")


class TestPearson:
    def test_weights(self):
        rm = fixed()
        assert pearson_user_similarity(rm, "u1", "u2") == pytest.approx(6 / math.sqrt(84), abs=1e-12)
        assert pearson_user_similarity(rm, "u1", "u3") == pytest.approx(9 / math.sqrt(84), abs=1e-12)

    def test_symmetric(self):
        rm = make_ratings([f"i{j}" for j in range(15)], n_users=8, density=0.6, seed=2)
        for u in rm.users:
            for v in rm.users:
                assert pearson_user_similarity(rm, u, v) == pytest.approx(pearson_user_similarity(rm, v, u))

    def test_min_support(self):
        rm = RatingMatrix([("a", "x", 5), ("b", "x", 4), ("a", "y", 1)])
        assert pearson_user_similarity(rm, "a", "b") == 0.0

    def test_constant_user(self):
        rm = RatingMatrix([("a", "x", 3), ("a", "y", 3), ("b", "x", 1), ("b", "y", 5)])
        assert pearson_user_similarity(rm, "a", "b") == 0.0

    def test_shift_invariant(self):
        rm = RatingMatrix([("a", "x", 1), ("a", "y", 2), ("a", "z", 4),
                           ("b", "x", 2), ("b", "y", 3), ("b", "z", 5)])
        assert pearson_user_similarity(rm, "a", "b") == pytest.approx(1.0)


class TestPredictCF:
    def test_oracle(self):
        got = predict_rating_cf(fixed(), "u1", "i4")
        assert got == pytest.approx(manual_prediction(), abs=1e-9)
        assert got == pytest.approx(61 / 20, abs=1e-9)

    def test_single_neighbour(self):
        assert predict_rating_cf(fixed(), "u1", "i4", k_neighbors=1) == pytest.approx(4 - 1.75, abs=1e-12)

    def test_fallback_to_mean(self):
        rm = RatingMatrix([("a", "x", 4), ("a", "y", 2), ("b", "z", 5)])
        pred, support = predict_rating_cf(rm, "a", "z", return_support=True)
        assert pred == 3.0 and support == 0

    def test_clamped(self):
        rm = RatingMatrix([("a", "x", 5), ("a", "y", 4), ("a", "z", 5),
                           ("b", "x", 5), ("b", "y", 1), ("b", "z", 5), ("b", "w", 5)])
        assert predict_rating_cf(rm, "a", "w") == 5.0


def _features():
    return {"i1": np.array([1.0, 0.0]), "i2": np.array([0.0, 1.0]), "i3": np.array([1.0, 1.0]),
            "i4": np.array([0.9, 0.1]), "i5": np.array([0.1, 0.9]), "i6": np.array([0.5, 0.4])}


class TestContent:
    def test_profile_weighted_mean(self):
        rm = RatingMatrix([("u", "i1", 5), ("u", "i2", 3)])
        p = build_content_profile(rm, "u", _features())
        # weights (1, 0.5)
        np.testing.assert_allclose(p.vector, [2 / 3, 1 / 3])

    def test_profile_all_minimum(self):
        rm = RatingMatrix([("u", "i1", 1)])
        with pytest.raises(ColdStartError):
            build_content_profile(rm, "u", _features())

    def test_score_bounds(self):
        assert score_content(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == pytest.approx(1.0)
        assert score_content(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == 0.0
        assert score_content(np.zeros(2), np.ones(2)) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            score_content(np.ones(2), np.ones(3))

    def test_item_feature_vectors(self):
        recs = [LearningObjectRecord("a", "intro algebra", "vectors", frozenset({"math"}), "video"),
                LearningObjectRecord("b", "intro algebra", "vectors", frozenset({"math"}), "video"),
                LearningObjectRecord("c", "poetry", "verse", frozenset({"art"}), "quiz")]
        v = item_feature_vectors(recs)
        assert v["a"].shape == (12,)
        np.testing.assert_array_equal(v["a"], v["b"])
        assert np.all((v["c"] >= 0) & (v["c"] <= 1))


class TestHybrid:
    def _matrix(self):
        return make_ratings(sorted(_features()), n_users=10, density=0.5, seed=7)

    def test_alpha_one_is_cf_ranking(self):
        rm, F = fixed(), {**_features()}
        recs = recommend_hybrid(rm, F, "u1", top_k=10, alpha=1.0, cf_fallback="mean")
        cf = sorted(((predict_rating_cf(rm, "u1", i), i) for i in F if i not in rm.user_ratings("u1")),
                    key=lambda t: (-t[0], t[1]))
        assert [r.item_id for r in recs] == [i for _, i in cf]

    def test_alpha_zero_is_content_ranking(self):
        rm, F = fixed(), _features()
        recs = recommend_hybrid(rm, F, "u1", top_k=10, alpha=0.0, cf_fallback="mean")
        prof = build_content_profile(rm, "u1", F)
        cb = sorted(((score_content(prof, F[i]), i) for i in F if i not in rm.user_ratings("u1")),
                    key=lambda t: (-t[0], t[1]))
        assert [r.item_id for r in recs] == [i for _, i in cb]

    def test_content_fallback_marks_cf_none(self):
        rm, F = fixed(), _features()
        recs = {r.item_id: r for r in recommend_hybrid(rm, F, "u1", top_k=10, alpha=0.7)}
        assert recs["i4"].cf is not None
        assert recs["i5"].cf is None and recs["i5"].score == recs["i5"].cb

    def test_cold_user_with_seed(self):
        rm, F = fixed(), _features()
        rm.add_user("new")
        recs = recommend_hybrid(rm, F, "new", top_k=2, seed_profile=[1.0, 0.0])
        assert [r.item_id for r in recs] == ["i1", "i4"]

    def test_cold_user_without_seed(self):
        rm = fixed()
        rm.add_user("new")
        with pytest.raises(ColdStartError):
            recommend_hybrid(rm, _features(), "new")

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            recommend_hybrid(fixed(), _features(), "u1", alpha=1.5)
        with pytest.raises(ValueError):
            recommend_hybrid(fixed(), _features(), "u1", top_k=0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0, 1), st.integers(1, 6))
    def test_never_recommends_rated(self, seed, alpha, top_k):
        F = _features()
        rm = make_ratings(sorted(F), n_users=6, density=0.5, seed=seed)
        for u in rm.users:
            try:
                recs = recommend_hybrid(rm, F, u, top_k=top_k, alpha=alpha)
            except ColdStartError:
                continue
            rated = set(rm.user_ratings(u))
            assert not rated & {r.item_id for r in recs}
            assert len(recs) <= top_k
            scores = [r.score for r in recs]
            assert scores == sorted(scores, reverse=True)
