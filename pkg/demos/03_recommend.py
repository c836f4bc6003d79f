"""Hybrid recommendation of learning objects.

Items are described by their similarity features against every other item;
users rate items in taste groups.  The hybrid score blends neighbour-based
collaborative filtering with a content profile, and alpha moves between them.
"""

# %% items, features and ratings
from lomatch.recommender import item_feature_vectors, predict_rating_cf, recommend_hybrid
from lomatch.synth import TYPE_HIERARCHY, make_lom_repositories, make_ratings

repo, _, _ = make_lom_repositories(n=25, seed=3)
items = repo.instances
feats = item_feature_vectors(items, type_hierarchy=TYPE_HIERARCHY)
ratings = make_ratings([r.id for r in items], n_users=20, density=0.35, seed=3)
print(f"{len(items)} items, {len(ratings.users)} users, {len(ratings)} ratings")

# %% one user's collaborative prediction
user = ratings.users[0]
unrated = [i for i in ratings.items if i not in ratings.user_ratings(user)]
pred, support = predict_rating_cf(ratings, user, unrated[0], return_support=True)
print(f"{user} on {unrated[0]}: predicted {pred:.2f} from {support} neighbour(s)")

# %% alpha sweeps from content-only to CF-only
titles = {r.id: r.title for r in items}
for alpha in (0.0, 0.5, 1.0):
    recs = recommend_hybrid(ratings, feats, user, top_k=3, alpha=alpha)
    print(f"alpha={alpha}:")
    for r in recs:
        cf = "  n/a" if r.cf is None else f"{r.cf:.2f}"
        print(f"   {r.item_id} score={r.score:.3f} cf={cf} cb={r.cb:.3f}  {titles[r.item_id]}")

# %% a newcomer is served from a seed profile
ratings.add_user("newcomer")
seed = feats[items[0].id]
recs = recommend_hybrid(ratings, feats, "newcomer", top_k=3, seed_profile=seed)
print("newcomer seeded with", items[0].id, "->", [r.item_id for r in recs])
