"""Fuzzy c-means and triangular fuzzification.

Shows how memberships soften as the fuzzifier grows, and how class labels
become overlapping triangular sets.
"""

# %% two blobs
import numpy as np

from lomatch import fcm_cluster, fcm_memberships, fuzzify_class_labels

rng = np.random.default_rng(0)
X = np.vstack([rng.normal([0.2, 0.2], 0.05, (100, 2)), rng.normal([0.8, 0.7], 0.05, (100, 2))])

# %% the fuzzifier controls overlap
probe = np.array([[0.5, 0.45]])     # roughly between the blobs
for m in (1.25, 1.5, 2.0, 3.0):
    st = fcm_cluster(X, 2, m=m, seed=0)
    u = fcm_memberships(probe, st.centers, m)[0]
    print(f"m={m:<4} centers={np.round(st.centers, 3).tolist()}  probe u={np.round(u, 3)}  iters={st.n_iter}")

# %% the objective never increases
st = fcm_cluster(X, 3, m=2.0, seed=4)
h = np.array(st.objective_history)
print("objective:", np.round(h[:6], 4), "...", f"{h[-1]:.4f}")
assert np.all(np.diff(h) <= 1e-9)

# %% class labels as triangular fuzzy sets on [0, 1]
mfs = fuzzify_class_labels(["low", "medium", "high"], (0.0, 1.0))
for x in (0.0, 0.2, 0.5, 0.7, 1.0):
    print(f"x={x:.1f}", {k: round(mf(x), 2) for k, mf in mfs.items()})
