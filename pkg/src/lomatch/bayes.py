"""Gaussian naive Bayes, with an optional frequency-count branch for categorical columns."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import EmptyClusterError, SchemaMismatchError

VAR_FLOOR = 1e-6
FORMAT_VERSION = 1


@dataclass(frozen=True)
class NaiveBayesModel:
    classes: tuple[str, ...]
    priors: np.ndarray            # (q,)
    means: np.ndarray             # (q, d)
    variances: np.ndarray         # (q, d)
    class_counts: np.ndarray      # (q,)
    n_train: int
    schema_id: str = ""
    var_floor: float = VAR_FLOOR
    # column index -> per-class {value: count}; empty unless categorical columns were declared
    categorical: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "schema_id": self.schema_id,
            "classes": list(self.classes),
            "priors": self.priors.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "class_counts": self.class_counts.tolist(),
            "n_train": self.n_train,
            "var_floor": self.var_floor,
            "categorical": {str(k): [{repr(val): c for val, c in tbl.items()} for tbl in v]
                            for k, v in self.categorical.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NaiveBayesModel":
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {d.get('format_version')!r}")
        categorical = {int(k): [{float(val): c for val, c in tbl.items()} for tbl in v]
                       for k, v in d.get("categorical", {}).items()}
        return cls(classes=tuple(d["classes"]), priors=np.array(d["priors"]),
                   means=np.array(d["means"]), variances=np.array(d["variances"]),
                   class_counts=np.array(d["class_counts"], dtype=int), n_train=d["n_train"],
                   schema_id=d["schema_id"], var_floor=d["var_floor"], categorical=categorical)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def loads(cls, text: str) -> "NaiveBayesModel":
        return cls.from_dict(json.loads(text))


def fit_naive_bayes(X, y, *, var_floor: float = VAR_FLOOR, schema_id: str = "",
                    categorical: tuple[int, ...] = (), classes=None) -> NaiveBayesModel:
    """Estimate priors N(c)/N and per-class Gaussian mean/variance per feature.

    Columns listed in ``categorical`` are modelled by relative frequency
    N(x_i, c)/N(c) instead of a Gaussian.  ``classes`` fixes the label
    alphabet; every class in it needs at least one example.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=object)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training data must be a non-empty 2-D array")
    if len(y) != X.shape[0]:
        raise ValueError("X and y lengths differ")
    if classes is None:
        classes = tuple(sorted(set(y.tolist())))
    else:
        classes = tuple(classes)
    if len(classes) < 2:
        raise ValueError("naive Bayes needs at least two classes")

    q, d = len(classes), X.shape[1]
    means = np.zeros((q, d))
    variances = np.zeros((q, d))
    counts = np.zeros(q, dtype=int)
    tables: dict[int, list[dict]] = {j: [] for j in categorical}
    for k, c in enumerate(classes):
        rows = X[y == c]
        if len(rows) == 0:
            raise EmptyClusterError(f"class {c!r} has no training examples")
        counts[k] = len(rows)
        means[k] = rows.mean(axis=0)
        variances[k] = np.maximum(rows.var(axis=0), var_floor)
        for j in categorical:
            vals, cnt = np.unique(rows[:, j], return_counts=True)
            tables[j].append({float(v): int(n) for v, n in zip(vals, cnt)})
    priors = counts / counts.sum()
    return NaiveBayesModel(classes=classes, priors=priors, means=means, variances=variances,
                           class_counts=counts, n_train=int(counts.sum()), schema_id=schema_id,
                           var_floor=var_floor, categorical=tables)


def log_joint(model: NaiveBayesModel, X) -> np.ndarray:
    """Unnormalized log P(c) + sum_i log P(x_i | c), shape (n, q)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_features:
        raise SchemaMismatchError(f"model expects {model.n_features} features, got {X.shape[1]}")
    gauss_cols = np.ones(model.n_features, dtype=bool)
    for j in model.categorical:
        gauss_cols[j] = False

    with np.errstate(divide="ignore"):
        out = np.tile(np.log(model.priors), (X.shape[0], 1))
    mu = model.means[:, gauss_cols]
    var = model.variances[:, gauss_cols]
    diff = X[:, None, gauss_cols] - mu[None]
    out += (-0.5 * np.log(2 * np.pi * var)[None] - diff ** 2 / (2 * var[None])).sum(axis=2)
    for j, tables in model.categorical.items():
        for k, tbl in enumerate(tables):
            freq = np.array([tbl.get(float(v), 0) for v in X[:, j]]) / model.class_counts[k]
            with np.errstate(divide="ignore"):
                out[:, k] += np.log(freq)
    return out


def posterior_matrix(model: NaiveBayesModel, X) -> np.ndarray:
    lj = log_joint(model, X)
    norm = logsumexp(lj, axis=1, keepdims=True)
    post = np.exp(lj - norm)
    # log-joints near -1e12 lose digits in the subtraction; renormalize
    post /= post.sum(axis=1, keepdims=True)
    # every class impossible (categorical value unseen everywhere): fall back to uniform
    dead = ~np.isfinite(norm[:, 0])
    post[dead] = 1.0 / len(model.classes)
    return post


def posterior(model: NaiveBayesModel, x) -> dict[str, float]:
    """Normalized class posteriors for a single feature vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise SchemaMismatchError("posterior expects a single feature vector")
    row = posterior_matrix(model, x[None])[0]
    return dict(zip(model.classes, row.tolist()))


def _argmax_lexicographic(post: np.ndarray, classes: tuple[str, ...]) -> np.ndarray:
    # classes are stored sorted, so the first maximal column is the smallest label
    order = np.argsort(np.array(classes, dtype=object), kind="stable")
    best = order[np.argmax(post[:, order], axis=1)]
    return best


def predict(model: NaiveBayesModel, X) -> list[str]:
    post = posterior_matrix(model, X)
    idx = _argmax_lexicographic(post, model.classes)
    return [model.classes[i] for i in idx]


def classify_nb(model: NaiveBayesModel, x) -> str:
    """Most probable class; exact ties go to the lexicographically smallest label."""
    post = posterior(model, x)
    best = max(post.values())
    return min(c for c, p in post.items() if p == best)
