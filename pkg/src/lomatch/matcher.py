"""Fuzzy semi-supervised instance matcher.

The pipeline, stage by stage (stage numbers follow the original algorithm,
which has no stage 4):

1. per-label Gaussian statistics (mean, population std) from the labeled pairs;
2. per-cluster density scores for the unlabeled pairs, summed over features,
   with the cluster statistics re-estimated from the unlabeled data;
3. winner cluster and normalized membership values;
5-7. swap validation: retrain on the unlabeled pairs using their winners as
   labels, predict the labeled pairs and compare with the original labels;
8. ambiguity reassignment to the runner-up cluster when the membership gap
   is within a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EmptyClusterError, SchemaMismatchError
from .fuzzy import DEFAULT_FUZZIFIER
from .records import MATCH, NON_MATCH, InstancePair

STD_FLOOR = 1e-3

MAX_SCORE = "MAX_SCORE"
LITERAL_MIN = "LITERAL_MIN"
DECISION_RULES = (MAX_SCORE, LITERAL_MIN)

LITERAL = "LITERAL"
STANDARD_PDF = "STANDARD_PDF"
COEFFICIENTS = (LITERAL, STANDARD_PDF)


@dataclass
class CollectiveConfig:
    enabled: bool = False
    k: int = 5
    max_rounds: int = 10


@dataclass
class MatcherConfig:
    decision_rule: str = MAX_SCORE
    stage2_coefficient: str = LITERAL
    stage8_threshold: float = 0.05
    # re-estimation rounds of the cluster statistics from the unlabeled data
    stage2_rounds: int = 10
    stage2_tol: float = 1e-6
    fuzzifier: float = DEFAULT_FUZZIFIER
    batch_size: int | None = None
    std_floor: float = STD_FLOOR
    min_membership: float = 0.0
    collective: CollectiveConfig = field(default_factory=CollectiveConfig)
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.collective, dict):
            self.collective = CollectiveConfig(**self.collective)
        if self.decision_rule not in DECISION_RULES:
            raise ValueError(f"decision_rule must be one of {DECISION_RULES}")
        if self.stage2_coefficient not in COEFFICIENTS:
            raise ValueError(f"stage2_coefficient must be one of {COEFFICIENTS}")
        if self.stage8_threshold < 0:
            raise ValueError("stage8_threshold must be non-negative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "decision_rule", "stage2_coefficient", "stage8_threshold", "stage2_rounds",
            "stage2_tol", "fuzzifier", "batch_size", "std_floor", "min_membership", "seed")}
        d["collective"] = {"enabled": self.collective.enabled, "k": self.collective.k,
                           "max_rounds": self.collective.max_rounds}
        return d


@dataclass(frozen=True)
class GaussianClusterModel:
    labels: tuple[str, ...]
    means: np.ndarray       # (p, d)
    stds: np.ndarray        # (p, d)
    counts: np.ndarray      # (p,)
    schema_id: str = ""

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("cluster labels must be distinct")
        if np.any(self.stds <= 0):
            raise ValueError("cluster standard deviations must be positive")

    @property
    def n_clusters(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class MatchDecision:
    pair: InstancePair | None
    winner: str
    memberships: dict[str, float]
    reassigned: bool = False
    match_label: str | None = None

    @property
    def membership_match(self) -> float:
        return self.memberships.get(MATCH, 0.0)

    @property
    def membership_nonmatch(self) -> float:
        return self.memberships.get(NON_MATCH, 0.0)


@dataclass
class ValidationReport:
    labels: tuple[str, ...]
    confusion: np.ndarray                     # rows: original label, cols: swap-predicted label
    batch_confusions: list[np.ndarray] = field(default_factory=list)
    n_reassigned: int = 0
    cluster_to_class: dict[str, str] = field(default_factory=dict)
    mapping_error: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def agreement(self) -> dict[str, float]:
        """Fraction of each original label reproduced by swap validation."""
        rows = self.confusion.sum(axis=1)
        return {lab: (float(self.confusion[i, i] / rows[i]) if rows[i] else 0.0)
                for i, lab in enumerate(self.labels)}

    @property
    def n_compared(self) -> int:
        return int(self.confusion.sum())

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "confusion": self.confusion.astype(int).tolist(),
            "batch_confusions": [c.astype(int).tolist() for c in self.batch_confusions],
            "agreement": self.agreement,
            "n_compared": self.n_compared,
            "n_reassigned": self.n_reassigned,
            "cluster_to_class": dict(sorted(self.cluster_to_class.items())),
            "mapping_error": self.mapping_error,
            "notes": list(self.notes),
        }


@dataclass
class MatchResult:
    decisions: list[MatchDecision]
    report: ValidationReport
    model: GaussianClusterModel


def _weighted_stats(X, W, std_floor):
    mass = W.sum(axis=0)
    means = (W.T @ X) / mass[:, None]
    var = np.einsum("ip,ipd->pd", W, (X[:, None, :] - means[None]) ** 2) / mass[:, None]
    return means, np.maximum(np.sqrt(var), std_floor), mass


def init_cluster_stats(X, labels: Sequence[str], *, std_floor: float = STD_FLOOR,
                       cluster_labels: Sequence[str] | None = None,
                       schema_id: str = "") -> GaussianClusterModel:
    """Per-label mean and population standard deviation of the features.

    Clusters are ordered by sorted label unless ``cluster_labels`` fixes the
    order (and the set, which may not have empty members).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    labels = np.asarray(labels, dtype=object)
    if len(labels) != X.shape[0]:
        raise ValueError("X and labels lengths differ")
    names = tuple(cluster_labels) if cluster_labels is not None else tuple(sorted(set(labels.tolist())))
    if len(names) < 2:
        raise ValueError("need at least two distinct labels")
    W = np.stack([(labels == c).astype(float) for c in names], axis=1)
    empty = [c for c, n in zip(names, W.sum(axis=0)) if n == 0]
    if empty:
        raise EmptyClusterError(f"no examples for label(s) {empty}")
    means, stds, mass = _weighted_stats(X, W, std_floor)
    return GaussianClusterModel(names, means, stds, mass.astype(int), schema_id)


def cluster_scores(model: GaussianClusterModel, X, coefficient: str = LITERAL,
                   schema_id: str | None = None) -> np.ndarray:
    """Summed per-feature density terms, shape (n, p) in ``model.labels`` order.

    Each term is ``k(sigma) * exp(-(x - mu)^2 / (2 sigma^2))`` where ``k`` is
    ``1 / (2 pi sigma^2)`` under LITERAL and ``1 / (sqrt(2 pi) sigma)`` under
    STANDARD_PDF.
    """
    if schema_id is not None and model.schema_id and schema_id != model.schema_id:
        raise SchemaMismatchError(f"model schema {model.schema_id!r} != features schema {schema_id!r}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.means.shape[1]:
        raise SchemaMismatchError(f"model expects {model.means.shape[1]} features, got {X.shape[1]}")
    sd = model.stds[None]
    if coefficient == LITERAL:
        k = 1.0 / (2 * np.pi * sd ** 2)
    elif coefficient == STANDARD_PDF:
        k = 1.0 / (np.sqrt(2 * np.pi) * sd)
    else:
        raise ValueError(f"unknown coefficient {coefficient!r}")
    z = (X[:, None, :] - model.means[None]) ** 2 / (2 * sd ** 2)
    return (k * np.exp(-z)).sum(axis=2)


def _first_best(values: np.ndarray, labels: Sequence[str], pick_max: bool) -> np.ndarray:
    order = np.argsort(np.array(labels, dtype=object), kind="stable")
    v = values[:, order]
    pos = np.argmax(v, axis=1) if pick_max else np.argmin(v, axis=1)
    return order[pos]


def assign_and_membership(scores, labels: Sequence[str] | None = None,
                          rule: str = MAX_SCORE) -> tuple[np.ndarray, np.ndarray]:
    """Winner cluster index and normalized memberships for each score row.

    All-zero rows get uniform memberships.  Ties go to the lexicographically
    smallest cluster label.
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    p = scores.shape[1]
    if p < 2:
        raise ValueError("need at least two clusters")
    if labels is None:
        labels = [str(j) for j in range(p)]
    if rule not in DECISION_RULES:
        raise ValueError(f"unknown decision rule {rule!r}")
    total = scores.sum(axis=1, keepdims=True)
    zero = total[:, 0] <= 0
    u = np.empty_like(scores)
    u[~zero] = scores[~zero] / total[~zero]
    u[zero] = 1.0 / p
    # decide on memberships so that all-zero rows tie exactly
    winners = _first_best(u, labels, pick_max=(rule == MAX_SCORE))
    return winners, u


def classes_to_clusters(counts, cluster_labels: Sequence[str] | None = None,
                        class_labels: Sequence[str] | None = None) -> tuple[dict, int]:
    """One-to-one cluster -> class mapping minimizing misassigned records.

    ``counts[i, j]`` is the number of records of class ``j`` in cluster ``i``.
    The error is every record outside its cluster's mapped class.  When the
    matrix is rectangular, surplus clusters stay unmapped (value ``None``).
    Among optimal mappings the one whose per-cluster class index sequence is
    lexicographically smallest wins, with "unmapped" ordered last.
    """
    C = np.asarray(counts, dtype=float)
    if C.ndim != 2 or np.any(C < 0):
        raise ValueError("counts must be a non-negative 2-D matrix")
    n_cl, n_cls = C.shape
    cluster_labels = list(cluster_labels) if cluster_labels is not None else list(range(n_cl))
    class_labels = list(class_labels) if class_labels is not None else list(range(n_cls))
    n = max(n_cl, n_cls)
    # padding columns act as "unmapped"; padding rows are phantom clusters
    P = np.zeros((n, n))
    P[:n_cl, :n_cls] = C
    best = P[linear_sum_assignment(P, maximize=True)].sum()

    # greedy lexicographic tie-break: fix each real cluster to the smallest
    # class index that still admits an optimal completion
    fixed: list[int] = []
    free_cols = list(range(n))
    for i in range(n_cl):
        rest_rows = list(range(i + 1, n))
        for j in free_cols:
            rest_cols = [c for c in free_cols if c != j]
            got = sum(P[r, c] for r, c in enumerate(fixed)) + P[i, j]
            if rest_rows:
                sub = P[np.ix_(rest_rows, rest_cols)]
                got += sub[linear_sum_assignment(sub, maximize=True)].sum()
            if got >= best - 1e-9:
                fixed.append(j)
                free_cols.remove(j)
                break
    mapping = {cluster_labels[i]: (class_labels[j] if j < n_cls else None) for i, j in enumerate(fixed)}
    error = int(round(C.sum() - best))
    return mapping, error


def _fit_stage1_to_3(X_train, y_train, X_test, labels, config: MatcherConfig, schema_id=""):
    """Stages 1-3 for one direction; returns model, winner indices and memberships."""
    model = init_cluster_stats(X_train, y_train, std_floor=config.std_floor,
                               cluster_labels=labels, schema_id=schema_id)
    if len(X_test) == 0:
        return model, np.zeros(0, dtype=int), np.zeros((0, len(labels)))

    Y = np.asarray(y_train, dtype=object)
    W_train = np.stack([(Y == c).astype(float) for c in labels], axis=1)
    X_all = np.vstack([X_train, X_test])
    for _ in range(config.stage2_rounds):
        _, u = assign_and_membership(cluster_scores(model, X_test, config.stage2_coefficient), labels)
        W = np.vstack([W_train, u ** config.fuzzifier])
        means, stds, mass = _weighted_stats(X_all, W, config.std_floor)
        shift = float(np.max(np.abs(means - model.means)))
        model = GaussianClusterModel(tuple(labels), means, stds, model.counts, schema_id)
        if shift < config.stage2_tol:
            break
    scores = cluster_scores(model, X_test, config.stage2_coefficient)
    winners, u = assign_and_membership(scores, labels, config.decision_rule)
    return model, winners, u


def swap_validate(X_l, y_l, X_u, winners_u: Sequence[str], config: MatcherConfig | None = None,
                  labels: Sequence[str] | None = None, schema_id: str = "") -> ValidationReport:
    """Retrain on the unlabeled pairs labeled by their winners, predict the
    labeled pairs and tabulate original vs. predicted labels.

    With ``config.batch_size`` set, the unlabeled pairs are split into
    consecutive batches and each batch is validated separately; the headline
    confusion matrix then comes from the first batch.
    """
    config = config or MatcherConfig()
    X_l = np.atleast_2d(np.asarray(X_l, dtype=float))
    X_u = np.asarray(X_u, dtype=float).reshape(-1, X_l.shape[1])
    y_l = np.asarray(y_l, dtype=object)
    winners_u = np.asarray(winners_u, dtype=object)
    labels = tuple(labels) if labels is not None else tuple(sorted(set(y_l.tolist())))
    if len(X_u) < len(labels):
        raise ValueError(f"{len(X_u)} unlabeled records cannot cover {len(labels)} clusters")

    size = config.batch_size or len(X_u)
    batches = [np.arange(s, min(s + size, len(X_u))) for s in range(0, len(X_u), size)]
    confusions = []
    for idx in batches:
        _, win_l, _ = _fit_stage1_to_3(X_u[idx], winners_u[idx], X_l, labels, config, schema_id)
        pred = np.array([labels[w] for w in win_l], dtype=object)
        cm = np.zeros((len(labels), len(labels)), dtype=int)
        for a, b in zip(y_l, pred):
            cm[labels.index(a), labels.index(b)] += 1
        confusions.append(cm)
    return ValidationReport(labels=labels, confusion=confusions[0], batch_confusions=confusions)


def ambiguity_reassign(decisions: Sequence[MatchDecision], threshold: float) -> list[MatchDecision]:
    """Move near-tie records to their runner-up cluster (single pass).

    For each record, A is the cluster with the largest membership and k the
    runner-up (ties broken by label); when ``u[A] - u[k] <= threshold`` the
    winner becomes k.
    """
    out = []
    for dec in decisions:
        if len(dec.memberships) < 2:
            raise ValueError("ambiguity reassignment needs at least two clusters")
        ranked = sorted(dec.memberships.items(), key=lambda kv: (-kv[1], kv[0]))
        (top, u_top), (second, u_second) = ranked[0], ranked[1]
        if u_top - u_second <= threshold:
            dec = replace(dec, winner=second, reassigned=True)
        out.append(dec)
    return out


def filter_confident(decisions: Sequence[MatchDecision], min_membership: float) -> list[MatchDecision]:
    """Decisions whose winning membership reaches ``min_membership``."""
    return [d for d in decisions if d.memberships[d.winner] >= min_membership]


def match_pipeline(X_l, y_l, X_u, config: MatcherConfig | None = None,
                   pairs_u: Sequence[InstancePair] | None = None,
                   schema_id: str = "") -> MatchResult:
    """Run the full matcher on labeled features ``X_l``/``y_l`` and unlabeled ``X_u``.

    Returns one decision per unlabeled row, in input order.
    """
    config = config or MatcherConfig()
    X_l = np.atleast_2d(np.asarray(X_l, dtype=float))
    y_l = np.asarray(y_l, dtype=object)
    X_u = np.asarray(X_u, dtype=float).reshape(-1, X_l.shape[1])
    labels = tuple(sorted(set(y_l.tolist())))
    if len(labels) < 2:
        raise ValueError("labeled data must contain at least two classes")
    if pairs_u is not None and len(pairs_u) != len(X_u):
        raise ValueError("pairs_u and X_u lengths differ")

    if len(X_u) == 0:
        model, win_l, _ = _fit_stage1_to_3(X_l, y_l, X_l, labels, replace(config, stage2_rounds=0), schema_id)
        cm = np.zeros((len(labels), len(labels)), dtype=int)
        for a, w in zip(y_l, win_l):
            cm[labels.index(a), w] += 1
        report = ValidationReport(labels, cm, [cm], notes=["no unlabeled data; resubstitution on labeled data"])
        report.cluster_to_class = {c: c for c in labels}
        return MatchResult([], report, model)

    model, winners, u = _fit_stage1_to_3(X_l, y_l, X_u, labels, config, schema_id)
    c_u = [labels[w] for w in winners]
    report = swap_validate(X_l, y_l, X_u, c_u, config, labels, schema_id)

    decisions = [
        MatchDecision(pair=pairs_u[i] if pairs_u is not None else None, winner=c_u[i],
                      memberships=dict(zip(labels, u[i].tolist())))
        for i in range(len(X_u))
    ]
    decisions = ambiguity_reassign(decisions, config.stage8_threshold)
    report.n_reassigned = sum(d.reassigned for d in decisions)

    # swap-validation confusion: rows = original class, cols = predicted cluster
    mapping, err = classes_to_clusters(report.confusion.T, labels, labels)
    report.cluster_to_class = {k: v for k, v in mapping.items() if v is not None}
    report.mapping_error = err
    decisions = [replace(d, match_label=report.cluster_to_class.get(d.winner)) for d in decisions]

    if config.collective.enabled and config.collective.k > 0:
        from .collective import collective_refine

        feats = np.vstack([X_l, X_u])
        init = list(y_l) + [d.match_label for d in decisions]
        observed = np.r_[np.ones(len(X_l), bool), np.zeros(len(X_u), bool)]
        refined, rounds = collective_refine(feats, init, observed, config.collective.k,
                                            config.collective.max_rounds)
        tail = refined[len(X_l):]
        decisions = [replace(d, match_label=lab) for d, lab in zip(decisions, tail)]
        report.notes.append(f"collective refinement: {rounds} round(s)")
    return MatchResult(decisions, report, model)
