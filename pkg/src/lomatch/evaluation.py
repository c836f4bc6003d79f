"""Confusion matrices, precision/recall/F-score, and stratified k-fold CV."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import FoldError
from .records import MATCH, NON_MATCH


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = gold label, columns = predicted label."""

    labels: tuple[str, ...]
    counts: np.ndarray
    positive: str = MATCH

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def _i(self, label):
        return self.labels.index(label)

    def tp(self, label=None) -> int:
        i = self._i(label or self.positive)
        return int(self.counts[i, i])

    def fp(self, label=None) -> int:
        i = self._i(label or self.positive)
        return int(self.counts[:, i].sum() - self.counts[i, i])

    def fn(self, label=None) -> int:
        i = self._i(label or self.positive)
        return int(self.counts[i, :].sum() - self.counts[i, i])

    def tn(self, label=None) -> int:
        return self.total - self.tp(label) - self.fp(label) - self.fn(label)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.labels != other.labels:
            raise ValueError("cannot add confusion matrices over different labels")
        return ConfusionMatrix(self.labels, self.counts + other.counts, self.positive)

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": self.counts.astype(int).tolist(),
                "positive": self.positive, "TP": self.tp(), "FP": self.fp(),
                "FN": self.fn(), "TN": self.tn()}


def confusion_matrix(gold: Sequence[str], predicted: Sequence[str], labels=None,
                     positive: str = MATCH) -> ConfusionMatrix:
    if len(gold) != len(predicted):
        raise ValueError(f"gold has {len(gold)} labels, predicted has {len(predicted)}")
    if labels is None:
        labels = sorted(set(gold) | set(predicted) | {positive})
        if positive == MATCH and NON_MATCH not in labels:
            labels.append(NON_MATCH)
            labels.sort()
    labels = tuple(labels)
    pos = {lab: i for i, lab in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=int)
    for g, p in zip(gold, predicted):
        if g not in pos or p not in pos:
            raise ValueError(f"label outside alphabet {labels}: {g!r}/{p!r}")
        counts[pos[g], pos[p]] += 1
    return ConfusionMatrix(labels, counts, positive)


def _ratio(num: int, den: int) -> tuple[float, bool]:
    return (num / den, False) if den else (0.0, True)


def f_score(pre: float, rec: float) -> float:
    """Harmonic mean of precision and recall (0 when both are 0)."""
    return 2 * pre * rec / (pre + rec) if pre + rec > 0 else 0.0


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f_score: float
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"PRE": self.precision, "REC": self.recall, "F": self.f_score, "flags": list(self.flags)}


@dataclass
class MetricsReport:
    per_class: dict[str, ClassMetrics]
    positive: str
    confusion: ConfusionMatrix
    folds: list[dict] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return self.per_class[self.positive].precision

    @property
    def recall(self) -> float:
        return self.per_class[self.positive].recall

    @property
    def f_score(self) -> float:
        return self.per_class[self.positive].f_score

    @property
    def flags(self) -> tuple[str, ...]:
        return self.per_class[self.positive].flags

    @property
    def macro(self) -> ClassMetrics:
        ms = list(self.per_class.values())
        return ClassMetrics(float(np.mean([m.precision for m in ms])),
                            float(np.mean([m.recall for m in ms])),
                            float(np.mean([m.f_score for m in ms])))

    @property
    def fold_mean(self) -> dict | None:
        if not self.folds:
            return None
        return {k: float(np.mean([f[k] for f in self.folds])) for k in ("PRE", "REC", "F")}

    def to_dict(self) -> dict:
        return {
            "positive": self.positive,
            "PRE": self.precision, "REC": self.recall, "F": self.f_score,
            "flags": list(self.flags),
            "per_class": {k: v.to_dict() for k, v in sorted(self.per_class.items())},
            "macro": self.macro.to_dict(),
            "confusion": self.confusion.to_dict(),
            "folds": self.folds,
            "fold_mean": self.fold_mean,
            "config": self.config,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def prf_metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Per-class precision, recall and F-score.

    A ratio with a zero denominator is reported as 0 and flagged
    (``"PRE_undefined"`` / ``"REC_undefined"``).
    """
    per = {}
    for lab in cm.labels:
        tp, fp, fn = cm.tp(lab), cm.fp(lab), cm.fn(lab)
        pre, pre_bad = _ratio(tp, tp + fp)
        rec, rec_bad = _ratio(tp, tp + fn)
        flags = tuple(f for f, bad in (("PRE_undefined", pre_bad), ("REC_undefined", rec_bad)) if bad)
        if tp == 0 and (fp + fn) > 0:
            flags += ("no_true_positives",)
        # count form of the harmonic mean: one rounding, so F stays within [min, max] of PRE/REC
        f = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
        per[lab] = ClassMetrics(pre, rec, f, flags)
    return MetricsReport(per, cm.positive, cm)


def reported_metrics_consistent(pre, rec, f, decimals: int = 3) -> bool:
    """Whether published, rounded PRE/REC/F values can come from one classifier.

    The unrounded precision and recall may lie anywhere in their rounding
    intervals ``[x - h, x + h)``; since F is increasing in both, the reported
    F is reachable iff the interval of attainable F values meets F's own
    rounding interval.  Computed in exact rational arithmetic.
    """
    h = Fraction(1, 2 * 10 ** decimals)
    p, r, fv = (Fraction(str(v)) for v in (pre, rec, f))

    def hm(a, b):
        return 2 * a * b / (a + b) if a + b else Fraction(0)

    lo = hm(max(p - h, Fraction(0)), max(r - h, Fraction(0)))
    hi = hm(min(p + h, Fraction(1)), min(r + h, Fraction(1)))  # supremum, excluded unless clipped at 1
    hi_inclusive = p + h > 1 or r + h > 1
    below_ok = hi >= fv - h if hi_inclusive else hi > fv - h
    return below_ok and lo < fv + h


def stratified_folds(labels: Sequence[str], k: int = 10, seed: int = 0) -> np.ndarray:
    """Fold id per record; each class is shuffled and dealt round-robin."""
    y = np.asarray(labels, dtype=object)
    if len(y) < k:
        raise FoldError(f"{len(y)} records cannot fill {k} folds")
    classes = sorted(set(y.tolist()))
    if len(classes) < 2:
        raise FoldError("stratified folds need at least two classes")
    rng = np.random.default_rng(seed)
    fold = np.empty(len(y), dtype=int)
    offset = 0
    for c in classes:
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        fold[idx] = (np.arange(len(idx)) + offset) % k
        offset += len(idx)
    return fold


Classifier = Callable[[np.ndarray, np.ndarray, np.ndarray], Sequence[str]]


def kfold_cv(X, y, classifier: Classifier, k: int = 10, seed: int = 0,
             positive: str = MATCH, require_both_classes: bool = True,
             config: dict | None = None) -> MetricsReport:
    """Stratified k-fold cross-validation with pooled (micro) metrics.

    ``classifier(X_train, y_train, X_test)`` returns predicted labels for
    ``X_test``.  Per-fold metrics are kept in ``report.folds``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=object)
    fold = stratified_folds(y, k, seed)
    labels = tuple(sorted(set(y.tolist()) | {positive}))
    pooled = ConfusionMatrix(labels, np.zeros((len(labels),) * 2, dtype=int), positive)
    rows = []
    for f in range(k):
        test = fold == f
        train = ~test
        if require_both_classes and (len(set(y[test].tolist())) < 2 or len(set(y[train].tolist())) < 2):
            raise FoldError(f"fold {f} lacks a class; the dataset is too small for {k} folds")
        pred = list(classifier(X[train], y[train], X[test]))
        cm = confusion_matrix(list(y[test]), pred, labels, positive)
        pooled = pooled + cm
        m = prf_metrics(cm)
        rows.append({"fold": f, "n_test": int(test.sum()), "PRE": m.precision, "REC": m.recall,
                     "F": m.f_score, "TP": cm.tp(), "FP": cm.fp(), "FN": cm.fn(), "TN": cm.tn()})
    report = prf_metrics(pooled)
    report.folds = rows
    report.config = dict(config or {}, k=k, seed=seed)
    return report


def matcher_classifier(config=None) -> Classifier:
    """Wrap the semi-supervised matcher as a CV classifier: the training fold
    is the labeled set and the test fold the unlabeled set."""
    from .matcher import match_pipeline

    def run(X_train, y_train, X_test):
        result = match_pipeline(X_train, y_train, X_test, config)
        return [d.match_label for d in result.decisions]

    return run
