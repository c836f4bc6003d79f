"""Iterative collective classification over a k-nearest-neighbour graph.

Nodes are feature vectors; observed nodes keep their labels, the rest are
relabelled by a naive Bayes model whose inputs are the node features plus
the label histogram of the node's neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bayes import fit_naive_bayes, predict

NEIGHBOR_VAR_FLOOR = 1e-3


@dataclass(frozen=True)
class NeighborhoodGraph:
    neighbors: tuple[tuple[int, ...], ...]
    observed: np.ndarray          # bool mask: True for X (known), False for Y (to label)
    alphabet: tuple[str, ...]

    def __len__(self):
        return len(self.neighbors)


def knn_graph(features, k: int) -> tuple[tuple[int, ...], ...]:
    """Symmetrized k-NN neighbourhoods under cosine similarity.

    Each node links to its ``k`` most similar other nodes (ties by index);
    the union with the reverse links makes the relation symmetric.
    """
    F = np.asarray(features, dtype=float)
    n = len(F)
    if k >= n:
        raise ValueError(f"k_neighbors={k} must be smaller than the node count {n}")
    if k <= 0:
        return tuple(() for _ in range(n))
    norms = np.linalg.norm(F, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = F / safe[:, None]
    sim = unit @ unit.T
    np.fill_diagonal(sim, -np.inf)
    nbrs = [set() for _ in range(n)]
    for i in range(n):
        # stable sort on -sim keeps the lower index first among equals
        for j in np.argsort(-sim[i], kind="stable")[:k]:
            nbrs[i].add(int(j))
            nbrs[int(j)].add(i)
    return tuple(tuple(sorted(s)) for s in nbrs)


def _histograms(graph: NeighborhoodGraph, labels: Sequence[str | None]) -> np.ndarray:
    return np.array([_histogram_row(graph, labels, i) for i in range(len(graph))])


def collective_refine(features, initial_labels: Sequence[str | None], observed,
                      k_neighbors: int = 5, max_rounds: int = 10) -> tuple[list[str | None], int]:
    """Relabel the non-observed nodes until a fixed point or ``max_rounds``.

    ``initial_labels`` gives the starting label of every node (observed nodes
    must be labelled; others may be ``None``).  Nodes are revisited in
    ascending index order and updates take effect immediately.  Returns the
    refined labels and the number of rounds run.
    """
    F = np.asarray(features, dtype=float)
    observed = np.asarray(observed, dtype=bool)
    labels = list(initial_labels)
    if len(labels) != len(F) or len(observed) != len(F):
        raise ValueError("features, labels and observed mask must have equal length")
    if not observed.any():
        raise ValueError("collective refinement needs at least one observed node")
    if any(labels[i] is None for i in np.flatnonzero(observed)):
        raise ValueError("observed nodes must carry labels")
    if k_neighbors <= 0:
        return labels, 0

    alphabet = tuple(sorted({lab for lab in labels if lab is not None}))
    graph = NeighborhoodGraph(knn_graph(F, k_neighbors), observed, alphabet)
    y_obs = [labels[i] for i in np.flatnonzero(observed)]
    if len(set(y_obs)) < 2:
        # a single observed class leaves nothing to discriminate
        return [lab if lab is not None else y_obs[0] for lab in labels], 0

    H = _histograms(graph, labels)
    model = fit_naive_bayes(np.hstack([F[observed], H[observed]]), y_obs,
                            var_floor=NEIGHBOR_VAR_FLOOR, classes=alphabet)
    targets = np.flatnonzero(~observed)
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        changed = False
        for i in targets:
            h = _histogram_row(graph, labels, i)
            new = predict(model, np.concatenate([F[i], h])[None])[0]
            if new != labels[i]:
                labels[i] = new
                changed = True
        if not changed:
            break
    return labels, rounds


def _histogram_row(graph: NeighborhoodGraph, labels, i: int) -> np.ndarray:
    h = np.zeros(len(graph.alphabet))
    pos = {lab: j for j, lab in enumerate(graph.alphabet)}
    for j in graph.neighbors[i]:
        if labels[j] is not None:
            h[pos[labels[j]]] += 1
    s = h.sum()
    return h / s if s else h
