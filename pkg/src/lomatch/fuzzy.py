"""Triangular membership functions and fuzzy c-means clustering."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyClusterError, SchemaMismatchError

logger = logging.getLogger(__name__)

DEFAULT_FUZZIFIER = 1.2
RECOMMENDED_FUZZIFIER_RANGE = (1.25, 2.0)
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 300
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TriangularMF:
    a: float
    c: float
    b: float

    def __post_init__(self):
        if not (self.a <= self.c <= self.b):
            raise ValueError(f"triangular MF needs a <= c <= b, got ({self.a}, {self.c}, {self.b})")

    def __call__(self, x: float) -> float:
        return triangular_membership(self, x)


def triangular_membership(mf: TriangularMF, x: float) -> float:
    """Degree of membership of ``x``; 1 at the peak, 0 outside [a, b).

    The value at ``x == b`` is 0 unless the right flank is degenerate
    (``c == b``), in which case the peak rule wins.
    """
    if x == mf.c:
        return 1.0
    if x < mf.a or x >= mf.b:
        return 0.0
    if x < mf.c:
        return (x - mf.a) / (mf.c - mf.a)
    return (mf.b - x) / (mf.b - mf.c)


def fuzzify_class_labels(classes: Sequence[str], value_range: tuple[float, float] = (0.0, 1.0)) -> dict[str, TriangularMF]:
    """Evenly spaced triangular linguistic terms over ``value_range``, one per class.

    Peaks sit at uniform spacing from ``lo`` to ``hi`` and each flank ends at
    the neighbouring peak, so the memberships form a partition of unity on
    the range.  A single class gets one triangle peaking at the midpoint.
    """
    lo, hi = map(float, value_range)
    if not classes:
        raise ValueError("need at least one class")
    if not lo < hi:
        raise ValueError("value_range must satisfy lo < hi")
    if len(classes) == 1:
        return {classes[0]: TriangularMF(lo, (lo + hi) / 2, hi)}
    peaks = np.linspace(lo, hi, len(classes))
    out = {}
    for i, cls in enumerate(classes):
        a = peaks[i - 1] if i > 0 else peaks[i]
        b = peaks[i + 1] if i < len(classes) - 1 else peaks[i]
        out[cls] = TriangularMF(float(a), float(peaks[i]), float(b))
    return out


def squared_distances(points, centers) -> np.ndarray:
    """d[i, j] = ||x_i - c_j||^2, shape (n_points, n_centers)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if points.shape[1] != centers.shape[1]:
        raise SchemaMismatchError(f"points have dimension {points.shape[1]}, centers {centers.shape[1]}")
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def fcm_memberships(points, centers, m: float = DEFAULT_FUZZIFIER) -> np.ndarray:
    """Membership of every point in every cluster, rows summing to 1.

    Uses the squared Euclidean distance d directly and weights (1/d)^(1/(m-1)).
    A point lying on one or more centers is assigned crisply, split evenly
    among the coincident centers.
    """
    if m <= 1:
        raise ValueError("fuzzifier m must be > 1")
    d = squared_distances(points, centers)
    if d.shape[1] < 2:
        raise ValueError("need at least two clusters")
    u = np.empty_like(d)
    zero = d == 0
    crisp = zero.any(axis=1)
    if crisp.any():
        z = zero[crisp].astype(float)
        u[crisp] = z / z.sum(axis=1, keepdims=True)
    soft = ~crisp
    if soft.any():
        # log-space to survive large exponents (m = 1.2 gives power 5)
        logw = -np.log(d[soft]) / (m - 1.0)
        logw -= logw.max(axis=1, keepdims=True)
        w = np.exp(logw)
        u[soft] = w / w.sum(axis=1, keepdims=True)
    return u


def fcm_update_centers(points, memberships, m: float = DEFAULT_FUZZIFIER) -> np.ndarray:
    """Weighted means with weights u^m."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    u = np.asarray(memberships, dtype=float)
    if u.shape[0] != points.shape[0]:
        raise SchemaMismatchError("membership rows do not match the number of points")
    w = u ** m
    mass = w.sum(axis=0)
    dead = np.flatnonzero(mass <= 0)
    if dead.size:
        raise EmptyClusterError(f"clusters {dead.tolist()} have zero membership mass")
    return (w.T @ points) / mass[:, None]


def fcm_objective(points, centers, memberships, m: float = DEFAULT_FUZZIFIER) -> float:
    d = squared_distances(points, centers)
    return float(np.sum(np.asarray(memberships) ** m * d))


@dataclass
class FcmState:
    centers: np.ndarray
    memberships: np.ndarray
    m: float
    n_iter: int
    converged: bool
    tol: float = DEFAULT_TOL
    seed: int | None = None
    displacement: float = float("inf")
    objective_history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "centers": self.centers.tolist(),
            "m": self.m,
            "tol": self.tol,
            "n_iter": self.n_iter,
            "converged": self.converged,
            "seed": self.seed,
            "displacement": self.displacement,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def loads(cls, text: str, points=None) -> "FcmState":
        d = json.loads(text)
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported FCM state format {d.get('format_version')!r}")
        centers = np.array(d["centers"], dtype=float)
        u = fcm_memberships(points, centers, d["m"]) if points is not None else np.empty((0, len(centers)))
        return cls(centers=centers, memberships=u, m=d["m"], n_iter=d["n_iter"],
                   converged=d["converged"], tol=d["tol"], seed=d["seed"],
                   displacement=d["displacement"])


def _warn_fuzzifier(m: float):
    lo, hi = RECOMMENDED_FUZZIFIER_RANGE
    if not lo <= m <= hi:
        logger.warning("fuzzifier m=%g lies outside the commonly recommended range [%g, %g]", m, lo, hi)


def fcm_cluster(points, p: int, m: float = DEFAULT_FUZZIFIER, tol: float = DEFAULT_TOL,
                max_iter: int = DEFAULT_MAX_ITER, seed: int = 0, init=None) -> FcmState:
    """Fuzzy c-means: alternate membership and center updates until the
    largest center move drops below ``tol`` or ``max_iter`` is hit.

    Initial centers are ``p`` distinct data points drawn with ``seed`` unless
    ``init`` is given.  A cluster that loses all membership mass is re-seeded
    at the point with the lowest maximum membership.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    if p < 2:
        raise ValueError("need at least two clusters")
    if n < p:
        raise ValueError(f"{n} points cannot fill {p} clusters")
    _warn_fuzzifier(m)
    rng = np.random.default_rng(seed)
    if init is None:
        centers = points[rng.choice(n, size=p, replace=False)].copy()
    else:
        centers = np.array(init, dtype=float)
        if centers.shape != (p, points.shape[1]):
            raise SchemaMismatchError(f"init must have shape {(p, points.shape[1])}")

    history = []
    u = fcm_memberships(points, centers, m)
    displacement = float("inf")
    it = 0
    for it in range(1, max_iter + 1):
        u = fcm_memberships(points, centers, m)
        dead = np.flatnonzero((u ** m).sum(axis=0) <= 0)
        for j in dead:
            worst = int(np.argmin(u.max(axis=1)))
            centers[j] = points[worst]
            u = fcm_memberships(points, centers, m)
        new_centers = fcm_update_centers(points, u, m)
        displacement = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        history.append(fcm_objective(points, centers, u, m))
        if displacement < tol:
            break
    u = fcm_memberships(points, centers, m)
    return FcmState(centers=centers, memberships=u, m=m, n_iter=it, converged=displacement < tol,
                    tol=tol, seed=seed, displacement=displacement, objective_history=history)
