"""K-means with five distance measures, an online refinement phase and replicates.

Each replicate runs a batch (Lloyd) phase: assign every point to its nearest
centroid, recompute centroids with the measure's own centroid rule, repeat
until no point changes cluster. An optional online phase then applies single
point moves, each chosen as the one that most decreases the total
point-to-centroid distance with both affected centroids recomputed, until no
move helps. The replicate with the smallest total wins.
"""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

__all__ = [
    "DistanceMeasure",
    "KMeansConfig",
    "KMeansError",
    "IterationTraceEntry",
    "ReplicateResult",
    "KMeansResult",
    "distance",
    "pairwise_distances",
    "centroid",
    "total_distance",
    "kmeans_single",
    "kmeans",
]

UINT64 = 2**64
# Relative slack below which an online move does not count as an improvement.
_IMPROVE_RTOL = 1e-12


class KMeansError(ValueError):
    """Invalid clustering input or configuration."""


class DistanceMeasure(str, enum.Enum):
    SQUARED_EUCLIDEAN = "squared_euclidean"
    CITY_BLOCK = "city_block"
    COSINE = "cosine"
    CORRELATION = "correlation"
    HAMMING = "hamming"

    @classmethod
    def parse(cls, name: "str | DistanceMeasure") -> "DistanceMeasure":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        key = _ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise KMeansError(f"unknown distance {name!r}; choose from {choices}") from None


_ALIASES = {
    "sqeuclidean": "squared_euclidean",
    "sq_euclidean": "squared_euclidean",
    "cityblock": "city_block",
    "manhattan": "city_block",
}


# ---------------------------------------------------------------- distances


def _check_rows(X: np.ndarray, measure: DistanceMeasure) -> None:
    if measure is DistanceMeasure.COSINE:
        if np.any(np.all(X == 0, axis=1)):
            raise KMeansError("cosine distance is undefined for zero vectors")
    elif measure is DistanceMeasure.CORRELATION:
        if X.shape[1] < 2 or np.any(np.ptp(X, axis=1) == 0):
            raise KMeansError("correlation distance is undefined for constant vectors")
    elif measure is DistanceMeasure.HAMMING:
        if not np.all((X == 0) | (X == 1)):
            raise KMeansError("hamming distance requires binary (0/1) data")


def _unit_rows(X: np.ndarray) -> np.ndarray:
    return X / np.linalg.norm(X, axis=-1, keepdims=True)


def _centered_unit_rows(X: np.ndarray) -> np.ndarray:
    return _unit_rows(X - X.mean(axis=-1, keepdims=True))


def pairwise_distances(X: np.ndarray, C: np.ndarray, measure: DistanceMeasure) -> np.ndarray:
    """(n, k) matrix of distances from each row of X to each row of C."""
    if measure is DistanceMeasure.SQUARED_EUCLIDEAN:
        diff = X[:, None, :] - C[None, :, :]
        return np.einsum("ikj,ikj->ik", diff, diff)
    if measure is DistanceMeasure.CITY_BLOCK:
        return np.abs(X[:, None, :] - C[None, :, :]).sum(axis=-1)
    if measure is DistanceMeasure.COSINE:
        return np.maximum(1.0 - _unit_rows(X) @ _unit_rows(C).T, 0.0)
    if measure is DistanceMeasure.CORRELATION:
        return np.maximum(1.0 - _centered_unit_rows(X) @ _centered_unit_rows(C).T, 0.0)
    return (X[:, None, :] != C[None, :, :]).mean(axis=-1)


def distance(a, b, measure: DistanceMeasure | str) -> float:
    """Distance between two equal-length vectors under ``measure``."""
    measure = DistanceMeasure.parse(measure)
    a = np.asarray(a, dtype=float).reshape(1, -1)
    b = np.asarray(b, dtype=float).reshape(1, -1)
    if a.shape != b.shape:
        raise KMeansError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    _check_rows(np.vstack([a, b]), measure)
    return float(pairwise_distances(a, b, measure)[0, 0])


def _rowwise(X: np.ndarray, C: np.ndarray, measure: DistanceMeasure) -> np.ndarray:
    # distance from X[i] to C[i]
    if measure is DistanceMeasure.SQUARED_EUCLIDEAN:
        diff = X - C
        return np.einsum("ij,ij->i", diff, diff)
    if measure is DistanceMeasure.CITY_BLOCK:
        return np.abs(X - C).sum(axis=1)
    if measure is DistanceMeasure.COSINE:
        return np.maximum(1.0 - np.einsum("ij,ij->i", _unit_rows(X), _unit_rows(C)), 0.0)
    if measure is DistanceMeasure.CORRELATION:
        dots = np.einsum("ij,ij->i", _centered_unit_rows(X), _centered_unit_rows(C))
        return np.maximum(1.0 - dots, 0.0)
    return (X != C).mean(axis=1)


def total_distance(X, assignments, centroids, measure: DistanceMeasure | str) -> float:
    """Sum over points of the distance to their assigned centroid."""
    measure = DistanceMeasure.parse(measure)
    X = np.asarray(X, dtype=float)
    C = np.asarray(centroids, dtype=float)
    return float(_rowwise(X, C[np.asarray(assignments)], measure).sum())


# ---------------------------------------------------------------- centroids


def centroid(points, measure: DistanceMeasure | str) -> np.ndarray:
    """The point minimizing the summed distance to ``points`` under ``measure``.

    squared_euclidean uses the mean, city_block the coordinate-wise median,
    cosine the normalized mean of unit-length points, correlation the same on
    row-centered points, and hamming a coordinate-wise majority vote with ties
    going to 1.
    """
    measure = DistanceMeasure.parse(measure)
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P.reshape(1, -1)
    if P.shape[0] == 0:
        raise KMeansError("centroid of an empty point set")
    _check_rows(P, measure)
    return _centroid(P, measure)


def _centroid(P: np.ndarray, measure: DistanceMeasure) -> np.ndarray:
    if measure is DistanceMeasure.SQUARED_EUCLIDEAN:
        return P.mean(axis=0)
    if measure is DistanceMeasure.CITY_BLOCK:
        return np.median(P, axis=0)
    if measure is DistanceMeasure.HAMMING:
        return (P.mean(axis=0) >= 0.5).astype(float)
    if measure is DistanceMeasure.COSINE:
        U = _unit_rows(P)
    else:
        U = _centered_unit_rows(P)
    m = U.mean(axis=0)
    if measure is DistanceMeasure.CORRELATION:
        m = m - m.mean()
    norm = np.linalg.norm(m)
    if norm <= 1e-12 * np.sqrt(P.shape[1]):
        # members cancel out: every unit direction gives the same objective
        return U[0].copy()
    return m / norm


def _all_centroids(X, labels, k, measure):
    return np.vstack([_centroid(X[labels == j], measure) for j in range(k)])


# ---------------------------------------------------------------- results


@dataclass(frozen=True)
class KMeansConfig:
    k: int = 3
    measure: DistanceMeasure = DistanceMeasure.SQUARED_EUCLIDEAN
    replicates: int = 11
    max_iterations: int = 100
    seed: int = 0
    online_phase: bool = True

    def __post_init__(self):
        object.__setattr__(self, "measure", DistanceMeasure.parse(self.measure))
        if self.k < 1:
            raise KMeansError(f"k must be >= 1, got {self.k}")
        if self.replicates < 1:
            raise KMeansError(f"replicates must be >= 1, got {self.replicates}")
        if self.max_iterations < 1:
            raise KMeansError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not 0 <= self.seed < UINT64:
            raise KMeansError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "measure": self.measure.value,
            "replicates": self.replicates,
            "max_iterations": self.max_iterations,
            "seed": self.seed,
            "online_phase": self.online_phase,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "KMeansConfig":
        return cls(**doc)


@dataclass(frozen=True)
class IterationTraceEntry:
    iter: int
    phase: int
    num: int
    sum: float


@dataclass(frozen=True, eq=False)
class ReplicateResult:
    assignments: np.ndarray
    centroids: np.ndarray
    total_sum: float
    trace: tuple[IterationTraceEntry, ...]
    seed_used: int
    converged: bool = True

    @property
    def iterations(self) -> int:
        return len(self.trace)

    def to_dict(self) -> dict:
        return {
            "assignments": self.assignments.tolist(),
            "centroids": self.centroids.tolist(),
            "total_sum": self.total_sum,
            "iterations": self.iterations,
            "seed_used": self.seed_used,
            "converged": self.converged,
            "trace": [
                {"iter": t.iter, "phase": t.phase, "num": t.num, "sum": t.sum}
                for t in self.trace
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ReplicateResult":
        return cls(
            assignments=np.asarray(doc["assignments"], dtype=int),
            centroids=np.asarray(doc["centroids"], dtype=float),
            total_sum=float(doc["total_sum"]),
            trace=tuple(IterationTraceEntry(**t) for t in doc["trace"]),
            seed_used=int(doc["seed_used"]),
            converged=bool(doc.get("converged", True)),
        )

    def __eq__(self, other):
        if not isinstance(other, ReplicateResult):
            return NotImplemented
        return self.to_dict() == other.to_dict()


@dataclass(frozen=True)
class KMeansResult:
    best: ReplicateResult
    all_sums: tuple[float, ...]
    all_iterations: tuple[int, ...]
    config: KMeansConfig

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.all_sums))

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "best_sum": self.best.total_sum,
            "best_replicate": self.best_index,
            "all_sums": list(self.all_sums),
            "all_iterations": list(self.all_iterations),
            "best": self.best.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "KMeansResult":
        return cls(
            best=ReplicateResult.from_dict(doc["best"]),
            all_sums=tuple(float(s) for s in doc["all_sums"]),
            all_iterations=tuple(int(i) for i in doc["all_iterations"]),
            config=KMeansConfig.from_dict(doc["config"]),
        )


# ---------------------------------------------------------------- algorithm


def _repair_empty(X, labels, C, k, measure):
    """Give each empty cluster the point farthest from its own centroid."""
    counts = np.bincount(labels, minlength=k)
    while np.any(counts == 0):
        empty = int(np.flatnonzero(counts == 0)[0])
        own = _rowwise(X, C[labels], measure)
        own[counts[labels] < 2] = -np.inf
        i = int(np.argmax(own))
        counts[labels[i]] -= 1
        labels[i] = empty
        counts[empty] = 1
        C[empty] = X[i]
    return labels


def _best_move_sqeuclidean(X, labels, C, counts):
    # Exact change in within-cluster sum of squares for moving x from a to b:
    #   nb/(nb+1)|x-cb|^2 - na/(na-1)|x-ca|^2
    n = X.shape[0]
    D = pairwise_distances(X, C, DistanceMeasure.SQUARED_EUCLIDEAN)
    na = counts[labels].astype(float)
    removal = np.full(n, -np.inf)
    movable = na > 1
    removal[movable] = na[movable] / (na[movable] - 1) * D[np.arange(n), labels][movable]
    gain = counts / (counts + 1.0) * D - removal[:, None]
    gain[np.arange(n), labels] = np.inf
    i, j = np.unravel_index(np.argmin(gain), gain.shape)
    return int(i), int(j), float(gain[i, j])


def _best_move_generic(X, labels, C, counts, measure):
    cost = np.array([_rowwise(X[labels == j], C[j : j + 1], measure).sum() for j in range(len(C))])
    best = (0, 0, np.inf)
    for i in range(X.shape[0]):
        a = labels[i]
        if counts[a] < 2:
            continue
        rest = X[(labels == a) & (np.arange(len(X)) != i)]
        ca = _centroid(rest, measure)
        new_a = _rowwise(rest, ca[None, :], measure).sum()
        for b in range(len(C)):
            if b == a:
                continue
            grown = np.vstack([X[labels == b], X[i]])
            cb = _centroid(grown, measure)
            new_b = _rowwise(grown, cb[None, :], measure).sum()
            delta = (new_a + new_b) - (cost[a] + cost[b])
            if delta < best[2]:
                best = (i, b, delta)
    return best


def _distinct_row_indices(X: np.ndarray) -> np.ndarray:
    _, first = np.unique(X, axis=0, return_index=True)
    return np.sort(first)


def kmeans_single(ds: Dataset | np.ndarray, config: KMeansConfig, replicate_seed: int) -> ReplicateResult:
    """Run one replicate from a seeded random initialization."""
    X = ds.values if isinstance(ds, Dataset) else np.asarray(ds, dtype=float)
    n = X.shape[0]
    k, measure = config.k, config.measure
    if k > n:
        raise KMeansError(f"k={k} exceeds the number of rows ({n})")
    _check_rows(X, measure)
    candidates = _distinct_row_indices(X)
    if k > len(candidates):
        raise KMeansError(f"k={k} exceeds the number of distinct rows ({len(candidates)})")

    rng = np.random.default_rng(replicate_seed % UINT64)
    C = X[rng.choice(candidates, size=k, replace=False)].copy()
    labels = None
    trace: list[IterationTraceEntry] = []
    current = np.inf
    converged = False

    # batch phase
    while len(trace) < config.max_iterations:
        D = pairwise_distances(X, C, measure)
        new = np.argmin(D, axis=1)
        new = _repair_empty(X, new, C, k, measure)
        num = n if labels is None else int(np.count_nonzero(new != labels))
        if num == 0:
            converged = True
            if not config.online_phase:
                trace.append(IterationTraceEntry(len(trace) + 1, 1, 0, current))
            break
        labels = new
        C = _all_centroids(X, labels, k, measure)
        current = total_distance(X, labels, C, measure)
        trace.append(IterationTraceEntry(len(trace) + 1, 1, num, current))

    # online phase
    if converged and config.online_phase:
        converged = False
        counts = np.bincount(labels, minlength=k)
        while len(trace) < config.max_iterations:
            if measure is DistanceMeasure.SQUARED_EUCLIDEAN:
                i, b, delta = _best_move_sqeuclidean(X, labels, C, counts)
            else:
                i, b, delta = _best_move_generic(X, labels, C, counts, measure)
            if not delta < -_IMPROVE_RTOL * max(abs(current), 1.0):
                converged = True
                trace.append(IterationTraceEntry(len(trace) + 1, 2, 0, current))
                break
            a = labels[i]
            labels[i] = b
            counts[a] -= 1
            counts[b] += 1
            C[a] = _centroid(X[labels == a], measure)
            C[b] = _centroid(X[labels == b], measure)
            current = total_distance(X, labels, C, measure)
            trace.append(IterationTraceEntry(len(trace) + 1, 2, 1, current))

    labels.flags.writeable = False
    C.flags.writeable = False
    return ReplicateResult(
        assignments=labels,
        centroids=C,
        total_sum=total_distance(X, labels, C, measure),
        trace=tuple(trace),
        seed_used=int(replicate_seed % UINT64),
        converged=converged,
    )


def kmeans(ds: Dataset | np.ndarray, config: KMeansConfig, n_jobs: int = 1) -> KMeansResult:
    """Best of ``config.replicates`` runs, replicate r seeded with ``seed + r``.

    Ties on the total go to the lowest replicate index. Results do not depend
    on ``n_jobs``.
    """
    seeds = [(config.seed + r) % UINT64 for r in range(config.replicates)]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            runs = list(pool.map(lambda s: kmeans_single(ds, config, s), seeds))
    else:
        runs = [kmeans_single(ds, config, s) for s in seeds]
    sums = tuple(r.total_sum for r in runs)
    best = runs[int(np.argmin(sums))]
    return KMeansResult(
        best=best,
        all_sums=sums,
        all_iterations=tuple(r.iterations for r in runs),
        config=config,
    )
