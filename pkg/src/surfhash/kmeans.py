"""Lloyd's k-means on 2-D point sets with k-means++ or caller-supplied seeding."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class KMeansConfig:
    k: int = 1
    max_iterations: int = 100
    tolerance: float = 1e-6
    rng_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise DomainError("k must be >= 1")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise DomainError("tolerance must be positive")


@dataclass
class ClusterResult:
    centers: np.ndarray
    assignments: np.ndarray
    objective: float
    iterations: int
    converged: bool
    # objective after each assignment step, for diagnostics
    history: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.centers)


def as_points(pts) -> np.ndarray:
    arr = np.asarray(pts, dtype=np.float64)
    if arr.size == 0:
        raise DomainError("cannot cluster an empty point set")
    arr = arr.reshape(-1, 2)
    return arr


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kmeans_pp_init(pts, k: int, rng_seed: int = 0) -> np.ndarray:
    """k-means++ seeding (Arthur & Vassilvitskii).

    The first seed is a uniform draw; each later seed is drawn with
    probability proportional to its squared distance from the nearest seed
    chosen so far. Once every point coincides with a seed the draw falls
    back to uniform, so duplicate seeds appear only when unavoidable.
    """
    points = as_points(pts)
    if k < 1:
        raise DomainError("k must be >= 1")
    rng = np.random.default_rng(rng_seed)
    n = len(points)
    centers = np.empty((k, 2))
    centers[0] = points[rng.integers(n)]
    nearest = _sq_dists(points, centers[:1])[:, 0]
    for i in range(1, k):
        total = nearest.sum()
        if total > 0:
            idx = rng.choice(n, p=nearest / total)
        else:
            idx = rng.integers(n)
        centers[i] = points[idx]
        nearest = np.minimum(nearest, _sq_dists(points, centers[i:i + 1])[:, 0])
    return centers


def _assign(points, centers):
    d2 = _sq_dists(points, centers)
    labels = np.argmin(d2, axis=1)  # first minimum wins ties
    return labels, d2[np.arange(len(points)), labels]


def lloyd(pts, init_centers, cfg: KMeansConfig | None = None) -> ClusterResult:
    points = as_points(pts)
    centers = np.array(init_centers, dtype=np.float64).reshape(-1, 2)
    cfg = cfg or KMeansConfig(k=len(centers))
    if len(centers) != cfg.k:
        raise DomainError(f"expected {cfg.k} initial centers, got {len(centers)}")

    history = []
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        labels, d2 = _assign(points, centers)
        history.append(float(d2.sum()))
        new = centers.copy()
        counts = np.bincount(labels, minlength=cfg.k)
        for j in np.flatnonzero(counts):
            new[j] = points[labels == j].mean(axis=0)
        empty = np.flatnonzero(counts == 0)
        if len(empty):
            # reseed each empty cluster at the worst-served remaining point
            spare = d2.copy()
            for j in empty:
                far = int(np.argmax(spare))
                new[j] = points[far]
                spare[far] = -1.0
        shift = float(np.sqrt(_sq_dists_rowwise(new, centers).max()))
        centers = new
        if shift < cfg.tolerance:
            converged = True
            break

    labels, d2 = _assign(points, centers)
    return ClusterResult(
        centers=centers,
        assignments=labels,
        objective=float(d2.sum()),
        iterations=iterations,
        converged=converged,
        history=history,
    )


def _sq_dists_rowwise(a, b):
    d = a - b
    return np.einsum("ij,ij->i", d, d)
