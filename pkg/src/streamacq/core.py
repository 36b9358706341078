"""Shared primitives: stream samples, labelled pools, and sliding windows.

The sliding window keeps, for every member, its Euclidean distance to the
farthest and to the nearest other member.  Both exploration agents read these
caches on every step, so they are maintained exactly: evicting a point
recomputes any aggregate that referenced it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

__all__ = [
    "Sample",
    "LabeledPool",
    "SlidingWindow",
    "as_feature_vector",
    "squared_euclidean",
    "euclidean",
]


def as_feature_vector(x) -> np.ndarray:
    """Coerce ``x`` to a finite 1-d float array, failing fast otherwise."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d feature vector, got shape {v.shape}")
    if v.size == 0:
        raise ValueError("feature vector is empty")
    if not np.all(np.isfinite(v)):
        raise ValueError("feature vector has non-finite entries")
    return v


def squared_euclidean(x, y) -> float:
    """Sum of squared coordinate differences of two equal-length vectors."""
    xv = as_feature_vector(x)
    yv = as_feature_vector(y)
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: {xv.size} vs {yv.size}")
    d = xv - yv
    return float(d @ d)


def euclidean(x, y) -> float:
    """Euclidean distance, the square root of :func:`squared_euclidean`."""
    return math.sqrt(squared_euclidean(x, y))


@dataclass(eq=False)
class Sample:
    """One stream element: feature vector, optional binary label, arrival index."""

    features: np.ndarray
    label: Optional[int] = None
    time_index: int = -1

    def __post_init__(self):
        self.features = as_feature_vector(self.features)
        if self.label is not None and self.label not in (0, 1):
            raise ValueError(f"label must be 0, 1 or None, got {self.label!r}")
        self.time_index = int(self.time_index)


class LabeledPool:
    """Labelled samples accumulated for model fitting, in acquisition order."""

    def __init__(self, samples: Iterable[Sample] = ()):
        self._rows: list[np.ndarray] = []
        self._labels: list[int] = []
        for s in samples:
            self.append(s)

    def __len__(self) -> int:
        return len(self._labels)

    def append(self, sample: Sample) -> None:
        if sample.label is None:
            raise ValueError("cannot pool an unlabelled sample")
        if self._rows and sample.features.size != self._rows[0].size:
            raise ValueError(
                f"sample dimension {sample.features.size} does not match pool "
                f"dimension {self._rows[0].size}"
            )
        self._rows.append(sample.features)
        self._labels.append(int(sample.label))

    @property
    def features(self) -> np.ndarray:
        return np.array(self._rows, dtype=float)

    @property
    def labels(self) -> np.ndarray:
        return np.array(self._labels, dtype=int)

    def class_counts(self) -> tuple[int, int]:
        ones = sum(self._labels)
        return len(self._labels) - ones, ones


class SlidingWindow:
    """Fixed-capacity FIFO of feature vectors with cached pairwise extremes.

    ``farthest_distances()[j]`` is the Euclidean distance from member ``j`` to
    the member farthest from it; ``nearest_distances()[j]`` the distance to the
    closest one.  Both are NaN while the window holds a single point.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("window capacity must be >= 1")
        self.capacity = int(capacity)
        self._points: list[np.ndarray] = []
        self._ids: list[int] = []
        self._far: list[float] = []
        self._far_id: list[int] = []
        self._near: list[float] = []
        self._near_id: list[int] = []
        self._fresh_id = itertools.count()
        self._dim: Optional[int] = None

    @classmethod
    def from_points(cls, points, capacity: Optional[int] = None) -> "SlidingWindow":
        """Bulk-build a window; one vectorized pass fills the distance caches."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"expected a 2-d point array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points have non-finite entries")
        m = pts.shape[0]
        win = cls(m if capacity is None else capacity)
        if m > win.capacity:
            raise ValueError(f"{m} points exceed capacity {win.capacity}")
        if m == 0:
            return win
        win._dim = pts.shape[1]
        win._points = [pts[i].copy() for i in range(m)]
        win._ids = list(range(m))
        win._fresh_id = itertools.count(m)
        if m == 1:
            win._far, win._far_id = [math.nan], [-1]
            win._near, win._near_id = [math.nan], [-1]
            return win
        sq = (pts * pts).sum(axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
        dist = np.sqrt(np.clip(d2, 0.0, None))
        np.fill_diagonal(dist, -np.inf)
        far_at = dist.argmax(axis=1)
        win._far = [float(dist[j, k]) for j, k in enumerate(far_at)]
        win._far_id = [int(k) for k in far_at]
        np.fill_diagonal(dist, np.inf)
        near_at = dist.argmin(axis=1)
        win._near = [float(dist[j, k]) for j, k in enumerate(near_at)]
        win._near_id = [int(k) for k in near_at]
        return win

    def __len__(self) -> int:
        return len(self._points)

    @property
    def dim(self) -> Optional[int]:
        return self._dim

    def points_matrix(self) -> np.ndarray:
        """Members as an (m, dim) array, oldest first."""
        return np.array(self._points, dtype=float)

    def farthest_distances(self) -> np.ndarray:
        return np.array(self._far, dtype=float)

    def nearest_distances(self) -> np.ndarray:
        return np.array(self._near, dtype=float)

    def push(self, x) -> None:
        """Append ``x``, evicting the oldest member when at capacity."""
        v = as_feature_vector(x)
        if self._dim is None:
            self._dim = v.size
        elif v.size != self._dim:
            raise ValueError(
                f"dimension mismatch: window holds {self._dim}-d points, got {v.size}"
            )
        if len(self._points) == self.capacity:
            self._evict_oldest()
        dists = self._distances_to(v)
        new_id = next(self._fresh_id)
        for j in range(len(self._points)):
            d = float(dists[j])
            if math.isnan(self._far[j]) or d > self._far[j]:
                self._far[j], self._far_id[j] = d, new_id
            if math.isnan(self._near[j]) or d < self._near[j]:
                self._near[j], self._near_id[j] = d, new_id
        if dists.size:
            far_j = int(np.argmax(dists))
            near_j = int(np.argmin(dists))
            self._far.append(float(dists[far_j]))
            self._far_id.append(self._ids[far_j])
            self._near.append(float(dists[near_j]))
            self._near_id.append(self._ids[near_j])
        else:
            self._far.append(math.nan)
            self._far_id.append(-1)
            self._near.append(math.nan)
            self._near_id.append(-1)
        self._points.append(v)
        self._ids.append(new_id)

    def _distances_to(self, v: np.ndarray) -> np.ndarray:
        if not self._points:
            return np.empty(0)
        diff = np.array(self._points) - v
        return np.sqrt((diff * diff).sum(axis=1))

    def _evict_oldest(self) -> None:
        gone = self._ids[0]
        for lst in (self._points, self._ids, self._far, self._far_id,
                    self._near, self._near_id):
            del lst[0]
        if not self._points:
            return
        if len(self._points) == 1:
            self._far[0] = self._near[0] = math.nan
            self._far_id[0] = self._near_id[0] = -1
            return
        for j in range(len(self._points)):
            # only members whose cached extreme pointed at the evicted point
            # need an exact rebuild
            if self._far_id[j] == gone or self._near_id[j] == gone:
                self._rebuild_member(j)

    def _rebuild_member(self, j: int) -> None:
        v = self._points[j]
        far, far_id = -1.0, -1
        near, near_id = math.inf, -1
        for k in range(len(self._points)):
            if k == j:
                continue
            d = euclidean(self._points[k], v)
            if d > far:
                far, far_id = d, self._ids[k]
            if d < near:
                near, near_id = d, self._ids[k]
        self._far[j], self._far_id[j] = far, far_id
        self._near[j], self._near_id[j] = near, near_id
