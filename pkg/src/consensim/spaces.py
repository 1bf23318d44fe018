"""Metric spaces and shared geometric primitives.

Two concrete spaces are supported:

* a 2D Euclidean plane with the usual L2 distance, and
* a fixed-dimension embedding space (default 512) with the square root of
  the cosine dissimilarity, ``sqrt(2 - 2*cos(theta))``.  This is only a
  pseudo-metric over the full space: positively co-linear vectors have
  distance zero even when their magnitudes differ.

On top of the distance live the geometric primitives the mediator needs:
weighted means, the weighted geometric median (Weiszfeld iteration), and
max-normalisation of distance lists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

EUCLID2D_TAG = "euclid2d"
EMBEDDING_TAG = "embedding"

# Weiszfeld defaults; the stop-or-perturb handling below is the classic
# treatment of iterates that land on an input point.
WEISZFELD_TOL = 1e-9
WEISZFELD_MAX_ITERS = 1000
_ANCHOR_SNAP = 1e-12
_ANCHOR_NUDGE = 1e-9


class SpaceMismatchError(ValueError):
    """Operands do not belong to the same space / dimension."""


@dataclass(frozen=True)
class Point2D:
    """A point of the 2D Euclidean space. Both coordinates must be finite."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates: ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True, eq=False)
class EmbedVec:
    """An embedding-space element, optionally tagged with its source sentence.

    The zero vector is rejected on construction: the cosine pseudo-metric is
    undefined there.
    """

    vec: np.ndarray
    source_text: Optional[str] = None

    def __post_init__(self):
        arr = np.asarray(self.vec, dtype=float)
        if arr.ndim != 1:
            raise ValueError("embedding vector must be 1-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding vector has non-finite components")
        if float(np.linalg.norm(arr)) == 0.0:
            raise ValueError("zero-norm embedding vector")
        object.__setattr__(self, "vec", arr)

    @property
    def dim(self) -> int:
        return self.vec.shape[0]

    def as_array(self) -> np.ndarray:
        return self.vec


Point = Union[Point2D, EmbedVec]


@dataclass(frozen=True)
class SpaceKind:
    """Dispatch tag for the two configured metric spaces."""

    tag: str
    dim: int = 2

    def __post_init__(self):
        if self.tag not in (EUCLID2D_TAG, EMBEDDING_TAG):
            raise ValueError(f"unknown space tag: {self.tag!r}")
        if self.dim < 1:
            raise ValueError("space dimension must be >= 1")

    @classmethod
    def euclid2d(cls) -> "SpaceKind":
        return cls(EUCLID2D_TAG, 2)

    @classmethod
    def embedding(cls, dim: int = 512) -> "SpaceKind":
        return cls(EMBEDDING_TAG, dim)

    @property
    def is_euclid(self) -> bool:
        return self.tag == EUCLID2D_TAG

    @property
    def is_embedding(self) -> bool:
        return self.tag == EMBEDDING_TAG


EUCLID2D = SpaceKind.euclid2d()


def _check_embed_operand(space: SpaceKind, p: Point) -> EmbedVec:
    if not isinstance(p, EmbedVec):
        raise SpaceMismatchError(f"expected an embedding vector, got {type(p).__name__}")
    if p.dim != space.dim:
        raise SpaceMismatchError(f"dimension mismatch: vector has {p.dim}, space expects {space.dim}")
    return p


def sqrt_cos_dist(a: np.ndarray, b: np.ndarray) -> float:
    """sqrt(2 - 2*cos(angle)) between two non-zero vectors.

    The inner expression is clamped to [0, 4] so rounding noise can never
    produce a negative radicand or exceed the theoretical maximum of 2.
    """
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("zero-norm operand in cosine distance")
    inner = 2.0 - 2.0 * float(np.dot(a, b)) / (na * nb)
    return math.sqrt(min(max(inner, 0.0), 4.0))


def dist(space: SpaceKind, a: Point, b: Point) -> float:
    """Distance between two points of the given space.

    Euclid2D uses the L2 metric; the embedding space uses the sqrt-cosine
    pseudo-metric (zero for positively co-linear vectors).
    """
    if space.is_euclid:
        if not isinstance(a, Point2D) or not isinstance(b, Point2D):
            raise SpaceMismatchError("euclid2d distance requires Point2D operands")
        return math.hypot(a.x - b.x, a.y - b.y)
    va = _check_embed_operand(space, a)
    vb = _check_embed_operand(space, b)
    return sqrt_cos_dist(va.vec, vb.vec)


def _stack(points: Sequence[Point]) -> np.ndarray:
    arrs = [p.as_array() for p in points]
    width = arrs[0].shape[0]
    for a in arrs:
        if a.shape[0] != width:
            raise SpaceMismatchError("mixed dimensions in point list")
    return np.stack(arrs)


def weighted_mean(points: Sequence[tuple[Point, float]]) -> Point:
    """Component-wise weighted average of points.

    Weights must be strictly positive.  An embedding result carries no source
    sentence and is generally not unit-norm.
    """
    if not points:
        raise ValueError("weighted_mean of an empty list")
    weights = np.array([w for _, w in points], dtype=float)
    if np.any(weights <= 0.0):
        raise ValueError("weights must be positive")
    coords = _stack([p for p, _ in points])
    mean = weights @ coords / weights.sum()
    first = points[0][0]
    if isinstance(first, Point2D):
        return Point2D(float(mean[0]), float(mean[1]))
    return EmbedVec(mean)


def _objective(y: np.ndarray, coords: np.ndarray, weights: np.ndarray) -> float:
    return float(weights @ np.linalg.norm(coords - y, axis=1))


def geometric_median(
    points: Sequence[tuple[Point2D, float]],
    tolerance: float = WEISZFELD_TOL,
    max_iters: int = WEISZFELD_MAX_ITERS,
    full_output: bool = False,
):
    """Weighted geometric median of 2D points via Weiszfeld iteration.

    Minimises ``sum_i w_i * |y - p_i|`` starting from the weighted mean and
    stopping when the step length drops below ``tolerance``.  When an iterate
    lands on an input point, the stay-or-move optimality test is applied
    there: the point is returned if the pull of the remaining points does not
    exceed its own weight, otherwise the iterate is nudged off the anchor.

    With ``full_output=True`` returns ``(point, converged)``; non-convergence
    after ``max_iters`` returns the best iterate with ``converged=False``.
    """
    if not points:
        raise ValueError("geometric_median of an empty list")
    weights = np.array([w for _, w in points], dtype=float)
    if np.any(weights <= 0.0):
        raise ValueError("weights must be positive")
    coords = _stack([p for p, _ in points])

    y = weights @ coords / weights.sum()
    converged = False
    for _ in range(max_iters):
        d = np.linalg.norm(coords - y, axis=1)
        k = int(np.argmin(d))
        # Stay-or-move test at the nearest input point.  The condition
        # |sum_{i != k} w_i * (p_i - p_k) / |p_i - p_k|| <= w_k certifies
        # p_k as a global minimiser of the convex objective, so snapping to
        # it is exact; iterates otherwise creep toward such pins sublinearly.
        anchor = coords[k]
        da = np.linalg.norm(coords - anchor, axis=1)
        at_anchor = da < _ANCHOR_SNAP
        others = ~at_anchor
        if not np.any(others):
            y = anchor.copy()
            converged = True
            break
        pull = float(np.linalg.norm(
            (weights[others, None] * (coords[others] - anchor)
             / da[others, None]).sum(axis=0)
        ))
        anchor_weight = float(weights[at_anchor].sum())
        if d[k] < _ANCHOR_SNAP:
            # Coincident with an input point: stop if optimal (ties
            # included), else nudge off the singularity.
            if pull <= anchor_weight:
                y = anchor.copy()
                converged = True
                break
            y = y + np.array([_ANCHOR_NUDGE, 0.0])
            continue
        if pull < anchor_weight:
            # Strict certificate only: at exact ties (e.g. two equal-weight
            # points) the whole segment is optimal and the plain iteration
            # keeps the interior solution.
            y = anchor.copy()
            converged = True
            break
        inv = weights / d
        y_next = inv @ coords / inv.sum()
        step = float(np.linalg.norm(y_next - y))
        y = y_next
        if step < tolerance:
            converged = True
            break
    result = Point2D(float(y[0]), float(y[1]))
    if full_output:
        return result, converged
    return result


def median_objective(point: Point2D, points: Sequence[tuple[Point2D, float]]) -> float:
    """Weighted sum of distances from ``point`` to the given weighted points."""
    weights = np.array([w for _, w in points], dtype=float)
    coords = _stack([p for p, _ in points])
    return _objective(point.as_array(), coords, weights)


def normalize_distances(values: Sequence[float]) -> list[float]:
    """Divide each value by the maximum, mapping into [0, 1].

    An all-zero input returns all zeros, which makes downstream scores
    uniform when every coalition sits on the centroid.
    """
    if len(values) == 0:
        raise ValueError("normalize_distances of an empty list")
    vals = [float(v) for v in values]
    if any(v < 0 for v in vals):
        raise ValueError("distances must be non-negative")
    top = max(vals)
    if top == 0.0:
        return [0.0] * len(vals)
    return [v / top for v in vals]
