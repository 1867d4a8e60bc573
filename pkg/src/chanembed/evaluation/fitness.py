"""Inter/intra-class distance ratio used to score embeddings.

For a class X the score is the summed Euclidean distance from members of X to
every non-member, divided by the summed distance over all ordered pairs of
members (self pairs included, contributing zero). The overall score is the
sum of the per-class scores divided by ``n_classes - 1``.

Sums are accumulated with ``math.fsum`` so the result does not depend on
summation order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateClassError


@dataclass
class FitnessReport:
    per_class: dict
    overall: float
    space: str = "embedding"
    degenerate: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def enc(v):
            return v if math.isfinite(v) else ("inf" if v > 0 else "nan")
        return {"space": self.space, "overall": enc(self.overall),
                "per_class": {str(k): enc(v) for k, v in self.per_class.items()},
                "degenerate_classes": [str(c) for c in self.degenerate]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _distance_block(A, B):
    # accumulate one coordinate at a time: identical rounding to a scalar loop
    acc = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        diff = A[:, k][:, None] - B[:, k][None, :]
        acc = acc + diff * diff
    return np.sqrt(acc)


def class_ratio(points, labels, cls) -> float:
    """Per-class score; ``inf`` when the class has zero spread."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    inside = labels == cls
    A = points[inside]
    intra = math.fsum(_distance_block(A, A).ravel())
    inter = math.fsum(_distance_block(A, points[~inside]).ravel())
    if intra == 0.0:
        return math.inf
    return inter / intra


def fitness(points, labels, *, strict: bool = False, space: str = "embedding") -> FitnessReport:
    """Score an embedding (or any point cloud) against its class labels.

    A class whose points all coincide has an unbounded score. It is reported
    as ``inf`` and left out of the overall sum; with ``strict=True`` it raises
    :class:`DegenerateClassError` instead. The divisor stays ``n_classes - 1``
    either way.
    """
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    if points.ndim != 2 or points.shape[0] != labels.shape[0]:
        raise ValueError("points must be N x d with one label per row")
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise ValueError("fitness needs at least two classes")
    per_class = {c: class_ratio(points, labels, c) for c in classes}
    degenerate = [c for c, v in per_class.items() if math.isinf(v)]
    if degenerate and strict:
        raise DegenerateClassError(f"classes with zero spread: {degenerate}", degenerate)
    finite = [v for v in per_class.values() if math.isfinite(v)]
    overall = math.fsum(finite) / (len(classes) - 1)
    return FitnessReport(per_class=per_class, overall=overall, space=space, degenerate=degenerate)
