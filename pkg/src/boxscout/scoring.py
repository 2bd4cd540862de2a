"""Per-detection uncertainty values and whole-image aggregation.

A detection's value is the squared 1-vs-2 margin of its class-score
distribution, optionally multiplied by an inverse-frequency class weight.
Per-image scores are the sum, average, or maximum of the detection values;
images without detections score zero under all three reductions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DimensionError, InvariantError, UnknownClassError

# Tolerance for "scores sum to one" at construction.  Distributions outside
# it are rejected rather than renormalized so upstream bugs surface here.
NORMALIZATION_EPS = 1e-6

# Concentration of the symmetric Dirichlet prior behind the class weights.
DIRICHLET_ALPHA = 1

AGGREGATIONS = ("sum", "avg", "max")


@dataclass(frozen=True)
class ClassDistribution:
    """Probability vector over the active class list."""

    scores: tuple[float, ...]

    def __post_init__(self):
        if len(self.scores) < 2:
            raise DimensionError(f"need at least 2 classes, got {len(self.scores)}")
        if any(s < 0.0 for s in self.scores):
            raise InvariantError(f"negative class score in {self.scores}")
        total = sum(self.scores)
        if abs(total - 1.0) > NORMALIZATION_EPS:
            raise InvariantError(f"class scores sum to {total!r}, expected 1")

    def __len__(self) -> int:
        return len(self.scores)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.scores, dtype=np.float64)


@dataclass(frozen=True)
class Detection:
    """One detector output: a normalized center box, objectness, and class scores.

    ``unknown`` marks detections whose objectness cleared the reporting
    threshold but whose top class score did not; they are reported rather
    than suppressed so new-class objects stay discoverable.
    """

    box: tuple[float, float, float, float]  # (cx, cy, w, h), normalized
    confidence: float
    dist: ClassDistribution
    unknown: bool = False

    def __post_init__(self):
        cx, cy, w, h = self.box
        if w <= 0.0 or h <= 0.0:
            raise InvariantError(f"non-positive box extent {self.box}")
        if not (0.0 <= cx - w / 2 + 1e-9 and cx + w / 2 <= 1.0 + 1e-9
                and 0.0 <= cy - h / 2 + 1e-9 and cy + h / 2 <= 1.0 + 1e-9):
            raise InvariantError(f"box {self.box} leaves the unit square")
        if not 0.0 <= self.confidence <= 1.0:
            raise InvariantError(f"confidence {self.confidence} outside [0, 1]")


@dataclass
class ClassCounts:
    """Annotated instance counts per class in the labeled pool.

    ``num_classes`` is the size of the active class list, which may exceed
    the number of classes observed so far.
    """

    per_class: dict[str, int] = field(default_factory=dict)
    num_classes: int = 0

    @property
    def total(self) -> int:
        return sum(self.per_class.values())

    def count(self, class_name: str) -> int:
        return self.per_class.get(class_name, 0)

    def add(self, class_name: str, n: int = 1) -> None:
        self.per_class[class_name] = self.per_class.get(class_name, 0) + n

    def copy(self) -> "ClassCounts":
        return ClassCounts(dict(self.per_class), self.num_classes)


@dataclass(frozen=True)
class AggregationMethod:
    """Reduction of per-detection values into one image score."""

    kind: str  # "sum" | "avg" | "max"
    weighted: bool = False

    def __post_init__(self):
        if self.kind not in AGGREGATIONS:
            raise InvariantError(f"unknown aggregation {self.kind!r}")

    @property
    def name(self) -> str:
        return self.kind + ("+w" if self.weighted else "")


def margin_1vs2(dist: ClassDistribution) -> float:
    """Squared margin value ``(1 - (top1 - top2))**2`` of a distribution.

    1 when the two best classes tie (maximal uncertainty), 0 for a one-hot
    prediction.
    """
    margins, _ = _kernels.margin_argmax(dist.as_array().reshape(1, -1))
    return float(margins[0])


def class_weight(counts: ClassCounts, predicted_class: str, class_list=None) -> float:
    """Inverse posterior-frequency weight of ``predicted_class``.

    ``(total + num_classes) / (count_c + 1)`` under a symmetric Dirichlet
    prior with concentration :data:`DIRICHLET_ALPHA`.  With no observations
    the weight is uniform (= number of classes); it decreases strictly as
    the class accumulates instances.
    """
    if class_list is not None and predicted_class not in class_list:
        raise UnknownClassError(predicted_class)
    return (counts.total + counts.num_classes) / (counts.count(predicted_class) + DIRICHLET_ALPHA)


def argmax_class(dist: ClassDistribution, class_list: list[str]) -> str:
    """Predicted class of a distribution; ties break to the lowest index."""
    _, arg = _kernels.margin_argmax(dist.as_array().reshape(1, -1))
    return class_list[int(arg[0])]


def detection_value(det: Detection, counts: ClassCounts, weighted: bool,
                    class_list: list[str] | None = None) -> float:
    """Value of one detection: its margin, optionally imbalance-weighted.

    The weight is that of the predicted (argmax) class; argmax ties break
    to the lowest class index.
    """
    margins, arg = _kernels.margin_argmax(det.dist.as_array().reshape(1, -1))
    value = float(margins[0])
    if not weighted:
        return value
    if class_list is None:
        raise UnknownClassError("weighted scoring requires the active class list")
    predicted = class_list[int(arg[0])]
    return class_weight(counts, predicted, class_list) * value


def aggregate_image(values, method: AggregationMethod) -> float:
    """Reduce per-detection values to one image score; empty lists score 0."""
    values = list(values)
    if not values:
        return 0.0
    if method.kind == "sum":
        return float(sum(values))
    if method.kind == "avg":
        return float(sum(values) / len(values))
    return float(max(values))


def score_image(dets, counts: ClassCounts, method: AggregationMethod,
                class_list: list[str] | None = None,
                include_unknown: bool = True) -> float:
    """Whole-image value from the detections the detector reported for it."""
    considered = [d for d in dets if include_unknown or not d.unknown]
    if not considered:
        return 0.0
    if method.weighted and class_list is None:
        raise UnknownClassError("weighted scoring requires the active class list")
    scores = np.stack([d.dist.as_array() for d in considered])
    margins, arg = _kernels.margin_argmax(scores)
    if method.weighted:
        values = [
            class_weight(counts, class_list[int(a)], class_list) * float(m)
            for m, a in zip(margins, arg)
        ]
    else:
        values = [float(m) for m in margins]
    return aggregate_image(values, method)
