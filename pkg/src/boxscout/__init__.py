"""boxscout: batch-mode active learning for object detection.

Scores unlabeled images by aggregated per-detection uncertainty, selects
annotation batches, applies rehearsal-style incremental updates through a
detector adapter, and tracks progress with VOC-style mAP and the area under
the learning curve.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .scoring import (
    AggregationMethod,
    ClassCounts,
    ClassDistribution,
    Detection,
    aggregate_image,
    class_weight,
    detection_value,
    margin_1vs2,
    score_image,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "AggregationMethod",
    "ClassCounts",
    "ClassDistribution",
    "Detection",
    "aggregate_image",
    "class_weight",
    "detection_value",
    "margin_1vs2",
    "score_image",
    "__version__",
]
