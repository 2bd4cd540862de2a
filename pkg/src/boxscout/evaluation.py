"""VOC-style detection evaluation.

Greedy IoU matching in confidence order, all-points average precision,
mAP over classes with ground truth, learning curves, and the cumulative
area under the learning curve (AULC) used to compare selection methods.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .boxes import center_to_corners
from .errors import InsufficientDataError, InvariantError, NoClassError
from .ingest import DatasetIndex

log = logging.getLogger(__name__)

DEFAULT_IOU_THRESHOLD = 0.5

TP, FP, IGNORED = 1, 0, -1


def iou(box_a, box_b) -> float:
    """Intersection over union of two corner boxes (xmin, ymin, xmax, ymax).

    Degenerate zero-area boxes yield 0 by convention (warning logged).
    """
    ax1, ay1, ax2, ay2 = box_a
    bx1, by1, bx2, by2 = box_b
    if ax2 <= ax1 or ay2 <= ay1 or bx2 <= bx1 or by2 <= by1:
        log.warning("IoU of degenerate box: %s vs %s", box_a, box_b)
        return 0.0
    m = _kernels.iou_matrix(np.array([box_a], dtype=np.float64),
                            np.array([box_b], dtype=np.float64))
    return float(m[0, 0])


@dataclass(frozen=True)
class RankedDetection:
    """One class's detection candidate for matching: pixel corners + rank score."""

    image_id: str
    confidence: float
    box: tuple[float, float, float, float]


@dataclass(frozen=True)
class EvalBox:
    """One ground-truth box prepared for matching."""

    image_id: str
    box: tuple[float, float, float, float]
    difficult: bool = False


@dataclass
class MatchResult:
    """Outcome of greedy matching for one class over a validation set.

    ``flags`` follow detection rank order: 1 = true positive, 0 = false
    positive, -1 = ignored (best overlap was a difficult box).  ``matched``
    holds the index into the ground-truth list, or None.  ``n_positive``
    counts non-difficult ground truth.
    """

    flags: list[int] = field(default_factory=list)
    matched: list[int | None] = field(default_factory=list)
    n_positive: int = 0


def match_detections(dets: list[RankedDetection], gts: list[EvalBox],
                     iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> MatchResult:
    """Greedily match ranked detections against ground truth of one class.

    Each detection claims the highest-IoU unmatched non-difficult ground
    truth of its image when the overlap reaches ``iou_threshold`` (tp);
    detections whose only qualifying overlap is difficult ground truth are
    ignored; everything else is a false positive.  Ground truth is matched
    at most once.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, i))

    gt_by_image: dict[str, list[int]] = {}
    for j, gt in enumerate(gts):
        gt_by_image.setdefault(gt.image_id, []).append(j)

    iou_rows: dict[int, np.ndarray] = {}
    for image_id, gt_idx in gt_by_image.items():
        det_idx = [i for i in order if dets[i].image_id == image_id]
        if not det_idx:
            continue
        m = _kernels.iou_matrix(
            np.array([dets[i].box for i in det_idx], dtype=np.float64),
            np.array([gts[j].box for j in gt_idx], dtype=np.float64))
        for row, i in enumerate(det_idx):
            iou_rows[i] = m[row]

    taken: set[int] = set()
    result = MatchResult(n_positive=sum(1 for g in gts if not g.difficult))
    for i in order:
        gt_idx = gt_by_image.get(dets[i].image_id, [])
        best_j, best_iou = None, 0.0
        best_diff_iou = 0.0
        row = iou_rows.get(i)
        for col, j in enumerate(gt_idx):
            overlap = float(row[col]) if row is not None else 0.0
            if gts[j].difficult:
                best_diff_iou = max(best_diff_iou, overlap)
            elif j not in taken and overlap > best_iou:
                best_j, best_iou = j, overlap
        if best_j is not None and best_iou >= iou_threshold:
            taken.add(best_j)
            result.flags.append(TP)
            result.matched.append(best_j)
        elif best_diff_iou >= iou_threshold:
            result.flags.append(IGNORED)
            result.matched.append(None)
        else:
            result.flags.append(FP)
            result.matched.append(None)
    return result


def average_precision(match: MatchResult) -> float:
    """All-points AP: area under the monotone-envelope precision/recall curve.

    Ignored detections contribute nothing; a class with ground truth but no
    true positive scores 0.
    """
    flags = np.array([f for f in match.flags if f != IGNORED], dtype=np.float64)
    return float(_kernels.ap_from_flags(flags, match.n_positive))


def mean_average_precision(per_class_ap: dict[str, float]) -> float:
    """Unweighted mean AP over the evaluable classes."""
    if not per_class_ap:
        raise NoClassError("no class with ground truth to average")
    return float(sum(per_class_ap.values()) / len(per_class_ap))


@dataclass(frozen=True)
class CurveCheckpoint:
    samples_labeled: int
    per_class_ap: dict[str, float]
    map: float


@dataclass
class LearningCurve:
    """Sequence of evaluation checkpoints over the course of a run."""

    checkpoints: list[CurveCheckpoint] = field(default_factory=list)

    def append(self, checkpoint: CurveCheckpoint) -> None:
        if self.checkpoints and checkpoint.samples_labeled <= self.checkpoints[-1].samples_labeled:
            raise InvariantError(
                f"checkpoint at {checkpoint.samples_labeled} samples does not "
                f"advance past {self.checkpoints[-1].samples_labeled}")
        self.checkpoints.append(checkpoint)

    def map_values(self) -> list[float]:
        return [c.map for c in self.checkpoints]

    def __len__(self) -> int:
        return len(self.checkpoints)


def aulc_series(map_values: list[float]) -> list[float]:
    """Cumulative trapezoidal area under a mAP sequence, one value per checkpoint.

    Checkpoints are one unit apart (one validation interval), so the area
    added by each new checkpoint is the mean of the two mAP endpoints.
    """
    if len(map_values) < 2:
        raise InsufficientDataError(
            f"need at least 2 checkpoints, got {len(map_values)}")
    series = [0.0]
    for prev, cur in zip(map_values, map_values[1:]):
        series.append(series[-1] + (prev + cur) / 2.0)
    return series


def aulc(curve: LearningCurve) -> float:
    """Total area under the learning curve (cumulative at the final checkpoint)."""
    return aulc_series(curve.map_values())[-1]


class Evaluator:
    """Runs a detector over a validation set and computes per-class AP / mAP.

    Detections flagged unknown carry no class prediction and are excluded;
    each remaining detection enters its argmax class ranked by
    ``objectness * class score``.  Classes without non-difficult ground
    truth in the validation set are excluded from mAP.
    """

    def __init__(self, validation: DatasetIndex,
                 iou_threshold: float = DEFAULT_IOU_THRESHOLD):
        self.validation = validation
        self.iou_threshold = iou_threshold

    def evaluate(self, detector) -> tuple[dict[str, float], float]:
        class_list = detector.class_list()
        dets_by_class: dict[str, list[RankedDetection]] = {}
        gts_by_class: dict[str, list[EvalBox]] = {}

        for image_id, ann in self.validation.images.items():
            for gt in ann.boxes:
                gts_by_class.setdefault(gt.class_name, []).append(
                    EvalBox(image_id, (float(gt.xmin), float(gt.ymin),
                                       float(gt.xmax), float(gt.ymax)),
                            gt.difficult))
            for det in detector.detect(image_id):
                if det.unknown:
                    continue
                scores = det.dist.as_array()
                arg = int(np.argmax(scores))
                corners = center_to_corners(*det.box, ann.width, ann.height)
                dets_by_class.setdefault(class_list[arg], []).append(
                    RankedDetection(image_id,
                                    det.confidence * float(scores[arg]),
                                    corners))

        per_class_ap: dict[str, float] = {}
        for class_name in self.validation.class_list:
            gts = gts_by_class.get(class_name, [])
            if not any(not g.difficult for g in gts):
                continue
            match = match_detections(dets_by_class.get(class_name, []), gts,
                                     self.iou_threshold)
            per_class_ap[class_name] = average_precision(match)
        return per_class_ap, mean_average_precision(per_class_ap)


def curve_to_csv(curve: LearningCurve, class_list: list[str]) -> str:
    """Render a learning curve as CSV (4 decimal places, one checkpoint per row)."""
    lines = ["samples," + ",".join(class_list) + ",mAP,AULC"]
    maps = curve.map_values()
    areas = aulc_series(maps) if len(maps) >= 2 else [0.0] * len(maps)
    for checkpoint, area in zip(curve.checkpoints, areas):
        cells = [str(checkpoint.samples_labeled)]
        for name in class_list:
            ap = checkpoint.per_class_ap.get(name)
            cells.append("" if ap is None else f"{ap:.4f}")
        cells.append(f"{checkpoint.map:.4f}")
        cells.append(f"{area:.4f}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
