"""Batch partition, batch valuation, and the exploration loop.

The unlabeled pool is shuffled once per run into fixed batches; every step
scores all remaining images, selects the highest-valued batch (sum of image
scores), obtains labels for it, updates the detector with an old/new mix,
and moves the batch into the labeled pool.  A ``"random"`` method selects
uniformly among remaining batches without consulting scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .detectors import DetectorAdapter
from .errors import (
    ConfigError,
    ExhaustedError,
    InvariantError,
    MissingScoreError,
    StepAbortedError,
)
from .evaluation import CurveCheckpoint, Evaluator, LearningCurve
from .ingest import ImageAnnotation
from .scoring import AggregationMethod, ClassCounts, score_image

RANDOM = "random"

_RANDOM_SALT = 0x52414E44

SelectionMethod = AggregationMethod | str


def parse_method(name: str) -> SelectionMethod:
    """Parse a method name: ``random`` or ``{sum,avg,max}[+w]``."""
    name = name.strip().lower()
    if name == RANDOM:
        return RANDOM
    weighted = name.endswith("+w")
    kind = name[:-2] if weighted else name
    if kind not in ("sum", "avg", "max"):
        raise ConfigError(f"unknown selection method {name!r}")
    return AggregationMethod(kind=kind, weighted=weighted)


def method_name(method: SelectionMethod) -> str:
    return method if isinstance(method, str) else method.name


@dataclass(frozen=True)
class UnlabeledBatch:
    batch_id: int
    image_ids: tuple[str, ...]


@dataclass(frozen=True)
class ExperimentState:
    """Labeled pool, fixed unlabeled partition, class counts, and step index.

    Treated as immutable: every step produces a new state.  The batch
    assignment never changes within a run.
    """

    labeled: dict[str, ImageAnnotation]
    batches: tuple[UnlabeledBatch, ...]
    leftover: tuple[str, ...]
    counts: ClassCounts
    step: int
    seed: int

    def remaining_image_ids(self) -> list[str]:
        return [i for b in self.batches for i in b.image_ids]

    def validate(self) -> None:
        unlabeled = self.remaining_image_ids()
        pool = set(unlabeled) | set(self.leftover)
        if len(unlabeled) != len(set(unlabeled)):
            raise InvariantError("duplicate image across unlabeled batches")
        overlap = pool & set(self.labeled)
        if overlap:
            raise InvariantError(f"images both labeled and unlabeled: {sorted(overlap)[:3]}")
        boxes = sum(len(a.boxes) for a in self.labeled.values())
        if boxes != self.counts.total:
            raise InvariantError(
                f"counts.total={self.counts.total} != labeled boxes={boxes}")


@dataclass(frozen=True)
class SelectionRecord:
    """Audit record of one selection step."""

    step: int
    batch_id: int
    batch_value: float
    per_image_scores: dict[str, float]
    method: str

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "batch_id": self.batch_id,
            "batch_value": self.batch_value,
            "per_image_scores": self.per_image_scores,
            "method": self.method,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SelectionRecord":
        return cls(step=int(obj["step"]), batch_id=int(obj["batch_id"]),
                   batch_value=float(obj["batch_value"]),
                   per_image_scores={k: float(v) for k, v in
                                     obj["per_image_scores"].items()},
                   method=str(obj["method"]))


class AnnotationOracle(Protocol):
    """Provides labels for a selected batch (dataset replay or a human)."""

    def label_batch(self, image_ids: Sequence[str]) -> dict[str, ImageAnnotation]:
        ...


class DatasetOracle:
    """Replays dataset ground truth, standing in for a human annotator."""

    def __init__(self, annotations: Mapping[str, ImageAnnotation]):
        self._annotations = dict(annotations)

    def label_batch(self, image_ids: Sequence[str]) -> dict[str, ImageAnnotation]:
        return {i: self._annotations[i] for i in image_ids}


def partition_into_batches(image_ids: Sequence[str], batch_size: int, seed
                           ) -> tuple[list[UnlabeledBatch], list[str]]:
    """Shuffle image ids and cut them into fixed batches of ``batch_size``.

    The ``len(image_ids) mod batch_size`` remainder becomes leftover and is
    never selected during the run.
    """
    if batch_size < 1:
        raise ConfigError(f"batch size must be >= 1, got {batch_size}")
    ids = list(image_ids)
    if len(set(ids)) != len(ids):
        raise InvariantError("duplicate image ids in pool")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n_full = len(ids) // batch_size
    batches = [UnlabeledBatch(b, tuple(shuffled[b * batch_size:(b + 1) * batch_size]))
               for b in range(n_full)]
    return batches, shuffled[n_full * batch_size:]


def batch_value(batch: UnlabeledBatch, image_scores: Mapping[str, float]) -> float:
    """Sum the active-learning metric over the batch's images (meta-aggregation)."""
    total = 0.0
    for image_id in batch.image_ids:
        if image_id not in image_scores:
            raise MissingScoreError(image_id)
        total += image_scores[image_id]
    return total


def select_best_batch(state: ExperimentState,
                      scores: Mapping[int, float]) -> int:
    """Highest-scoring remaining batch; ties break to the lowest batch id."""
    if not state.batches:
        raise ExhaustedError("no unlabeled batches remain")
    best_id, best_value = None, -np.inf
    for batch in sorted(state.batches, key=lambda b: b.batch_id):
        if batch.batch_id not in scores:
            raise MissingScoreError(f"batch {batch.batch_id}")
        value = scores[batch.batch_id]
        if value > best_value:
            best_id, best_value = batch.batch_id, value
    return best_id


def score_batches(state: ExperimentState, detector: DetectorAdapter,
                  method: AggregationMethod, include_unknown: bool = True
                  ) -> tuple[dict[int, float], dict[str, float]]:
    """Score every image of every remaining batch with the current model."""
    class_list = detector.class_list()
    image_scores: dict[str, float] = {}
    batch_scores: dict[int, float] = {}
    for batch in state.batches:
        for image_id in batch.image_ids:
            image_scores[image_id] = score_image(
                detector.detect(image_id), state.counts, method,
                class_list=class_list, include_unknown=include_unknown)
        batch_scores[batch.batch_id] = batch_value(batch, image_scores)
    return batch_scores, image_scores


def _random_choice(state: ExperimentState) -> int:
    rng = np.random.default_rng((state.seed, state.step, _RANDOM_SALT))
    ids = [b.batch_id for b in state.batches]
    return ids[int(rng.integers(len(ids)))]


def apply_selection(state: ExperimentState, detector: DetectorAdapter,
                    batch_id: int, labels: Mapping[str, ImageAnnotation]
                    ) -> ExperimentState:
    """Merge a labeled batch into the pool and update the detector.

    The detector sees the current labeled pool as old data and the fresh
    labels as new data; afterwards the new data simply counts as old.
    """
    batch = next(b for b in state.batches if b.batch_id == batch_id)
    missing = set(batch.image_ids) - set(labels)
    if missing:
        raise StepAbortedError(f"labels missing for {sorted(missing)}")

    detector.update(state.labeled, {i: labels[i] for i in batch.image_ids})

    counts = state.counts.copy()
    for image_id in batch.image_ids:
        for box in labels[image_id].boxes:
            counts.add(box.class_name)
    counts.num_classes = len(detector.class_list())

    new_labeled = dict(state.labeled)
    for image_id in batch.image_ids:
        new_labeled[image_id] = labels[image_id]

    return replace(state,
                   labeled=new_labeled,
                   batches=tuple(b for b in state.batches if b.batch_id != batch_id),
                   counts=counts,
                   step=state.step + 1)


def propose_selection(state: ExperimentState, detector: DetectorAdapter,
                      method: SelectionMethod, include_unknown: bool = True
                      ) -> tuple[UnlabeledBatch, SelectionRecord]:
    """Pick the batch the current model wants labeled next (no state change).

    Returns the batch and the selection record that committing it would
    produce.  Random selection never consults image scores (recorded as
    zeros).
    """
    if not state.batches:
        raise ExhaustedError("no unlabeled batches remain")

    if method == RANDOM:
        best_id = _random_choice(state)
        batch = next(b for b in state.batches if b.batch_id == best_id)
        per_image = {i: 0.0 for i in batch.image_ids}
        value = 0.0
    else:
        batch_scores, image_scores = score_batches(state, detector, method,
                                                   include_unknown)
        best_id = select_best_batch(state, batch_scores)
        batch = next(b for b in state.batches if b.batch_id == best_id)
        per_image = {i: image_scores[i] for i in batch.image_ids}
        value = batch_scores[best_id]

    record = SelectionRecord(step=state.step, batch_id=best_id,
                             batch_value=value, per_image_scores=per_image,
                             method=method_name(method))
    return batch, record


def exploration_step(state: ExperimentState, detector: DetectorAdapter,
                     oracle: AnnotationOracle, method: SelectionMethod,
                     include_unknown: bool = True
                     ) -> tuple[ExperimentState, SelectionRecord]:
    """One loop iteration: score, select, label, update, merge."""
    batch, record = propose_selection(state, detector, method, include_unknown)
    try:
        labels = oracle.label_batch(list(batch.image_ids))
    except TimeoutError as exc:
        raise StepAbortedError(
            f"oracle timed out for batch {record.batch_id}") from exc
    return apply_selection(state, detector, record.batch_id, labels), record


def run_exploration(state: ExperimentState, detector: DetectorAdapter,
                    oracle: AnnotationOracle, method: SelectionMethod,
                    eval_every: int, evaluator: Evaluator,
                    max_batches: int | None = None,
                    include_unknown: bool = True,
                    on_step: Callable[["ExperimentState", list[SelectionRecord],
                                       LearningCurve, int], None] | None = None,
                    curve: LearningCurve | None = None,
                    records: list[SelectionRecord] | None = None,
                    added_samples: int = 0
                    ) -> tuple[ExperimentState, list[SelectionRecord], LearningCurve]:
    """Run the exploration loop until the pool (or the step budget) is spent.

    Evaluates the detector on the validation set before the first step,
    every ``eval_every`` batches, and at the end.  ``max_batches`` caps the
    total number of selections for fast-exploration studies; by default the
    loop drains the pool.  ``on_step`` (a snapshot hook) is invoked after
    every step with the state, all records so far, the curve, and the number
    of samples added.  Passing ``curve``/``records``/``added_samples``
    continues an interrupted run instead of starting fresh.
    """
    if eval_every < 1:
        raise ConfigError(f"eval_every must be >= 1, got {eval_every}")

    if curve is None:
        curve = LearningCurve()
        per_class, mean_ap = evaluator.evaluate(detector)
        curve.append(CurveCheckpoint(added_samples, per_class, mean_ap))

    records = list(records) if records else []
    added = added_samples
    while state.batches and (max_batches is None or state.step < max_batches):
        state, record = exploration_step(state, detector, oracle, method,
                                         include_unknown)
        records.append(record)
        added += len(record.per_image_scores)
        if state.step % eval_every == 0:
            per_class, mean_ap = evaluator.evaluate(detector)
            curve.append(CurveCheckpoint(added, per_class, mean_ap))
        if on_step is not None:
            on_step(state, records, curve, added)

    if curve.checkpoints[-1].samples_labeled < added:
        per_class, mean_ap = evaluator.evaluate(detector)
        curve.append(CurveCheckpoint(added, per_class, mean_ap))
        if on_step is not None:
            on_step(state, records, curve, added)
    return state, records, curve
