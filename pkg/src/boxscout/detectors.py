"""Detector adapters and the rehearsal-style incremental update scheme.

The engine never touches model weights; it talks to a small contract
(:class:`DetectorAdapter`).  Two implementations ship: a replay adapter
over precomputed detection dumps, and a parametric synthetic detector whose
per-class skill grows with the labeled examples it absorbs, enabling
desk-scale end-to-end runs.

Incremental updates mix old and new examples into minibatches: each slot
draws from the old pool with probability lambda, from the new batch
otherwise, and after the update the new data counts as old.
"""

from __future__ import annotations

import logging
import math
import zlib
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .boxes import clamp_center_box, corners_to_center
from .errors import EmptyPoolError, InvariantError, MissingRecordError
from .ingest import DetectionDump, ImageAnnotation
from .scoring import ClassDistribution, Detection

log = logging.getLogger(__name__)

# A detection whose best class score falls below this is reported as unknown.
CLASSIFICATION_THRESHOLD = 0.25

_UPDATE_SALT = 0x5EED
_DETECT_SALT = 0xD37EC7


class DetectorAdapter(Protocol):
    """What the exploration loop requires from a detector."""

    def detect(self, image_id: str) -> list[Detection]:
        """Detections for one image; deterministic between updates."""
        ...

    def update(self, old_pool: Mapping[str, ImageAnnotation],
               new_batch: Mapping[str, ImageAnnotation]) -> None:
        """Incrementally absorb a newly labeled batch."""
        ...

    def class_list(self) -> list[str]:
        ...


@dataclass(frozen=True)
class MixSchedule:
    """Minibatch mixing parameters for one incremental update."""

    lambda_: float = 0.5
    iterations: int = 100
    minibatch_size: int = 64

    def __post_init__(self):
        if not 0.0 <= self.lambda_ <= 1.0:
            raise InvariantError(f"lambda {self.lambda_} outside [0, 1]")
        if self.iterations < 1 or self.minibatch_size < 1:
            raise InvariantError("iterations and minibatch_size must be positive")


def mixed_minibatch(old_pool: Sequence, new_batch: Sequence,
                    schedule: MixSchedule, seed) -> list[list]:
    """Build the update's minibatch sequence by lambda-mixed sampling.

    Every slot independently comes from ``old_pool`` with probability
    ``lambda_`` and from ``new_batch`` otherwise, drawn uniformly with
    replacement; an empty side routes all draws to the other.
    """
    old_pool = list(old_pool)
    new_batch = list(new_batch)
    if not old_pool and not new_batch:
        raise EmptyPoolError("both example pools are empty")
    rng = np.random.default_rng(seed)
    minibatches = []
    for _ in range(schedule.iterations):
        batch = []
        for _ in range(schedule.minibatch_size):
            if not old_pool:
                pool = new_batch
            elif not new_batch:
                pool = old_pool
            elif rng.random() < schedule.lambda_:
                pool = old_pool
            else:
                pool = new_batch
            batch.append(pool[int(rng.integers(len(pool)))])
        minibatches.append(batch)
    return minibatches


@dataclass(frozen=True)
class SkillParams:
    """Saturating learning model of the synthetic detector.

    Correct-class mass grows from ``p0`` toward ``p_max`` and the miss rate
    decays from ``miss0`` toward ``miss_min``, both with time constant
    ``tau`` measured in absorbed boxes of the class.
    """

    p0: float = 0.2
    p_max: float = 0.9
    tau: float = 40.0
    miss0: float = 0.7
    miss_min: float = 0.1
    distractor_rate: float = 0.3
    loc_noise: float = 0.02

    def __post_init__(self):
        if not 0.0 <= self.p0 <= self.p_max <= 1.0:
            raise InvariantError("need 0 <= p0 <= p_max <= 1")
        if self.tau <= 0.0:
            raise InvariantError("tau must be positive")
        if not 0.0 <= self.miss_min <= self.miss0 <= 1.0:
            raise InvariantError("need 0 <= miss_min <= miss0 <= 1")


@dataclass
class SkillState:
    """Learned state of the synthetic detector: boxes absorbed per class."""

    params: SkillParams = field(default_factory=SkillParams)
    per_class_seen: dict[str, int] = field(default_factory=dict)

    def seen(self, class_name: str) -> int:
        return self.per_class_seen.get(class_name, 0)

    def true_class_mass(self, class_name: str) -> float:
        p = self.params
        n = self.seen(class_name)
        return p.p0 + (p.p_max - p.p0) * (1.0 - math.exp(-n / p.tau))

    def miss_rate(self, class_name: str) -> float:
        p = self.params
        n = self.seen(class_name)
        return p.miss_min + (p.miss0 - p.miss_min) * math.exp(-n / p.tau)

    def copy(self) -> "SkillState":
        return replace(self, per_class_seen=dict(self.per_class_seen))


def _stable_hash(text: str) -> int:
    return zlib.crc32(text.encode("utf-8"))


def synth_detect(annotation: ImageAnnotation, skill: SkillState,
                 class_list: Sequence[str],
                 confusions: Mapping[str, Sequence[str]], seed) -> list[Detection]:
    """Simulate detector output for one annotated image.

    Each ground-truth box is emitted with probability ``1 - miss_rate`` and
    jittered; its class distribution puts the learned mass on the true class
    and spreads the rest uniformly over that class's confusion set (over all
    other classes when no confusion set is configured).  Poisson-distributed
    distractor detections with near-uniform distributions are added last.
    """
    rng = np.random.default_rng(seed)
    class_index = {c: i for i, c in enumerate(class_list)}
    k = len(class_list)
    dets: list[Detection] = []

    for box in annotation.boxes:
        miss = skill.miss_rate(box.class_name)
        if rng.random() < miss:
            continue
        cx, cy, w, h = corners_to_center(box.xmin, box.ymin, box.xmax, box.ymax,
                                         annotation.width, annotation.height)
        noise = rng.normal(0.0, skill.params.loc_noise, size=4)
        cx, cy, w, h = clamp_center_box(cx + noise[0], cy + noise[1],
                                        w + noise[2], h + noise[3])

        # A class the detector does not know yet carries no mass of its own;
        # all of it lands on the (known) confusion set, mirroring confident
        # early misclassification.
        known = box.class_name in class_index
        mass = skill.true_class_mass(box.class_name) if known else 0.0
        scores = np.zeros(k)
        if known:
            scores[class_index[box.class_name]] = mass
        spread = [c for c in confusions.get(box.class_name, []) if c in class_index
                  and c != box.class_name]
        if not spread:
            spread = [c for c in class_list if c != box.class_name]
        for c in spread:
            scores[class_index[c]] += (1.0 - mass) / len(spread)

        confidence = float(np.clip(rng.normal(0.25 + 0.65 * (1.0 - miss), 0.08),
                                   0.05, 1.0))
        dets.append(Detection(
            box=(cx, cy, w, h),
            confidence=confidence,
            dist=ClassDistribution(tuple(scores / scores.sum())),
            unknown=bool(scores.max() < CLASSIFICATION_THRESHOLD),
        ))

    for _ in range(int(rng.poisson(skill.params.distractor_rate))):
        cx, cy = rng.uniform(0.15, 0.85, size=2)
        w, h = rng.uniform(0.05, 0.3, size=2)
        cx, cy, w, h = clamp_center_box(float(cx), float(cy), float(w), float(h))
        raw = 1.0 + 0.05 * rng.random(k)
        scores = raw / raw.sum()
        dets.append(Detection(
            box=(cx, cy, w, h),
            confidence=float(np.clip(rng.normal(0.2, 0.06), 0.05, 1.0)),
            dist=ClassDistribution(tuple(scores)),
            unknown=bool(scores.max() < CLASSIFICATION_THRESHOLD),
        ))
    return dets


def synth_update(skill: SkillState, old_pool: Mapping[str, ImageAnnotation],
                 new_batch: Mapping[str, ImageAnnotation],
                 schedule: MixSchedule, seed) -> SkillState:
    """Absorb a labeled batch: count the new-batch boxes the mixed draws touch.

    Draws that land in the old pool refresh nothing (old knowledge is kept
    by construction); a new-batch image drawn multiple times contributes its
    boxes that many times.
    """
    new_skill = skill.copy()
    if not old_pool and not new_batch:
        raise EmptyPoolError("both example pools are empty")
    new_ids = sorted(new_batch)
    minibatches = mixed_minibatch(sorted(old_pool), new_ids, schedule, seed)
    new_set = set(new_ids)
    for batch in minibatches:
        for image_id in batch:
            if image_id in new_set:
                for box in new_batch[image_id].boxes:
                    new_skill.per_class_seen[box.class_name] = \
                        new_skill.per_class_seen.get(box.class_name, 0) + 1
    return new_skill


class SyntheticDetector:
    """Parametric stand-in detector whose skill grows with labeled data."""

    def __init__(self, annotations: Mapping[str, ImageAnnotation],
                 class_list: Sequence[str],
                 confusions: Mapping[str, Sequence[str]] | None = None,
                 params: SkillParams | None = None,
                 schedule: MixSchedule | None = None,
                 seed: int = 0,
                 initial_seen: Mapping[str, int] | None = None):
        self._annotations = dict(annotations)
        self._classes = list(class_list)
        self._confusions = {c: list(v) for c, v in (confusions or {}).items()}
        self._schedule = schedule or MixSchedule()
        self._seed = seed
        self._epoch = 0
        self.skill = SkillState(params=params or SkillParams(),
                                per_class_seen=dict(initial_seen or {}))

    def class_list(self) -> list[str]:
        return list(self._classes)

    def detect(self, image_id: str) -> list[Detection]:
        annotation = self._annotations[image_id]
        return synth_detect(annotation, self.skill, self._classes,
                            self._confusions,
                            (self._seed, self._epoch, _DETECT_SALT,
                             _stable_hash(image_id)))

    def update(self, old_pool: Mapping[str, ImageAnnotation],
               new_batch: Mapping[str, ImageAnnotation]) -> None:
        for image_id in sorted(new_batch):
            self._annotations.setdefault(image_id, new_batch[image_id])
            for box in new_batch[image_id].boxes:
                if box.class_name not in self._classes:
                    self._classes.append(box.class_name)
        self.skill = synth_update(self.skill, old_pool, new_batch,
                                  self._schedule,
                                  (self._seed, self._epoch, _UPDATE_SALT))
        self._epoch += 1

    def state_dict(self) -> dict:
        return {
            "type": "synthetic",
            "epoch": self._epoch,
            "classes": list(self._classes),
            "per_class_seen": dict(self.skill.per_class_seen),
        }

    def load_state_dict(self, state: dict) -> None:
        self._epoch = int(state["epoch"])
        self._classes = list(state["classes"])
        self.skill = SkillState(params=self.skill.params,
                                per_class_seen={k: int(v) for k, v in
                                                state["per_class_seen"].items()})


class ReplayDetector:
    """Serves detections recorded by a real detector, checkpoint by checkpoint."""

    def __init__(self, dump: DetectionDump,
                 checkpoint_sequence: Sequence[str] | None = None):
        self._dump = dump
        self._sequence = list(checkpoint_sequence if checkpoint_sequence is not None
                              else dump.checkpoints())
        if not self._sequence:
            raise InvariantError("replay detector needs at least one checkpoint")
        self._position = 0

    @property
    def checkpoint_id(self) -> str:
        return self._sequence[self._position]

    def class_list(self) -> list[str]:
        return list(self._dump.classes)

    def detect(self, image_id: str) -> list[Detection]:
        key = (self.checkpoint_id, image_id)
        record = self._dump.records.get(key)
        if record is None:
            raise MissingRecordError(
                f"no record for checkpoint={key[0]!r} image={key[1]!r}")
        return list(record.detections)

    def update(self, old_pool: Mapping[str, ImageAnnotation],
               new_batch: Mapping[str, ImageAnnotation]) -> None:
        if self._position + 1 < len(self._sequence):
            self._position += 1
        else:
            log.warning("replay detector already at final checkpoint %r",
                        self.checkpoint_id)

    def state_dict(self) -> dict:
        return {"type": "replay", "position": self._position}

    def load_state_dict(self, state: dict) -> None:
        self._position = int(state["position"])


def count_boxes(annotations: Iterable[ImageAnnotation]) -> dict[str, int]:
    """Per-class box counts over a set of annotations."""
    counts: dict[str, int] = {}
    for ann in annotations:
        for box in ann.boxes:
            counts[box.class_name] = counts.get(box.class_name, 0) + 1
    return counts
