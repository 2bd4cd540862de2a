"""Seeded experiment runner.

Loads annotation directories, splits them into known/new parts, runs the
exploration loop per method and seed, and persists everything needed to
audit or resume a run: the echoed config, per-seed learning-curve CSVs,
line-delimited selection logs, and a resumable state snapshot updated after
every step.  Identical config + seed reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detectors import (
    MixSchedule,
    ReplayDetector,
    SkillParams,
    SyntheticDetector,
    count_boxes,
)
from .errors import ConfigError, SnapshotError
from .evaluation import (
    CurveCheckpoint,
    Evaluator,
    LearningCurve,
    aulc_series,
    curve_to_csv,
)
from .ingest import (
    DatasetIndex,
    annotation_from_json,
    annotation_to_json,
    load_detection_dump,
    load_voc_directory,
    split_by_classes,
)
from .scoring import ClassCounts
from .selection import (
    DatasetOracle,
    ExperimentState,
    SelectionRecord,
    UnlabeledBatch,
    method_name,
    parse_method,
    partition_into_batches,
    run_exploration,
)

log = logging.getLogger(__name__)

SNAPSHOT_FORMAT = "boxscout-state-v1"


@dataclass
class ExperimentConfig:
    """Everything a run needs, with defaults echoed into the output dir."""

    pool_annotations: str
    val_annotations: str
    new_classes: list[str]
    output_dir: str
    methods: list[str] = field(default_factory=lambda: ["sum"])
    seeds: list[int] = field(default_factory=lambda: [0])
    batch_size: int = 10
    eval_every: int = 5
    max_batches: int | None = None
    include_unknown: bool = True
    iou_threshold: float = 0.5
    detector_type: str = "synthetic"
    skill_params: SkillParams = field(default_factory=SkillParams)
    confusions: dict[str, list[str]] = field(default_factory=dict)
    schedule: MixSchedule = field(default_factory=MixSchedule)
    dump_path: str | None = None
    checkpoints: list[str] | None = None
    images_dir: str | None = None

    def validate(self) -> None:
        if not self.new_classes:
            raise ConfigError("new_classes must not be empty")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.eval_every < 1:
            raise ConfigError(f"eval_every must be >= 1, got {self.eval_every}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if not self.methods:
            raise ConfigError("at least one method is required")
        for m in self.methods:
            parse_method(m)
        if self.detector_type not in ("synthetic", "replay"):
            raise ConfigError(f"unknown detector type {self.detector_type!r}")
        if self.detector_type == "replay" and not self.dump_path:
            raise ConfigError("replay detector requires dump_path")
        if self.max_batches is not None and self.max_batches < 1:
            raise ConfigError("max_batches must be >= 1 when set")

    def to_dict(self) -> dict:
        p = self.skill_params
        return {
            "pool_annotations": self.pool_annotations,
            "val_annotations": self.val_annotations,
            "new_classes": list(self.new_classes),
            "output_dir": self.output_dir,
            "methods": list(self.methods),
            "seeds": list(self.seeds),
            "batch_size": self.batch_size,
            "eval_every": self.eval_every,
            "max_batches": self.max_batches,
            "include_unknown": self.include_unknown,
            "iou_threshold": self.iou_threshold,
            "detector": {
                "type": self.detector_type,
                "params": {
                    "p0": p.p0, "p_max": p.p_max, "tau": p.tau,
                    "miss0": p.miss0, "miss_min": p.miss_min,
                    "distractor_rate": p.distractor_rate,
                    "loc_noise": p.loc_noise,
                },
                "confusions": {k: list(v) for k, v in sorted(self.confusions.items())},
                "dump": self.dump_path,
                "checkpoints": self.checkpoints,
            },
            "schedule": {
                "lambda": self.schedule.lambda_,
                "iterations": self.schedule.iterations,
                "minibatch_size": self.schedule.minibatch_size,
            },
            "images_dir": self.images_dir,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        try:
            det = doc.get("detector", {})
            params = det.get("params", {})
            sched = doc.get("schedule", {})
            methods = doc.get("methods")
            if methods is None:
                methods = [doc["method"]] if "method" in doc else ["sum"]
            cfg = cls(
                pool_annotations=doc["pool_annotations"],
                val_annotations=doc["val_annotations"],
                new_classes=list(doc.get("new_classes", [])),
                output_dir=doc.get("output_dir", "runs"),
                methods=[str(m) for m in methods],
                seeds=[int(s) for s in doc.get("seeds", [0])],
                batch_size=int(doc.get("batch_size", 10)),
                eval_every=int(doc.get("eval_every", 5)),
                max_batches=(None if doc.get("max_batches") is None
                             else int(doc["max_batches"])),
                include_unknown=bool(doc.get("include_unknown", True)),
                iou_threshold=float(doc.get("iou_threshold", 0.5)),
                detector_type=str(det.get("type", "synthetic")),
                skill_params=SkillParams(**params) if params else SkillParams(),
                confusions={str(k): [str(c) for c in v]
                            for k, v in det.get("confusions", {}).items()},
                schedule=MixSchedule(
                    lambda_=float(sched.get("lambda", 0.5)),
                    iterations=int(sched.get("iterations", 100)),
                    minibatch_size=int(sched.get("minibatch_size", 64))),
                dump_path=det.get("dump"),
                checkpoints=det.get("checkpoints"),
                images_dir=doc.get("images_dir"),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config field: {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc)


def config_hash(config: ExperimentConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class PreparedData:
    """Datasets derived from a config: split pools plus the full vocabulary."""

    known_pool: DatasetIndex      # part A of the pool: initially labeled
    unlabeled_pool: DatasetIndex  # part B of the pool: to explore
    validation: DatasetIndex      # part B of the validation annotations
    vocabulary: list[str]
    dropped_pool: list[str]
    dropped_val: list[str]


def prepare_data(config: ExperimentConfig) -> PreparedData:
    pool = load_voc_directory(config.pool_annotations)
    val = load_voc_directory(config.val_annotations,
                             class_list=pool.class_list)
    vocabulary = list(val.class_list)  # pool classes first, then val-only ones
    part_a, part_b, dropped = split_by_classes(pool, config.new_classes)
    _, val_b, val_dropped = split_by_classes(val, config.new_classes)
    return PreparedData(known_pool=part_a, unlabeled_pool=part_b,
                        validation=val_b, vocabulary=vocabulary,
                        dropped_pool=dropped, dropped_val=val_dropped)


def build_detector(config: ExperimentConfig, data: PreparedData, seed: int):
    if config.detector_type == "replay":
        with open(config.dump_path, encoding="utf-8") as fh:
            dump = load_detection_dump(fh)
        return ReplayDetector(dump, config.checkpoints)
    annotations = dict(data.unlabeled_pool.images)
    annotations.update(data.known_pool.images)
    annotations.update(data.validation.images)
    return SyntheticDetector(
        annotations=annotations,
        class_list=data.vocabulary,
        confusions=config.confusions,
        params=config.skill_params,
        schedule=config.schedule,
        seed=seed,
        initial_seen=count_boxes(data.known_pool.images.values()),
    )


def initial_state(config: ExperimentConfig, data: PreparedData, seed: int,
                  vocabulary_size: int) -> ExperimentState:
    batches, leftover = partition_into_batches(
        sorted(data.unlabeled_pool.images), config.batch_size, seed)
    counts = ClassCounts(count_boxes(data.known_pool.images.values()),
                         num_classes=vocabulary_size)
    return ExperimentState(labeled=dict(data.known_pool.images),
                           batches=tuple(batches), leftover=tuple(leftover),
                           counts=counts, step=0, seed=seed)


def _state_to_json(state: ExperimentState) -> dict:
    return {
        "step": state.step,
        "seed": state.seed,
        "labeled": {i: annotation_to_json(a) for i, a in state.labeled.items()},
        "batches": [{"batch_id": b.batch_id, "image_ids": list(b.image_ids)}
                    for b in state.batches],
        "leftover": list(state.leftover),
        "counts": dict(state.counts.per_class),
        "num_classes": state.counts.num_classes,
    }


def _state_from_json(doc: dict) -> ExperimentState:
    return ExperimentState(
        labeled={i: annotation_from_json(a) for i, a in doc["labeled"].items()},
        batches=tuple(UnlabeledBatch(int(b["batch_id"]), tuple(b["image_ids"]))
                      for b in doc["batches"]),
        leftover=tuple(doc["leftover"]),
        counts=ClassCounts({k: int(v) for k, v in doc["counts"].items()},
                           num_classes=int(doc["num_classes"])),
        step=int(doc["step"]),
        seed=int(doc["seed"]),
    )


def _curve_to_json(curve: LearningCurve) -> list[dict]:
    return [{"samples": c.samples_labeled, "per_class_ap": c.per_class_ap,
             "map": c.map} for c in curve.checkpoints]


def _curve_from_json(items: list[dict]) -> LearningCurve:
    curve = LearningCurve()
    for c in items:
        curve.append(CurveCheckpoint(int(c["samples"]),
                                     {k: float(v) for k, v in
                                      c["per_class_ap"].items()},
                                     float(c["map"])))
    return curve


def write_snapshot(path: Path, config: ExperimentConfig, method: str, seed: int,
                   state: ExperimentState, detector, records, curve,
                   added: int, done: bool) -> None:
    doc = {
        "format": SNAPSHOT_FORMAT,
        "config_hash": config_hash(config),
        "config": config.to_dict(),
        "method": method,
        "seed": seed,
        "done": done,
        "added_samples": added,
        "state": _state_to_json(state),
        "detector": detector.state_dict(),
        "curve": _curve_to_json(curve),
        "records": [r.to_json() for r in records],
    }
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(doc))
    tmp.replace(path)


def _seed_dir(config: ExperimentConfig, method: str, seed: int) -> Path:
    return Path(config.output_dir) / method / f"seed{seed}"


@dataclass
class SeedResult:
    seed: int
    samples: list[int]
    map_values: list[float]
    aulc_values: list[float]
    per_class_final: dict[str, float]

    @property
    def final_map(self) -> float:
        return self.map_values[-1]

    @property
    def final_aulc(self) -> float:
        return self.aulc_values[-1]

    def to_json(self) -> dict:
        return {"seed": self.seed, "samples": self.samples,
                "map": self.map_values, "aulc": self.aulc_values,
                "per_class_final": self.per_class_final}


@dataclass
class MethodSummary:
    method: str
    per_seed: list[SeedResult]

    def _stats(self, values: list[float]) -> tuple[float, float]:
        arr = np.asarray(values, dtype=np.float64)
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return float(arr.mean()), std

    def to_json(self) -> dict:
        mean_map, std_map = self._stats([r.final_map for r in self.per_seed])
        mean_aulc, std_aulc = self._stats([r.final_aulc for r in self.per_seed])
        return {
            "method": self.method,
            "per_seed": [r.to_json() for r in self.per_seed],
            "mean_final_map": mean_map,
            "std_final_map": std_map,
            "mean_final_aulc": mean_aulc,
            "std_final_aulc": std_aulc,
        }


@dataclass
class RunSummary:
    methods: dict[str, MethodSummary]

    def to_json(self) -> dict:
        return {"methods": {m: s.to_json() for m, s in self.methods.items()}}


def _result_from_curve(seed: int, curve: LearningCurve) -> SeedResult:
    maps = curve.map_values()
    areas = aulc_series(maps) if len(maps) >= 2 else [0.0] * len(maps)
    return SeedResult(
        seed=seed,
        samples=[c.samples_labeled for c in curve.checkpoints],
        map_values=maps,
        aulc_values=areas,
        per_class_final=dict(curve.checkpoints[-1].per_class_ap),
    )


def run_single_seed(config: ExperimentConfig, data: PreparedData, method: str,
                    seed: int, stop_after_steps: int | None = None) -> SeedResult:
    """One (method, seed) exploration run with all artifacts persisted.

    ``stop_after_steps`` simulates an interruption: artifacts reflect the
    partial run and the snapshot is resumable.
    """
    out = _seed_dir(config, method, seed)
    out.mkdir(parents=True, exist_ok=True)
    detector = build_detector(config, data, seed)
    state = initial_state(config, data, seed, len(detector.class_list()))
    oracle = DatasetOracle(data.unlabeled_pool.images)
    evaluator = Evaluator(data.validation, config.iou_threshold)
    policy = parse_method(method)

    max_batches = config.max_batches
    if stop_after_steps is not None:
        max_batches = (stop_after_steps if max_batches is None
                       else min(max_batches, stop_after_steps))

    def on_step(st, recs, curve, added):
        done = (not st.batches
                or (config.max_batches is not None
                    and st.step >= config.max_batches))
        write_snapshot(out / "state.json", config, method, seed, st, detector,
                       recs, curve, added, done)

    state, records, curve = run_exploration(
        state, detector, oracle, policy, config.eval_every, evaluator,
        max_batches=max_batches, include_unknown=config.include_unknown,
        on_step=on_step)

    _write_run_artifacts(out, data, curve, records)
    if not records:  # 0-batch pool: still persist a snapshot
        write_snapshot(out / "state.json", config, method, seed, state,
                       detector, records, curve, 0, done=True)
    return _result_from_curve(seed, curve)


def _write_run_artifacts(out: Path, data: PreparedData, curve: LearningCurve,
                         records: list[SelectionRecord]) -> None:
    (out / "curve.csv").write_text(
        curve_to_csv(curve, data.validation.class_list))
    with open(out / "selection.jsonl", "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json()) + "\n")


def run(config: ExperimentConfig) -> RunSummary:
    """Execute every configured method x seed and write the comparison table."""
    config.validate()
    data = prepare_data(config)
    out_root = Path(config.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    (out_root / "config.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")

    summary = RunSummary(methods={})
    for method in config.methods:
        results = [run_single_seed(config, data, method, seed)
                   for seed in config.seeds]
        summary.methods[method] = MethodSummary(method=method, per_seed=results)

    (out_root / "summary.json").write_text(
        json.dumps(summary.to_json(), indent=2, sort_keys=True) + "\n")
    (out_root / "summary.csv").write_text(_summary_csv(summary))
    return summary


def _summary_csv(summary: RunSummary) -> str:
    lines = ["method,seeds,mean_final_mAP,std_final_mAP,mean_final_AULC,std_final_AULC"]
    for method, ms in summary.methods.items():
        doc = ms.to_json()
        lines.append(",".join([
            method, str(len(ms.per_seed)),
            f"{doc['mean_final_map']:.4f}", f"{doc['std_final_map']:.4f}",
            f"{doc['mean_final_aulc']:.4f}", f"{doc['std_final_aulc']:.4f}",
        ]))
    return "\n".join(lines) + "\n"


def load_snapshot(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    if doc.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError(f"unrecognized snapshot format {doc.get('format')!r}")
    config = ExperimentConfig.from_dict(doc["config"])
    if config_hash(config) != doc.get("config_hash"):
        raise SnapshotError("config hash mismatch; snapshot does not match its config")
    return doc


def resume(snapshot_path: str | Path) -> SeedResult | None:
    """Continue an interrupted run from its snapshot.

    A finished snapshot is a no-op (logged notice).  The continuation
    produces the same artifacts as an uninterrupted run.
    """
    doc = load_snapshot(snapshot_path)
    config = ExperimentConfig.from_dict(doc["config"])
    method, seed = doc["method"], int(doc["seed"])
    curve = _curve_from_json(doc["curve"])
    if doc.get("done"):
        log.info("run %s/seed%s already finished; nothing to resume", method, seed)
        return None

    data = prepare_data(config)
    detector = build_detector(config, data, seed)
    detector.load_state_dict(doc["detector"])
    state = _state_from_json(doc["state"])
    records = [SelectionRecord.from_json(r) for r in doc["records"]]
    oracle = DatasetOracle(data.unlabeled_pool.images)
    evaluator = Evaluator(data.validation, config.iou_threshold)
    out = _seed_dir(config, method, seed)
    out.mkdir(parents=True, exist_ok=True)

    def on_step(st, recs, cur, added):
        done = (not st.batches
                or (config.max_batches is not None
                    and st.step >= config.max_batches))
        write_snapshot(out / "state.json", config, method, seed, st, detector,
                       recs, cur, added, done)

    state, records, curve = run_exploration(
        state, detector, oracle, parse_method(method), config.eval_every,
        evaluator, max_batches=config.max_batches,
        include_unknown=config.include_unknown, on_step=on_step,
        curve=curve, records=records,
        added_samples=int(doc["added_samples"]))

    _write_run_artifacts(out, data, curve, records)
    return _result_from_curve(seed, curve)
