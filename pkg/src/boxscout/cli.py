"""Command-line interface.

Verbs: ``run`` (execute configured experiments), ``resume`` (continue from a
snapshot), ``eval`` (score a detection dump against annotations),
``partition`` (inspect the batch assignment), ``make-fixture`` (write a
synthetic demo dataset), and ``serve`` (start the curation service).

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import BoxscoutError, ConfigError
from .evaluation import Evaluator
from .experiment import ExperimentConfig, prepare_data, resume, run
from .ingest import load_detection_dump, load_voc_directory, split_by_classes
from .detectors import ReplayDetector
from .selection import partition_into_batches
from .synthdata import make_rare_class_fixture, write_voc_directory

log = logging.getLogger(__name__)


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed:
        config.seeds = list(args.seed)
    if args.method:
        config.methods = list(args.method)
    if args.output:
        config.output_dir = args.output
    if args.batch_size is not None:
        config.batch_size = args.batch_size
    if args.eval_every is not None:
        config.eval_every = args.eval_every
    if args.max_batches is not None:
        config.max_batches = args.max_batches
    config.validate()
    return config


def _cmd_run(args) -> int:
    config = _apply_overrides(ExperimentConfig.from_file(args.config), args)
    summary = run(config)
    for method, ms in summary.methods.items():
        doc = ms.to_json()
        print(f"{method}: mean final mAP {doc['mean_final_map']:.4f} "
              f"(std {doc['std_final_map']:.4f}), "
              f"mean final AULC {doc['mean_final_aulc']:.4f} "
              f"(std {doc['std_final_aulc']:.4f}) "
              f"over {len(ms.per_seed)} seed(s)")
    print(f"artifacts in {config.output_dir}")
    return 0


def _cmd_resume(args) -> int:
    result = resume(args.snapshot)
    if result is None:
        print("run already finished; nothing to resume")
    else:
        print(f"resumed seed {result.seed}: final mAP {result.final_map:.4f}, "
              f"final AULC {result.final_aulc:.4f}")
    return 0


def _cmd_eval(args) -> int:
    dataset = load_voc_directory(args.annotations)
    with open(args.dump, encoding="utf-8") as fh:
        dump = load_detection_dump(fh)
    detector = ReplayDetector(dump)
    checkpoints = [args.checkpoint] if args.checkpoint else dump.checkpoints()
    rows = []
    for checkpoint in checkpoints:
        while detector.checkpoint_id != checkpoint:
            detector.update({}, {})
        per_class, mean_ap = Evaluator(dataset, args.iou_threshold).evaluate(detector)
        rows.append((checkpoint, per_class, mean_ap))
        parts = ", ".join(f"{c}={ap:.4f}" for c, ap in per_class.items())
        print(f"{checkpoint}: mAP {mean_ap:.4f} ({parts})")
    if args.output:
        classes = dataset.class_list
        lines = ["checkpoint," + ",".join(classes) + ",mAP"]
        for checkpoint, per_class, mean_ap in rows:
            cells = [checkpoint]
            cells += ["" if c not in per_class else f"{per_class[c]:.4f}"
                      for c in classes]
            cells.append(f"{mean_ap:.4f}")
            lines.append(",".join(cells))
        Path(args.output).write_text("\n".join(lines) + "\n")
    return 0


def _cmd_partition(args) -> int:
    dataset = load_voc_directory(args.annotations)
    if args.new_classes:
        _, part_b, dropped = split_by_classes(dataset, args.new_classes.split(","))
        ids = sorted(part_b.images)
        if dropped:
            print(f"dropped {len(dropped)} mixed-class image(s)")
    else:
        ids = sorted(dataset.images)
    batches, leftover = partition_into_batches(ids, args.batch_size, args.seed)
    print(f"{len(ids)} images -> {len(batches)} batches of {args.batch_size}, "
          f"{len(leftover)} leftover")
    if args.verbose:
        for batch in batches:
            print(f"  batch {batch.batch_id}: {' '.join(batch.image_ids)}")
        if leftover:
            print(f"  leftover: {' '.join(leftover)}")
    return 0


def _cmd_make_fixture(args) -> int:
    fixture = make_rare_class_fixture(seed=args.seed,
                                      pool_images=args.pool_images,
                                      val_images=args.val_images)
    out = Path(args.output)
    write_voc_directory(fixture["pool"], out / "pool")
    write_voc_directory(fixture["val"], out / "val")
    config = {
        "pool_annotations": str(out / "pool"),
        "val_annotations": str(out / "val"),
        "new_classes": fixture["classes"],
        "methods": ["sum+w", "random"],
        "seeds": [1, 2, 3],
        "batch_size": 10,
        "eval_every": 1,
        "max_batches": 12,
        "include_unknown": False,
        "detector": {
            "type": "synthetic",
            "confusions": fixture["confusions"],
        },
        "schedule": {"lambda": 0.5, "iterations": 16, "minibatch_size": 8},
        "output_dir": str(out / "runs"),
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n")
    print(f"fixture with rare class {fixture['rare_class']!r} in {out}")
    print(f"try: boxscout run --config {out / 'config.json'}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    defaults = json.loads(Path(args.config).read_text()) if args.config else {}
    ExperimentConfig.from_dict(defaults)  # fail fast on a bad config
    app = create_app(defaults, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boxscout",
        description="Active-learning engine for object detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run configured experiments")
    p_run.add_argument("--config", required=True, help="config JSON path")
    p_run.add_argument("--seed", action="append", type=int,
                       help="override seeds (repeatable)")
    p_run.add_argument("--method", action="append",
                       help="override methods (repeatable): random|sum|avg|max[+w]")
    p_run.add_argument("--output", help="override output directory")
    p_run.add_argument("--batch-size", type=int)
    p_run.add_argument("--eval-every", type=int)
    p_run.add_argument("--max-batches", type=int)
    p_run.set_defaults(func=_cmd_run)

    p_resume = sub.add_parser("resume", help="continue a run from a snapshot")
    p_resume.add_argument("snapshot", help="path to state.json")
    p_resume.set_defaults(func=_cmd_resume)

    p_eval = sub.add_parser("eval", help="evaluate a detection dump")
    p_eval.add_argument("--annotations", required=True)
    p_eval.add_argument("--dump", required=True)
    p_eval.add_argument("--checkpoint", help="evaluate one checkpoint only")
    p_eval.add_argument("--iou-threshold", type=float, default=0.5)
    p_eval.add_argument("--output", help="write per-checkpoint CSV here")
    p_eval.set_defaults(func=_cmd_eval)

    p_part = sub.add_parser("partition", help="inspect the batch assignment")
    p_part.add_argument("--annotations", required=True)
    p_part.add_argument("--new-classes", help="comma-separated; keep only part B")
    p_part.add_argument("--batch-size", type=int, default=10)
    p_part.add_argument("--seed", type=int, default=0)
    p_part.add_argument("--verbose", action="store_true")
    p_part.set_defaults(func=_cmd_partition)

    p_fix = sub.add_parser("make-fixture", help="write a synthetic demo dataset")
    p_fix.add_argument("--output", required=True)
    p_fix.add_argument("--pool-images", type=int, default=260)
    p_fix.add_argument("--val-images", type=int, default=160)
    p_fix.add_argument("--seed", type=int, default=7)
    p_fix.set_defaults(func=_cmd_make_fixture)

    p_serve = sub.add_parser("serve", help="start the curation service")
    p_serve.add_argument("--config", help="default session config JSON")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8008)
    p_serve.add_argument("--ui", help="built frontend directory to serve at /")
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BoxscoutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
