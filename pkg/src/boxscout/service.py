"""HTTP curation service: the human-in-the-loop side of the exploration loop.

A session wraps one exploration run.  The service proposes the currently
best-valued batch together with per-detection suggestions (box, top-2
classes, margin), accepts human labels for exactly that batch, feeds them
through the same selection/update path the offline runner uses, and reports
progress (learning curve, class counts, live class weights).

Sessions fed dataset ground truth reproduce the offline runner's selection
log record for record.
"""

from __future__ import annotations

import re
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel, Field

from .errors import BoxscoutError, ConfigError, InvariantError
from .evaluation import CurveCheckpoint, Evaluator, LearningCurve
from .experiment import (
    ExperimentConfig,
    PreparedData,
    build_detector,
    initial_state,
    prepare_data,
)
from .ingest import GroundTruthBox, ImageAnnotation
from .scoring import class_weight
from .selection import (
    SelectionRecord,
    apply_selection,
    method_name,
    parse_method,
    propose_selection,
)

_IMAGE_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")
_IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png")


class ApiError(Exception):
    """Service error with a machine-readable code and HTTP status."""

    def __init__(self, status: int, code: str, message: str, **details):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details


class LabelBoxIn(BaseModel):
    class_name: str
    xmin: int
    ymin: int
    xmax: int
    ymax: int


class LabelSubmissionIn(BaseModel):
    image: str
    boxes: list[LabelBoxIn] = Field(default_factory=list)
    note: str | None = None


class LabelsBodyIn(BaseModel):
    labels: list[LabelSubmissionIn]


class Session:
    """One live exploration run driven by an annotator."""

    def __init__(self, config: ExperimentConfig, data: PreparedData):
        # A session runs one method with one seed; comparison configs list
        # several, so take the first of each (the request body can override).
        self.session_id = uuid.uuid4().hex[:12]
        self.config = config
        self.data = data
        self.method = parse_method(config.methods[0])
        self.seed = config.seeds[0]
        self.lock = threading.Lock()

        self.detector = build_detector(config, data, self.seed)
        self.state = initial_state(config, data, self.seed,
                                   len(self.detector.class_list()))
        self.evaluator = Evaluator(data.validation, config.iou_threshold)
        self.curve = LearningCurve()
        per_class, mean_ap = self.evaluator.evaluate(self.detector)
        self.curve.append(CurveCheckpoint(0, per_class, mean_ap))
        self.records: list[SelectionRecord] = []
        self.added = 0
        self.pending: tuple = None  # (batch, record) while awaiting labels

    # -- state machine ----------------------------------------------------

    def exhausted(self) -> bool:
        if not self.state.batches:
            return True
        return (self.config.max_batches is not None
                and self.state.step >= self.config.max_batches)

    @property
    def status(self) -> str:
        return "exhausted" if (self.pending is None and self.exhausted()) \
            else "awaiting_labels"

    def propose(self) -> dict:
        if self.pending is None:
            if self.exhausted():
                raise ApiError(409, "exhausted", "no unlabeled batches remain")
            batch, record = propose_selection(
                self.state, self.detector, self.method,
                self.config.include_unknown)
            self.pending = (batch, record)
        return self._pending_payload()

    def _pending_payload(self) -> dict:
        batch, record = self.pending
        images = []
        for image_id in batch.image_ids:
            ann = self.data.unlabeled_pool.images[image_id]
            images.append({
                "image_id": image_id,
                "width": ann.width,
                "height": ann.height,
                "score": record.per_image_scores[image_id],
                "suggestions": self._suggestions(image_id, ann),
            })
        return {
            "session_id": self.session_id,
            "step": self.state.step,
            "batch_id": batch.batch_id,
            "batch_value": record.batch_value,
            "method": record.method,
            "images": images,
        }

    def _suggestions(self, image_id: str, ann: ImageAnnotation) -> list[dict]:
        class_list = self.detector.class_list()
        out = []
        for det in self.detector.detect(image_id):
            scores = det.dist.as_array()
            order = np.argsort(-scores, kind="stable")
            top1, top2 = int(order[0]), int(order[1])
            diff = float(scores[top1] - scores[top2])
            cx, cy, w, h = det.box
            xmin = (cx - w / 2) * ann.width
            ymin = (cy - h / 2) * ann.height
            out.append({
                "box": [round(v, 6) for v in det.box],
                "pixel_box": [round(xmin, 1), round(ymin, 1),
                              round(xmin + w * ann.width, 1),
                              round(ymin + h * ann.height, 1)],
                "confidence": round(det.confidence, 4),
                "top_classes": [
                    [class_list[top1], round(float(scores[top1]), 4)],
                    [class_list[top2], round(float(scores[top2]), 4)],
                ],
                "margin": round((1.0 - diff) ** 2, 4),
                "unknown": det.unknown,
            })
        return out

    def submit(self, submissions: list[LabelSubmissionIn]) -> dict:
        if self.pending is None:
            if self.exhausted():
                raise ApiError(409, "exhausted", "no unlabeled batches remain")
            self.propose()
        batch, record = self.pending

        by_image = {}
        for sub in submissions:
            if sub.image in by_image:
                raise ApiError(422, "duplicate_submission",
                               f"two submissions for image {sub.image!r}")
            by_image[sub.image] = sub
        expected = set(batch.image_ids)
        unexpected = sorted(set(by_image) - expected)
        if unexpected:
            raise ApiError(422, "not_pending",
                           "labels for images outside the pending batch",
                           images=unexpected)
        missing = sorted(expected - set(by_image))
        if missing:
            raise ApiError(422, "incomplete", "labels missing for some images",
                           missing=missing)

        labels = {i: self._to_annotation(by_image[i]) for i in batch.image_ids}
        self.state = apply_selection(self.state, self.detector,
                                     batch.batch_id, labels)
        self.records.append(record)
        self.added += len(batch.image_ids)
        self.pending = None
        if self.state.step % self.config.eval_every == 0:
            self._checkpoint()
        if self.exhausted() and self.curve.checkpoints[-1].samples_labeled < self.added:
            self._checkpoint()
        return {"session_id": self.session_id, "labeled": len(batch.image_ids),
                "step": self.state.step, "status": self.status}

    def _checkpoint(self) -> None:
        per_class, mean_ap = self.evaluator.evaluate(self.detector)
        self.curve.append(CurveCheckpoint(self.added, per_class, mean_ap))

    def _to_annotation(self, sub: LabelSubmissionIn) -> ImageAnnotation:
        source = self.data.unlabeled_pool.images[sub.image]
        vocabulary = set(self.detector.class_list())
        boxes = []
        for b in sub.boxes:
            if b.class_name not in vocabulary:
                raise ApiError(422, "unknown_class",
                               f"class {b.class_name!r} is not in the class list",
                               image=sub.image)
            try:
                boxes.append(GroundTruthBox(b.class_name, b.xmin, b.ymin,
                                            b.xmax, b.ymax))
            except InvariantError as exc:
                raise ApiError(422, "invalid_box", str(exc), image=sub.image)
        try:
            return ImageAnnotation(sub.image, source.width, source.height,
                                   tuple(boxes))
        except InvariantError as exc:
            raise ApiError(422, "invalid_box", str(exc), image=sub.image)

    def progress(self) -> dict:
        class_list = self.detector.class_list()
        weights = {c: class_weight(self.state.counts, c, class_list)
                   for c in class_list}
        return {
            "session_id": self.session_id,
            "status": self.status,
            "step": self.state.step,
            "samples_labeled": self.added,
            "batches_remaining": len(self.state.batches),
            "curve": [{"samples": c.samples_labeled,
                       "per_class_ap": c.per_class_ap, "map": c.map}
                      for c in self.curve.checkpoints],
            "class_counts": {c: self.state.counts.count(c) for c in class_list},
            "class_weights": weights,
        }

    def selection_log(self) -> list[dict]:
        return [r.to_json() for r in self.records]


def create_app(default_config: dict | None = None,
               ui_dir: str | None = None) -> FastAPI:
    """Build the service; ``default_config`` seeds every session's config.

    ``ui_dir`` (a directory holding the built frontend: index.html + dist/)
    is mounted at the root when given.
    """
    app = FastAPI(title="boxscout curation service")
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()
    defaults = dict(default_config or {})

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        body = {"code": exc.code, "message": exc.message}
        body.update(exc.details)
        return JSONResponse(status_code=exc.status, content=body)

    @app.exception_handler(BoxscoutError)
    async def _engine_error(request: Request, exc: BoxscoutError):
        status = 422 if isinstance(exc, ConfigError) else 500
        return JSONResponse(status_code=status,
                            content={"code": type(exc).__name__,
                                     "message": str(exc)})

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session",
                           f"no session {session_id!r}")
        return session

    @app.get("/api/config")
    def get_defaults():
        return defaults

    @app.post("/api/sessions", status_code=201)
    def create_session(overrides: dict | None = None):
        doc = dict(defaults)
        doc.update(overrides or {})
        config = ExperimentConfig.from_dict(doc)
        data = prepare_data(config)
        session = Session(config, data)
        with registry_lock:
            sessions[session.session_id] = session
        return {"session_id": session.session_id,
                "status": session.status,
                "method": method_name(session.method),
                "seed": session.seed,
                "batch_size": config.batch_size,
                "batches": len(session.state.batches),
                "classes": session.detector.class_list()}

    @app.get("/api/sessions/{session_id}/batch")
    def get_batch(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return session.propose()

    @app.post("/api/sessions/{session_id}/labels")
    def post_labels(session_id: str, body: LabelsBodyIn):
        session = get_session(session_id)
        with session.lock:
            return session.submit(body.labels)

    @app.get("/api/sessions/{session_id}/progress")
    def get_progress(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return session.progress()

    @app.get("/api/sessions/{session_id}/log")
    def get_log(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {"records": session.selection_log()}

    @app.get("/api/images/{image_id}")
    def get_image(image_id: str):
        if not _IMAGE_ID_RE.match(image_id):
            raise ApiError(404, "unknown_image", f"no image {image_id!r}")
        images_dir = defaults.get("images_dir")
        if not images_dir:
            raise ApiError(404, "no_images", "service has no images directory")
        root = Path(images_dir).resolve()
        for ext in _IMAGE_EXTENSIONS:
            candidate = (root / f"{image_id}{ext}")
            if candidate.is_file():
                return FileResponse(candidate)
        raise ApiError(404, "unknown_image", f"no image {image_id!r}")

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
