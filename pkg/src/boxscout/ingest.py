"""Annotation and detection-dump ingest.

Parses VOC-style XML annotations into the domain model, reads/writes the
line-delimited detection dump format, and splits a dataset into known/new
parts by class membership.

Coordinates stay as integers in pixel space here; normalization happens in
scoring and evaluation.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

from .errors import (
    DuplicateRecordError,
    InvariantError,
    ParseError,
    SchemaError,
    UnknownClassError,
)
from .scoring import ClassDistribution, Detection


@dataclass(frozen=True)
class GroundTruthBox:
    """One annotated object: class label and inclusive pixel corners."""

    class_name: str
    xmin: int
    ymin: int
    xmax: int
    ymax: int
    difficult: bool = False

    def __post_init__(self):
        if not self.class_name:
            raise InvariantError("empty class name")
        if self.xmin >= self.xmax or self.ymin >= self.ymax:
            raise InvariantError(
                f"inverted box ({self.xmin},{self.ymin},{self.xmax},{self.ymax})")


@dataclass(frozen=True)
class ImageAnnotation:
    """All ground-truth boxes of one image."""

    image_id: str
    width: int
    height: int
    boxes: tuple[GroundTruthBox, ...] = ()

    def __post_init__(self):
        for b in self.boxes:
            if b.xmin < 0 or b.ymin < 0 or b.xmax > self.width or b.ymax > self.height:
                raise InvariantError(
                    f"box {b} outside image {self.image_id} "
                    f"({self.width}x{self.height})")

    def class_names(self) -> set[str]:
        return {b.class_name for b in self.boxes}


@dataclass
class DatasetIndex:
    """A set of annotated images plus the ordered class vocabulary."""

    images: dict[str, ImageAnnotation] = field(default_factory=dict)
    class_list: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.class_list)) != len(self.class_list):
            raise InvariantError("duplicate entries in class list")
        known = set(self.class_list)
        for ann in self.images.values():
            missing = ann.class_names() - known
            if missing:
                raise InvariantError(
                    f"image {ann.image_id} uses classes {sorted(missing)} "
                    "not in the class list")

    def __len__(self) -> int:
        return len(self.images)

    def image_ids(self) -> list[str]:
        return list(self.images.keys())


@dataclass(frozen=True)
class DetectionRecord:
    """Detections one checkpoint produced for one image."""

    checkpoint_id: str
    image_id: str
    detections: tuple[Detection, ...]


@dataclass
class DetectionDump:
    """A parsed detection dump: class header plus keyed records."""

    classes: list[str]
    records: dict[tuple[str, str], DetectionRecord] = field(default_factory=dict)

    def checkpoints(self) -> list[str]:
        seen: dict[str, None] = {}
        for cp, _ in self.records:
            seen.setdefault(cp)
        return list(seen)


def _require(parent: ET.Element, tag: str) -> ET.Element:
    el = parent.find(tag)
    if el is None:
        raise SchemaError(tag)
    return el


def _int_text(parent: ET.Element, tag: str) -> int:
    el = _require(parent, tag)
    try:
        return int(float(el.text))
    except (TypeError, ValueError):
        raise SchemaError(f"{tag} is not a number: {el.text!r}") from None


def parse_voc_annotation(xml_text: str, class_policy: str = "strict",
                         class_list: list[str] | None = None) -> ImageAnnotation:
    """Parse one VOC XML document into an :class:`ImageAnnotation`.

    Under ``strict`` policy, object names must already appear in
    ``class_list``; under ``register_new`` unseen names are appended to it
    (the list is mutated in place).

    Raises :class:`ParseError` for malformed XML (with line info),
    :class:`SchemaError` for missing elements, and :class:`InvariantError`
    for inverted or out-of-bounds boxes.
    """
    if class_policy not in ("strict", "register_new"):
        raise ValueError(f"unknown class policy {class_policy!r}")
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed XML at line {line}, column {col}: {exc}") from exc
    if root.tag != "annotation":
        raise SchemaError(f"expected root 'annotation', got {root.tag!r}")

    filename = _require(root, "filename").text or ""
    image_id = Path(filename).stem
    if not image_id:
        raise SchemaError("filename")
    size = _require(root, "size")
    width = _int_text(size, "width")
    height = _int_text(size, "height")

    boxes = []
    for obj in root.findall("object"):
        name_el = _require(obj, "name")
        name = (name_el.text or "").strip()
        if not name:
            raise SchemaError("name")
        if class_list is not None:
            if name not in class_list:
                if class_policy == "strict":
                    raise UnknownClassError(name)
                class_list.append(name)
        diff_el = obj.find("difficult")
        difficult = diff_el is not None and (diff_el.text or "").strip() == "1"
        bndbox = obj.find("bndbox")
        if bndbox is None:
            raise SchemaError("bndbox")
        boxes.append(GroundTruthBox(
            class_name=name,
            xmin=_int_text(bndbox, "xmin"),
            ymin=_int_text(bndbox, "ymin"),
            xmax=_int_text(bndbox, "xmax"),
            ymax=_int_text(bndbox, "ymax"),
            difficult=difficult,
        ))
    return ImageAnnotation(image_id=image_id, width=width, height=height,
                           boxes=tuple(boxes))


def annotation_to_xml(ann: ImageAnnotation) -> str:
    """Serialize an annotation back to VOC XML (inverse of the parser)."""
    root = ET.Element("annotation")
    ET.SubElement(root, "filename").text = f"{ann.image_id}.jpg"
    size = ET.SubElement(root, "size")
    ET.SubElement(size, "width").text = str(ann.width)
    ET.SubElement(size, "height").text = str(ann.height)
    ET.SubElement(size, "depth").text = "3"
    for box in ann.boxes:
        obj = ET.SubElement(root, "object")
        ET.SubElement(obj, "name").text = box.class_name
        ET.SubElement(obj, "difficult").text = "1" if box.difficult else "0"
        bnd = ET.SubElement(obj, "bndbox")
        ET.SubElement(bnd, "xmin").text = str(box.xmin)
        ET.SubElement(bnd, "ymin").text = str(box.ymin)
        ET.SubElement(bnd, "xmax").text = str(box.xmax)
        ET.SubElement(bnd, "ymax").text = str(box.ymax)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode")


def annotation_to_json(ann: ImageAnnotation) -> dict:
    """JSON form of an annotation (snapshots, service payloads)."""
    return {
        "image_id": ann.image_id,
        "width": ann.width,
        "height": ann.height,
        "boxes": [[b.class_name, b.xmin, b.ymin, b.xmax, b.ymax, b.difficult]
                  for b in ann.boxes],
    }


def annotation_from_json(obj: dict) -> ImageAnnotation:
    return ImageAnnotation(
        image_id=str(obj["image_id"]),
        width=int(obj["width"]),
        height=int(obj["height"]),
        boxes=tuple(GroundTruthBox(str(c), int(x1), int(y1), int(x2), int(y2),
                                   bool(d))
                    for c, x1, y1, x2, y2, d in obj["boxes"]),
    )


def load_voc_directory(directory: str | Path, class_policy: str = "register_new",
                       class_list: list[str] | None = None) -> DatasetIndex:
    """Load every ``*.xml`` annotation under ``directory`` into an index."""
    directory = Path(directory)
    classes = list(class_list) if class_list is not None else []
    images: dict[str, ImageAnnotation] = {}
    for path in sorted(directory.glob("*.xml")):
        try:
            ann = parse_voc_annotation(path.read_text(), class_policy, classes)
        except (ParseError, SchemaError, InvariantError, UnknownClassError) as exc:
            raise type(exc)(f"{path.name}: {exc}") from exc
        if ann.image_id in images:
            raise DuplicateRecordError(f"duplicate image id {ann.image_id!r}")
        images[ann.image_id] = ann
    return DatasetIndex(images=images, class_list=classes)


def _detection_from_json(obj: dict, num_classes: int) -> Detection:
    scores = obj.get("scores")
    if scores is None or len(scores) != num_classes:
        raise SchemaError(
            f"scores vector of length {len(scores) if scores else 0}, "
            f"expected {num_classes}")
    box = obj.get("box")
    if box is None or len(box) != 4:
        raise SchemaError("box")
    return Detection(
        box=tuple(float(v) for v in box),
        confidence=float(obj.get("conf", 0.0)),
        dist=ClassDistribution(tuple(float(s) for s in scores)),
        unknown=bool(obj.get("unknown", False)),
    )


def _detection_to_json(det: Detection) -> dict:
    return {
        "box": list(det.box),
        "conf": det.confidence,
        "scores": list(det.dist.scores),
        "unknown": det.unknown,
    }


def load_detection_dump(stream: TextIO | Iterable[str]) -> DetectionDump:
    """Read a line-delimited detection dump.

    Line 1 is the header ``{"classes": [...]}``; every following line holds
    one record ``{"checkpoint": ..., "image": ..., "detections": [...]}``.
    Duplicate (checkpoint, image) keys are rejected.
    """
    lines = iter(stream)
    try:
        header_line = next(lines)
    except StopIteration:
        return DetectionDump(classes=[])
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"header line: {exc}") from exc
    if not isinstance(header, dict) or "classes" not in header:
        raise SchemaError("classes")
    classes = list(header["classes"])
    dump = DetectionDump(classes=classes)

    for lineno, line in enumerate(lines, start=2):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        for key in ("checkpoint", "image", "detections"):
            if key not in obj:
                raise SchemaError(key)
        record = DetectionRecord(
            checkpoint_id=str(obj["checkpoint"]),
            image_id=str(obj["image"]),
            detections=tuple(_detection_from_json(d, len(classes))
                             for d in obj["detections"]),
        )
        key = (record.checkpoint_id, record.image_id)
        if key in dump.records:
            raise DuplicateRecordError(f"duplicate record for {key}")
        dump.records[key] = record
    return dump


def write_detection_dump(dump: DetectionDump, stream: TextIO) -> None:
    """Inverse of :func:`load_detection_dump` (used by dump-producing tools)."""
    stream.write(json.dumps({"classes": dump.classes}) + "\n")
    for record in dump.records.values():
        stream.write(json.dumps({
            "checkpoint": record.checkpoint_id,
            "image": record.image_id,
            "detections": [_detection_to_json(d) for d in record.detections],
        }) + "\n")


def split_by_classes(dataset: DatasetIndex, new_classes: set[str] | Iterable[str]
                     ) -> tuple[DatasetIndex, DatasetIndex, list[str]]:
    """Split a dataset into known (part A) and new (part B) by class.

    Part B gets the images whose boxes are all in ``new_classes``; part A
    those with none; images mixing both are dropped.  Images without any
    boxes carry no new-class evidence and stay in part A.
    """
    new_classes = set(new_classes)
    unknown = new_classes - set(dataset.class_list)
    if unknown:
        raise UnknownClassError(f"not in dataset class list: {sorted(unknown)}")

    part_a: dict[str, ImageAnnotation] = {}
    part_b: dict[str, ImageAnnotation] = {}
    dropped: list[str] = []
    for image_id, ann in dataset.images.items():
        present = ann.class_names()
        if not present or not (present & new_classes):
            part_a[image_id] = ann
        elif present <= new_classes:
            part_b[image_id] = ann
        else:
            dropped.append(image_id)

    a_classes = [c for c in dataset.class_list if c not in new_classes]
    b_classes = [c for c in dataset.class_list if c in new_classes]
    return (DatasetIndex(part_a, a_classes),
            DatasetIndex(part_b, b_classes),
            dropped)
