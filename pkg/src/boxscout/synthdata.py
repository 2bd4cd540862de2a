"""Synthetic dataset fixtures.

Generates annotated images (no pixels, just geometry) for end-to-end runs
with the synthetic detector: a pool with a deliberately rare class, a
validation set where that class is measurable, and a confusion map that
makes unlearned classes look ambiguous.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .ingest import DatasetIndex, GroundTruthBox, ImageAnnotation, annotation_to_xml

DEFAULT_CLASSES = ["car", "bus", "truck", "bicycle", "tram"]
DEFAULT_RARE_CLASS = "tram"


def ring_confusions(classes: list[str], k: int = 2) -> dict[str, list[str]]:
    """Each class is confusable with the next ``k`` classes, cyclically."""
    n = len(classes)
    return {c: [classes[(i + j) % n] for j in range(1, k + 1)]
            for i, c in enumerate(classes)}


def make_synthetic_dataset(n_images: int, classes: list[str], seed,
                           rare_class: str | None = None,
                           rare_fraction: float = 0.05,
                           boxes_per_image: tuple[int, int] = (1, 3),
                           image_size: tuple[int, int] = (256, 256),
                           id_prefix: str = "img") -> DatasetIndex:
    """Random annotated images; box classes drawn with a rare-class share.

    When ``rare_class`` is set, each box is that class with probability
    ``rare_fraction`` and uniform over the remaining classes otherwise, so
    the rare class holds roughly that share of all instances.
    """
    rng = np.random.default_rng(seed)
    width, height = image_size
    commons = [c for c in classes if c != rare_class]
    images: dict[str, ImageAnnotation] = {}
    for i in range(n_images):
        image_id = f"{id_prefix}{i:04d}"
        boxes = []
        for _ in range(int(rng.integers(boxes_per_image[0], boxes_per_image[1] + 1))):
            if rare_class is not None and rng.random() < rare_fraction:
                name = rare_class
            else:
                name = commons[int(rng.integers(len(commons)))]
            w = int(rng.integers(40, 121))
            h = int(rng.integers(40, 121))
            xmin = int(rng.integers(0, width - w))
            ymin = int(rng.integers(0, height - h))
            boxes.append(GroundTruthBox(name, xmin, ymin, xmin + w, ymin + h))
        images[image_id] = ImageAnnotation(image_id, width, height, tuple(boxes))
    return DatasetIndex(images=images, class_list=list(classes))


def make_rare_class_fixture(seed: int = 7, pool_images: int = 260,
                            val_images: int = 160) -> dict:
    """Pool + validation fixture with one rare class (~5% of pool instances).

    The validation set oversamples the rare class so its AP is measurable;
    the rare class gets a wider confusion set, so the detector's early
    mispredictions spread thin and flip to correct after a few absorbed
    boxes.
    """
    classes = list(DEFAULT_CLASSES)
    rare = DEFAULT_RARE_CLASS
    confusions = ring_confusions([c for c in classes if c != rare], k=2)
    confusions[rare] = [c for c in classes if c != rare][:3]
    pool = make_synthetic_dataset(pool_images, classes, (seed, 0),
                                  rare_class=rare, rare_fraction=0.05,
                                  id_prefix="pool")
    val = make_synthetic_dataset(val_images, classes, (seed, 1),
                                 rare_class=rare, rare_fraction=0.2,
                                 id_prefix="val")
    return {"classes": classes, "rare_class": rare, "confusions": confusions,
            "pool": pool, "val": val}


def write_voc_directory(dataset: DatasetIndex, directory: str | Path) -> None:
    """Write one VOC XML file per image into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for image_id, ann in dataset.images.items():
        (directory / f"{image_id}.xml").write_text(annotation_to_xml(ann))
