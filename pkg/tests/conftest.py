import pytest

from boxscout.ingest import DatasetIndex, GroundTruthBox, ImageAnnotation

VOC_XML_COW = """\
<annotation>
  <filename>2008_000001.jpg</filename>
  <size><width>500</width><height>375</height><depth>3</depth></size>
  <object>
    <name>cow</name>
    <difficult>0</difficult>
    <bndbox><xmin>48</xmin><ymin>240</ymin><xmax>195</xmax><ymax>371</ymax></bndbox>
  </object>
</annotation>
"""

VOC_XML_EMPTY = """\
<annotation>
  <filename>2008_000002.jpg</filename>
  <size><width>500</width><height>375</height></size>
</annotation>
"""

VOC_XML_NO_BNDBOX = """\
<annotation>
  <filename>2008_000003.jpg</filename>
  <size><width>500</width><height>375</height></size>
  <object><name>cow</name></object>
</annotation>
"""


def box(name, x1, y1, x2, y2, difficult=False):
    return GroundTruthBox(name, x1, y1, x2, y2, difficult)


def annotation(image_id, boxes, width=500, height=375):
    return ImageAnnotation(image_id, width, height, tuple(boxes))


@pytest.fixture
def cow_car_dataset():
    """Three images: cow only, car only, cow+car (the split fixture)."""
    images = {
        "img1": annotation("img1", [box("cow", 10, 10, 100, 100)]),
        "img2": annotation("img2", [box("car", 20, 20, 120, 120)]),
        "img3": annotation("img3", [box("cow", 10, 10, 100, 100),
                                    box("car", 200, 200, 300, 300)]),
    }
    return DatasetIndex(images=images, class_list=["cow", "car"])


@pytest.fixture(scope="session")
def rare_fixture():
    from boxscout.synthdata import make_rare_class_fixture

    return make_rare_class_fixture(seed=7)


@pytest.fixture(scope="session")
def rare_fixture_dirs(rare_fixture, tmp_path_factory):
    from boxscout.synthdata import write_voc_directory

    root = tmp_path_factory.mktemp("rare-fixture")
    write_voc_directory(rare_fixture["pool"], root / "pool")
    write_voc_directory(rare_fixture["val"], root / "val")
    return {"root": root, "pool": root / "pool", "val": root / "val"}


def rare_fixture_config(dirs, fixture, **overrides):
    doc = {
        "pool_annotations": str(dirs["pool"]),
        "val_annotations": str(dirs["val"]),
        "new_classes": fixture["classes"],
        "methods": ["sum+w"],
        "seeds": [1],
        "batch_size": 10,
        "eval_every": 1,
        "max_batches": 12,
        "include_unknown": False,
        "detector": {"type": "synthetic", "confusions": fixture["confusions"]},
        "schedule": {"lambda": 0.5, "iterations": 16, "minibatch_size": 8},
        "output_dir": "unset",
    }
    doc.update(overrides)
    return doc
