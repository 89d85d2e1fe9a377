"""COCO annotation parsing/serialisation and raster image I/O."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Union

import numpy as np
from PIL import Image

from .geometry import BBox

logger = logging.getLogger(__name__)

IMAGE_KEYS = ("id", "file_name", "width", "height")
ANNOTATION_KEYS = ("id", "image_id", "category_id", "bbox", "area", "iscrowd")
CATEGORY_KEYS = ("id", "name", "supercategory")


class DatasetError(ValueError):
    """Base class for annotation file problems."""


class ParseError(DatasetError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class IntegrityError(DatasetError):
    def __init__(self, message: str, annotation_id=None):
        super().__init__(message)
        self.annotation_id = annotation_id


class InvalidAnnotationError(DatasetError):
    def __init__(self, message: str, annotation_id=None):
        super().__init__(message)
        self.annotation_id = annotation_id


class ImageDimensionError(ValueError):
    def __init__(self, image_id: int, expected, actual):
        super().__init__(
            f"image {image_id}: annotation says {expected[0]}x{expected[1]}, "
            f"file is {actual[0]}x{actual[1]}"
        )
        self.image_id = image_id


@dataclass(frozen=True)
class ImageRecord:
    id: int
    file_name: str
    width: int
    height: int
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DatasetError(f"image {self.id} has non-positive size {self.width}x{self.height}")


@dataclass(frozen=True)
class CategoryRecord:
    id: int
    name: str
    supercategory: str = ""
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Instance:
    id: int
    image_id: int
    category_id: int
    bbox: BBox
    is_crowd: bool = False
    area: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.area <= 0:
            object.__setattr__(self, "area", self.bbox.area)


@dataclass(frozen=True)
class Dataset:
    """An immutable COCO dataset. Lookups are built lazily and cached."""

    images: tuple = ()
    instances: tuple = ()
    categories: tuple = ()
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("images", "instances", "categories"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @cached_property
    def image_by_id(self) -> dict:
        return {im.id: im for im in self.images}

    @cached_property
    def category_by_id(self) -> dict:
        return {c.id: c for c in self.categories}

    @cached_property
    def category_by_name(self) -> dict:
        return {c.name: c for c in self.categories}

    @cached_property
    def instances_by_image(self) -> dict:
        out = {im.id: [] for im in self.images}
        for inst in self.instances:
            out[inst.image_id].append(inst)
        return out

    def subset(self, image_ids: Iterable[int]) -> "Dataset":
        """Images in ``image_ids`` with all their annotations; order kept."""
        keep = set(image_ids)
        return Dataset(
            images=[im for im in self.images if im.id in keep],
            instances=[a for a in self.instances if a.image_id in keep],
            categories=self.categories,
            extra=self.extra,
        )

    def validate(self) -> None:
        _check_integrity(self.images, self.instances, self.categories)


def _check_integrity(images, instances, categories):
    image_ids = set()
    for im in images:
        if im.id in image_ids:
            raise IntegrityError(f"duplicate image id {im.id}")
        image_ids.add(im.id)
    cat_ids, names = set(), set()
    for c in categories:
        if c.id in cat_ids:
            raise IntegrityError(f"duplicate category id {c.id}")
        if c.name in names:
            raise IntegrityError(f"duplicate category name {c.name!r}")
        cat_ids.add(c.id)
        names.add(c.name)
    ann_ids = set()
    for a in instances:
        if a.id in ann_ids:
            raise IntegrityError(f"duplicate annotation id {a.id}", a.id)
        ann_ids.add(a.id)
        if a.image_id not in image_ids:
            raise IntegrityError(
                f"annotation {a.id} references missing image {a.image_id}", a.id)
        if a.category_id not in cat_ids:
            raise IntegrityError(
                f"annotation {a.id} references missing category {a.category_id}", a.id)


def _split(obj: dict, keys) -> dict:
    return {k: v for k, v in obj.items() if k not in keys}


def _num(v):
    # keep ints as ints so serialisation reproduces the source text
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError(f"expected a number, got {v!r}")
    return v


def parse_dataset(data: Union[bytes, str], on_invalid: str = "fail") -> Dataset:
    """Parse COCO JSON into a :class:`Dataset`.

    ``on_invalid`` controls annotations whose bbox has non-positive size or
    leaves the image: ``"fail"`` raises :class:`InvalidAnnotationError`,
    ``"skip"`` drops them with a warning.
    """
    if on_invalid not in ("fail", "skip"):
        raise ValueError(f"on_invalid must be 'fail' or 'skip', not {on_invalid!r}")
    raw = data if isinstance(data, bytes) else data.encode("utf-8")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"annotation file is not UTF-8: {exc.reason}", exc.start) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(f"malformed JSON: {exc.msg}", offset) from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", 0)
    for key in ("images", "annotations", "categories"):
        if not isinstance(doc.get(key), list):
            raise DatasetError(f"missing or non-list top-level {key!r}")

    try:
        images = [
            ImageRecord(
                id=im["id"], file_name=im.get("file_name", ""),
                width=im["width"], height=im["height"],
                extra=_split(im, IMAGE_KEYS),
            )
            for im in doc["images"]
        ]
        categories = [
            CategoryRecord(
                id=c["id"], name=c["name"], supercategory=c.get("supercategory", ""),
                extra=_split(c, CATEGORY_KEYS),
            )
            for c in doc["categories"]
        ]
    except KeyError as exc:
        raise DatasetError(f"record missing field {exc}") from exc
    image_by_id = {im.id: im for im in images}
    cat_ids = {c.id for c in categories}

    instances = []
    for a in doc["annotations"]:
        ann_id = a.get("id")
        try:
            image_id, category_id, box = a["image_id"], a["category_id"], a["bbox"]
        except KeyError as exc:
            raise DatasetError(f"annotation {ann_id} missing field {exc}") from exc
        if image_id not in image_by_id:
            raise IntegrityError(
                f"annotation {ann_id} references missing image {image_id}", ann_id)
        if category_id not in cat_ids:
            raise IntegrityError(
                f"annotation {ann_id} references missing category {category_id}", ann_id)
        problem = _bbox_problem(box, image_by_id[image_id])
        if problem is None and "area" in a and not a["area"] > 0:
            problem = f"non-positive area {a['area']}"
        if problem is not None:
            msg = f"annotation {ann_id}: {problem}"
            if on_invalid == "fail":
                raise InvalidAnnotationError(msg, ann_id)
            logger.warning("skipping %s", msg)
            continue
        instances.append(Instance(
            id=ann_id, image_id=image_id, category_id=category_id,
            bbox=BBox.from_xywh(*(_num(v) for v in box)),
            is_crowd=bool(a.get("iscrowd", 0)),
            area=a.get("area", 0.0),
            extra=_split(a, ANNOTATION_KEYS),
        ))

    extra = _split(doc, ("images", "annotations", "categories"))
    ds = Dataset(images, instances, categories, extra)
    ds.validate()
    return ds


def _bbox_problem(box, image: ImageRecord):
    if not isinstance(box, list) or len(box) != 4:
        return f"bbox must be [x, y, w, h], got {box!r}"
    try:
        x, y, w, h = (float(_num(v)) for v in box)
    except TypeError as exc:
        return str(exc)
    if not all(math.isfinite(v) for v in (x, y, w, h)):
        return f"non-finite bbox {box}"
    if w <= 0 or h <= 0:
        return f"non-positive bbox size {w}x{h}"
    if x < 0 or y < 0 or x + w > image.width or y + h > image.height:
        return f"bbox {box} outside image {image.id} ({image.width}x{image.height})"
    return None


def dataset_to_dict(dataset: Dataset) -> dict:
    def image(im):
        return {"id": im.id, "file_name": im.file_name, "width": im.width,
                "height": im.height, **im.extra}

    def ann(a):
        d = {"id": a.id, "image_id": a.image_id, "category_id": a.category_id,
             "bbox": list(a.bbox.to_xywh()), "area": a.area,
             "iscrowd": int(a.is_crowd)}
        d.update(a.extra)
        return d

    def cat(c):
        return {"id": c.id, "name": c.name, "supercategory": c.supercategory, **c.extra}

    out = dict(dataset.extra)
    out["images"] = [image(im) for im in dataset.images]
    out["annotations"] = [ann(a) for a in dataset.instances]
    out["categories"] = [cat(c) for c in dataset.categories]
    return out


def dumps_dataset(dataset: Dataset) -> str:
    return json.dumps(dataset_to_dict(dataset), ensure_ascii=False)


def write_dataset(dataset: Dataset, path) -> None:
    path = Path(path)
    path.write_text(dumps_dataset(dataset), encoding="utf-8")


def read_dataset(path, on_invalid: str = "fail") -> Dataset:
    return parse_dataset(Path(path).read_bytes(), on_invalid=on_invalid)


def merge_datasets(base: Dataset, delta: Dataset) -> Dataset:
    """Append ``delta``'s images and annotations to ``base``.

    Categories come from ``base``; ids must not collide.
    """
    merged = Dataset(
        images=base.images + delta.images,
        instances=base.instances + delta.instances,
        categories=base.categories,
        extra=base.extra,
    )
    merged.validate()
    return merged


def load_image(record: ImageRecord, root) -> np.ndarray:
    """Load ``root/record.file_name`` as an ``(h, w, 3)`` uint8 RGB array."""
    path = Path(root) / record.file_name
    try:
        with Image.open(path) as im:
            im.load()
            size = im.size
            arr = np.asarray(im.convert("RGB"))
    except FileNotFoundError as exc:
        raise FileNotFoundError(f"image file not found: {path}") from exc
    except OSError as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc
    if size != (record.width, record.height):
        raise ImageDimensionError(record.id, (record.width, record.height), size)
    return arr


def save_png(pixels: np.ndarray, path) -> None:
    Image.fromarray(pixels).save(path, format="PNG")
