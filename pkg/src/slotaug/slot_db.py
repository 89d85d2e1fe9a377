"""The slot database: every isolated, non-crowd foreground with its scale attributes.

The same records act as slots (hosts) and as candidates (donors); the matcher
decides which role a record plays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .geometry import BBox, isolated_flags_by_group

SIDECAR_FIELDS = ("instance_id", "image_id", "category_id", "bbox",
                  "width", "height", "area", "aspect_ratio")


@dataclass(frozen=True)
class SlotRecord:
    instance_id: int
    image_id: int
    category_id: int
    bbox: BBox
    width: float
    height: float
    area: float
    aspect_ratio: float

    @classmethod
    def from_instance(cls, inst) -> "SlotRecord":
        return cls.from_instance_fields(inst.id, inst.image_id, inst.category_id, inst.bbox)

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "image_id": self.image_id,
            "category_id": self.category_id,
            "bbox": list(self.bbox.as_tuple()),
            "width": self.width,
            "height": self.height,
            "area": self.area,
            "aspect_ratio": self.aspect_ratio,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SlotRecord":
        x1, y1, _, _ = d["bbox"]
        bbox = BBox.from_xywh(x1, y1, d["width"], d["height"])
        rec = cls.from_instance_fields(d["instance_id"], d["image_id"], d["category_id"], bbox)
        if (rec.area, rec.aspect_ratio) != (d["area"], d["aspect_ratio"]):
            raise ValueError(f"slot {d['instance_id']}: stored area/aspect ratio disagree with bbox")
        return rec

    @classmethod
    def from_instance_fields(cls, instance_id, image_id, category_id, bbox):
        return cls(instance_id, image_id, category_id, bbox, bbox.width, bbox.height,
                   bbox.width * bbox.height, bbox.width / bbox.height)


class SlotDatabase:
    """Immutable, ordered collection of slots with category and image indices.

    ``supercategory_of`` maps category id to supercategory name so queries and
    filters can work at either level.
    """

    def __init__(self, slots, supercategory_of: dict):
        self._slots = tuple(sorted(slots, key=lambda s: (s.image_id, s.instance_id)))
        self.supercategory_of = dict(supercategory_of)
        by_cat, by_img = {}, {}
        for s in self._slots:
            by_cat.setdefault(s.category_id, []).append(s)
            by_img.setdefault(s.image_id, []).append(s)
        self.by_category = {k: tuple(v) for k, v in by_cat.items()}
        self.by_image = {k: tuple(v) for k, v in by_img.items()}
        self.by_instance = {s.instance_id: s for s in self._slots}
        self.position = {s.instance_id: i for i, s in enumerate(self._slots)}

    @property
    def slots(self):
        return self._slots

    def __len__(self):
        return len(self._slots)

    def __iter__(self):
        return iter(self._slots)

    def __contains__(self, slot):
        return self.by_instance.get(getattr(slot, "instance_id", None)) == slot

    def __eq__(self, other):
        if not isinstance(other, SlotDatabase):
            return NotImplemented
        return self._slots == other._slots and self.supercategory_of == other.supercategory_of

    @cached_property
    def columns(self) -> dict:
        """Column arrays in slot order, for vectorised filtering."""
        supers = sorted(set(self.supercategory_of.values()))
        super_idx = {name: i for i, name in enumerate(supers)}
        return {
            "instance_id": np.array([s.instance_id for s in self._slots], dtype=np.int64),
            "image_id": np.array([s.image_id for s in self._slots], dtype=np.int64),
            "category_id": np.array([s.category_id for s in self._slots], dtype=np.int64),
            "supercategory": np.array(
                [super_idx.get(self.supercategory_of.get(s.category_id), -1) for s in self._slots],
                dtype=np.int64),
            "area": np.array([s.area for s in self._slots], dtype=np.float64),
            "aspect_ratio": np.array([s.aspect_ratio for s in self._slots], dtype=np.float64),
        }

    def restrict(self, image_ids) -> "SlotDatabase":
        keep = set(image_ids)
        return SlotDatabase([s for s in self._slots if s.image_id in keep], self.supercategory_of)


def build_slot_database(dataset) -> SlotDatabase:
    groups = [dataset.instances_by_image[im.id] for im in dataset.images]
    flags = isolated_flags_by_group([[a.bbox for a in g] for g in groups])
    flat = [a for g in groups for a in g]
    slots = [SlotRecord.from_instance(a) for a, ok in zip(flat, flags) if ok and not a.is_crowd]
    return SlotDatabase(slots, {c.id: c.supercategory for c in dataset.categories})


def query(db: SlotDatabase, *, category_id=None, category_ids=None, supercategory=None,
          area=None, aspect_ratio=None, exclude_image_ids=()):
    """Slots matching every given constraint, in ``(image_id, instance_id)`` order.

    ``area`` and ``aspect_ratio`` are inclusive ``(min, max)`` ranges; either end
    may be ``None``.
    """
    cats = None
    if category_id is not None:
        cats = {category_id}
    if category_ids is not None:
        cats = set(category_ids) if cats is None else cats & set(category_ids)
    a_lo, a_hi = _range(area, "area")
    r_lo, r_hi = _range(aspect_ratio, "aspect_ratio")
    excluded = set(exclude_image_ids)
    out = []
    for s in db.slots:
        if cats is not None and s.category_id not in cats:
            continue
        if supercategory is not None and db.supercategory_of.get(s.category_id) != supercategory:
            continue
        if not (a_lo <= s.area <= a_hi and r_lo <= s.aspect_ratio <= r_hi):
            continue
        if s.image_id in excluded:
            continue
        out.append(s)
    return out


def _range(bounds, name):
    if bounds is None:
        return -np.inf, np.inf
    lo, hi = bounds
    lo = -np.inf if lo is None else lo
    hi = np.inf if hi is None else hi
    if lo > hi:
        raise ValueError(f"{name} range is inverted: min {lo} > max {hi}")
    return lo, hi


def write_slot_database(db: SlotDatabase, path) -> None:
    Path(path).write_text(json.dumps([s.to_dict() for s in db.slots]), encoding="utf-8")


def read_slot_database(path, categories) -> SlotDatabase:
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(records, list):
        raise ValueError(f"{path}: slot database must be a JSON array")
    return SlotDatabase([SlotRecord.from_dict(d) for d in records],
                        {c.id: c.supercategory for c in categories})
