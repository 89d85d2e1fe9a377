"""Axis-aligned boxes, the strict overlap test, and isolation detection."""

from __future__ import annotations

import numpy as np

from . import kernels


class BBox:
    """Axis-aligned box with top-left ``(x1, y1)`` and bottom-right ``(x2, y2)``.

    Width and height are stored alongside the corners. COCO supplies
    ``[x, y, w, h]`` and ``(x + w) - x`` is not always ``w`` in floating
    point, so keeping the given size avoids drift in area and aspect ratio.
    """

    __slots__ = ("x1", "y1", "x2", "y2", "width", "height")

    def __init__(self, x1, y1, x2, y2):
        if not (x1 < x2 and y1 < y2):
            raise ValueError(f"degenerate box ({x1}, {y1}, {x2}, {y2})")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "y2", y2)
        object.__setattr__(self, "width", x2 - x1)
        object.__setattr__(self, "height", y2 - y1)

    @classmethod
    def from_xywh(cls, x, y, w, h) -> "BBox":
        if not (w > 0 and h > 0):
            raise ValueError(f"non-positive box size {w}x{h}")
        box = cls.__new__(cls)
        for name, value in zip(cls.__slots__, (x, y, x + w, y + h, w, h)):
            object.__setattr__(box, name, value)
        return box

    def __setattr__(self, name, value):
        raise AttributeError("BBox is immutable")

    def __eq__(self, other):
        if not isinstance(other, BBox):
            return NotImplemented
        return self.as_tuple() == other.as_tuple() and (
            self.width, self.height) == (other.width, other.height)

    def __hash__(self):
        return hash((self.as_tuple(), self.width, self.height))

    def __repr__(self):
        return f"BBox({self.x1!r}, {self.y1!r}, {self.x2!r}, {self.y2!r})"

    def __reduce__(self):
        return (BBox.from_xywh, self.to_xywh())

    def as_tuple(self):
        return (self.x1, self.y1, self.x2, self.y2)

    def to_xywh(self):
        return (self.x1, self.y1, self.width, self.height)

    @property
    def area(self):
        return self.width * self.height

    @property
    def aspect_ratio(self):
        return self.width / self.height


def overlaps(a: BBox, b: BBox) -> bool:
    """True iff the boxes share interior area; touching edges do not count."""
    return a.x1 < b.x2 and a.x2 > b.x1 and a.y1 < b.y2 and a.y2 > b.y1


def find_isolated(instances):
    """Non-crowd instances whose box overlaps no other box of the same image.

    Crowd boxes are never returned but still block their neighbours.
    """
    instances = list(instances)
    if not instances:
        return []
    image_ids = {inst.image_id for inst in instances}
    if len(image_ids) > 1:
        raise ValueError(f"instances span several images: {sorted(image_ids)}")
    flags = isolated_flags_by_group([[inst.bbox for inst in instances]])
    return [inst for inst, ok in zip(instances, flags) if ok and not inst.is_crowd]


def isolated_flags_by_group(groups) -> np.ndarray:
    """Isolation flags for several independent groups of boxes, flattened."""
    sizes = [len(g) for g in groups]
    starts = np.zeros(len(sizes) + 1, dtype=np.int64)
    np.cumsum(sizes, out=starts[1:])
    boxes = np.array(
        [b.as_tuple() for g in groups for b in g], dtype=np.float64
    ).reshape(-1, 4)
    return kernels.isolated_flags(boxes, starts).astype(bool)
