"""Pixel work: paste resized donor crops into slots, and the horizontal flip baseline."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .coco_io import Dataset, ImageRecord, load_image, save_png
from .geometry import BBox

logger = logging.getLogger(__name__)

NO_CANDIDATES = "no_candidates"
DEGENERATE = "degenerate_rectangle"
IO_FAILURE = "io_failure"


class SubstitutionError(ValueError):
    pass


def round_half_up(v) -> int:
    return math.floor(v + 0.5)


def pixel_rect(bbox: BBox, width: int, height: int):
    """Integer ``(x0, y0, x1, y1)`` covering ``bbox``, half-open, clipped to the image."""
    x0 = min(max(round_half_up(bbox.x1), 0), width)
    y0 = min(max(round_half_up(bbox.y1), 0), height)
    x1 = min(max(round_half_up(bbox.x2), 0), width)
    y1 = min(max(round_half_up(bbox.y2), 0), height)
    return x0, y0, x1, y1


def substitute(source: np.ndarray, slot, donor_image: np.ndarray, candidate) -> np.ndarray:
    """Return a copy of ``source`` with the candidate's crop resized into the slot."""
    h, w = source.shape[:2]
    sx0, sy0, sx1, sy1 = pixel_rect(slot.bbox, w, h)
    if sx1 <= sx0 or sy1 <= sy0:
        raise SubstitutionError(f"slot {slot.instance_id} rounds to an empty rectangle")
    dh, dw = donor_image.shape[:2]
    cx0, cy0, cx1, cy1 = pixel_rect(candidate.bbox, dw, dh)
    if cx1 <= cx0 or cy1 <= cy0:
        raise SubstitutionError(f"candidate {candidate.instance_id} rounds to an empty rectangle")
    crop = donor_image[cy0:cy1, cx0:cx1]
    if crop.shape[:2] == (sy1 - sy0, sx1 - sx0):
        patch = crop
    else:
        patch = kernels.bilinear_resize(crop, sy1 - sy0, sx1 - sx0)
    out = source.copy()
    out[sy0:sy1, sx0:sx1] = patch
    return out


def flip_horizontal(image: np.ndarray, annotations):
    """Mirror pixels left-right and remap boxes to ``(W - x2, y1, W - x1, y2)``."""
    W = image.shape[1]
    flipped = np.ascontiguousarray(image[:, ::-1])
    anns = [
        replace(a, bbox=BBox.from_xywh(W - a.bbox.x2, a.bbox.y1, a.bbox.width, a.bbox.height))
        for a in annotations
    ]
    return flipped, anns


@dataclass(frozen=True)
class GeneratedImage:
    source_image_id: int
    new_image_id: int
    file_name: str
    pixels: np.ndarray
    annotations: tuple
    provenance: tuple


@dataclass
class ExecutionResult:
    delta: Dataset
    generated: list
    skipped: list  # (slot instance id, reason)


def generated_name(file_name: str, pairs) -> str:
    stem = Path(file_name).stem
    tags = "".join(f"_slot{s}_cand{c}" for s, c in pairs)
    return f"{stem}{tags}.png"


def _render(task, dataset, image_root):
    """Compose one output image; returns (pixels or None, done pairs, skips)."""
    source_rec, pairs = task
    try:
        pixels = load_image(source_rec, image_root)
    except (OSError, ValueError) as exc:
        logger.warning("image %s: %s", source_rec.id, exc)
        return None, [], [(slot.instance_id, IO_FAILURE) for slot, _ in pairs]
    done, skips, donors = [], [], {}
    for slot, cand in pairs:
        try:
            if cand.image_id not in donors:
                donors[cand.image_id] = load_image(dataset.image_by_id[cand.image_id], image_root)
            pixels = substitute(pixels, slot, donors[cand.image_id], cand)
        except SubstitutionError as exc:
            logger.warning("%s", exc)
            skips.append((slot.instance_id, DEGENERATE))
            continue
        except (OSError, ValueError) as exc:
            logger.warning("donor for slot %s: %s", slot.instance_id, exc)
            skips.append((slot.instance_id, IO_FAILURE))
            continue
        done.append((slot, cand))
    return (pixels if done else None), done, skips


def execute_plan(plan, dataset: Dataset, image_root, out_root, *, jobs: int = 1,
                 emit_per_slot: bool = False) -> ExecutionResult:
    """Render every planned substitution and write the outputs as PNG under ``out_root``.

    By default each source image yields one output with all its planned slots
    filled; ``emit_per_slot`` yields one output per assignment instead. New
    image and annotation ids continue from the dataset maxima in source order,
    so the result does not depend on ``jobs``.
    """
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)

    grouped = {}
    for slot, cand in plan.assignments:
        grouped.setdefault(slot.image_id, []).append((slot, cand))
    order = [im.id for im in dataset.images if im.id in grouped]
    if emit_per_slot:
        tasks = [(dataset.image_by_id[i], [p]) for i in order for p in grouped[i]]
    else:
        tasks = [(dataset.image_by_id[i], grouped[i]) for i in order]

    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rendered = list(pool.map(lambda t: _render(t, dataset, image_root), tasks))
    else:
        rendered = [_render(t, dataset, image_root) for t in tasks]

    next_image = max((im.id for im in dataset.images), default=0) + 1
    next_ann = max((a.id for a in dataset.instances), default=0) + 1
    images, instances, generated, skipped = [], [], [], []
    for (src, _), (pixels, done, skips) in zip(tasks, rendered):
        skipped.extend(skips)
        if pixels is None:
            continue
        swap = {slot.instance_id: cand for slot, cand in done}
        name = generated_name(src.file_name, [(s.instance_id, c.instance_id) for s, c in done])
        rec = ImageRecord(next_image, name, src.width, src.height)
        anns = []
        for a in dataset.instances_by_image[src.id]:
            if a.id in swap:
                extra = {k: v for k, v in a.extra.items() if k != "segmentation"}
                a = replace(a, category_id=swap[a.id].category_id, area=a.bbox.area, extra=extra)
            anns.append(replace(a, id=next_ann, image_id=rec.id))
            next_ann += 1
        save_png(pixels, out_root / name)
        images.append(rec)
        instances.extend(anns)
        generated.append(GeneratedImage(src.id, rec.id, name, pixels, tuple(anns),
                                        tuple((s.instance_id, c.instance_id) for s, c in done)))
        next_image += 1

    delta = Dataset(images, instances, dataset.categories)
    return ExecutionResult(delta, generated, skipped)


def flip_dataset(dataset: Dataset, image_root, out_root, *, image_ids=None, jobs: int = 1):
    """Write a flipped copy of each selected image; returns (delta, failed image ids)."""
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    records = [im for im in dataset.images if image_ids is None or im.id in image_ids]

    def work(rec):
        try:
            pixels = load_image(rec, image_root)
        except (OSError, ValueError) as exc:
            logger.warning("image %s: %s", rec.id, exc)
            return None
        return flip_horizontal(pixels, dataset.instances_by_image[rec.id])

    if jobs > 1 and len(records) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, records))
    else:
        results = [work(r) for r in records]

    next_image = max((im.id for im in dataset.images), default=0) + 1
    next_ann = max((a.id for a in dataset.instances), default=0) + 1
    images, instances, failed = [], [], []
    for rec, res in zip(records, results):
        if res is None:
            failed.append(rec.id)
            continue
        pixels, anns = res
        name = f"{Path(rec.file_name).stem}_flip.png"
        save_png(pixels, out_root / name)
        images.append(ImageRecord(next_image, name, rec.width, rec.height))
        for a in anns:
            instances.append(replace(a, id=next_ann, image_id=next_image))
            next_ann += 1
        next_image += 1
    return Dataset(images, instances, dataset.categories), failed
