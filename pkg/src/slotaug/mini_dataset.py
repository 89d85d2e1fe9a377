"""Greedy construction of a small, category-complete, roughly balanced dataset.

Categories are visited rarest first. Each step moves every remaining image
that contains the visited category (with all of its annotations) into the
selection and records balance and capacity metrics for the cumulative result.
The caller picks the step to keep.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import asdict, dataclass, fields

from .matcher import FilterConfig, count_valid_pairs


@dataclass(frozen=True)
class StepRecord:
    step_index: int
    category_added: int
    cumulative_images: int
    cumulative_instances: int
    slot_amount: int
    avg_slots_per_image: float
    instance_std: float
    all_categories_included: bool
    capacity: int


@dataclass
class MiniDatasetResult:
    records: list
    candidates: list  # per-step increments, each a Dataset
    source: object = None
    chosen_step: int | None = None


def category_order(dataset):
    """Category ids by ascending instance count, ties by ascending id."""
    counts = Counter(a.category_id for a in dataset.instances)
    return sorted((c.id for c in dataset.categories), key=lambda cid: (counts[cid], cid))


def population_std(values) -> float:
    values = list(values)
    if not values:
        return 0.0
    mean = math.fsum(values) / len(values)
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / len(values))


def build_mini_dataset(source, db, cfg: FilterConfig = FilterConfig()) -> MiniDatasetResult:
    images_with = {}
    for a in source.instances:
        images_with.setdefault(a.category_id, set()).add(a.image_id)
    all_cats = [c.id for c in source.categories]
    remaining = {im.id for im in source.images}

    selected: set = set()
    cat_counts = Counter()
    n_instances = 0
    records, increments = [], []
    for step, cid in enumerate(category_order(source)):
        taken = images_with.get(cid, set()) & remaining
        remaining -= taken
        selected |= taken
        increment = source.subset(taken)
        increments.append(increment)
        for a in increment.instances:
            cat_counts[a.category_id] += 1
        n_instances += len(increment.instances)

        sub_db = db.restrict(selected)
        n_images = len(selected)
        records.append(StepRecord(
            step_index=step,
            category_added=cid,
            cumulative_images=n_images,
            cumulative_instances=n_instances,
            slot_amount=len(sub_db),
            avg_slots_per_image=len(sub_db) / n_images if n_images else 0.0,
            instance_std=population_std(cat_counts[c] for c in all_cats),
            all_categories_included=all(cat_counts[c] > 0 for c in all_cats),
            capacity=count_valid_pairs(sub_db, cfg),
        ))
    return MiniDatasetResult(records, increments, source)


def select_step(result: MiniDatasetResult, step: int):
    """Cumulative dataset through ``step``, with ids as in the source."""
    if not 0 <= step < len(result.records):
        raise ValueError(f"step {step} out of range 0..{len(result.records) - 1}")
    ids = set()
    for inc in result.candidates[: step + 1]:
        ids.update(im.id for im in inc.images)
    result.chosen_step = step
    return result.source.subset(ids)


def write_records_csv(records, path) -> None:
    names = [f.name for f in fields(StepRecord)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=names, lineterminator="\n")
        writer.writeheader()
        for r in records:
            row = asdict(r)
            row["avg_slots_per_image"] = f"{r.avg_slots_per_image:.6f}"
            row["instance_std"] = f"{r.instance_std:.6f}"
            writer.writerow(row)
