"""Candidate filtering (aspect ratio, then scale, then category) and seeded selection."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .coco_io import IntegrityError

CATEGORY_MODES = ("same_category", "same_supercategory", "any")
MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class FilterConfig:
    ratio_tolerance: float = 0.20
    scale_tolerance: float = 0.20
    category_mode: str = "same_category"
    exclude_same_image: bool = True
    seed: int = 0
    # ablation switches; the category filter is switched off with category_mode="any"
    use_ratio_filter: bool = True
    use_scale_filter: bool = True

    def __post_init__(self):
        for name in ("ratio_tolerance", "scale_tolerance"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.category_mode not in CATEGORY_MODES:
            raise ValueError(
                f"category_mode must be one of {CATEGORY_MODES}, got {self.category_mode!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def mix64(x: int) -> int:
    """splitmix64 finaliser: a bijective avalanche on 64-bit integers."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def selection_index(seed: int, instance_id: int, n: int) -> int:
    return mix64((seed ^ instance_id) & MASK64) % n


class NoCandidateError(LookupError):
    pass


def _check_slot(slot, db):
    if slot.category_id not in db.supercategory_of:
        raise IntegrityError(f"slot {slot.instance_id} has unknown category {slot.category_id}")
    if slot not in db:
        raise ValueError(f"slot {slot.instance_id} is not in the database")


def candidate_mask(slot, db, cfg: FilterConfig) -> np.ndarray:
    col = db.columns
    mask = col["instance_id"] != slot.instance_id
    if cfg.use_ratio_filter:
        lo, hi = kernels.band(slot.aspect_ratio, cfg.ratio_tolerance)
        mask &= (col["aspect_ratio"] >= lo) & (col["aspect_ratio"] <= hi)
    if cfg.use_scale_filter:
        lo, hi = kernels.band(slot.area, cfg.scale_tolerance)
        mask &= (col["area"] >= lo) & (col["area"] <= hi)
    if cfg.category_mode == "same_category":
        mask &= col["category_id"] == slot.category_id
    elif cfg.category_mode == "same_supercategory":
        mask &= col["supercategory"] == col["supercategory"][db.position[slot.instance_id]]
    if cfg.exclude_same_image:
        mask &= col["image_id"] != slot.image_id
    return mask


def filter_candidates(slot, db, cfg: FilterConfig, categories=None):
    """Candidates for ``slot`` that pass every enabled filter, in database order.

    Aspect ratio and area must fall inside the inclusive bands
    ``slot_value * (1 -/+ tolerance)``.
    """
    if categories is not None and slot.category_id not in {c.id for c in categories}:
        raise IntegrityError(f"slot {slot.instance_id} has unknown category {slot.category_id}")
    _check_slot(slot, db)
    return [db.slots[i] for i in np.flatnonzero(candidate_mask(slot, db, cfg))]


def select_candidate(slot, filtered, seed: int):
    """Pick ``filtered[mix64(seed ^ slot.instance_id) % len(filtered)]``."""
    if not filtered:
        raise NoCandidateError(f"slot {slot.instance_id} has no candidates")
    return filtered[selection_index(seed, slot.instance_id, len(filtered))]


@dataclass(frozen=True)
class AugmentationPlan:
    assignments: tuple
    config: FilterConfig
    skipped: tuple = ()
    epoch: int = 1
    targeted: int = field(default=0)

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "config": self.config.to_dict(),
            "targeted_slots": self.targeted,
            "assignments": [
                {"slot": s.instance_id, "candidate": c.instance_id,
                 "slot_image": s.image_id, "candidate_image": c.image_id}
                for s, c in self.assignments
            ],
            "skipped": [{"slot": sid, "reason": reason} for sid, reason in self.skipped],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict, db) -> "AugmentationPlan":
        cfg = FilterConfig(**d["config"])
        try:
            pairs = tuple((db.by_instance[a["slot"]], db.by_instance[a["candidate"]])
                          for a in d["assignments"])
        except KeyError as exc:
            raise ValueError(f"plan references slot {exc} missing from the database") from exc
        skipped = tuple((s["slot"], s["reason"]) for s in d.get("skipped", []))
        return cls(pairs, cfg, skipped, d.get("epoch", 1), d.get("targeted_slots", len(pairs)))


def build_plan(db, target: Optional[Callable] = None, cfg: FilterConfig = FilterConfig(),
               jobs: int = 1) -> AugmentationPlan:
    """One substitution epoch: every targeted slot gets at most one candidate.

    ``target`` is a predicate over slot records (``None`` targets all slots).
    Output order follows the database order whatever ``jobs`` is.
    """
    slots = [s for s in db.slots if target is None or target(s)]

    def choose(slot):
        filtered = filter_candidates(slot, db, cfg)
        return select_candidate(slot, filtered, cfg.seed) if filtered else None

    if jobs > 1 and len(slots) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            picks = list(pool.map(choose, slots))
    else:
        picks = [choose(s) for s in slots]

    assignments, skipped = [], []
    for slot, cand in zip(slots, picks):
        if cand is None:
            skipped.append((slot.instance_id, "no_candidates"))
        else:
            assignments.append((slot, cand))
    return AugmentationPlan(tuple(assignments), cfg, tuple(skipped), 1, len(slots))


def _group_key(db, cfg):
    col = db.columns
    if cfg.category_mode == "same_category":
        return col["category_id"]
    if cfg.category_mode == "same_supercategory":
        return col["supercategory"]
    return np.zeros(len(db), dtype=np.int64)


def count_valid_pairs(db, cfg: FilterConfig = FilterConfig()) -> int:
    """Number of ordered (slot, candidate) pairs passing all filters."""
    if len(db) == 0:
        return 0
    col = db.columns
    group = _group_key(db, cfg)
    order = np.lexsort((col["area"], group))
    return kernels.count_pairs(
        group[order], col["area"][order], col["aspect_ratio"][order], col["image_id"][order],
        cfg.ratio_tolerance, cfg.scale_tolerance,
        cfg.use_ratio_filter, cfg.use_scale_filter, cfg.exclude_same_image,
    )
