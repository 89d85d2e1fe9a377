"""Per-category tallies and augmentation-run summaries."""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from decimal import ROUND_HALF_UP, Decimal

from .compositor import DEGENERATE, IO_FAILURE, NO_CANDIDATES

SKIP_REASONS = (NO_CANDIDATES, DEGENERATE, IO_FAILURE)


@dataclass(frozen=True)
class CategoryStats:
    category_id: int
    name: str
    image_count: int
    instance_count: int
    slot_count: int


@dataclass(frozen=True)
class AugmentationSummary:
    method_label: str
    original_images: int
    augmented_images: int
    # 0 when nothing was augmented, as in the published tables
    original_proportion: float
    # plain 100 * original / (original + augmented)
    formula_proportion: float


@dataclass
class RunReport:
    summary: AugmentationSummary
    targeted_slots: int
    substituted_slots: int
    skipped: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "summary": asdict(self.summary),
            "targeted_slots": self.targeted_slots,
            "substituted_slots": self.substituted_slots,
            "skipped": dict(self.skipped),
        }


def category_stats(dataset, db):
    """Image, instance and slot counts per category, most instances first."""
    instances = Counter(a.category_id for a in dataset.instances)
    images = Counter(c for c, _ in {(a.category_id, a.image_id) for a in dataset.instances})
    slots = Counter(s.category_id for s in db.slots)
    rows = [CategoryStats(c.id, c.name, images[c.id], instances[c.id], slots[c.id])
            for c in dataset.categories]
    rows.sort(key=lambda r: (-r.instance_count, r.category_id))
    return rows


def round_percent(value: Decimal) -> float:
    return float(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def proportion_of_original(original: int, augmented: int) -> float:
    """``100 * original / (original + augmented)`` to 2 decimals, half up; 0 for (0, 0)."""
    if original < 0 or augmented < 0:
        raise ValueError("image counts must be non-negative")
    if original == 0:
        if augmented > 0:
            raise ValueError("augmented images without any original images")
        return 0.0
    return round_percent(Decimal(100 * original) / Decimal(original + augmented))


def summarize(method_label: str, original: int, augmented: int) -> AugmentationSummary:
    formula = proportion_of_original(original, augmented)
    shown = formula if augmented else 0.0
    return AugmentationSummary(method_label, original, augmented, shown, formula)


def combined_summary(method_label: str, original: int, flipped: int, generated: int):
    """Flip plus slot substitution: augmented count is the sum of both outputs."""
    return summarize(method_label, original, flipped + generated)


def run_report(plan, execution, original_images: int, method_label: str = "slot") -> RunReport:
    """Summary row plus skipped-slot counts by reason."""
    skipped = Counter({reason: 0 for reason in SKIP_REASONS})
    skipped.update(reason for _, reason in plan.skipped)
    skipped.update(reason for _, reason in execution.skipped)
    substituted = sum(len(g.provenance) for g in execution.generated)
    summary = summarize(method_label, original_images, len(execution.generated))
    return RunReport(summary, plan.targeted, substituted, dict(skipped))


def format_table(rows, columns=None) -> str:
    """Aligned plain-text table of dataclass rows."""
    if columns is None:
        columns = [f.name for f in fields(rows[0])] if rows else []
    cells = [[str(getattr(r, c)) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(
            v.rjust(w) if v.replace(".", "", 1).isdigit() else v.ljust(w)
            for v, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


def write_rows_csv(rows, path) -> None:
    names = [f.name for f in fields(rows[0])] if rows else []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=names, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow(asdict(r))


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
