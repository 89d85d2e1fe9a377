"""Command line entry point: ``slotaug {init,stats,plan,augment,minify,flip}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import kernels
from .coco_io import DatasetError, merge_datasets, read_dataset, write_dataset
from .compositor import execute_plan, flip_dataset
from .matcher import CATEGORY_MODES, AugmentationPlan, FilterConfig, build_plan
from .mini_dataset import build_mini_dataset, select_step, write_records_csv
from .slot_db import build_slot_database, read_slot_database, write_slot_database
from .stats_report import (category_stats, format_table, run_report, summarize,
                           write_json, write_rows_csv)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("slotaug")


class UsageError(Exception):
    pass


def _add_common(p):
    p.add_argument("--config", help="TOML file of flag defaults; explicit flags win")
    p.add_argument("--annotations", help="COCO annotation JSON")
    p.add_argument("--on-invalid", choices=("fail", "skip"), default="fail",
                   help="what to do with annotations whose bbox is empty or outside the image")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_slot_db(p):
    p.add_argument("--slot-db", help="slot database sidecar JSON (built on the fly if absent)")


def _add_filters(p):
    p.add_argument("--ratio-tol", type=float, default=0.20)
    p.add_argument("--scale-tol", type=float, default=0.20)
    p.add_argument("--category-mode", choices=CATEGORY_MODES, default="same_category")
    p.add_argument("--allow-same-image", action="store_true",
                   help="let a slot take a candidate from its own image")
    p.add_argument("--no-ratio-filter", action="store_true")
    p.add_argument("--no-scale-filter", action="store_true")
    p.add_argument("--seed", type=int)


def _add_target(p):
    p.add_argument("--category", action="append", default=[],
                   help="target category name (repeatable, or comma separated)")
    p.add_argument("--supercategory", action="append", default=[])


def build_parser():
    parser = argparse.ArgumentParser(prog="slotaug", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="build the slot database sidecar")
    _add_common(p)
    _add_slot_db(p)
    p.add_argument("--out")

    p = sub.add_parser("stats", help="print per-category image/instance/slot tallies")
    _add_common(p)
    _add_slot_db(p)
    p.add_argument("--out", help="also write stats.csv and stats.json here")

    for name, help_ in (("plan", "build an augmentation plan"),
                        ("augment", "plan and render augmented images")):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        _add_slot_db(p)
        _add_filters(p)
        _add_target(p)
        p.add_argument("--out")
        p.add_argument("--jobs", type=int, default=1)
        if name == "augment":
            p.add_argument("--images", help="image root directory")
            p.add_argument("--plan", help="execute this plan JSON instead of building one")
            p.add_argument("--emit-per-slot", action="store_true",
                           help="one output image per substituted slot")
            p.add_argument("--merge", action="store_true",
                           help="also write merged.json with originals plus generated images")

    p = sub.add_parser("minify", help="greedy mini-dataset construction")
    _add_common(p)
    _add_slot_db(p)
    _add_filters(p)
    p.add_argument("--out")
    p.add_argument("--select-step", type=int)

    p = sub.add_parser("flip", help="horizontal flip baseline")
    _add_common(p)
    _add_target(p)
    p.add_argument("--images")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    return parser


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        with open(args.config, "rb") as fh:
            conf = {k.replace("-", "_"): v for k, v in tomllib.load(fh).items()}
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(conf) - known)
        if unknown:
            parser.error(f"unknown keys in {args.config}: {', '.join(unknown)}")
        sub.set_defaults(**conf)
        args = parser.parse_args(argv)
    return args


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required option(s): " +
                         ", ".join("--" + n.replace("_", "-") for n in missing))


def _filter_config(args) -> FilterConfig:
    try:
        return FilterConfig(
            ratio_tolerance=args.ratio_tol,
            scale_tolerance=args.scale_tol,
            category_mode=args.category_mode,
            exclude_same_image=not args.allow_same_image,
            seed=args.seed if args.seed is not None else 0,
            use_ratio_filter=not args.no_ratio_filter,
            use_scale_filter=not args.no_scale_filter,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _split_names(values):
    return [n.strip() for v in values for n in v.split(",") if n.strip()]


def _target_categories(args, dataset):
    """Category ids selected by --category/--supercategory, or None for all."""
    names = _split_names(args.category)
    supers = _split_names(args.supercategory)
    if not names and not supers:
        return None
    by_name = dataset.category_by_name
    bad = [n for n in names if n not in by_name]
    if bad:
        valid = ", ".join(sorted(by_name))
        raise UsageError(f"unknown category {', '.join(bad)}; valid names: {valid}")
    known_supers = {c.supercategory for c in dataset.categories}
    bad = [s for s in supers if s not in known_supers]
    if bad:
        raise UsageError(f"unknown supercategory {', '.join(bad)}; "
                         f"valid names: {', '.join(sorted(known_supers))}")
    ids = {by_name[n].id for n in names}
    ids |= {c.id for c in dataset.categories if c.supercategory in supers}
    return ids


def _load(args):
    _need(args, "annotations")
    return read_dataset(args.annotations, on_invalid=args.on_invalid)


def _slot_db(args, dataset):
    path = getattr(args, "slot_db", None)
    if path and Path(path).exists():
        return read_slot_database(path, dataset.categories)
    return build_slot_database(dataset)


def cmd_init(args):
    dataset = _load(args)
    if args.slot_db is None:
        _need(args, "out")
        args.slot_db = str(Path(args.out) / "slots.json")
    db = build_slot_database(dataset)
    Path(args.slot_db).parent.mkdir(parents=True, exist_ok=True)
    write_slot_database(db, args.slot_db)
    print(f"{len(db)} slots from {len(dataset.instances)} instances "
          f"in {len(dataset.images)} images -> {args.slot_db}")
    return 0


def cmd_stats(args):
    dataset = _load(args)
    db = _slot_db(args, dataset)
    rows = category_stats(dataset, db)
    print(format_table(rows))
    print(f"\n{len(dataset.images)} images, {len(dataset.instances)} instances, {len(db)} slots")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_rows_csv(rows, out / "stats.csv")
        write_json([r.__dict__ for r in rows], out / "stats.json")
    return 0


def _plan(args, dataset, db):
    _need(args, "seed")
    cfg = _filter_config(args)
    cats = _target_categories(args, dataset)
    target = None if cats is None else (lambda s: s.category_id in cats)
    return build_plan(db, target, cfg, jobs=max(1, args.jobs)), cats


def cmd_plan(args):
    dataset = _load(args)
    _need(args, "out")
    db = _slot_db(args, dataset)
    plan, _ = _plan(args, dataset, db)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "plan.json").write_text(plan.to_json() + "\n", encoding="utf-8")
    print(f"{plan.targeted} targeted slots, {len(plan.assignments)} assigned, "
          f"{len(plan.skipped)} without candidates -> {out / 'plan.json'}")
    return 0


def cmd_augment(args):
    dataset = _load(args)
    _need(args, "images", "out")
    db = _slot_db(args, dataset)
    cats = _target_categories(args, dataset)
    if args.plan:
        plan = AugmentationPlan.from_dict(json.loads(Path(args.plan).read_text()), db)
    else:
        plan, cats = _plan(args, dataset, db)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "plan.json").write_text(plan.to_json() + "\n", encoding="utf-8")
    result = execute_plan(plan, dataset, args.images, out / "images",
                          jobs=max(1, args.jobs), emit_per_slot=args.emit_per_slot)
    write_dataset(result.delta, out / "annotations.json")
    if args.merge:
        write_dataset(merge_datasets(dataset, result.delta), out / "merged.json")
    if cats is None:
        original = len(dataset.images)
    else:
        original = len({a.image_id for a in dataset.instances if a.category_id in cats})
    report = run_report(plan, result, original)
    write_json(report.to_dict(), out / "report.json")
    s = report.summary
    print(f"{len(plan.assignments)} assignments -> {s.augmented_images} images "
          f"(original {s.original_images}, proportion {s.formula_proportion:.2f}%)")
    if any(report.skipped.values()):
        print("skipped slots: " + ", ".join(f"{k}={v}" for k, v in report.skipped.items()))
    return 0


def cmd_minify(args):
    dataset = _load(args)
    _need(args, "out")
    db = _slot_db(args, dataset)
    result = build_mini_dataset(dataset, db, _filter_config(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_records_csv(result.records, out / "steps.csv")
    print(format_table(result.records))
    if args.select_step is not None:
        try:
            mini = select_step(result, args.select_step)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        write_dataset(mini, out / "mini.json")
        print(f"step {args.select_step}: {len(mini.images)} images, "
              f"{len(mini.instances)} instances -> {out / 'mini.json'}")
    return 0


def cmd_flip(args):
    dataset = _load(args)
    _need(args, "images", "out")
    cats = _target_categories(args, dataset)
    ids = None
    if cats is not None:
        ids = {a.image_id for a in dataset.instances if a.category_id in cats}
    out = Path(args.out)
    delta, failed = flip_dataset(dataset, args.images, out / "images", image_ids=ids,
                                 jobs=max(1, args.jobs))
    write_dataset(delta, out / "annotations.json")
    original = len(dataset.images) if ids is None else len(ids)
    summary = summarize("flip", original, len(delta.images))
    write_json({"summary": summary.__dict__, "failed_images": failed}, out / "report.json")
    print(f"flipped {len(delta.images)} images, {len(failed)} failed")
    if failed and not delta.images:
        return 1
    return 0


COMMANDS = {
    "init": cmd_init, "stats": cmd_stats, "plan": cmd_plan,
    "augment": cmd_augment, "minify": cmd_minify, "flip": cmd_flip,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.info("kernel backend: %s", kernels.BACKEND)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"slotaug {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (DatasetError, OSError, ValueError) as exc:
        print(f"slotaug {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
