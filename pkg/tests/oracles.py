"""Independent reference implementations used as test oracles.

None of these import the code paths they check.
"""

import math
from collections import Counter


def interval_overlap(a, b):
    """Boxes as (x1, y1, x2, y2) tuples; positive-area intersection."""
    w = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    h = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    return w > 0 and h > 0


def isolated_ids(instances):
    """Quadratic definition: non-crowd, overlaps no other box in its image."""
    out = []
    for s in instances:
        if s.is_crowd:
            continue
        sb = s.bbox.as_tuple()
        if all(not interval_overlap(sb, t.bbox.as_tuple())
               for t in instances if t is not s):
            out.append(s.id)
    return out


def slot_set(dataset):
    ids = []
    for im in dataset.images:
        ids.extend(isolated_ids([a for a in dataset.instances if a.image_id == im.id]))
    return sorted(ids)


def in_band(value, ref, tol, eps=1e-9):
    return ref * (1 - tol) * (1 - eps) <= value <= ref * (1 + tol) * (1 + eps)


def brute_filter(slot, slots, supercat, *, ratio_tol=0.2, scale_tol=0.2,
                 mode="same_category", exclude_same_image=True,
                 use_ratio=True, use_scale=True):
    """Apply the filters one at a time as set operations."""
    pool = [c for c in slots if c.instance_id != slot.instance_id]
    if use_ratio:
        pool = [c for c in pool if in_band(c.aspect_ratio, slot.aspect_ratio, ratio_tol)]
    if use_scale:
        pool = [c for c in pool if in_band(c.area, slot.area, scale_tol)]
    if mode == "same_category":
        pool = [c for c in pool if c.category_id == slot.category_id]
    elif mode == "same_supercategory":
        pool = [c for c in pool if supercat[c.category_id] == supercat[slot.category_id]]
    if exclude_same_image:
        pool = [c for c in pool if c.image_id != slot.image_id]
    return sorted(pool, key=lambda c: (c.image_id, c.instance_id))


def splitmix64(x):
    """splitmix64 output function, written from the published constants."""
    m = 2 ** 64
    x = (x + 0x9E3779B97F4A7C15) % m
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) % m
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) % m
    return x ^ (x >> 31)


def brute_pairs(slots, supercat, **kw):
    return sum(len(brute_filter(s, slots, supercat, **kw)) for s in slots)


def bilinear_reference(img, out_h, out_w):
    """Per-pixel bilinear resampler with pixel-centre alignment.

    Plain nested loops over lists; returns nested lists of ints.
    """
    in_h, in_w = len(img), len(img[0])
    nc = len(img[0][0])
    out = []
    for y in range(out_h):
        fy = (y + 0.5) * in_h / out_h - 0.5
        fy = min(max(fy, 0.0), in_h - 1)
        ya = int(math.floor(fy))
        yb = min(ya + 1, in_h - 1)
        ty = fy - ya
        row = []
        for x in range(out_w):
            fx = (x + 0.5) * in_w / out_w - 0.5
            fx = min(max(fx, 0.0), in_w - 1)
            xa = int(math.floor(fx))
            xb = min(xa + 1, in_w - 1)
            tx = fx - xa
            px = []
            for c in range(nc):
                v = ((1 - tx) * (1 - ty) * img[ya][xa][c] + tx * (1 - ty) * img[ya][xb][c]
                     + (1 - tx) * ty * img[yb][xa][c] + tx * ty * img[yb][xb][c])
                px.append(int(math.floor(v + 0.5)))
            row.append(px)
        out.append(row)
    return out


def population_std(xs):
    n = len(xs)
    if n == 0:
        return 0.0
    m = sum(xs) / n
    return math.sqrt(sum((x - m) ** 2 for x in xs) / n)


def brute_mini_dataset(dataset, **filter_kw):
    """Recompute every step metric from scratch on the raw dataset."""
    counts = Counter(a.category_id for a in dataset.instances)
    cats = [c.id for c in dataset.categories]
    order = sorted(cats, key=lambda c: (counts[c], c))
    supercat = {c.id: c.supercategory for c in dataset.categories}
    pool = {im.id for im in dataset.images}
    chosen = set()
    steps = []
    for i, cid in enumerate(order):
        inc = {a.image_id for a in dataset.instances if a.category_id == cid and a.image_id in pool}
        pool -= inc
        chosen |= inc
        anns = [a for a in dataset.instances if a.image_id in chosen]
        per_cat = [sum(1 for a in anns if a.category_id == c) for c in cats]
        # isolation from scratch, then slot attributes from the raw boxes
        slot_ids = set()
        for im_id in chosen:
            slot_ids.update(isolated_ids([a for a in anns if a.image_id == im_id]))
        slots = [_SlotView(a) for a in anns if a.id in slot_ids]
        n_img = len(chosen)
        steps.append(dict(
            step_index=i,
            category_added=cid,
            cumulative_images=n_img,
            cumulative_instances=len(anns),
            slot_amount=len(slots),
            avg_slots_per_image=len(slots) / n_img if n_img else 0.0,
            instance_std=population_std(per_cat),
            all_categories_included=all(n > 0 for n in per_cat),
            capacity=brute_pairs(slots, supercat, **filter_kw),
            increment=inc,
        ))
    return steps


class _SlotView:
    def __init__(self, a):
        x1, y1, w, h = a.bbox.to_xywh()
        self.instance_id = a.id
        self.image_id = a.image_id
        self.category_id = a.category_id
        self.area = w * h
        self.aspect_ratio = w / h
