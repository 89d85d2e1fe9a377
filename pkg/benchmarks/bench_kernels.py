"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--scale 1.0]

Workloads are shaped like MS-COCO: ~7 boxes per image for isolation, tens of
thousands of slots for pair counting, and crop-sized bilinear resizes.
"""

import argparse
import time

import numpy as np

from slotaug import _fallback

try:
    from slotaug import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(scale, rng):
    n_img = int(20000 * scale)
    sizes = rng.poisson(7, n_img)
    starts = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    n = int(starts[-1])
    xy = rng.uniform(0, 600, (n, 2))
    wh = rng.uniform(5, 150, (n, 2))
    boxes = np.hstack([xy, xy + wh])

    m = int(20000 * scale)
    group = rng.integers(0, 80, m)
    area = rng.lognormal(7, 1.2, m)
    ratio = rng.lognormal(0, 0.4, m)
    image = rng.integers(0, m // 3, m)
    order = np.lexsort((area, group))
    pairs = (group[order], area[order], ratio[order], image[order], 0.2, 0.2, True, True, True)

    crops = [rng.integers(0, 256, (int(h), int(w), 3), dtype=np.uint8)
             for h, w in rng.integers(20, 200, (int(40 * scale) + 1, 2))]
    targets = rng.integers(20, 200, (len(crops), 2))

    return {
        f"isolated_flags ({n_img} images, {n} boxes)":
            lambda k: k.isolated_flags(boxes, starts),
        f"count_pairs ({m} slots)":
            lambda k: k.count_pairs(*pairs),
        f"bilinear_resize ({len(crops)} crops)":
            lambda k: [k.bilinear_resize(c, int(h), int(w)) for c, (h, w) in zip(crops, targets)],
    }


def same(a, b):
    if isinstance(a, list):
        return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scale", type=float, default=1.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<48} {'python':>10} {'cython':>10} {'speedup':>8}")
    for name, run in workloads(args.scale, rng).items():
        py = best_of(lambda: run(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:<48} {py:>9.3f}s {'n/a':>10} {'':>8}")
            continue
        cy = best_of(lambda: run(_kernels), args.repeat)
        if not same(run(_fallback), run(_kernels)):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<48} {py:>9.3f}s {cy:>9.3f}s {py / cy:>7.1f}x")


if __name__ == "__main__":
    main()
