"""Pure numpy implementations of the hot kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature and
bit-identical output. Floating point expressions are written in the same order
in both so results agree exactly, not just approximately.
"""

import numpy as np

# relative slack applied to both ends of a tolerance band so that values
# sitting exactly on an endpoint are accepted despite float rounding
BAND_EPS = 1e-9


def band(ref, tol):
    """Inclusive ``[ref*(1-tol), ref*(1+tol)]`` band, widened by ``BAND_EPS``."""
    return ref * (1.0 - tol) * (1.0 - BAND_EPS), ref * (1.0 + tol) * (1.0 + BAND_EPS)


def isolated_flags(boxes, starts):
    """Flag boxes that overlap no other box of their group.

    ``boxes`` is an ``(n, 4)`` float64 array of corners ``x1, y1, x2, y2``.
    Groups are the contiguous runs ``boxes[starts[g]:starts[g + 1]]``.
    Returns a uint8 array of length n.
    """
    boxes = np.ascontiguousarray(boxes, dtype=np.float64)
    starts = np.asarray(starts, dtype=np.int64)
    out = np.zeros(len(boxes), dtype=np.uint8)
    for g in range(len(starts) - 1):
        lo, hi = int(starts[g]), int(starts[g + 1])
        if hi <= lo:
            continue
        b = boxes[lo:hi]
        x1, y1, x2, y2 = b[:, 0], b[:, 1], b[:, 2], b[:, 3]
        ov = (
            (x1[:, None] < x2[None, :])
            & (x2[:, None] > x1[None, :])
            & (y1[:, None] < y2[None, :])
            & (y2[:, None] > y1[None, :])
        )
        np.fill_diagonal(ov, False)
        out[lo:hi] = ~ov.any(axis=1)
    return out


def count_pairs(group, area, ratio, image, ratio_tol, scale_tol,
                use_ratio, use_scale, exclude_same_image):
    """Count ordered (slot, candidate) pairs passing the band filters.

    Inputs must be sorted by ``(group, area)``. Two entries can only pair when
    they share a group id; the caller encodes the category rule in ``group``.
    """
    group = np.asarray(group, dtype=np.int64)
    area = np.asarray(area, dtype=np.float64)
    ratio = np.asarray(ratio, dtype=np.float64)
    image = np.asarray(image, dtype=np.int64)
    n = len(area)
    if n == 0:
        return 0
    bounds = np.flatnonzero(np.diff(group)) + 1
    seg_start = np.concatenate(([0], bounds))
    seg_end = np.concatenate((bounds, [n]))
    total = 0
    for s, e in zip(seg_start.tolist(), seg_end.tolist()):
        seg_area = area[s:e]
        for i in range(s, e):
            if use_scale:
                lo_v, hi_v = band(area[i], scale_tol)
                lo = s + int(np.searchsorted(seg_area, lo_v, side="left"))
                hi = s + int(np.searchsorted(seg_area, hi_v, side="right"))
            else:
                lo, hi = s, e
            if hi <= lo:
                continue
            ok = np.ones(hi - lo, dtype=bool)
            if use_ratio:
                r_lo, r_hi = band(ratio[i], ratio_tol)
                r = ratio[lo:hi]
                ok &= (r >= r_lo) & (r <= r_hi)
            if exclude_same_image:
                ok &= image[lo:hi] != image[i]
            if lo <= i < hi:
                ok[i - lo] = False
            total += int(ok.sum())
    return total


def bilinear_resize(src, out_h, out_w):
    """Resize an ``(h, w, c)`` uint8 image with bilinear interpolation.

    Sample positions use pixel-centre alignment, ``s = (d + 0.5) * in/out - 0.5``,
    clamped to the source edge. Results are rounded half up.
    """
    src = np.ascontiguousarray(src, dtype=np.uint8)
    in_h, in_w, _ = src.shape
    if out_h <= 0 or out_w <= 0:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    y0, y1, wy = _axis(in_h, out_h)
    x0, x1, wx = _axis(in_w, out_w)
    f = src.astype(np.float64)
    wx_ = wx[None, :, None]
    wy_ = wy[:, None, None]
    top = f[y0][:, x0] * (1.0 - wx_) + f[y0][:, x1] * wx_
    bot = f[y1][:, x0] * (1.0 - wx_) + f[y1][:, x1] * wx_
    v = top * (1.0 - wy_) + bot * wy_
    return np.floor(v + 0.5).astype(np.uint8)


def _axis(n_in, n_out):
    scale = n_in / n_out
    s = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    s = np.minimum(np.maximum(s, 0.0), float(n_in - 1))
    i0 = np.floor(s).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, s - i0
