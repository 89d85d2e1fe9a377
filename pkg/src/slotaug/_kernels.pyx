# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same contracts as ``slotaug._fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

cdef double BAND_EPS = 1e-9


def isolated_flags(boxes, starts):
    cdef const double[:, ::1] b = np.ascontiguousarray(boxes, dtype=np.float64)
    cdef const long long[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef Py_ssize_t n = b.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] o = out
    cdef Py_ssize_t g, i, j, lo, hi
    cdef bint free
    with nogil:
        for g in range(st.shape[0] - 1):
            lo = st[g]
            hi = st[g + 1]
            for i in range(lo, hi):
                free = True
                for j in range(lo, hi):
                    if j == i:
                        continue
                    if (b[i, 0] < b[j, 2] and b[i, 2] > b[j, 0]
                            and b[i, 1] < b[j, 3] and b[i, 3] > b[j, 1]):
                        free = False
                        break
                o[i] = free
    return out


cdef inline Py_ssize_t _lower(const double[::1] a, Py_ssize_t lo, Py_ssize_t hi, double v) nogil:
    # first index in [lo, hi) with a[k] >= v
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _upper(const double[::1] a, Py_ssize_t lo, Py_ssize_t hi, double v) nogil:
    # first index in [lo, hi) with a[k] > v
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


def count_pairs(group, area, ratio, image, double ratio_tol, double scale_tol,
                bint use_ratio, bint use_scale, bint exclude_same_image):
    cdef const long long[::1] grp = np.ascontiguousarray(group, dtype=np.int64)
    cdef const double[::1] ar = np.ascontiguousarray(area, dtype=np.float64)
    cdef const double[::1] rt = np.ascontiguousarray(ratio, dtype=np.float64)
    cdef const long long[::1] im = np.ascontiguousarray(image, dtype=np.int64)
    cdef Py_ssize_t n = ar.shape[0]
    cdef Py_ssize_t s = 0, e, i, j, lo, hi
    cdef long long total = 0
    cdef double lo_v, hi_v, r_lo, r_hi
    with nogil:
        while s < n:
            e = s + 1
            while e < n and grp[e] == grp[s]:
                e += 1
            for i in range(s, e):
                if use_scale:
                    lo_v = ar[i] * (1.0 - scale_tol) * (1.0 - BAND_EPS)
                    hi_v = ar[i] * (1.0 + scale_tol) * (1.0 + BAND_EPS)
                    lo = _lower(ar, s, e, lo_v)
                    hi = _upper(ar, s, e, hi_v)
                else:
                    lo = s
                    hi = e
                r_lo = rt[i] * (1.0 - ratio_tol) * (1.0 - BAND_EPS)
                r_hi = rt[i] * (1.0 + ratio_tol) * (1.0 + BAND_EPS)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    if use_ratio and (rt[j] < r_lo or rt[j] > r_hi):
                        continue
                    if exclude_same_image and im[j] == im[i]:
                        continue
                    total += 1
            s = e
    return int(total)


def bilinear_resize(src, Py_ssize_t out_h, Py_ssize_t out_w):
    if out_h <= 0 or out_w <= 0:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    cdef const unsigned char[:, :, ::1] s = np.ascontiguousarray(src, dtype=np.uint8)
    cdef Py_ssize_t in_h = s.shape[0], in_w = s.shape[1], nc = s.shape[2]
    out = np.empty((out_h, out_w, nc), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] o = out
    cdef double sy_scale = <double>in_h / <double>out_h
    cdef double sx_scale = <double>in_w / <double>out_w
    cdef Py_ssize_t y, x, c, y0, y1, x0, x1
    cdef double sy, sx, wy, wx, top, bot, v
    cdef Py_ssize_t[::1] x0s = np.empty(out_w, dtype=np.intp)
    cdef Py_ssize_t[::1] x1s = np.empty(out_w, dtype=np.intp)
    cdef double[::1] wxs = np.empty(out_w, dtype=np.float64)
    with nogil:
        for x in range(out_w):
            sx = (<double>x + 0.5) * sx_scale - 0.5
            if sx < 0.0:
                sx = 0.0
            if sx > <double>(in_w - 1):
                sx = <double>(in_w - 1)
            x0 = <Py_ssize_t>floor(sx)
            x1 = x0 + 1 if x0 + 1 < in_w else in_w - 1
            x0s[x] = x0
            x1s[x] = x1
            wxs[x] = sx - <double>x0
        for y in range(out_h):
            sy = (<double>y + 0.5) * sy_scale - 0.5
            if sy < 0.0:
                sy = 0.0
            if sy > <double>(in_h - 1):
                sy = <double>(in_h - 1)
            y0 = <Py_ssize_t>floor(sy)
            y1 = y0 + 1 if y0 + 1 < in_h else in_h - 1
            wy = sy - <double>y0
            for x in range(out_w):
                wx = wxs[x]
                for c in range(nc):
                    top = <double>s[y0, x0s[x], c] * (1.0 - wx) + <double>s[y0, x1s[x], c] * wx
                    bot = <double>s[y1, x0s[x], c] * (1.0 - wx) + <double>s[y1, x1s[x], c] * wx
                    v = top * (1.0 - wy) + bot * wy
                    o[y, x, c] = <unsigned char>floor(v + 0.5)
    return out
