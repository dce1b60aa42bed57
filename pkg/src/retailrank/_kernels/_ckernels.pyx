# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled spatial kernels. Semantics mirror ``_pykernels`` exactly."""

import numpy as np

from libc.math cimport asin, cos, sin, sqrt

cdef double EARTH_RADIUS_M = 6371000.0
cdef double DEG = 3.141592653589793 / 180.0


cdef inline double _hav(double p1, double l1, double c1,
                        double p2, double l2, double c2) noexcept nogil:
    cdef double sdp = sin((p2 - p1) * 0.5)
    cdef double sdl = sin((l2 - l1) * 0.5)
    cdef double a = sdp * sdp + c1 * c2 * sdl * sdl
    if a > 1.0:
        a = 1.0
    return 2.0 * EARTH_RADIUS_M * asin(sqrt(a))


def haversine_many(double lat, double lon, lats, lons):
    cdef double[::1] la = np.ascontiguousarray(lats, dtype=np.float64)
    cdef double[::1] lo = np.ascontiguousarray(lons, dtype=np.float64)
    cdef Py_ssize_t n = la.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double p1 = lat * DEG, l1 = lon * DEG, c1 = cos(p1), p2
    with nogil:
        for i in range(n):
            p2 = la[i] * DEG
            o[i] = _hav(p1, l1, c1, p2, lo[i] * DEG, cos(p2))
    return out


def neighbor_category_counts(lats, lons, codes, Py_ssize_t n_codes, double radius_m):
    cdef Py_ssize_t n = len(lats)
    order_arr = np.argsort(np.asarray(lats, dtype=np.float64), kind="stable")
    cdef long long[::1] order = order_arr.astype(np.int64)
    cdef double[::1] phi = np.asarray(lats, dtype=np.float64)[order_arr] * DEG
    cdef double[::1] lam = np.asarray(lons, dtype=np.float64)[order_arr] * DEG
    cdef double[::1] cphi = np.empty(n, dtype=np.float64)
    cdef long long[::1] code = np.asarray(codes, dtype=np.int64)[order_arr]
    counts_arr = np.zeros((n, n_codes), dtype=np.int64)
    cdef long long[:, ::1] counts = counts_arr
    cdef double window = radius_m / EARTH_RADIUS_M * (1.0 + 1e-9) + 1e-15
    cdef Py_ssize_t a, b, i, j
    cdef double d
    with nogil:
        for a in range(n):
            cphi[a] = cos(phi[a])
        for a in range(n):
            i = order[a]
            for b in range(a + 1, n):
                if phi[b] - phi[a] > window:
                    break
                d = _hav(phi[a], lam[a], cphi[a], phi[b], lam[b], cphi[b])
                if d < radius_m:
                    j = order[b]
                    counts[i, code[b]] += 1
                    counts[j, code[a]] += 1
    return counts_arr
