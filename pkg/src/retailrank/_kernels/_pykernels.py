"""Numpy implementations of the spatial kernels (fallback when Cython is absent)."""

import numpy as np

EARTH_RADIUS_M = 6_371_000.0
_DEG = np.pi / 180.0


def _hav(p1, l1, c1, p2, l2, c2):
    sdp = np.sin((p2 - p1) * 0.5)
    sdl = np.sin((l2 - l1) * 0.5)
    a = np.minimum(sdp * sdp + c1 * c2 * sdl * sdl, 1.0)
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(a))


def haversine_many(lat, lon, lats, lons):
    """Distances in meters from one point to many, all in degrees."""
    p1 = lat * _DEG
    p2 = np.asarray(lats, dtype=np.float64) * _DEG
    l2 = np.asarray(lons, dtype=np.float64) * _DEG
    return _hav(p1, lon * _DEG, np.cos(p1), p2, l2, np.cos(p2))


def neighbor_category_counts(lats, lons, codes, n_codes, radius_m):
    """Per-venue neighbor counts by category code, excluding the venue itself.

    Returns an ``(n, n_codes)`` int64 matrix whose row ``i`` holds
    ``|{j != i : dist(i, j) < radius_m, code[j] = c}|`` in column ``c``.
    """
    lats = np.asarray(lats, dtype=np.float64)
    n = len(lats)
    order = np.argsort(lats, kind="stable")
    phi = lats[order] * _DEG
    lam = np.asarray(lons, dtype=np.float64)[order] * _DEG
    cphi = np.cos(phi)
    code = np.asarray(codes, dtype=np.int64)[order]
    counts = np.zeros((n, n_codes), dtype=np.int64)
    window = radius_m / EARTH_RADIUS_M * (1.0 + 1e-9) + 1e-15
    upper = np.searchsorted(phi, phi + window, side="right")
    for a in range(n):
        b = np.arange(a + 1, upper[a])
        if b.size == 0:
            continue
        d = _hav(phi[a], lam[a], cphi[a], phi[b], lam[b], cphi[b])
        hit = b[d < radius_m]
        if hit.size == 0:
            continue
        i = order[a]
        np.add.at(counts[i], code[hit], 1)
        np.add.at(counts, (order[hit], code[a]), 1)
    return counts
