"""Great-circle distance and exact radius queries over venues."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .model import Venue

EARTH_RADIUS_M = _kernels.EARTH_RADIUS_M


def haversine_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Great-circle distance in meters between two ``(lat, lon)`` points in degrees."""
    p1, p2 = math.radians(a[0]), math.radians(b[0])
    sdp = math.sin((p2 - p1) * 0.5)
    sdl = math.sin((math.radians(b[1]) - math.radians(a[1])) * 0.5)
    h = min(sdp * sdp + math.cos(p1) * math.cos(p2) * sdl * sdl, 1.0)
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


def _unit_xyz(lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    phi = np.radians(lats)
    lam = np.radians(lons)
    c = np.cos(phi)
    return np.column_stack([c * np.cos(lam), c * np.sin(lam), np.sin(phi)])


def _chord(radius_m: float) -> float:
    theta = min(radius_m / EARTH_RADIUS_M, math.pi)
    # Slack so the tree never drops a point the exact filter would keep.
    return 2.0 * math.sin(theta / 2.0) * (1.0 + 1e-9) + 1e-12


@dataclass(frozen=True, eq=False)
class SpatialIndex:
    """KD-tree over unit-sphere coordinates with an exact haversine filter.

    The tree narrows candidates by chord length, which is monotone in
    great-circle distance; membership is then decided by ``dist < r``.
    """

    venues: tuple[Venue, ...]
    lats: np.ndarray
    lons: np.ndarray
    _tree: Optional[cKDTree] = field(repr=False)

    def __len__(self) -> int:
        return len(self.venues)

    @cached_property
    def positions(self) -> dict[str, int]:
        return {v.id: i for i, v in enumerate(self.venues)}

    def query_indices(self, center: Sequence[float], radius_m: float) -> np.ndarray:
        """Sorted venue indices strictly closer than ``radius_m`` to ``center``."""
        if radius_m <= 0:
            raise ValueError(f"radius must be positive, got {radius_m}")
        if self._tree is None:
            return np.empty(0, dtype=np.int64)
        q = _unit_xyz(np.array([center[0]]), np.array([center[1]]))[0]
        cand = np.fromiter(self._tree.query_ball_point(q, _chord(radius_m)), dtype=np.int64)
        if cand.size == 0:
            return cand
        cand.sort()
        d = _kernels.haversine_many(float(center[0]), float(center[1]), self.lats[cand], self.lons[cand])
        return cand[d < radius_m]

    def distances(self, center: Sequence[float], idx: np.ndarray) -> np.ndarray:
        return _kernels.haversine_many(float(center[0]), float(center[1]), self.lats[idx], self.lons[idx])


def build_index(venues: Iterable[Venue]) -> SpatialIndex:
    venues = tuple(venues)
    lats = np.array([v.lat for v in venues], dtype=np.float64)
    lons = np.array([v.lon for v in venues], dtype=np.float64)
    tree = cKDTree(_unit_xyz(lats, lons)) if venues else None
    return SpatialIndex(venues, lats, lons, tree)


def radius_query(index: SpatialIndex, center: Sequence[float], radius_m: float) -> list[Venue]:
    """Venues ``p`` with ``dist(p, center) < radius_m``."""
    return [index.venues[i] for i in index.query_indices(center, radius_m)]
