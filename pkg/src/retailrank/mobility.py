"""Mobility features built on check-ins and transitions, and full feature vectors."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .geo_features import (
    JensenCoefficients,
    _competitiveness,
    _entropy_bits,
    _jensen_quality,
    _require_target,
    check_radius,
    jensen_coefficients,
    neighbor_indices,
)
from .model import FEATURE_NAMES, CandidateArea, Dataset, FeatureVector
from .spatial import SpatialIndex


@dataclass(frozen=True)
class TransitionTables:
    """Category-level transition statistics over the whole dataset.

    ``sigma[(gp, gl)]``: mean over ``gp`` venues with check-ins of the share of
    their check-ins followed by a move to a ``gl`` venue. ``rho`` rescales
    ``sigma`` by the venue-count expectation for the pair.
    """

    sigma: dict[tuple[str, str], float]
    rho: dict[tuple[str, str], float]


def transition_tables(d: Dataset) -> TransitionTables:
    cats = d.category_list
    k = len(cats)
    n = len(d.venues)
    codes = d.codes
    cp = d.counts
    src, dst = d.transition_endpoints
    out_by_cat = np.zeros((n, k), dtype=np.float64)
    np.add.at(out_by_cat, (src, codes[dst]), 1.0)
    per_cat = np.bincount(codes, minlength=k)

    sigma: dict[tuple[str, str], float] = {}
    rho: dict[tuple[str, str], float] = {}
    active = cp > 0
    for a in range(k):
        rows = active & (codes == a)
        if not rows.any():
            continue
        s = (out_by_cat[rows] / cp[rows, None]).mean(axis=0)
        for b in range(k):
            sigma[(cats[a], cats[b])] = float(s[b])
            rho[(cats[a], cats[b])] = float(s[b] * (n - per_cat[a]) / (per_cat[a] * per_cat[b]))
    return TransitionTables(sigma, rho)


def _dataset_positions(d: Dataset, index: SpatialIndex, idx: np.ndarray) -> np.ndarray:
    if index.venues is d.venues:
        return idx
    vi = d.venue_index
    return np.array([vi[index.venues[i].id] for i in idx], dtype=np.int64)


def _focal_position(d: Dataset, area: CandidateArea) -> Optional[int]:
    return d.venue_index.get(area.focal_venue) if area.focal_venue is not None else None


def _flows(area: CandidateArea, d: Dataset, inside: np.ndarray) -> tuple[int, int]:
    """(interior transitions, transitions entering from strictly outside)."""
    if inside.size == 0:
        return 0, 0
    offsets, sources = d.incoming
    src = np.concatenate([sources[offsets[i] : offsets[i + 1]] for i in inside])
    if src.size == 0:
        return 0, 0
    is_inside = np.isin(src, inside)
    interior = int(is_inside.sum())
    rest = src[~is_inside]
    focal = _focal_position(d, area)
    if focal is not None:
        rest = rest[rest != focal]
    if rest.size == 0:
        return interior, 0
    uniq, inverse = np.unique(rest, return_inverse=True)
    dist = _kernels.haversine_many(float(area.center[0]), float(area.center[1]), d.lats[uniq], d.lons[uniq])
    return interior, int((dist[inverse] > area.radius_m).sum())


def _inside(area: CandidateArea, d: Dataset, index: SpatialIndex) -> np.ndarray:
    return np.sort(_dataset_positions(d, index, neighbor_indices(area, index)))


def area_popularity(area: CandidateArea, d: Dataset, index: SpatialIndex) -> float:
    """Check-ins recorded at venues inside the disk."""
    return float(d.counts[_inside(area, d, index)].sum())


def transition_density(area: CandidateArea, d: Dataset, index: SpatialIndex) -> float:
    """Transitions with both endpoints inside the disk."""
    return float(_flows(area, d, _inside(area, d, index))[0])


def incoming_flow(area: CandidateArea, d: Dataset, index: SpatialIndex) -> float:
    """Transitions from a venue farther than r into a venue inside the disk."""
    return float(_flows(area, d, _inside(area, d, index))[1])


def _transition_quality(d: Dataset, inside: np.ndarray, target: str, tables: TransitionTables) -> float:
    total = 0.0
    for i in inside:
        s = tables.sigma.get((d.venues[i].category, target), 0.0)
        total += s * float(d.counts[i])
    return total


def transition_quality(area: CandidateArea, d: Dataset, index: SpatialIndex, tables: TransitionTables) -> float:
    """Neighbor check-ins weighted by their category's transition share to the target."""
    target = _require_target(area)
    return _transition_quality(d, _inside(area, d, index), target, tables)


def feature_vector(
    area: CandidateArea,
    d: Dataset,
    index: SpatialIndex,
    coeffs: JensenCoefficients,
    tables: TransitionTables,
) -> FeatureVector:
    """All eight features for ``area`` in canonical order, plus the focal store's check-ins."""
    check_radius(area, coeffs.r)
    target = _require_target(area)
    idx = neighbor_indices(area, index)
    counts = Counter(index.venues[i].category for i in idx)
    inside = np.sort(_dataset_positions(d, index, idx))
    interior, inflow = _flows(area, d, inside)
    focal = _focal_position(d, area)
    x = (
        float(len(idx)),
        _entropy_bits(counts.values()),
        _competitiveness(counts, target),
        _jensen_quality(counts, target, coeffs, None if focal is None else d.venues[focal].category),
        float(d.counts[inside].sum()),
        float(interior),
        float(inflow),
        _transition_quality(d, inside, target, tables),
    )
    y = int(d.counts[focal]) if focal is not None else None
    return FeatureVector(area, x, y)


@dataclass
class FeatureTable:
    """Feature matrix for a list of areas; rows follow ``ids``."""

    ids: list[str]
    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...] = FEATURE_NAMES

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.names.index(name)]

    def subset(self, names: Sequence[str]) -> np.ndarray:
        return self.X[:, [self.names.index(n) for n in names]]


def feature_table(
    d: Dataset,
    areas: Sequence[CandidateArea],
    coeffs: Optional[JensenCoefficients] = None,
    tables: Optional[TransitionTables] = None,
) -> FeatureTable:
    if not areas:
        return FeatureTable([], np.zeros((0, len(FEATURE_NAMES))), np.zeros(0, dtype=np.int64))
    r = areas[0].radius_m
    coeffs = coeffs if coeffs is not None else jensen_coefficients(d, r)
    tables = tables if tables is not None else transition_tables(d)
    vecs = [feature_vector(a, d, d.index, coeffs, tables) for a in areas]
    return FeatureTable(
        ids=[a.id for a in areas],
        X=np.array([v.x for v in vecs], dtype=np.float64),
        y=np.array([v.y if v.y is not None else 0 for v in vecs], dtype=np.int64),
    )

