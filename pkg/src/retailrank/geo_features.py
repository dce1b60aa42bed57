"""Geographic features: density, neighbor entropy, competitiveness, Jensen quality."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .model import CandidateArea, Dataset
from .spatial import SpatialIndex


def neighbor_indices(area: CandidateArea, index: SpatialIndex) -> np.ndarray:
    """Index positions of venues inside the area's disk, focal venue removed."""
    idx = index.query_indices(area.center, area.radius_m)
    focal = index.positions.get(area.focal_venue) if area.focal_venue is not None else None
    if focal is not None:
        idx = idx[idx != focal]
    return idx


def category_counts(area: CandidateArea, index: SpatialIndex) -> Counter:
    """``N_gamma(l, r)`` for every category present in the disk."""
    return Counter(index.venues[i].category for i in neighbor_indices(area, index))


def density(area: CandidateArea, index: SpatialIndex) -> float:
    return float(len(neighbor_indices(area, index)))


def _entropy_bits(counts) -> float:
    total = sum(counts)
    if total == 0:
        return 0.0
    h = -sum((c / total) * math.log2(c / total) for c in counts if c)
    return h + 0.0  # normalizes -0.0


def entropy(area: CandidateArea, index: SpatialIndex) -> float:
    """Shannon entropy, in bits, of the category histogram around the area."""
    return _entropy_bits(category_counts(area, index).values())


def _require_target(area: CandidateArea) -> str:
    if area.target_category is None:
        raise ValueError(f"area {area.id} has no target_category")
    return area.target_category


def _competitiveness(counts: Counter, target: str) -> float:
    total = sum(counts.values())
    if total == 0:
        return 0.0
    return -counts.get(target, 0) / total + 0.0


def competitiveness(area: CandidateArea, index: SpatialIndex) -> float:
    """Negative share of same-category neighbors; 0 for an empty disk."""
    return _competitiveness(category_counts(area, index), _require_target(area))


@dataclass(frozen=True)
class JensenCoefficients:
    """Inter-category attraction ``kappa[(from_cat, to_cat)]`` at radius ``r``.

    ``baseline_mean[(gp, gl)]`` is the mean number of ``gp`` neighbors around
    venues of category ``gl``. ``baseline_sum`` and ``target_count`` hold the
    same quantity unreduced so a focal venue can be taken out of the average.
    """

    kappa: dict[tuple[str, str], float]
    baseline_mean: dict[tuple[str, str], float]
    r: float
    baseline_sum: dict[tuple[str, str], int] = field(repr=False, default_factory=dict)
    target_count: dict[str, int] = field(repr=False, default_factory=dict)

    @cached_property
    def log_kappa_by_target(self) -> dict[str, list[tuple[str, float]]]:
        """``gl -> [(gp, log kappa)]`` over pairs with positive kappa."""
        out: dict[str, list[tuple[str, float]]] = {}
        for (gp, gl), kappa in self.kappa.items():
            if kappa > 0:
                out.setdefault(gl, []).append((gp, math.log(kappa)))
        return out

    def baseline(self, gp: str, gl: str, focal_category: str | None = None, focal_counts=None) -> float:
        """Mean ``N_gp`` around ``gl`` venues, optionally with the focal venue removed.

        ``focal_counts`` are the focal venue's own neighbor counts by category.
        Removing it drops its row from the average (when it is a ``gl`` venue)
        and drops it from the neighbor counts of nearby ``gl`` venues.
        """
        if focal_category is None:
            return self.baseline_mean.get((gp, gl), 0.0)
        total = self.baseline_sum.get((gp, gl), 0)
        n = self.target_count.get(gl, 0)
        if focal_category == gl:
            total -= focal_counts.get(gp, 0)
            n -= 1
        if gp == focal_category:
            total -= focal_counts.get(gl, 0)
        return total / n if n > 0 else 0.0


def jensen_coefficients(d: Dataset, r: float) -> JensenCoefficients:
    """Co-location coefficients for every ordered pair of categories in ``d``.

    For the pair ``gp -> gl`` the sum runs over venues ``p`` of category ``gp``;
    a venue with no neighbors outside its own category contributes nothing.
    """
    cats = d.category_list
    k = len(cats)
    n = len(d.venues)
    codes = d.codes
    if n == 0:
        return JensenCoefficients({}, {}, r)
    counts = _kernels.neighbor_category_counts(d.lats, d.lons, codes, k, r)
    per_cat = np.bincount(codes, minlength=k)

    kappa: dict[tuple[str, str], float] = {}
    mean: dict[tuple[str, str], float] = {}
    sums: dict[tuple[str, str], int] = {}
    for a in range(k):
        rows = counts[codes == a]
        den = rows.sum(axis=1) - rows[:, a]
        ok = den > 0
        ratio_sum = (rows[ok] / den[ok, None]).sum(axis=0) if ok.any() else np.zeros(k)
        col_sum = rows.sum(axis=0)
        for b in range(k):
            kappa[(cats[a], cats[b])] = float((n - per_cat[a]) / (per_cat[a] * per_cat[b]) * ratio_sum[b])
            # rows here are venues of category a, i.e. the "around gl=a" average
            sums[(cats[b], cats[a])] = int(col_sum[b])
            mean[(cats[b], cats[a])] = float(col_sum[b] / per_cat[a])
    return JensenCoefficients(
        kappa=kappa,
        baseline_mean=mean,
        r=float(r),
        baseline_sum=sums,
        target_count={c: int(per_cat[i]) for i, c in enumerate(cats)},
    )


def _focal_category(area: CandidateArea, index: SpatialIndex) -> str | None:
    pos = index.positions.get(area.focal_venue) if area.focal_venue is not None else None
    return None if pos is None else index.venues[pos].category


def _jensen_quality(counts: Counter, target: str, coeffs: JensenCoefficients, focal_category) -> float:
    total = 0.0
    for gp, log_kappa in coeffs.log_kappa_by_target.get(target, ()):
        base = coeffs.baseline(gp, target, focal_category, counts)
        total += log_kappa * (counts.get(gp, 0) - base)
    return total


def check_radius(area: CandidateArea, r: float) -> None:
    if not math.isclose(area.radius_m, r, rel_tol=1e-12):
        raise ValueError(f"area radius {area.radius_m} m does not match table radius {r} m")


def jensen_quality(area: CandidateArea, index: SpatialIndex, coeffs: JensenCoefficients) -> float:
    """Attraction-weighted surplus of neighbors over the category baseline."""
    check_radius(area, coeffs.r)
    target = _require_target(area)
    return _jensen_quality(category_counts(area, index), target, coeffs, _focal_category(area, index))
