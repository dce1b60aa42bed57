"""Domain types shared by every module: venues, check-ins, transitions, datasets."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar, Iterable, Optional

import numpy as np

FEATURE_NAMES = (
    "density",
    "entropy",
    "competitiveness",
    "jensen_quality",
    "area_popularity",
    "transition_density",
    "incoming_flow",
    "transition_quality",
)
GEOGRAPHIC_FEATURES = FEATURE_NAMES[:4]
MOBILITY_FEATURES = FEATURE_NAMES[4:]

DEFAULT_RADIUS_M = 200.0


@dataclass(frozen=True)
class Venue:
    id: str
    lat: float
    lon: float
    category: str
    chain: Optional[str] = None


@dataclass(frozen=True)
class CheckIn:
    user: str
    venue: str
    timestamp: int


@dataclass(frozen=True)
class Transition:
    src: str
    dst: str
    user: str
    t_from: int
    t_to: int


@dataclass(frozen=True)
class Dataset:
    """The immutable world every feature reads.

    Build one with :meth:`Dataset.build`; the raw constructor accepts
    inconsistent data on purpose so :func:`validate_dataset` can inspect it.
    """

    venues: tuple[Venue, ...]
    checkins: tuple[CheckIn, ...]
    transitions: tuple[Transition, ...]
    categories: frozenset[str]
    checkin_count_per_venue: dict[str, int] = field(hash=False)
    max_gap_s: Optional[int] = None

    @classmethod
    def build(
        cls,
        venues: Iterable[Venue],
        checkins: Iterable[CheckIn],
        transitions: Optional[Iterable[Transition]] = None,
        max_gap_s: Optional[int] = None,
    ) -> "Dataset":
        from .ingestion import derive_transitions

        venues = tuple(venues)
        checkins = tuple(checkins)
        if transitions is None:
            transitions = derive_transitions(checkins, max_gap_s=max_gap_s)
        counts = Counter(c.venue for c in checkins)
        return cls(
            venues=venues,
            checkins=checkins,
            transitions=tuple(transitions),
            categories=frozenset(v.category for v in venues),
            checkin_count_per_venue={v.id: counts.get(v.id, 0) for v in venues},
            max_gap_s=max_gap_s,
        )

    # Array views used by the feature code. Indices follow ``venues`` order.

    @cached_property
    def venue_index(self) -> dict[str, int]:
        return {v.id: i for i, v in enumerate(self.venues)}

    @cached_property
    def category_list(self) -> tuple[str, ...]:
        return tuple(sorted(self.categories))

    @cached_property
    def category_code(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.category_list)}

    @cached_property
    def lats(self) -> np.ndarray:
        return np.array([v.lat for v in self.venues], dtype=np.float64)

    @cached_property
    def lons(self) -> np.ndarray:
        return np.array([v.lon for v in self.venues], dtype=np.float64)

    @cached_property
    def codes(self) -> np.ndarray:
        cc = self.category_code
        return np.array([cc[v.category] for v in self.venues], dtype=np.int64)

    @cached_property
    def counts(self) -> np.ndarray:
        """C_p per venue index."""
        cp = self.checkin_count_per_venue
        return np.array([cp.get(v.id, 0) for v in self.venues], dtype=np.int64)

    @cached_property
    def transition_endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        vi = self.venue_index
        src = np.array([vi[t.src] for t in self.transitions], dtype=np.int64)
        dst = np.array([vi[t.dst] for t in self.transitions], dtype=np.int64)
        return src, dst

    @cached_property
    def incoming(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR layout of transitions grouped by destination venue.

        Returns ``(offsets, sources)``: the sources of transitions into venue
        ``i`` are ``sources[offsets[i]:offsets[i + 1]]``.
        """
        src, dst = self.transition_endpoints
        order = np.argsort(dst, kind="stable")
        offsets = np.zeros(len(self.venues) + 1, dtype=np.int64)
        np.cumsum(np.bincount(dst, minlength=len(self.venues)), out=offsets[1:])
        return offsets, src[order]

    @cached_property
    def index(self):
        from .spatial import build_index

        return build_index(self.venues)

    def chain_venues(self, chain: str) -> list[Venue]:
        return [v for v in self.venues if v.chain == chain]

    @property
    def chains(self) -> list[str]:
        return sorted({v.chain for v in self.venues if v.chain})


@dataclass(frozen=True)
class CandidateArea:
    """A disk around a prospective store location.

    When ``focal_venue`` is set the area is evaluated counterfactually: that
    venue, its check-ins and its transitions are invisible to every feature.
    """

    center: tuple[float, float]
    radius_m: float = DEFAULT_RADIUS_M
    focal_venue: Optional[str] = None
    target_category: Optional[str] = None
    area_id: Optional[str] = None

    def __post_init__(self):
        if not self.radius_m > 0:
            raise ValueError(f"radius_m must be positive, got {self.radius_m}")

    @property
    def id(self) -> str:
        if self.area_id is not None:
            return self.area_id
        if self.focal_venue is not None:
            return self.focal_venue
        return f"{self.center[0]:.6f},{self.center[1]:.6f}"

    @classmethod
    def for_venue(cls, venue: Venue, radius_m: float = DEFAULT_RADIUS_M) -> "CandidateArea":
        return cls(
            center=(venue.lat, venue.lon),
            radius_m=radius_m,
            focal_venue=venue.id,
            target_category=venue.category,
            area_id=venue.id,
        )


@dataclass(frozen=True)
class FeatureVector:
    area: CandidateArea
    x: tuple[float, ...]
    y: Optional[int] = None

    def __post_init__(self):
        if len(self.x) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} features, got {len(self.x)}")
        if not all(np.isfinite(self.x)):
            raise ValueError(f"non-finite feature value in {self.x}")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(FEATURE_NAMES, self.x))


def chain_areas(d: Dataset, chain: str, radius_m: float = DEFAULT_RADIUS_M) -> list[CandidateArea]:
    """One candidate area per store of ``chain``, each excluding its own store."""
    return [CandidateArea.for_venue(v, radius_m) for v in d.chain_venues(chain)]


# --------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    """A broken invariant. ``ref`` names the offending id."""

    ref: str
    detail: str = field(default="", compare=False)
    invariant: ClassVar[str] = ""

    def __str__(self):
        extra = f" ({self.detail})" if self.detail else ""
        return f"{type(self).__name__}({self.ref!r}): {self.invariant}{extra}"


class DuplicateVenueId(Violation):
    invariant = "venue ids are unique"


class EmptyCategory(Violation):
    invariant = "venue category is non-empty"


class CoordinateOutOfRange(Violation):
    invariant = "lat in [-90, 90], lon in [-180, 180]"


class UnresolvedVenue(Violation):
    invariant = "check-in venue resolves in the dataset"


class CountMismatch(Violation):
    invariant = "C_p equals the number of check-ins at p"


class CategoryMismatch(Violation):
    invariant = "category set equals the categories of the venues"


class BadTransition(Violation):
    invariant = "transition endpoints resolve, differ, and t_to >= t_from"


class TransitionMismatch(Violation):
    invariant = "transitions are derivable from the check-ins"


def validate_dataset(d: Dataset) -> list[Violation]:
    """Every broken Dataset invariant, as data. Empty when the dataset is sound."""
    out: list[Violation] = []
    seen: set[str] = set()
    for v in d.venues:
        if v.id in seen:
            out.append(DuplicateVenueId(v.id))
        seen.add(v.id)
        if not v.category:
            out.append(EmptyCategory(v.id))
        if not (-90.0 <= v.lat <= 90.0 and -180.0 <= v.lon <= 180.0):
            out.append(CoordinateOutOfRange(v.id, f"({v.lat}, {v.lon})"))

    actual = Counter()
    unresolved = False
    for c in d.checkins:
        if c.venue not in seen:
            out.append(UnresolvedVenue(c.venue))
            unresolved = True
        else:
            actual[c.venue] += 1
    for vid in sorted(seen | set(d.checkin_count_per_venue)):
        claimed = d.checkin_count_per_venue.get(vid, 0)
        if claimed != actual.get(vid, 0):
            out.append(CountMismatch(vid, f"claimed {claimed}, found {actual.get(vid, 0)}"))

    expected_categories = frozenset(v.category for v in d.venues)
    if d.categories != expected_categories:
        out.append(CategoryMismatch(",".join(sorted(d.categories ^ expected_categories))))

    for t in d.transitions:
        if t.src == t.dst or t.t_to < t.t_from or t.src not in seen or t.dst not in seen:
            out.append(BadTransition(f"{t.user}:{t.src}->{t.dst}"))

    if not unresolved:
        from .ingestion import derive_transitions

        derived = derive_transitions(d.checkins, max_gap_s=d.max_gap_s)
        if Counter(derived) != Counter(d.transitions):
            out.append(TransitionMismatch("transitions", f"{len(d.transitions)} stored, {len(derived)} derived"))
    return out
