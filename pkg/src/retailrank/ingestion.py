"""Venue/check-in CSV parsing, transition derivation, and dataset statistics."""

from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import groupby
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .model import CheckIn, Dataset, Transition, Venue

logger = logging.getLogger(__name__)

VENUE_HEADER = ["id", "lat", "lon", "category", "chain"]
CHECKIN_HEADER = ["user", "venue", "timestamp"]
STATS_VERSION = 1


class DataError(ValueError):
    """A single problem in an input file. ``line`` is the 1-based record number."""

    def __init__(self, line: Optional[int] = None, detail: str = ""):
        self.line = line
        self.detail = detail
        where = f"record {line}" if line is not None else "file"
        super().__init__(f"{type(self).__name__} at {where}: {detail}".rstrip(": "))


class MalformedLine(DataError):
    pass


class OutOfRange(DataError):
    pass


class MalformedTimestamp(DataError):
    pass


class DuplicateId(DataError):
    def __init__(self, venue_id: str, lines: Sequence[int]):
        self.venue_id = venue_id
        self.lines = list(lines)
        super().__init__(self.lines[-1], f"id {venue_id!r} on records {self.lines}")


class ParseError(ValueError):
    """Raised when a file has one or more bad records; ``issues`` lists them all."""

    def __init__(self, path, issues: list[DataError]):
        self.path = str(path)
        self.issues = issues
        lines = "\n  ".join(str(i) for i in issues)
        super().__init__(f"{self.path}: {len(issues)} bad record(s)\n  {lines}")


class UnknownChain(ValueError):
    pass


def _read_rows(path, header: list[str], required: list[str]):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            return
        cols = [c.strip() for c in first]
        missing = [c for c in required if c not in cols]
        if missing:
            raise ParseError(path, [MalformedLine(None, f"header lacks {missing}, got {cols}")])
        pos = {c: cols.index(c) for c in header if c in cols}
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            yield lineno, row, pos


def parse_venues(path) -> list[Venue]:
    """Read a ``id,lat,lon,category,chain`` CSV. Raises :class:`ParseError`."""
    venues: list[Venue] = []
    issues: list[DataError] = []
    first_seen: dict[str, int] = {}
    dups: dict[str, list[int]] = defaultdict(list)
    for lineno, row, pos in _read_rows(path, VENUE_HEADER, VENUE_HEADER[:4]):
        needed = max(pos[c] for c in VENUE_HEADER[:4]) + 1
        if len(row) < needed:
            issues.append(MalformedLine(lineno, f"expected at least {needed} fields, got {len(row)}"))
            continue
        vid = row[pos["id"]].strip()
        category = row[pos["category"]].strip()
        chain = row[pos["chain"]].strip() if "chain" in pos and pos["chain"] < len(row) else ""
        try:
            lat = float(row[pos["lat"]])
            lon = float(row[pos["lon"]])
        except ValueError:
            issues.append(MalformedLine(lineno, "non-numeric coordinate"))
            continue
        if not vid or not category:
            issues.append(MalformedLine(lineno, "empty id or category"))
            continue
        if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
            issues.append(OutOfRange(lineno, f"({lat}, {lon})"))
            continue
        if vid in first_seen:
            dups[vid].append(lineno)
            continue
        first_seen[vid] = lineno
        venues.append(Venue(vid, lat, lon, category, chain or None))
    for vid, lines in dups.items():
        issues.append(DuplicateId(vid, [first_seen[vid], *lines]))
    if issues:
        raise ParseError(path, issues)
    return venues


def parse_checkins(path) -> list[CheckIn]:
    """Read a ``user,venue,timestamp`` CSV (integer epoch seconds)."""
    out: list[CheckIn] = []
    issues: list[DataError] = []
    for lineno, row, pos in _read_rows(path, CHECKIN_HEADER, CHECKIN_HEADER):
        if len(row) < len(pos):
            issues.append(MalformedLine(lineno, f"expected {len(pos)} fields, got {len(row)}"))
            continue
        raw_ts = row[pos["timestamp"]].strip()
        try:
            ts = int(raw_ts)
        except ValueError:
            issues.append(MalformedTimestamp(lineno, repr(raw_ts)))
            continue
        user, venue = row[pos["user"]].strip(), row[pos["venue"]].strip()
        if not user or not venue:
            issues.append(MalformedLine(lineno, "empty user or venue"))
            continue
        out.append(CheckIn(user, venue, ts))
    if issues:
        raise ParseError(path, issues)
    return out


def write_venues(path, venues: Iterable[Venue]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VENUE_HEADER)
        for v in venues:
            w.writerow([v.id, repr(v.lat), repr(v.lon), v.category, v.chain or ""])


def write_checkins(path, checkins: Iterable[CheckIn]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CHECKIN_HEADER)
        for c in checkins:
            w.writerow([c.user, c.venue, c.timestamp])


def load_dataset(venues_path, checkins_path, max_gap_s: Optional[int] = None) -> Dataset:
    venues = parse_venues(venues_path)
    checkins = parse_checkins(checkins_path)
    known = {v.id for v in venues}
    unknown = sorted({c.venue for c in checkins if c.venue not in known})
    if unknown:
        raise ParseError(checkins_path, [DataError(None, f"unknown venue ids {unknown[:10]}")])
    d = Dataset.build(venues, checkins, max_gap_s=max_gap_s)
    logger.info(
        "loaded %d venues, %d check-ins, %d transitions",
        len(d.venues), len(d.checkins), len(d.transitions),
    )
    return d


def save_dataset(d: Dataset, venues_path, checkins_path) -> None:
    write_venues(venues_path, d.venues)
    write_checkins(checkins_path, d.checkins)


def derive_transitions(checkins: Iterable[CheckIn], max_gap_s: Optional[int] = None) -> list[Transition]:
    """Consecutive check-ins of one user at different venues.

    Each user's history is ordered by ``(timestamp, venue)``. Repeated
    check-ins at the same venue are skipped without breaking the chain, so
    ``A, A, B`` yields one ``A -> B`` leaving from the second ``A``. A pair
    further apart than ``max_gap_s`` seconds is not a transition.
    """
    ordered = sorted(checkins, key=lambda c: (c.user, c.timestamp, c.venue))
    out: list[Transition] = []
    for user, group in groupby(ordered, key=lambda c: c.user):
        prev = None
        for c in group:
            if prev is not None and c.venue != prev.venue:
                if max_gap_s is None or c.timestamp - prev.timestamp <= max_gap_s:
                    out.append(Transition(prev.venue, c.venue, user, prev.timestamp, c.timestamp))
            prev = c
    return out


@dataclass
class ChainStats:
    places: int
    checkins: int
    mean_checkins: float


@dataclass
class StatsReport:
    ccdf: list[tuple[int, float]]
    chains: dict[str, ChainStats] = field(default_factory=dict)
    transition_cdf: dict[str, list[tuple[float, float]]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "version": STATS_VERSION,
            "ccdf": [[v, f] for v, f in self.ccdf],
            "chains": {
                k: {"places": s.places, "checkins": s.checkins, "mean_checkins": s.mean_checkins}
                for k, s in self.chains.items()
            },
            "transition_cdf": {k: [[v, f] for v, f in cdf] for k, cdf in self.transition_cdf.items()},
        }

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")


def ccdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """Survival function ``P(X >= v)`` at every distinct value ``v``."""
    vals = np.sort(np.asarray(values))
    n = len(vals)
    if n == 0:
        return []
    uniq, first = np.unique(vals, return_index=True)
    return [(u.item(), (n - i) / n) for u, i in zip(uniq, first)]


def cdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """Empirical ``P(X <= v)`` at every distinct value ``v``."""
    vals = np.sort(np.asarray(values, dtype=np.float64))
    n = len(vals)
    if n == 0:
        return []
    uniq = np.unique(vals)
    upto = np.searchsorted(vals, uniq, side="right")
    return [(u.item(), k / n) for u, k in zip(uniq, upto)]


def chain_stats(d: Dataset, chain: str) -> ChainStats:
    stores = d.chain_venues(chain)
    if not stores:
        raise UnknownChain(chain)
    total = sum(d.checkin_count_per_venue[v.id] for v in stores)
    return ChainStats(len(stores), total, total / len(stores))


def transition_distances_into(d: Dataset, venue_ids: Iterable[str]) -> np.ndarray:
    """Haversine lengths of all transitions ending at any of ``venue_ids``."""
    targets = {d.venue_index[v] for v in venue_ids}
    src, dst = d.transition_endpoints
    mask = np.isin(dst, list(targets))
    out = np.empty(int(mask.sum()))
    for k, (s, t) in enumerate(zip(src[mask], dst[mask])):
        out[k] = _kernels.haversine_many(d.lats[t], d.lons[t], d.lats[s : s + 1], d.lons[s : s + 1])[0]
    return out


def dataset_stats(d: Dataset, chains: Optional[Sequence[str]] = None) -> StatsReport:
    """Check-in CCDF over all venues plus per-chain popularity and transition distances."""
    chains = list(d.chains if chains is None else chains)
    unknown = [c for c in chains if not d.chain_venues(c)]
    if unknown:
        raise UnknownChain(f"unknown chain(s): {unknown}")
    report = StatsReport(ccdf=[(int(v), f) for v, f in ccdf(d.counts)])
    for chain in chains:
        report.chains[chain] = chain_stats(d, chain)
        dists = transition_distances_into(d, [v.id for v in d.chain_venues(chain)])
        report.transition_cdf[chain] = cdf(dists)
    return report
