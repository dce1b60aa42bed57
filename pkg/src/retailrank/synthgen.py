"""Seeded synthetic cities: venues, power-law popularity, distance-decayed transitions.

Transitions are sampled first and then written out as per-user check-in
sessions, so running :func:`~retailrank.ingestion.derive_transitions` on the
generated check-ins reproduces them exactly. Check-ins that are not part of a
movement belong to users who only ever visit that one venue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from . import _kernels
from .geo_features import competitiveness, density, entropy, jensen_coefficients, jensen_quality
from .ingestion import save_dataset
from .mobility import incoming_flow, transition_density
from .model import DEFAULT_RADIUS_M, CandidateArea, CheckIn, Dataset, Venue
from .spatial import build_index

M_PER_DEG_LAT = _kernels.EARTH_RADIUS_M * math.pi / 180.0
START_TS = 1_333_238_400  # 2012-04-01, inside the collection window of real LBSN crawls
YEAR_S = 365 * 24 * 3600

# Features that can carry a planted signal exactly: they depend on venue
# positions and transitions only, never on the chain stores' own check-ins.
PLANTABLE = ("density", "entropy", "competitiveness", "jensen_quality", "transition_density", "incoming_flow")


class ConfigError(ValueError):
    pass


@dataclass
class ChainSpec:
    label: str
    stores: int
    category: str


@dataclass
class ColocationRule:
    """Place ``fraction`` of ``follower`` venues within ``spread_m`` of ``anchor`` venues."""

    anchor: str
    follower: str
    fraction: float = 0.5
    spread_m: float = 60.0


@dataclass
class CityConfig:
    width_km: float = 4.0
    height_km: float = 4.0
    origin: tuple[float, float] = (40.70, -74.02)
    n_venues: int = 2000
    categories: Mapping[str, float] | int = 8
    chains: list[ChainSpec] = field(default_factory=lambda: [ChainSpec("Chain", 60, "cat00")])
    popularity: str = "power_law"
    exponent: float = 2.0
    max_checkins: int = 10_000
    planted: Mapping[str, float] = field(default_factory=dict)
    planted_level: float = 100.0
    planted_noise: float = 0.0
    decay_m: float = 300.0
    move_prob: float = 0.3
    affinity: Mapping[tuple[str, str], float] = field(default_factory=dict)
    colocation: list[ColocationRule] = field(default_factory=list)
    clusters: int = 0
    cluster_sigma_m: float = 300.0
    cluster_fraction: float = 0.5
    transition_mode: str = "direct"
    radius_m: float = DEFAULT_RADIUS_M
    seed: int = 0

    @property
    def category_weights(self) -> dict[str, float]:
        if isinstance(self.categories, int):
            cats = {f"cat{i:02d}": 1.0 for i in range(self.categories)}
        else:
            cats = {str(k): float(v) for k, v in self.categories.items()}
        return cats

    def validate(self) -> None:
        problems = []
        if self.width_km <= 0 or self.height_km <= 0:
            problems.append("bounding box must have positive size")
        if self.n_venues < 0:
            problems.append("n_venues must be non-negative")
        cats = self.category_weights
        if not cats or any(w < 0 for w in cats.values()) or sum(cats.values()) <= 0:
            problems.append("categories need positive total weight")
        for ch in self.chains:
            if ch.stores <= 0:
                problems.append(f"chain {ch.label!r} needs a positive store count")
        if self.n_venues + sum(ch.stores for ch in self.chains) <= 0:
            problems.append("city has no venues")
        if self.popularity not in ("power_law", "planted"):
            problems.append(f"unknown popularity model {self.popularity!r}")
        if not self.exponent > 1:
            problems.append("power-law exponent must exceed 1")
        if self.max_checkins < 1:
            problems.append("max_checkins must be >= 1")
        if self.popularity == "planted":
            if not self.planted:
                problems.append("planted popularity needs at least one feature weight")
            bad = [f for f in self.planted if f not in PLANTABLE]
            if bad:
                problems.append(f"cannot plant {bad}; choose from {PLANTABLE}")
        if not self.decay_m > 0:
            problems.append("decay_m must be positive")
        if not 0 <= self.move_prob < 1:
            problems.append("move_prob must be in [0, 1)")
        if self.transition_mode not in ("direct", "trajectory"):
            problems.append(f"unknown transition_mode {self.transition_mode!r}")
        if self.clusters < 0 or not 0 <= self.cluster_fraction <= 1 or self.cluster_sigma_m <= 0:
            problems.append("bad cluster settings")
        if not self.radius_m > 0:
            problems.append("radius_m must be positive")
        if problems:
            raise ConfigError("; ".join(problems))


def sample_power_law(rng: np.random.Generator, n: int, exponent: float, cap: int) -> np.ndarray:
    """Integers with ``P(C >= v) = v^-(exponent - 1)`` for ``1 <= v <= cap``."""
    u = 1.0 - rng.random(n)  # (0, 1]
    vals = np.floor(u ** (-1.0 / (exponent - 1.0)))
    return np.minimum(vals, cap).astype(np.int64)


class _Layout:
    """Venue positions in meters inside the box."""

    def __init__(self, cfg: CityConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.w = cfg.width_km * 1000.0
        self.h = cfg.height_km * 1000.0
        self.centers = np.column_stack([rng.random(cfg.clusters) * self.w, rng.random(cfg.clusters) * self.h])

    def _clip(self, xy: np.ndarray) -> np.ndarray:
        return np.column_stack([np.clip(xy[:, 0], 0, self.w), np.clip(xy[:, 1], 0, self.h)])

    def sample(self, n: int) -> np.ndarray:
        rng, cfg = self.rng, self.cfg
        xy = np.column_stack([rng.random(n) * self.w, rng.random(n) * self.h])
        if cfg.clusters and n:
            hit = rng.random(n) < cfg.cluster_fraction
            which = rng.integers(0, cfg.clusters, size=int(hit.sum()))
            xy[hit] = self.centers[which] + rng.normal(0.0, cfg.cluster_sigma_m, size=(int(hit.sum()), 2))
        return self._clip(xy)

    def to_latlon(self, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        lat0, lon0 = self.cfg.origin
        lats = lat0 + xy[:, 1] / M_PER_DEG_LAT
        lons = lon0 + xy[:, 0] / (M_PER_DEG_LAT * math.cos(math.radians(lat0)))
        return lats, lons


def _place_venues(cfg: CityConfig, rng: np.random.Generator) -> list[Venue]:
    layout = _Layout(cfg, rng)
    weights = cfg.category_weights
    names = list(weights)
    p = np.array([weights[c] for c in names])
    cat_idx = rng.choice(len(names), size=cfg.n_venues, p=p / p.sum()) if cfg.n_venues else np.zeros(0, int)
    cats = [names[i] for i in cat_idx]
    xy = layout.sample(cfg.n_venues)

    chains: list[Optional[str]] = [None] * cfg.n_venues
    for ch in cfg.chains:
        xy = np.vstack([xy, layout.sample(ch.stores)])
        cats += [ch.category] * ch.stores
        chains += [ch.label] * ch.stores

    cats_arr = np.array(cats, dtype=object)
    for rule in cfg.colocation:
        anchors = np.flatnonzero(cats_arr == rule.anchor)
        followers = np.flatnonzero((cats_arr == rule.follower) & np.array([c is None for c in chains]))
        if anchors.size == 0 or followers.size == 0:
            raise ConfigError(f"colocation rule {rule.anchor}->{rule.follower} has no venues to act on")
        moved = followers[rng.random(followers.size) < rule.fraction]
        base = xy[rng.choice(anchors, size=moved.size)]
        xy[moved] = layout._clip(base + rng.normal(0.0, rule.spread_m, size=(moved.size, 2)))

    lats, lons = layout.to_latlon(xy)
    return [
        Venue(f"v{i:05d}", float(lats[i]), float(lons[i]), cats[i], chains[i])
        for i in range(len(cats))
    ]


class _Destinations:
    """Distance-decayed, affinity-weighted destination sampler with per-source caching."""

    def __init__(self, cfg: CityConfig, venues: list[Venue], eligible: np.ndarray, rng: np.random.Generator):
        self.cfg = cfg
        self.venues = venues
        self.index = build_index(venues)
        self.eligible = eligible
        self.rng = rng
        self.cutoff = 8.0 * cfg.decay_m
        cats = sorted({v.category for v in venues})
        code = {c: i for i, c in enumerate(cats)}
        self.codes = np.array([code[v.category] for v in venues], dtype=np.int64)
        self.affinity = np.ones((len(cats), len(cats)))
        for (a, b), w in cfg.affinity.items():
            if a in code and b in code:
                self.affinity[code[a], code[b]] = w
        self._cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def _weights(self, src: int):
        if src not in self._cache:
            v = self.venues[src]
            cand = self.index.query_indices((v.lat, v.lon), self.cutoff)
            cand = cand[(cand != src) & self.eligible[cand]]
            d = self.index.distances((v.lat, v.lon), cand)
            aff = self.affinity[self.codes[src], self.codes[cand]]
            w = np.exp(-d / self.cfg.decay_m) * aff
            total = w.sum()
            self._cache[src] = (cand, w / total if total > 0 else w)
        return self._cache[src]

    def sample(self, src: int, n: int) -> np.ndarray:
        cand, p = self._weights(src)
        if n == 0 or cand.size == 0 or not p.sum() > 0:
            return np.empty(0, dtype=np.int64)
        return self.rng.choice(cand, size=n, p=p)


def _walks(cfg: CityConfig, base: np.ndarray, sources: np.ndarray, dest: _Destinations, rng) -> list[list[int]]:
    walks = []
    for p in sources:
        n_moves = int(rng.binomial(base[p], cfg.move_prob))
        for first in dest.sample(int(p), n_moves):
            walk = [int(p), int(first)]
            if cfg.transition_mode == "trajectory":
                while len(walk) < 20 and rng.random() < cfg.move_prob:
                    nxt = dest.sample(walk[-1], 1)
                    if nxt.size == 0:
                        break
                    walk.append(int(nxt[0]))
            walks.append(walk)
    return walks


def _stationary_checkins(venue: Venue, n: int, rng) -> list[CheckIn]:
    ts = START_TS + rng.integers(0, YEAR_S, size=n)
    return [CheckIn(f"s{venue.id}-{j % 5}", venue.id, int(t)) for j, t in enumerate(ts)]


def _planted_signal(cfg: CityConfig, d: Dataset, stores: list[int]) -> np.ndarray:
    areas = [CandidateArea.for_venue(d.venues[i], cfg.radius_m) for i in stores]
    index = d.index
    coeffs = jensen_coefficients(d, cfg.radius_m) if "jensen_quality" in cfg.planted else None
    funcs = {
        "density": lambda a: density(a, index),
        "entropy": lambda a: entropy(a, index),
        "competitiveness": lambda a: competitiveness(a, index),
        "jensen_quality": lambda a: jensen_quality(a, index, coeffs),
        "transition_density": lambda a: transition_density(a, d, index),
        "incoming_flow": lambda a: incoming_flow(a, d, index),
    }
    signal = np.zeros(len(stores))
    for name, weight in cfg.planted.items():
        vals = np.array([funcs[name](a) for a in areas])
        scale = np.mean(np.abs(vals))
        signal += weight * vals / (scale if scale > 0 else 1.0)
    return signal


def generate_city(cfg: CityConfig) -> Dataset:
    """Build a deterministic synthetic :class:`Dataset` from ``cfg``."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    venues = _place_venues(cfg, rng)
    n = len(venues)
    is_chain = np.array([v.chain is not None for v in venues], dtype=bool)
    planted = cfg.popularity == "planted"

    base = sample_power_law(rng, n, cfg.exponent, cfg.max_checkins)
    if planted:
        base[is_chain] = 0
    eligible = ~is_chain if planted else np.ones(n, dtype=bool)
    dest = _Destinations(cfg, venues, eligible, rng)
    walks = _walks(cfg, base, np.flatnonzero(eligible & (base > 0)), dest, rng)

    checkins: list[CheckIn] = []
    starts = np.zeros(n, dtype=np.int64)
    for k, walk in enumerate(walks):
        t = START_TS + int(rng.integers(0, YEAR_S))
        for v in walk:
            checkins.append(CheckIn(f"m{k:06d}", venues[v].id, t))
            t += int(rng.integers(300, 7200))
        starts[walk[0]] += 1
    for i in range(n):
        left = int(base[i] - starts[i])
        if left > 0:
            checkins.extend(_stationary_checkins(venues[i], left, rng))

    if planted:
        d0 = Dataset.build(venues, checkins)
        stores = list(np.flatnonzero(is_chain))
        signal = _planted_signal(cfg, d0, stores)
        noise = np.exp(rng.normal(0.0, cfg.planted_noise, size=len(stores))) if cfg.planted_noise > 0 else 1.0
        y = np.maximum(np.rint(cfg.planted_level * signal * noise), 0).astype(np.int64)
        for i, c in zip(stores, y):
            checkins.extend(_stationary_checkins(venues[i], int(c), rng))

    checkins.sort(key=lambda c: (c.timestamp, c.user, c.venue))
    return Dataset.build(venues, checkins)


def write_city(d: Dataset, outdir) -> tuple[Path, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    vpath, cpath = outdir / "venues.csv", outdir / "checkins.csv"
    save_dataset(d, vpath, cpath)
    return vpath, cpath


# --------------------------------------------------------------------------
# Flat key=value configs


def _pairs(text: str, sep: str = ",") -> list[str]:
    return [p.strip() for p in text.split(sep) if p.strip()]


def config_from_mapping(values: Mapping[str, str]) -> CityConfig:
    """Build a :class:`CityConfig` from string values, e.g. a parsed config file.

    Structured keys use compact forms::

        categories = coffee:2,bar:1,office:1     (or a plain count)
        chain      = Starbucks:60:coffee,Dunkin:40:coffee
        planted    = density:1,incoming_flow:1
        affinity   = office>coffee:3
        colocation = station>coffee:0.5:60
    """
    cfg = CityConfig()
    simple = {
        "width_km": float, "height_km": float, "n_venues": int, "exponent": float,
        "max_checkins": int, "planted_level": float, "planted_noise": float, "decay_m": float,
        "move_prob": float, "clusters": int, "cluster_sigma_m": float, "cluster_fraction": float,
        "radius_m": float, "seed": int, "popularity": str, "transition_mode": str,
    }
    try:
        for key, raw in values.items():
            raw = str(raw).strip()
            if key in simple:
                setattr(cfg, key, simple[key](raw))
            elif key == "origin":
                lat, lon = (float(x) for x in _pairs(raw))
                cfg.origin = (lat, lon)
            elif key == "categories":
                if raw.isdigit():
                    cfg.categories = int(raw)
                else:
                    cats = {}
                    for item in _pairs(raw):
                        name, _, w = item.partition(":")
                        cats[name.strip()] = float(w) if w else 1.0
                    cfg.categories = cats
            elif key in ("chain", "chains"):
                cfg.chains = []
                for item in _pairs(raw):
                    label, stores, category = (s.strip() for s in item.split(":"))
                    cfg.chains.append(ChainSpec(label, int(stores), category))
            elif key == "planted":
                cfg.planted = {k.strip(): float(w) for k, w in (item.split(":") for item in _pairs(raw))}
            elif key == "affinity":
                aff = {}
                for item in _pairs(raw):
                    pair, w = item.rsplit(":", 1)
                    a, b = pair.split(">")
                    aff[(a.strip(), b.strip())] = float(w)
                cfg.affinity = aff
            elif key == "colocation":
                rules = []
                for item in _pairs(raw, ";"):
                    pair, *rest = item.split(":")
                    a, b = pair.split(">")
                    rule = ColocationRule(a.strip(), b.strip())
                    if rest:
                        rule.fraction = float(rest[0])
                    if len(rest) > 1:
                        rule.spread_m = float(rest[1])
                    rules.append(rule)
                cfg.colocation = rules
            else:
                raise ConfigError(f"unknown city config key {key!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from exc
    cfg.validate()
    return cfg
