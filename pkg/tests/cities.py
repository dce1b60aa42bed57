"""Small deterministic worlds shared by the test modules."""

from __future__ import annotations

import random

from retailrank.model import CheckIn, Dataset, Venue

# lower Manhattan
LAT0, LON0 = 40.7128, -74.0060
M_PER_DEG_LAT = 6_371_000.0 * 3.141592653589793 / 180.0


def random_city(seed: int, n_venues: int = 30, n_cats: int = 3, span_deg: float = 0.006, n_checkins: int = 120):
    """Random venues in a ~670 m box and check-ins from a handful of users."""
    rng = random.Random(seed)
    cats = [f"c{i}" for i in range(n_cats)]
    venues = [
        Venue(
            f"v{i:03d}",
            LAT0 + rng.uniform(0, span_deg),
            LON0 + rng.uniform(0, span_deg),
            rng.choice(cats),
            "S" if i % 4 == 0 else None,
        )
        for i in range(n_venues)
    ]
    users = [f"u{j}" for j in range(max(2, n_checkins // 10))]
    checkins = [
        CheckIn(rng.choice(users), rng.choice(venues).id, 1_000_000 + rng.randrange(100_000))
        for _ in range(n_checkins)
    ]
    return Dataset.build(venues, checkins)


def tiny_city():
    """Three venues along a meridian, 100 m apart, and two users."""
    step = 100.0 / M_PER_DEG_LAT
    venues = [
        Venue("a", LAT0, LON0, "coffee", "Bean"),
        Venue("b", LAT0 + step, LON0, "bar"),
        Venue("c", LAT0 + 2 * step, LON0, "coffee", "Bean"),
    ]
    checkins = [
        CheckIn("u1", "a", 10),
        CheckIn("u1", "b", 20),
        CheckIn("u1", "c", 30),
        CheckIn("u2", "c", 15),
        CheckIn("u2", "c", 25),
        CheckIn("u2", "a", 35),
    ]
    return Dataset.build(venues, checkins)
