import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from cities import LAT0, LON0, M_PER_DEG_LAT, random_city
from retailrank.geo_features import (
    JensenCoefficients,
    competitiveness,
    density,
    entropy,
    jensen_coefficients,
    jensen_quality,
)
from retailrank.model import CandidateArea, Dataset, Venue
from retailrank.spatial import build_index


def ring(cats, radius_m=50.0, focal=None):
    """Venues on a circle around the origin, one per entry of ``cats``."""
    out = []
    for i, c in enumerate(cats):
        a = 2 * math.pi * i / len(cats)
        out.append(
            Venue(
                f"n{i}",
                LAT0 + radius_m * math.sin(a) / M_PER_DEG_LAT,
                LON0 + radius_m * math.cos(a) / (M_PER_DEG_LAT * math.cos(math.radians(LAT0))),
                c,
            )
        )
    if focal:
        out.append(Venue("f", LAT0, LON0, focal))
    return out


def area(target="t", focal=None, r=200.0):
    return CandidateArea((LAT0, LON0), r, focal, target)


def test_density_examples():
    assert density(area(), build_index([])) == 0
    idx = build_index(ring(["a"] * 5, focal="t"))
    assert density(area(focal="f"), idx) == 5
    assert density(area(), idx) == 6


def test_entropy_examples():
    assert entropy(area(), build_index(ring(["a"] * 3))) == 0.0
    assert entropy(area(), build_index(ring(["a", "b"] * 3))) == 1.0
    assert entropy(area(), build_index(ring(list("aaaabbcc")))) == 1.5
    assert entropy(area(), build_index([])) == 0.0


def test_competitiveness_examples():
    assert competitiveness(area(), build_index(ring(["a"] * 10))) == 0.0
    assert competitiveness(area(), build_index(ring(["t"] * 4))) == -1.0
    assert competitiveness(area(), build_index(ring(["t"] * 3 + ["a"] * 9))) == -0.25
    assert competitiveness(area(), build_index([])) == 0.0
    with pytest.raises(ValueError):
        competitiveness(CandidateArea((LAT0, LON0)), build_index([]))


def test_jensen_quality_arithmetic():
    coeffs = JensenCoefficients({("a", "t"): math.e}, {("a", "t"): 1.0}, 200.0)
    assert jensen_quality(area(), build_index(ring(["a"] * 3)), coeffs) == pytest.approx(2.0, abs=1e-12)


def test_jensen_quality_zero_at_baseline():
    coeffs = JensenCoefficients({("a", "t"): 2.0, ("b", "t"): 0.5, ("c", "t"): 0.0}, {("a", "t"): 2.0, ("b", "t"): 1.0}, 200.0)
    assert jensen_quality(area(), build_index(ring(["a", "a", "b"])), coeffs) == 0.0


def test_jensen_radius_mismatch():
    coeffs = JensenCoefficients({}, {}, 100.0)
    with pytest.raises(ValueError):
        jensen_quality(area(), build_index([]), coeffs)


def test_six_venue_kappa_by_hand():
    # two clusters 1 km apart: {a, a, b} and {b, b, a}
    step = 40.0 / M_PER_DEG_LAT
    far = 1000.0 / M_PER_DEG_LAT
    vs = [
        Venue("1", LAT0, LON0, "a"), Venue("2", LAT0 + step, LON0, "a"), Venue("3", LAT0 + 2 * step, LON0, "b"),
        Venue("4", LAT0 + far, LON0, "b"), Venue("5", LAT0 + far + step, LON0, "b"), Venue("6", LAT0 + far + 2 * step, LON0, "a"),
    ]
    d = Dataset.build(vs, ())
    k = jensen_coefficients(d, 200.0)
    # a venues: 1 and 2 see one b and one a each -> ratio N_b/(N - N_a) = 1; venue 6 sees two b -> 1
    assert k.kappa[("a", "b")] == pytest.approx((6 - 3) / (3 * 3) * 3)
    # N_a/(N - N_a) for a venues: 1, 1, 0
    assert k.kappa[("a", "a")] == pytest.approx((6 - 3) / (3 * 3) * 2)
    assert k.baseline_mean[("b", "a")] == pytest.approx((1 + 1 + 2) / 3)
    ref = oracle.kappa_table(vs, 200.0)
    for pair, v in ref.items():
        assert k.kappa[pair] == pytest.approx(v, rel=1e-12)


def test_single_category_table():
    d = Dataset.build(ring(["a"] * 4), ())
    assert list(jensen_coefficients(d, 200.0).kappa) == [("a", "a")]


def test_ten_venue_jensen_term_by_term():
    d = random_city(3, n_venues=10, n_cats=2, span_deg=0.003)
    coeffs = jensen_coefficients(d, 200.0)
    kappa = oracle.kappa_table(d.venues, 200.0)
    for v in d.venues:
        a = CandidateArea.for_venue(v)
        assert jensen_quality(a, d.index, coeffs) == pytest.approx(oracle.jensen_quality(d.venues, a, kappa), rel=1e-9, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(20, 400), st.floats(20, 400))
def test_density_monotone_in_radius(seed, r1, r2):
    d = random_city(seed)
    lo, hi = sorted((r1, r2))
    c = d.venues[0]
    a1 = CandidateArea((c.lat, c.lon), lo, c.id, c.category)
    a2 = CandidateArea((c.lat, c.lon), hi, c.id, c.category)
    assert density(a1, d.index) <= density(a2, d.index)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.permutations(["c0", "c1", "c2"]))
def test_entropy_relabel_invariant(seed, perm):
    d = random_city(seed)
    rename = dict(zip(["c0", "c1", "c2"], perm))
    vs2 = [Venue(v.id, v.lat, v.lon, rename[v.category]) for v in d.venues]
    a = CandidateArea((LAT0 + 0.003, LON0 + 0.003), 250.0)
    assert entropy(a, build_index(vs2)) == pytest.approx(entropy(a, d.index), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_competitiveness_zero_without_target(seed):
    d = random_city(seed)
    a = CandidateArea((LAT0 + 0.003, LON0 + 0.003), 300.0, None, "absent")
    assert competitiveness(a, d.index) == 0.0


def test_kappa_null_model_single_seed():
    rng = random.Random(0)
    vs = [Venue(f"v{i}", LAT0 + rng.uniform(0, 0.02), LON0 + rng.uniform(0, 0.02), rng.choice("ab")) for i in range(1500)]
    k = jensen_coefficients(Dataset.build(vs, ()), 200.0)
    assert all(0.7 < v < 1.3 for v in k.kappa.values())
