import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar
from scipy.stats import spearmanr

from retailrank.evaluation import chain_feature_table
from retailrank.geo_features import jensen_coefficients
from retailrank.ingestion import load_dataset, transition_distances_into
from retailrank.model import validate_dataset
from retailrank.synthgen import (
    ChainSpec,
    CityConfig,
    ColocationRule,
    ConfigError,
    config_from_mapping,
    generate_city,
    sample_power_law,
    write_city,
)


def small(**kw):
    base = dict(n_venues=300, width_km=1.5, height_km=1.5, chains=[ChainSpec("C", 12, "cat00")], max_checkins=300)
    base.update(kw)
    return CityConfig(**base)


def test_same_seed_same_city():
    a, b = generate_city(small(seed=4)), generate_city(small(seed=4))
    assert a == b and a.checkins == b.checkins and a.transitions == b.transitions
    assert generate_city(small(seed=5)).venues != a.venues


def test_writes_parseable_csv(tmp_path):
    d = generate_city(small())
    write_city(d, tmp_path)
    back = load_dataset(tmp_path / "venues.csv", tmp_path / "checkins.csv")
    assert back.venues == d.venues and back.transitions == d.transitions
    assert validate_dataset(back) == []


@settings(max_examples=15, deadline=None)
@given(
    st.integers(0, 10**6),
    st.sampled_from(["power_law", "planted"]),
    st.sampled_from(["direct", "trajectory"]),
    st.integers(0, 3),
    st.floats(1.5, 3.0),
)
def test_generated_cities_are_valid(seed, popularity, mode, clusters, exponent):
    cfg = small(
        seed=seed, popularity=popularity, transition_mode=mode, clusters=clusters, exponent=exponent,
        planted={"density": 1.0} if popularity == "planted" else {},
        colocation=[ColocationRule("cat01", "cat02", 0.3)],
        n_venues=150,
    )
    d = generate_city(cfg)
    assert validate_dataset(d) == []
    assert len(d.venues) == 162 and len(d.chain_venues("C")) == 12


def test_config_errors():
    for bad in (
        dict(exponent=1.0), dict(decay_m=0), dict(n_venues=-1), dict(width_km=0), dict(popularity="zipf"),
        dict(popularity="planted"), dict(popularity="planted", planted={"area_popularity": 1}),
        dict(chains=[ChainSpec("C", 0, "x")]), dict(move_prob=1.0), dict(transition_mode="teleport"),
    ):
        with pytest.raises(ConfigError):
            generate_city(small(**bad))


def test_config_from_mapping():
    cfg = config_from_mapping({
        "n_venues": "100", "categories": "coffee:2,bar:1", "chain": "Bean:10:coffee,Pint:5:bar",
        "planted": "density:1,incoming_flow:0.5", "popularity": "planted", "affinity": "bar>coffee:3",
        "colocation": "bar>coffee:0.5:60", "origin": "40.7,-74.0", "seed": "9",
    })
    assert cfg.n_venues == 100 and cfg.seed == 9 and cfg.origin == (40.7, -74.0)
    assert [c.label for c in cfg.chains] == ["Bean", "Pint"]
    assert cfg.planted == {"density": 1.0, "incoming_flow": 0.5}
    assert cfg.affinity == {("bar", "coffee"): 3.0}
    assert cfg.colocation == [ColocationRule("bar", "coffee", 0.5, 60.0)]
    with pytest.raises(ConfigError):
        config_from_mapping({"n_venues": "lots"})
    with pytest.raises(ConfigError):
        config_from_mapping({"colour": "red"})


def _fit_exponent(x):
    """Maximum likelihood for P(C >= v) = v^-(a-1) on positive integers."""
    x = np.asarray(x, dtype=np.float64)

    def nll(a):
        return -np.sum(np.log(x ** (1 - a) - (x + 1) ** (1 - a)))

    return minimize_scalar(nll, bounds=(1.05, 5.0), method="bounded").x


def test_sampler_exponent_by_likelihood():
    x = sample_power_law(np.random.default_rng(0), 20_000, 2.0, 10**9)
    assert _fit_exponent(x) == pytest.approx(2.0, abs=0.05)
    x = sample_power_law(np.random.default_rng(1), 20_000, 2.5, 10**9)
    assert _fit_exponent(x) == pytest.approx(2.5, abs=0.05)


@pytest.fixture(scope="module")
def big_city():
    return generate_city(CityConfig(n_venues=5000, chains=[ChainSpec("C", 60, "cat00")], seed=0))


def test_checkin_ccdf_slope(big_city):
    c = np.sort(big_city.counts[big_city.counts > 0].astype(np.float64))
    uniq = np.unique(c)
    surv = 1.0 - np.searchsorted(c, uniq, side="left") / c.size
    mid = (uniq >= 3) & (uniq <= 300)
    slope = np.polyfit(np.log10(uniq[mid]), np.log10(surv[mid]), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.3)


def test_transitions_mostly_short(big_city):
    dist = transition_distances_into(big_city, [v.id for v in big_city.venues])
    assert dist.size > 1000
    assert np.mean(dist < 1000) >= 0.85


def test_planted_signal_is_recoverable():
    cfg = CityConfig(
        n_venues=1500, width_km=3, height_km=3, clusters=5, chains=[ChainSpec("C", 60, "cat00")],
        popularity="planted", planted={"density": 1.0}, seed=1,
    )
    tab = chain_feature_table(generate_city(cfg), "C")
    assert spearmanr(tab.column("density"), tab.y).statistic > 0.9


def test_colocation_creates_top_attraction():
    cfg = CityConfig(
        n_venues=2000, categories=6, chains=[], colocation=[ColocationRule("cat03", "cat04", 0.6, 40.0)], seed=2,
    )
    k = jensen_coefficients(generate_city(cfg), 200.0).kappa
    inter = {p: v for p, v in k.items() if p[0] != p[1]}
    assert max(inter, key=inter.get) in {("cat03", "cat04"), ("cat04", "cat03")}
