"""Brute-force reference implementations used as test oracles.

Everything here is written straight from the feature definitions with plain
loops and the ``math`` module. Nothing is imported from the package except the
frozen domain types, so agreement with the fast code path is meaningful.
"""

from __future__ import annotations

import math
from collections import Counter

R_EARTH = 6_371_000.0


def dist(lat1, lon1, lat2, lon2):
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * R_EARTH * math.asin(min(1.0, math.sqrt(h)))


def within(venues, center, r, exclude=None):
    return [v for v in venues if v.id != exclude and dist(center[0], center[1], v.lat, v.lon) < r]


def counts_by_category(venues):
    return Counter(v.category for v in venues)


def density(venues, area):
    return len(within(venues, area.center, area.radius_m, area.focal_venue))


def entropy(venues, area):
    c = counts_by_category(within(venues, area.center, area.radius_m, area.focal_venue))
    n = sum(c.values())
    if n == 0:
        return 0.0
    return -sum(k / n * math.log2(k / n) for k in c.values())


def competitiveness(venues, area):
    inside = within(venues, area.center, area.radius_m, area.focal_venue)
    if not inside:
        return 0.0
    return -sum(v.category == area.target_category for v in inside) / len(inside)


def kappa_table(venues, r):
    """Coefficient for every ordered category pair, summing over venues of the source category."""
    cats = sorted({v.category for v in venues})
    n = len(venues)
    per = Counter(v.category for v in venues)
    nb = {v.id: counts_by_category(within(venues, (v.lat, v.lon), r, v.id)) for v in venues}
    table = {}
    for gp in cats:
        for gl in cats:
            s = 0.0
            for p in venues:
                if p.category != gp:
                    continue
                c = nb[p.id]
                den = sum(c.values()) - c[gp]
                if den > 0:
                    s += c[gl] / den
            table[(gp, gl)] = (n - per[gp]) / (per[gp] * per[gl]) * s
    return table


def baseline_mean(venues, r, gp, gl, exclude=None):
    """Mean number of gp neighbors around gl venues, pretending ``exclude`` does not exist."""
    world = [v for v in venues if v.id != exclude]
    hosts = [v for v in world if v.category == gl]
    if not hosts:
        return 0.0
    total = 0
    for h in hosts:
        total += sum(1 for v in within(world, (h.lat, h.lon), r, h.id) if v.category == gp)
    return total / len(hosts)


def jensen_quality(venues, area, kappa):
    c = counts_by_category(within(venues, area.center, area.radius_m, area.focal_venue))
    total = 0.0
    for (gp, gl), k in kappa.items():
        if gl != area.target_category or k <= 0:
            continue
        total += math.log(k) * (c[gp] - baseline_mean(venues, area.radius_m, gp, gl, area.focal_venue))
    return total


def _visible_transitions(transitions, focal):
    return [t for t in transitions if focal is None or (t.src != focal and t.dst != focal)]


def area_popularity(venues, checkins, area):
    ids = {v.id for v in within(venues, area.center, area.radius_m, area.focal_venue)}
    return sum(1 for c in checkins if c.venue in ids)


def _d(by_id, vid, center):
    v = by_id[vid]
    return dist(center[0], center[1], v.lat, v.lon)


def transition_density(venues, transitions, area):
    by_id = {v.id: v for v in venues}
    r, c = area.radius_m, area.center
    return sum(
        1
        for t in _visible_transitions(transitions, area.focal_venue)
        if _d(by_id, t.src, c) < r and _d(by_id, t.dst, c) < r
    )


def incoming_flow(venues, transitions, area):
    by_id = {v.id: v for v in venues}
    r, c = area.radius_m, area.center
    return sum(
        1
        for t in _visible_transitions(transitions, area.focal_venue)
        if _d(by_id, t.src, c) > r and _d(by_id, t.dst, c) < r
    )


def sigma_table(venues, checkins, transitions):
    cp = Counter(c.venue for c in checkins)
    cat = {v.id: v.category for v in venues}
    cats = sorted(set(cat.values()))
    out = {}
    for gp in cats:
        srcs = [v.id for v in venues if v.category == gp and cp[v.id] > 0]
        if not srcs:
            continue
        for gl in cats:
            fr = [sum(1 for t in transitions if t.src == p and cat[t.dst] == gl) / cp[p] for p in srcs]
            out[(gp, gl)] = sum(fr) / len(fr)
    return out


def rho_table(venues, sigma):
    n = len(venues)
    per = Counter(v.category for v in venues)
    return {(a, b): s * (n - per[a]) / (per[a] * per[b]) for (a, b), s in sigma.items()}


def transition_quality(venues, checkins, area, sigma):
    cp = Counter(c.venue for c in checkins)
    return sum(
        sigma.get((v.category, area.target_category), 0.0) * cp[v.id]
        for v in within(venues, area.center, area.radius_m, area.focal_venue)
    )


def all_features(venues, checkins, transitions, area, kappa, sigma):
    return (
        density(venues, area),
        entropy(venues, area),
        competitiveness(venues, area),
        jensen_quality(venues, area, kappa),
        area_popularity(venues, checkins, area),
        transition_density(venues, transitions, area),
        incoming_flow(venues, transitions, area),
        transition_quality(venues, checkins, area, sigma),
    )


def dcg(gains):
    return sum(g / math.log2(i + 2) for i, g in enumerate(gains))


def ndcg(predicted, truth, k):
    n = len(truth)
    rank = {a: i + 1 for i, a in enumerate(truth)}
    got = [2 ** ((n - rank[a] + 1) / n) - 1 for a in predicted[:k]]
    ideal = [2 ** ((n - i) / n) - 1 for i in range(k)]
    return dcg(got) / dcg(ideal)
