"""Ranking metrics and the geographic cross-validation harness."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .mobility import FeatureTable, feature_table
from .model import DEFAULT_RADIUS_M, FEATURE_NAMES, Dataset, chain_areas
from .ranking import (
    DEFAULT_RIDGE_GAMMA,
    RankNetConfig,
    fit_normalizer,
    rank_by_score,
    ranknet_train,
    ridge_fit,
    ridge_predict,
)

REPORT_VERSION = 1
TEST_FRACTION = 0.33


def relevance(area_id: str, ground_truth: Sequence[str], L_size: Optional[int] = None) -> float:
    """Linear relevance from the true rank: 1 for the top area, 1/|L| for the last."""
    n = len(ground_truth) if L_size is None else L_size
    try:
        true_rank = list(ground_truth).index(area_id) + 1
    except ValueError:
        raise KeyError(f"area {area_id!r} not in ground truth") from None
    return (n - true_rank + 1) / n


def _dcg(gains: np.ndarray) -> float:
    return float(np.sum(gains / np.log2(np.arange(2, gains.size + 2))))


def ndcg_at_k(predicted: Sequence[str], truth: Sequence[str], k: int) -> float:
    n = len(truth)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}] (test set has {n} areas)")
    if len(predicted) != n or set(predicted) != set(truth):
        raise ValueError("predicted list must be a permutation of the ground truth")
    true_rank = {a: i + 1 for i, a in enumerate(truth)}
    rel = np.array([(n - true_rank[a] + 1) / n for a in predicted[:k]])
    ideal = np.array([(n - i) / n for i in range(k)])
    return _dcg(2.0**rel - 1.0) / _dcg(2.0**ideal - 1.0)


def top_x_cutoff(x_percent: float, L_size: int) -> int:
    """Number of true-rank positions that count as top-X%, never fewer than 1."""
    if not 0 < x_percent <= 100:
        raise ValueError(f"X must be in (0, 100], got {x_percent}")
    return max(1, math.ceil(Fraction(str(x_percent)) * L_size / 100))


@dataclass
class Experiment:
    seed: int
    train: list[str]
    test: list[str]
    predicted: list[str]
    truth: list[str]
    ndcg: dict[int, float] = field(default_factory=dict)

    @property
    def top_hit_rank(self) -> int:
        """True rank of the area predicted best."""
        return self.truth.index(self.predicted[0]) + 1


def accuracy_at_x(experiments: Sequence[Experiment], x_percent: float) -> float:
    """Share of experiments whose top prediction truly ranks in the top X%."""
    if not experiments:
        return float("nan")
    hits = sum(e.top_hit_rank <= top_x_cutoff(x_percent, len(e.truth)) for e in experiments)
    return hits / len(experiments)


def random_baseline(L_size: int, k: int, trials: int = 10_000, seed: int = 0) -> float:
    """Monte Carlo mean NDCG@k of uniformly random rankings of ``L_size`` areas."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 1 <= k <= L_size:
        raise ValueError(f"k={k} outside [1, {L_size}]")
    rng = np.random.default_rng(seed)
    # true rank (0-based) of the item placed at each of the first k positions
    top = np.argsort(rng.random((trials, L_size)), axis=1)[:, :k]
    gains = 2.0 ** ((L_size - top) / L_size) - 1.0
    disc = 1.0 / np.log2(np.arange(2, k + 2))
    ideal = np.sum((2.0 ** ((L_size - np.arange(k)) / L_size) - 1.0) * disc)
    return float(np.mean(gains @ disc) / ideal)


# --------------------------------------------------------------------------
# Rankers


@dataclass(frozen=True)
class RankerSpec:
    """What produces scores: a single feature, a trained model, or the truth itself.

    ``kind`` is ``"feature"``, ``"ridge"``, ``"ranknet"`` or ``"oracle"``.
    """

    kind: str
    features: tuple[str, ...] = FEATURE_NAMES

    @property
    def name(self) -> str:
        if self.kind == "feature":
            return self.features[0]
        if self.kind == "oracle":
            return "oracle"
        if self.features == FEATURE_NAMES:
            return self.kind
        return f"{self.kind}:{','.join(self.features)}"

    @classmethod
    def parse(cls, text: str) -> "RankerSpec":
        """``density`` | ``oracle`` | ``ridge`` | ``ranknet:density,incoming_flow``."""
        head, _, tail = text.partition(":")
        head = head.strip()
        if head in FEATURE_NAMES and not tail:
            return cls("feature", (head,))
        if head == "oracle":
            return cls("oracle", ())
        if head in ("ridge", "ranknet"):
            feats = tuple(f.strip() for f in tail.split(",") if f.strip()) or FEATURE_NAMES
            unknown = [f for f in feats if f not in FEATURE_NAMES]
            if unknown:
                raise ValueError(f"unknown feature(s) {unknown}")
            return cls(head, feats)
        raise ValueError(f"unknown ranker {text!r}; expected a feature name, 'oracle', 'ridge' or 'ranknet'")


@dataclass
class CVConfig:
    radius_m: float = DEFAULT_RADIUS_M
    k_list: tuple[int, ...] = (10,)
    x_list: tuple[float, ...] = (5, 10, 15, 20, 30)
    n_experiments: int = 1000
    seed: int = 0
    test_fraction: float = TEST_FRACTION
    ridge_gamma: float = DEFAULT_RIDGE_GAMMA
    ranknet: RankNetConfig = field(default_factory=RankNetConfig)
    baseline_trials: int = 10_000
    jobs: int = 1


@dataclass
class EvalReport:
    ranker: str
    chain: str
    r: float
    n_experiments: int
    seed: int
    ndcg: dict[int, float]
    accuracy: dict[float, float]
    baseline: dict[int, float]
    experiments: list[Experiment] = field(default_factory=list, repr=False)

    def ndcg_per_experiment(self, k: int) -> np.ndarray:
        return np.array([e.ndcg[k] for e in self.experiments])

    def to_json(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "ranker": self.ranker,
            "chain": self.chain,
            "r": self.r,
            "n_experiments": self.n_experiments,
            "ndcg": {str(k): v for k, v in self.ndcg.items()},
            "accuracy": {_fmt_x(x): v for x, v in self.accuracy.items()},
            "baseline": {str(k): v for k, v in self.baseline.items()},
            "seed": self.seed,
        }

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")


def _fmt_x(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else str(x)


def holdout_size(n_areas: int, fraction: float = TEST_FRACTION) -> int:
    return math.ceil(round(fraction * n_areas, 9))


def _scores(spec: RankerSpec, table: FeatureTable, train: np.ndarray, test: np.ndarray, config: CVConfig, seed: int):
    if spec.kind == "oracle":
        return table.y[test].astype(np.float64)
    if spec.kind == "feature":
        return table.column(spec.features[0])[test]
    X = table.subset(spec.features)
    norm = fit_normalizer(X[train])
    Xtr, Xte = norm.transform(X[train]), norm.transform(X[test])
    ytr = table.y[train].astype(np.float64)
    if spec.kind == "ridge":
        return ridge_predict(ridge_fit(Xtr, ytr, config.ridge_gamma), Xte)
    if spec.kind == "ranknet":
        cfg = RankNetConfig(config.ranknet.hidden, config.ranknet.learning_rate, config.ranknet.epochs, seed)
        if np.all(ytr == ytr[0]):
            return np.zeros(len(test))
        return ranknet_train(Xtr, ytr, cfg).score(Xte)
    raise ValueError(f"unknown ranker kind {spec.kind!r}")


def run_experiment(table: FeatureTable, spec: RankerSpec, config: CVConfig, i: int) -> Experiment:
    """One random 33% holdout. The experiment seed is ``config.seed + i``."""
    seed = config.seed + i
    rng = np.random.default_rng(seed)
    n = len(table.ids)
    test = np.sort(rng.choice(n, size=holdout_size(n, config.test_fraction), replace=False))
    train = np.setdiff1d(np.arange(n), test)
    scores = _scores(spec, table, train, test, config, seed)
    ids = [table.ids[j] for j in test]
    predicted = rank_by_score(dict(zip(ids, (float(s) for s in scores))))
    # ground truth: more check-ins first, ties by id
    y = dict(zip(ids, (int(v) for v in table.y[test])))
    truth = sorted(ids, key=lambda a: (-y[a], a))
    ndcg = {k: ndcg_at_k(predicted, truth, k) for k in config.k_list}
    return Experiment(seed, [table.ids[j] for j in train], ids, predicted, truth, ndcg)


def cross_validate_table(
    table: FeatureTable,
    spec: RankerSpec,
    config: CVConfig,
    chain: str = "",
) -> EvalReport:
    n = len(table.ids)
    if n < 4:
        raise ValueError(f"chain {chain!r} has {n} stores; need at least 4")
    L = holdout_size(n, config.test_fraction)
    for k in config.k_list:
        if not 1 <= k <= L:
            raise ValueError(f"k={k} exceeds the test-set size |L|={L} ({n} stores x {config.test_fraction})")
    if config.n_experiments < 1:
        raise ValueError("n_experiments must be >= 1")
    if spec.kind in ("ridge", "ranknet") and n - L < 2:
        raise ValueError(f"training fold of {n - L} areas is too small")

    def run(i):
        return run_experiment(table, spec, config, i)

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            experiments = list(pool.map(run, range(config.n_experiments)))
    else:
        experiments = [run(i) for i in range(config.n_experiments)]

    return EvalReport(
        ranker=spec.name,
        chain=chain,
        r=config.radius_m,
        n_experiments=config.n_experiments,
        seed=config.seed,
        ndcg={k: float(np.mean([e.ndcg[k] for e in experiments])) for k in config.k_list},
        accuracy={x: accuracy_at_x(experiments, x) for x in config.x_list},
        baseline={k: random_baseline(L, k, config.baseline_trials, config.seed) for k in config.k_list},
        experiments=experiments,
    )


def chain_feature_table(d: Dataset, chain: str, radius_m: float = DEFAULT_RADIUS_M) -> FeatureTable:
    areas = chain_areas(d, chain, radius_m)
    if not areas:
        raise KeyError(f"unknown chain {chain!r}")
    return feature_table(d, areas)


def cross_validate(d: Dataset, chain: str, ranker: RankerSpec | str, config: Optional[CVConfig] = None) -> EvalReport:
    """Repeated random holdout over the stores of ``chain``.

    Features are computed once per store area with that store removed, so a
    store's own check-ins never leak into any feature. Models are trained on
    the held-in areas only and rank the held-out areas.
    """
    config = config or CVConfig()
    spec = RankerSpec.parse(ranker) if isinstance(ranker, str) else ranker
    table = chain_feature_table(d, chain, config.radius_m)
    return cross_validate_table(table, spec, config, chain)
