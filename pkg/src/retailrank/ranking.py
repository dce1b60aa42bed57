"""Feature normalization, ridge regression-to-rank, and a pairwise RankNet ranker."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

DEFAULT_RIDGE_GAMMA = 1e-8


def _as_matrix(X) -> np.ndarray:
    """Accept a 2-D array or a list of FeatureVectors."""
    if len(X) and hasattr(X[0], "x"):
        X = [fv.x for fv in X]
    A = np.asarray(X, dtype=np.float64)
    return A.reshape(-1, 1) if A.ndim == 1 else A


@dataclass
class Normalizer:
    """Z-score parameters learned on a training fold (population std).

    Features with zero variance on the training fold map to a constant 0.
    """

    mean: np.ndarray
    std: np.ndarray

    @property
    def zero_variance(self) -> np.ndarray:
        return self.std == 0

    def transform(self, X) -> np.ndarray:
        X = _as_matrix(X)
        safe = np.where(self.zero_variance, 1.0, self.std)
        Z = (X - self.mean) / safe
        Z[:, self.zero_variance] = 0.0
        return Z

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Normalizer":
        return cls(np.asarray(obj["mean"], dtype=np.float64), np.asarray(obj["std"], dtype=np.float64))


def fit_normalizer(train) -> Normalizer:
    X = _as_matrix(train)
    if X.shape[0] < 2:
        raise ValueError(f"need at least 2 training vectors, got {X.shape[0]}")
    mean, std = X.mean(axis=0), X.std(axis=0)
    # a constant column can come out with a roundoff-sized std; treat it as constant
    std[std <= 1e-12 * np.maximum(np.abs(mean), 1.0)] = 0.0
    return Normalizer(mean, std)


@dataclass
class RidgeModel:
    weights: np.ndarray
    intercept: float = 0.0
    ridge_gamma: float = DEFAULT_RIDGE_GAMMA

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist(), "intercept": self.intercept, "ridge_gamma": self.ridge_gamma}


def ridge_objective(X, y, w, b=0.0, gamma=DEFAULT_RIDGE_GAMMA) -> float:
    """``||Xw + b - y||^2 + gamma ||w||^2``; the intercept is not penalized."""
    r = _as_matrix(X) @ w + b - np.asarray(y, dtype=np.float64)
    return float(r @ r + gamma * (w @ w))


def ridge_fit(X, y, gamma: float = DEFAULT_RIDGE_GAMMA, fit_intercept: bool = True) -> RidgeModel:
    """Exact minimizer of :func:`ridge_objective` via the normal equations."""
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise ValueError(f"X has {X.shape[0]} rows, y has {y.shape[0]}")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    m = X.shape[1]
    A = np.column_stack([X, np.ones(len(X))]) if fit_intercept else X
    penalty = np.full(A.shape[1], float(gamma))
    if fit_intercept:
        penalty[-1] = 0.0
    lhs = A.T @ A + np.diag(penalty)
    try:
        sol = np.linalg.solve(lhs, A.T @ y)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"singular normal equations at gamma={gamma}") from exc
    if not np.all(np.isfinite(sol)):
        raise np.linalg.LinAlgError(f"non-finite ridge solution at gamma={gamma}")
    return RidgeModel(sol[:m].copy(), float(sol[m]) if fit_intercept else 0.0, float(gamma))


def ridge_predict(model: RidgeModel, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.weights.shape[0]:
        raise ValueError(f"expected {model.weights.shape[0]} features, got {x.shape[-1]}")
    out = x @ model.weights + model.intercept
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# RankNet


@dataclass
class RankNetConfig:
    hidden: int = 10
    learning_rate: float = 0.5
    epochs: int = 300
    seed: int = 0


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def ranknet_loss(o, target=1.0):
    """Pairwise cross-entropy ``-P*o + log(1 + e^o)`` for score difference ``o``."""
    return np.logaddexp(0.0, o) - target * o


@dataclass
class RankNetModel:
    """One-hidden-layer sigmoid network ``H(x)`` with a scalar output."""

    W1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    config: RankNetConfig = field(default_factory=RankNetConfig)
    loss_history: list[float] = field(default_factory=list)

    def score(self, X) -> np.ndarray:
        X = _as_matrix(X)
        return _sigmoid(X @ self.W1.T + self.b1) @ self.w2 + self.b2

    def to_json(self) -> dict:
        return {
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2,
        }


def _ordered_pairs(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs (i, j) with ``y[i] > y[j]``; ties carry no preference."""
    i, j = np.nonzero(y[:, None] > y[None, :])
    return i, j


def ranknet_train(X, y, config: Optional[RankNetConfig] = None) -> RankNetModel:
    """Full-batch gradient descent on the mean pairwise loss.

    Every pair with ``y_A > y_B`` has target probability 1 that A ranks above
    B. Deterministic for a given ``config.seed``.
    """
    config = config or RankNetConfig()
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    pi, pj = _ordered_pairs(y)
    if pi.size == 0:
        raise ValueError("all targets are equal; no pairs to learn from")
    n, m = X.shape
    rng = np.random.default_rng(config.seed)
    W1 = rng.normal(0.0, 1.0 / np.sqrt(m), size=(config.hidden, m))
    b1 = rng.normal(0.0, 0.1, size=config.hidden)
    w2 = rng.normal(0.0, 1.0 / np.sqrt(config.hidden), size=config.hidden)
    b2 = 0.0
    lr = config.learning_rate
    history = []
    n_pairs = pi.size
    for _ in range(config.epochs):
        hid = _sigmoid(X @ W1.T + b1)
        s = hid @ w2 + b2
        o = s[pi] - s[pj]
        history.append(float(ranknet_loss(o).mean()))
        lam = (_sigmoid(o) - 1.0) / n_pairs  # dC/do per pair
        ds = np.bincount(pi, weights=lam, minlength=n) - np.bincount(pj, weights=lam, minlength=n)
        g_w2 = hid.T @ ds
        dpre = np.outer(ds, w2) * hid * (1.0 - hid)
        g_W1 = dpre.T @ X
        g_b1 = dpre.sum(axis=0)
        w2 = w2 - lr * g_w2
        W1 = W1 - lr * g_W1
        b1 = b1 - lr * g_b1
    model = RankNetModel(W1, b1, w2, b2, config, history)
    s = model.score(X)
    history.append(float(ranknet_loss(s[pi] - s[pj]).mean()))
    return model


def pairwise_accuracy(scores, y) -> float:
    """Share of strictly ordered target pairs whose scores agree strictly."""
    s = np.asarray(scores, dtype=np.float64)
    pi, pj = _ordered_pairs(np.asarray(y, dtype=np.float64))
    if pi.size == 0:
        return float("nan")
    return float(np.mean(s[pi] > s[pj]))


def rank_by_score(scores: Mapping[str, float]) -> list[str]:
    """Area ids by descending score; ties go to the smaller id."""
    for k, v in scores.items():
        if not np.isfinite(v):
            raise ValueError(f"non-finite score for {k!r}")
    return sorted(scores, key=lambda k: (-scores[k], k))


# --------------------------------------------------------------------------
# Persistence


def save_model(path, model, normalizer: Optional[Normalizer] = None, seed: Optional[int] = None) -> None:
    if isinstance(model, RidgeModel):
        kind, config = "ridge", {"ridge_gamma": model.ridge_gamma}
    elif isinstance(model, RankNetModel):
        kind, config = "ranknet", asdict(model.config)
    else:
        raise TypeError(f"cannot save {type(model).__name__}")
    doc = {
        "type": kind,
        "weights": model.to_json(),
        "normalizer": normalizer.to_json() if normalizer is not None else None,
        "config": config,
        "seed": seed,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_model(path):
    """Returns ``(model, normalizer_or_None)``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    w = doc["weights"]
    if doc["type"] == "ridge":
        model = RidgeModel(np.asarray(w["weights"], dtype=np.float64), float(w["intercept"]), float(w["ridge_gamma"]))
    elif doc["type"] == "ranknet":
        model = RankNetModel(
            np.asarray(w["W1"], dtype=np.float64),
            np.asarray(w["b1"], dtype=np.float64),
            np.asarray(w["w2"], dtype=np.float64),
            float(w["b2"]),
            RankNetConfig(**doc["config"]),
        )
    else:
        raise ValueError(f"unknown model type {doc['type']!r}")
    norm = Normalizer.from_json(doc["normalizer"]) if doc.get("normalizer") else None
    return model, norm


def ranked_ids(ids: Sequence[str], scores) -> list[str]:
    return rank_by_score(dict(zip(ids, (float(s) for s in scores))))
