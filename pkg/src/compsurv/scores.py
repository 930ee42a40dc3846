"""Per-member survival scores from a logistic classifier on ``(x, D)``."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit, log_expit

from .dataset import SurvivalDataset
from .errors import ValidationError


@dataclass(frozen=True)
class ClassifierConfig:
    lr: float = 0.1
    max_iters: int = 1000
    l2: float = 1e-4
    tol: float = 1e-8

    def validate(self) -> None:
        if not self.lr > 0:
            raise ValidationError("learning rate must be positive")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.l2 < 0 or self.tol < 0:
            raise ValidationError("l2 and tol must be non-negative")


@dataclass(frozen=True, eq=False)
class ScoreModel:
    weights: np.ndarray
    bias: float
    config: ClassifierConfig = field(default_factory=ClassifierConfig)
    n_iter: int = 0
    loss_history: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float).reshape(-1)
        if not np.all(np.isfinite(w)) or not np.isfinite(self.bias):
            raise ValidationError("score model weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))


@dataclass(frozen=True)
class ScoreNormalization:
    min_r: float
    max_r: float

    def __post_init__(self) -> None:
        if not self.min_r <= self.max_r:
            raise ValidationError("min_r must not exceed max_r")

    def apply(self, r) -> np.ndarray:
        """Clamp into the fitted range, then ``(|min| + r) / (|min| + max)``."""
        r = np.clip(np.asarray(r, dtype=float), self.min_r, self.max_r)
        denom = abs(self.min_r) + self.max_r
        if denom == 0.0:
            return np.full_like(r, 0.5)
        return (abs(self.min_r) + r) / denom


def loss_and_grad(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy plus ``l2/2 * ||w||^2`` (bias unpenalized) and its gradient."""
    z = X @ w + b
    loss = -np.mean(y * log_expit(z) + (1.0 - y) * log_expit(-z)) + 0.5 * l2 * float(w @ w)
    resid = expit(z) - y
    grad_w = X.T @ resid / len(y) + l2 * w
    grad_b = float(np.mean(resid))
    return float(loss), grad_w, grad_b


def train_classifier(
    train: SurvivalDataset, config: ClassifierConfig | None = None
) -> ScoreModel:
    """Full-batch gradient descent from zero weights; time is ignored."""
    config = config or ClassifierConfig()
    config.validate()
    y = train.event.astype(float)
    if y.min() == y.max():
        raise ValidationError("classifier needs both censored and event records")
    X = train.X
    w = np.zeros(X.shape[1])
    b = 0.0
    loss, gw, gb = loss_and_grad(w, b, X, y, config.l2)
    history = [loss]
    it = 0
    for it in range(1, config.max_iters + 1):
        w = w - config.lr * gw
        b = b - config.lr * gb
        new_loss, gw, gb = loss_and_grad(w, b, X, y, config.l2)
        history.append(new_loss)
        if abs(loss - new_loss) < config.tol:
            break
        loss = new_loss
    return ScoreModel(w, b, config, it, tuple(history))


def raw_scores(model: ScoreModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != model.weights.shape[0]:
        raise ValidationError(
            f"covariate width {X.shape[1]} does not match {model.weights.shape[0]} weights"
        )
    return X @ model.weights


def normalize_scores(r) -> tuple[np.ndarray, ScoreNormalization]:
    r = np.asarray(r, dtype=float).reshape(-1)
    if r.size == 0:
        raise ValidationError("cannot normalize an empty score vector")
    norm = ScoreNormalization(float(r.min()), float(r.max()))
    if abs(norm.min_r) + norm.max_r == 0.0:
        warnings.warn("degenerate score range; all normalized scores set to 0.5", stacklevel=2)
    return norm.apply(r), norm


def score_model_to_dict(model: ScoreModel, norm: ScoreNormalization) -> dict:
    return {
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "norm": {"min": norm.min_r, "max": norm.max_r},
        "config": asdict(model.config),
        "n_iter": model.n_iter,
    }


def score_model_from_dict(d: dict) -> tuple[ScoreModel, ScoreNormalization]:
    model = ScoreModel(
        d["weights"], d["bias"], ClassifierConfig(**d.get("config", {})), d.get("n_iter", 0)
    )
    return model, ScoreNormalization(d["norm"]["min"], d["norm"]["max"])
