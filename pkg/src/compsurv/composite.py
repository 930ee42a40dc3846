"""Composite model: a baseline curve modulated by per-member survival scores."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .baseline import (
    BAYESIAN,
    KAPLAN_MEIER,
    BaselineCurve,
    CensoringCurve,
    fit_baseline,
    fit_censoring_km,
)
from .dataset import (
    ONEHOT,
    StandardizationStats,
    SurvivalDataset,
    TimeGrid,
    discretize_times,
    standardize,
)
from .errors import ModelFormatError, ModelVersionError, ValidationError
from .scores import (
    ClassifierConfig,
    ScoreModel,
    ScoreNormalization,
    normalize_scores,
    raw_scores,
    score_model_from_dict,
    score_model_to_dict,
    train_classifier,
)

MODEL_FORMAT = "composite-survival-model"
MODEL_VERSION = "1.0"

PER_MEMBER = "per-member"
GLOBAL = "global"


@dataclass(frozen=True, eq=False)
class Preprocessing:
    covariate_names: tuple[str, ...]
    covariate_kinds: tuple[str, ...]
    stats: StandardizationStats
    categories: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def source_columns(self) -> tuple[str, ...]:
        """Input table columns the covariates were built from, in order."""
        out: list[str] = []
        for name, kind in zip(self.covariate_names, self.covariate_kinds):
            col = name
            if kind == ONEHOT:
                col = next(c for c in self.categories if name.startswith(f"{c}="))
            if col not in out:
                out.append(col)
        return tuple(out)

    def apply(self, ds: SurvivalDataset) -> SurvivalDataset:
        if ds.covariate_names != self.covariate_names:
            raise ValidationError(
                f"dataset columns {list(ds.covariate_names)} do not match the model's "
                f"{list(self.covariate_names)}"
            )
        out, _ = standardize(ds, self.stats)
        return out

    def to_dict(self) -> dict:
        return {
            "covariate_names": list(self.covariate_names),
            "covariate_kinds": list(self.covariate_kinds),
            "standardization": self.stats.to_dict(),
            "categories": {k: list(v) for k, v in self.categories.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Preprocessing":
        return cls(
            tuple(d["covariate_names"]),
            tuple(d["covariate_kinds"]),
            StandardizationStats.from_dict(d["standardization"]),
            {k: tuple(v) for k, v in d.get("categories", {}).items()},
        )


@dataclass(frozen=True, eq=False)
class SurvivalCurveMatrix:
    member_ids: tuple
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.member_ids), len(self.grid)):
            raise ValidationError("curve matrix must be members x grid steps")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "member_ids", tuple(self.member_ids))

    def __len__(self) -> int:
        return len(self.member_ids)

    def at(self, t) -> np.ndarray:
        """Survival of every member at time ``t`` (step-function lookup)."""
        return self.values[:, int(self.grid.index_of(t))]


@dataclass(frozen=True, eq=False)
class CompositeModel:
    baseline: BaselineCurve
    baseline_kind: str
    scores: ScoreModel
    norm: ScoreNormalization
    censoring: CensoringCurve
    preprocessing: Preprocessing
    curve_normalization: str = PER_MEMBER
    raw_baseline: bool = False
    config: dict = field(default_factory=dict)

    @property
    def grid(self) -> TimeGrid:
        return self.baseline.grid

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "tool_version": __version__,
            "baseline_kind": self.baseline_kind,
            "raw_baseline": self.raw_baseline,
            "curve_normalization": self.curve_normalization,
            "grid": self.grid.steps.tolist(),
            "baseline": self.baseline.to_dict(),
            "censoring": self.censoring.to_dict(),
            "scores": score_model_to_dict(self.scores, self.norm),
            "preprocessing": self.preprocessing.to_dict(),
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CompositeModel":
        if not isinstance(d, dict) or d.get("format") != MODEL_FORMAT:
            raise ModelFormatError("not a composite survival model file")
        version = str(d.get("version", ""))
        if version.split(".")[0] != MODEL_VERSION.split(".")[0]:
            raise ModelVersionError(
                f"unsupported model version {version!r} (this build reads {MODEL_VERSION})"
            )
        try:
            baseline = BaselineCurve.from_dict(d["baseline"])
            scores, norm = score_model_from_dict(d["scores"])
            model = cls(
                baseline=baseline,
                baseline_kind=d["baseline_kind"],
                scores=scores,
                norm=norm,
                censoring=CensoringCurve.from_dict(d["censoring"]),
                preprocessing=Preprocessing.from_dict(d["preprocessing"]),
                curve_normalization=d.get("curve_normalization", PER_MEMBER),
                raw_baseline=bool(d.get("raw_baseline", False)),
                config=d.get("config", {}),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed model file: {exc}") from exc
        if not np.array_equal(np.asarray(d["grid"]), baseline.grid.steps):
            raise ModelFormatError("model grid does not match the baseline grid")
        return model


def fit(
    train: SurvivalDataset,
    baseline_kind: str = BAYESIAN,
    classifier: ClassifierConfig | None = None,
    raw_baseline: bool = False,
    curve_normalization: str = PER_MEMBER,
    config: dict | None = None,
) -> CompositeModel:
    """Standardize, discretize, fit the baseline, the classifier and the score range."""
    if baseline_kind not in (BAYESIAN, KAPLAN_MEIER):
        raise ValidationError(f"unknown baseline kind {baseline_kind!r}")
    if curve_normalization not in (PER_MEMBER, GLOBAL):
        raise ValidationError(f"unknown curve normalization {curve_normalization!r}")
    std, stats = standardize(train)
    disc, grid = discretize_times(std)
    baseline = fit_baseline(disc, grid, baseline_kind, raw=raw_baseline)
    censoring = fit_censoring_km(disc, grid)
    scores = train_classifier(disc, classifier)
    _, norm = normalize_scores(raw_scores(scores, disc.X))
    prep = Preprocessing(train.covariate_names, train.covariate_kinds, stats, train.categories)
    return CompositeModel(
        baseline=baseline,
        baseline_kind=baseline_kind,
        scores=scores,
        norm=norm,
        censoring=censoring,
        preprocessing=prep,
        curve_normalization=curve_normalization,
        raw_baseline=raw_baseline,
        config=dict(config or {}),
    )


def compose_curves(
    baseline_survival: np.ndarray, r: np.ndarray, normalization: str = PER_MEMBER
) -> np.ndarray:
    """``exp((1 + r_i) * S_base)`` divided by its maximum.

    Per-member normalization divides each row by its own maximum, which is
    ``exp((1 + r_i) * max S_base)`` since ``1 + r_i > 0``; computing the
    difference in the exponent avoids overflow.
    """
    s = np.asarray(baseline_survival, dtype=float)[None, :]
    scale = 1.0 + np.asarray(r, dtype=float)[:, None]
    expo = scale * s
    if normalization == PER_MEMBER:
        return np.exp(scale * (s - s.max()))
    if normalization == GLOBAL:
        return np.exp(expo - expo.max())
    raise ValidationError(f"unknown curve normalization {normalization!r}")


def member_scores(model: CompositeModel, X) -> np.ndarray:
    """Clamped, normalized scores for already-preprocessed covariates."""
    return model.norm.apply(raw_scores(model.scores, X))


def predict_curves(
    model: CompositeModel, X, member_ids=None
) -> SurvivalCurveMatrix:
    """Survival curves for preprocessed covariate rows ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    r = member_scores(model, X)
    values = compose_curves(model.baseline.survival, r, model.curve_normalization)
    ids = tuple(range(X.shape[0])) if member_ids is None else tuple(member_ids)
    return SurvivalCurveMatrix(ids, model.grid, values)


def predict_dataset(model: CompositeModel, ds: SurvivalDataset, member_ids=None):
    """Apply the stored preprocessing to ``ds`` and predict its curves."""
    return predict_curves(model, model.preprocessing.apply(ds).X, member_ids)


def dumps_model(model: CompositeModel) -> str:
    return json.dumps(model.to_dict(), sort_keys=True, indent=1)


def save_model(model: CompositeModel, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> CompositeModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"cannot parse model file {path}: {exc}") from exc
    return CompositeModel.from_dict(d)
