"""Right-censored cohort containers, CSV ingestion, preprocessing and splitting."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
import pandas as pd

from .errors import ParseError, SchemaError, ValidationError

SIGMA_FLOOR = 1e-6

CONTINUOUS = "continuous"
ONEHOT = "categorical-onehot"


class SurvivalRecord(NamedTuple):
    covariates: np.ndarray
    event_time: float
    event: int


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SurvivalDataset:
    """Cohort of ``(x_i, T*_i, D_i)`` triples stored column-wise.

    ``categories`` maps each original categorical column to its vocabulary;
    the matching one-hot columns are named ``"<column>=<value>"``.
    """

    X: np.ndarray
    time: np.ndarray
    event: np.ndarray
    covariate_names: tuple[str, ...]
    covariate_kinds: tuple[str, ...]
    categories: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if len(self.covariate_names) == 1 else X.reshape(1, -1)
        time = np.asarray(self.time, dtype=float).reshape(-1)
        event = np.asarray(self.event).reshape(-1)
        n = time.shape[0]
        if n < 1:
            raise ValidationError("dataset must contain at least one record")
        if X.shape[0] != n or event.shape[0] != n:
            raise ValidationError(
                f"row count mismatch: X has {X.shape[0]}, time {n}, event {event.shape[0]}"
            )
        if X.shape[1] != len(self.covariate_names):
            raise ValidationError(
                f"{X.shape[1]} covariate columns but {len(self.covariate_names)} names"
            )
        if len(self.covariate_kinds) != len(self.covariate_names):
            raise ValidationError("covariate_kinds must match covariate_names")
        if len(set(self.covariate_names)) != len(self.covariate_names):
            raise ValidationError("covariate names must be unique")
        bad_kind = set(self.covariate_kinds) - {CONTINUOUS, ONEHOT}
        if bad_kind:
            raise ValidationError(f"unknown covariate kinds {sorted(bad_kind)}")
        if not np.all(np.isfinite(time)) or np.any(time < 0):
            raise ValidationError("event times must be finite and non-negative")
        if not np.all(np.isin(event, (0, 1))):
            raise ValidationError("event indicator must be 0 or 1")
        if not np.all(np.isfinite(X)):
            raise ValidationError("covariates must be finite")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "time", _frozen(time))
        object.__setattr__(self, "event", _frozen(event.astype(np.int64)))
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        object.__setattr__(self, "covariate_kinds", tuple(self.covariate_kinds))
        object.__setattr__(
            self, "categories", {k: tuple(v) for k, v in self.categories.items()}
        )

    def __len__(self) -> int:
        return self.time.shape[0]

    @property
    def n_covariates(self) -> int:
        return self.X.shape[1]

    @property
    def records(self) -> list[SurvivalRecord]:
        return [
            SurvivalRecord(self.X[i], float(self.time[i]), int(self.event[i]))
            for i in range(len(self))
        ]

    @property
    def censored_fraction(self) -> float:
        return float(1.0 - self.event.mean())

    def subset(self, index: Sequence[int] | np.ndarray) -> "SurvivalDataset":
        index = np.asarray(index, dtype=np.int64)
        return self.replace(X=self.X[index], time=self.time[index], event=self.event[index])

    def replace(self, **changes) -> "SurvivalDataset":
        fields = dict(
            X=self.X,
            time=self.time,
            event=self.event,
            covariate_names=self.covariate_names,
            covariate_kinds=self.covariate_kinds,
            categories=self.categories,
        )
        fields.update(changes)
        return SurvivalDataset(**fields)

    def to_frame(self, duration: str = "duration", event: str = "event") -> pd.DataFrame:
        df = pd.DataFrame(self.X, columns=list(self.covariate_names))
        df[duration] = self.time
        df[event] = self.event
        return df

    @classmethod
    def from_records(
        cls, records: Sequence[SurvivalRecord], covariate_names: Sequence[str]
    ) -> "SurvivalDataset":
        return cls(
            X=np.array([r.covariates for r in records], dtype=float).reshape(
                len(records), len(covariate_names)
            ),
            time=[r.event_time for r in records],
            event=[r.event for r in records],
            covariate_names=tuple(covariate_names),
            covariate_kinds=(CONTINUOUS,) * len(covariate_names),
        )


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Ordered integer steps ``0 = t_0 < t_1 < ... < t_J``."""

    steps: np.ndarray

    def __post_init__(self) -> None:
        steps = np.asarray(self.steps)
        if steps.ndim != 1 or steps.size < 2:
            raise ValidationError("a time grid needs at least two steps (J >= 1)")
        if not np.all(steps == np.round(steps)):
            raise ValidationError("grid steps must be integers")
        steps = steps.astype(np.int64)
        if steps[0] != 0 or np.any(np.diff(steps) <= 0):
            raise ValidationError("grid steps must start at 0 and strictly increase")
        object.__setattr__(self, "steps", _frozen(steps))

    @classmethod
    def span(cls, horizon: int) -> "TimeGrid":
        return cls(np.arange(int(horizon) + 1))

    @property
    def horizon(self) -> int:
        return len(self.steps) - 1

    def __len__(self) -> int:
        return len(self.steps)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TimeGrid) and np.array_equal(self.steps, other.steps)

    __hash__ = None  # type: ignore[assignment]

    def index_of(self, t) -> np.ndarray:
        """Index of the last step ``<= t``; times past the horizon map to ``J``."""
        idx = np.searchsorted(self.steps, np.asarray(t, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.horizon)


@dataclass(frozen=True, eq=False)
class StandardizationStats:
    columns: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "mean", _frozen(np.asarray(self.mean, dtype=float)))
        std = np.asarray(self.std, dtype=float)
        if np.any(std < SIGMA_FLOOR):
            raise ValidationError("standard deviations must respect the variance floor")
        object.__setattr__(self, "std", _frozen(std))

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizationStats":
        return cls(d["columns"], d["mean"], d["std"])


# ----------------------------------------------------------------------------
# ingestion


@dataclass(frozen=True)
class Schema:
    """Column roles. ``duration``/``event`` may be ``None`` for covariate-only files."""

    duration: str | None
    event: str | None
    covariates: tuple[str, ...] | None = None
    categorical: tuple[str, ...] = ()


def read_table(path: str | Path, schema: Schema) -> pd.DataFrame:
    """Read and validate a CSV, returning only schema columns (strings for categoricals).

    Lines starting with ``#`` are provenance comments and are skipped.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, comment="#")
    columns = list(raw.columns)
    roles = [c for c in (schema.duration, schema.event) if c is not None]
    for role, name in (("duration", schema.duration), ("event", schema.event)):
        if name is not None and name not in columns:
            raise SchemaError(f"{role} column {name!r} not found in {path.name}")
    if schema.covariates is None:
        covariates = [c for c in columns if c not in roles]
    else:
        covariates = list(schema.covariates)
    missing = [c for c in list(covariates) + list(schema.categorical) if c not in columns]
    if missing:
        raise SchemaError(f"columns {missing} not found in {path.name}")
    bad = [c for c in schema.categorical if c not in covariates]
    if bad:
        raise SchemaError(f"categorical columns {bad} are not covariates")
    if not covariates:
        raise SchemaError("schema must name at least one covariate column")

    out = {}
    numeric = roles + [c for c in covariates if c not in schema.categorical]
    for col in roles + covariates:
        values = raw[col].str.strip()
        empty = np.flatnonzero(values.to_numpy() == "")
        if empty.size:
            raise ParseError(f"missing value in column {col!r} at row {empty[0] + 1}")
        if col in numeric:
            parsed = pd.to_numeric(values, errors="coerce")
            bad_rows = np.flatnonzero(parsed.isna().to_numpy())
            if bad_rows.size:
                r = bad_rows[0]
                raise ParseError(
                    f"non-numeric value {values.iloc[r]!r} in column {col!r} at row {r + 1}"
                )
            out[col] = parsed.astype(float)
        else:
            out[col] = values
    df = pd.DataFrame(out, index=raw.index)
    if len(df) == 0:
        raise ValidationError(f"{path.name} has no data rows")
    if schema.event is None or schema.duration is None:
        return df

    ev = df[schema.event].to_numpy()
    bad_rows = np.flatnonzero(~np.isin(ev, (0.0, 1.0)))
    if bad_rows.size:
        r = bad_rows[0]
        raise ValidationError(
            f"event value {ev[r]:g} at row {r + 1} is outside {{0, 1}}"
        )
    t = df[schema.duration].to_numpy()
    bad_rows = np.flatnonzero(~(np.isfinite(t) & (t >= 0)))
    if bad_rows.size:
        raise ValidationError(f"negative or non-finite duration at row {bad_rows[0] + 1}")
    return df


def one_hot_encode(
    table: pd.DataFrame,
    schema: Schema,
    categories: dict[str, Sequence[str]] | None = None,
) -> SurvivalDataset:
    """Expand categorical columns into 0/1 indicator columns.

    Vocabularies are learned from ``table`` unless ``categories`` is given;
    unseen values then encode as an all-zero group (with a warning).
    """
    covariates = (
        list(schema.covariates)
        if schema.covariates is not None
        else [c for c in table.columns if c not in (schema.duration, schema.event)]
    )
    n = len(table)
    vocab: dict[str, tuple[str, ...]] = {}
    blocks, names, kinds = [], [], []
    for col in covariates:
        if col not in schema.categorical:
            blocks.append(table[col].to_numpy(dtype=float).reshape(-1, 1))
            names.append(col)
            kinds.append(CONTINUOUS)
            continue
        values = table[col].astype(str).to_numpy()
        if categories is not None and col in categories:
            levels = tuple(categories[col])
        else:
            levels = tuple(sorted(set(values)))
        vocab[col] = levels
        onehot = (values[:, None] == np.array(levels, dtype=object)[None, :]).astype(float)
        unseen = np.flatnonzero(onehot.sum(axis=1) == 0)
        if unseen.size:
            warnings.warn(
                f"{unseen.size} row(s) have categories of {col!r} not seen in training; "
                "encoded as all zeros",
                stacklevel=2,
            )
        blocks.append(onehot)
        names.extend(f"{col}={lvl}" for lvl in levels)
        kinds.extend([ONEHOT] * len(levels))
    X = np.hstack(blocks) if blocks else np.empty((n, 0))
    # covariate-only files get placeholder outcomes
    time = table[schema.duration].to_numpy(dtype=float) if schema.duration else np.zeros(n)
    event = table[schema.event].to_numpy(dtype=float) if schema.event else np.zeros(n)
    return SurvivalDataset(
        X=X,
        time=time,
        event=event.astype(np.int64),
        covariate_names=tuple(names),
        covariate_kinds=tuple(kinds),
        categories=vocab,
    )


def load_csv(
    path: str | Path,
    schema: Schema,
    categories: dict[str, Sequence[str]] | None = None,
) -> SurvivalDataset:
    return one_hot_encode(read_table(path, schema), schema, categories)


def write_csv(
    ds: SurvivalDataset,
    path: str | Path,
    duration: str = "duration",
    event: str = "event",
    header_comment: str | None = None,
) -> None:
    df = ds.to_frame(duration, event)
    with open(path, "w", newline="") as fh:
        if header_comment:
            for line in header_comment.splitlines():
                fh.write(f"# {line}\n")
        df.to_csv(fh, index=False, float_format="%.17g", lineterminator="\n")


# ----------------------------------------------------------------------------
# preprocessing


def standardize(
    ds: SurvivalDataset, stats: StandardizationStats | None = None
) -> tuple[SurvivalDataset, StandardizationStats]:
    """Z-score continuous covariates; one-hot columns pass through.

    Without ``stats`` the mean and population standard deviation are fitted on
    ``ds``. Constant columns get the floored deviation and a warning.
    """
    cont = np.array([k == CONTINUOUS for k in ds.covariate_kinds], dtype=bool)
    cols = tuple(n for n, c in zip(ds.covariate_names, cont) if c)
    Xc = ds.X[:, cont]
    if stats is None:
        mean = Xc.mean(axis=0) if Xc.size else np.zeros(0)
        std = Xc.std(axis=0) if Xc.size else np.zeros(0)
        flat = std < SIGMA_FLOOR
        if np.any(flat):
            warnings.warn(
                f"zero-variance column(s) {[c for c, f in zip(cols, flat) if f]}; "
                f"standard deviation floored at {SIGMA_FLOOR:g}",
                stacklevel=2,
            )
        stats = StandardizationStats(cols, mean, np.maximum(std, SIGMA_FLOOR))
    elif stats.columns != cols:
        raise ValidationError(
            f"standardization stats cover {list(stats.columns)}, dataset has {list(cols)}"
        )
    X = ds.X.copy()
    X[:, cont] = (Xc - stats.mean) / stats.std
    return ds.replace(X=X), stats


def discretize_times(ds: SurvivalDataset) -> tuple[SurvivalDataset, TimeGrid]:
    """Round event times half-up to integers and span a grid 0..max."""
    if len(ds) == 0:
        raise ValidationError("cannot discretize an empty dataset")
    t = np.floor(ds.time + 0.5)
    horizon = max(int(t.max()), 1)
    return ds.replace(time=t), TimeGrid.span(horizon)


# ----------------------------------------------------------------------------
# splitting


def split_indices(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"split fraction must lie in (0, 1), got {fraction}")
    if n < 2:
        raise ValueError("need at least two records to split")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = min(max(int(np.floor(fraction * n + 0.5)), 1), n - 1)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split_train_test(
    ds: SurvivalDataset, fraction: float = 0.8, seed: int = 0
) -> tuple[SurvivalDataset, SurvivalDataset]:
    train, test = split_indices(len(ds), fraction, seed)
    return ds.subset(train), ds.subset(test)


def kfold_indices(n: int, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of records ({n})")
    perm = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(perm, k)
    out = []
    for i, test in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        out.append((np.sort(train), np.sort(test)))
    return out


def k_fold(
    ds: SurvivalDataset, k: int = 5, seed: int = 0
) -> list[tuple[SurvivalDataset, SurvivalDataset]]:
    return [(ds.subset(tr), ds.subset(te)) for tr, te in kfold_indices(len(ds), k, seed)]
