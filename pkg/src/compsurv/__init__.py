"""Composite survival analysis: a population baseline curve modulated by
per-member survival scores, with censoring-aware evaluation."""

__version__ = "1.0.0"

from .baseline import (  # noqa: E402
    BaselineCurve,
    CensoringCurve,
    GaussianParams,
    fit_bayesian_baseline,
    fit_censoring_km,
    fit_km_baseline,
    loglik_term,
    mle_params,
)
from .composite import (  # noqa: E402
    CompositeModel,
    SurvivalCurveMatrix,
    fit,
    load_model,
    predict_curves,
    predict_dataset,
    save_model,
)
from .dataset import (  # noqa: E402
    Schema,
    StandardizationStats,
    SurvivalDataset,
    SurvivalRecord,
    TimeGrid,
    discretize_times,
    k_fold,
    load_csv,
    one_hot_encode,
    split_train_test,
    standardize,
)
from .kernels import BACKEND  # noqa: E402
from .metrics import (  # noqa: E402
    EvalProtocol,
    MetricReport,
    auc_at,
    brier_at,
    c_index_antolini,
    evaluate,
    integrated_brier,
    mean_auc,
)
from .scores import (  # noqa: E402
    ClassifierConfig,
    ScoreModel,
    ScoreNormalization,
    normalize_scores,
    raw_scores,
    train_classifier,
)
from .synth import SynthConfig, synth_generate  # noqa: E402
