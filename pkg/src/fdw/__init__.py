"""fdw: estimate which preprocessing variants of a text-classification
corpus are worth training on, using feature density, and account for the
compute and CO2 that pruning the rest saves."""

from .balance import SmoteConfig, smote_oversample
from .corpus import AnnotatedDoc, Corpus, TokenAnn, annotate_plain, load_conllu, load_jsonl
from .density import DensityRecord, band_filter, compute_density, density_report
from .evaluation import (
    ExperimentResult,
    FoldPlan,
    correlate_results,
    cross_validate,
    f1_score,
    pearson,
    run_sweep,
    stratified_folds,
)
from .learners import ClassifierSpec, TrainedModel, fit, mlp_gradient_check, predict
from .pipelines import (
    FeatureUnit,
    PipelineSpec,
    apply_pipeline,
    enumerate_pipelines,
    parse_pipeline_name,
    pipeline_name,
)
from .planner import EnergyModel, SweepPlan, coarse_to_fine, estimate_energy_wh, refine_plan
from .vectorizer import Vocabulary, fit_vocabulary, transform_tfidf

__version__ = "0.1.0"

__all__ = [
    "AnnotatedDoc",
    "ClassifierSpec",
    "Corpus",
    "DensityRecord",
    "EnergyModel",
    "ExperimentResult",
    "FeatureUnit",
    "FoldPlan",
    "PipelineSpec",
    "SmoteConfig",
    "SweepPlan",
    "TokenAnn",
    "TrainedModel",
    "Vocabulary",
    "annotate_plain",
    "apply_pipeline",
    "band_filter",
    "coarse_to_fine",
    "compute_density",
    "correlate_results",
    "cross_validate",
    "density_report",
    "enumerate_pipelines",
    "estimate_energy_wh",
    "f1_score",
    "fit",
    "fit_vocabulary",
    "load_conllu",
    "load_jsonl",
    "mlp_gradient_check",
    "parse_pipeline_name",
    "pearson",
    "pipeline_name",
    "predict",
    "refine_plan",
    "run_sweep",
    "smote_oversample",
    "stratified_folds",
    "transform_tfidf",
]
