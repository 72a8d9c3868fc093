"""Streaming continuous model selection via descriptive dimensionality.

Tracks the real-valued model dimensionality (Ddim) behind a data stream
(GMM mixture size or AR order), raises early-warning alarms of model
changes, and evaluates detectors with Benefit-FAR curves.
"""

from .complexity import (
    ComplexityCache,
    ComplexityConfig,
    build_cache,
    config_from_batch,
    log_cluster_term,
    log_gamma,
    log_multivariate_gamma,
    log_parametric_complexity_gmm,
)
from .datagen import ArStreamConfig, GmmStreamConfig, gen_ar_stream, gen_gmm_multichange, gen_gmm_stream
from .detectors import AlarmEvent, FixedShareState, diff_score, fixed_share_update, sdms_step, th_score
from .evaluation import EvalConfig, benefit, benefit_far_auc, far
from .gmm import GmmModel, assign_labels, complete_nml_codelength, em_fit
from .pipeline import ArContinuousSelector, GmmContinuousSelector, run_stream
from .selector import (
    SelectorState,
    ddim,
    gamma_map,
    model_posterior,
    structural_entropy,
    transition_prior,
)
from .stream_io import (
    Annotations,
    DataBatch,
    RunConfig,
    TraceRecord,
    read_batch_stream,
    read_trace,
    write_batch_stream,
    write_trace,
)

__version__ = "0.1.0"

__all__ = [
    "AlarmEvent",
    "Annotations",
    "ArContinuousSelector",
    "ArStreamConfig",
    "ComplexityCache",
    "ComplexityConfig",
    "DataBatch",
    "EvalConfig",
    "FixedShareState",
    "GmmContinuousSelector",
    "GmmModel",
    "GmmStreamConfig",
    "RunConfig",
    "SelectorState",
    "TraceRecord",
    "assign_labels",
    "benefit",
    "benefit_far_auc",
    "build_cache",
    "complete_nml_codelength",
    "config_from_batch",
    "ddim",
    "diff_score",
    "em_fit",
    "far",
    "fixed_share_update",
    "gamma_map",
    "gen_ar_stream",
    "gen_gmm_multichange",
    "gen_gmm_stream",
    "log_cluster_term",
    "log_gamma",
    "log_multivariate_gamma",
    "log_parametric_complexity_gmm",
    "model_posterior",
    "read_batch_stream",
    "read_trace",
    "run_stream",
    "sdms_step",
    "structural_entropy",
    "th_score",
    "transition_prior",
    "write_batch_stream",
    "write_trace",
]
