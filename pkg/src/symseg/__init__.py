"""Streaming segmentation of non-stationary time series via switching
observable Markov-chain models."""

from .classifier import (
    AssignmentRecord,
    ClassifierConfig,
    ClassRegistry,
    concentration_scores,
    crp_gamma,
    initialize,
    likelihood_rate,
    run_stream,
    score_and_assign,
)
from .likelihood import (
    LogLikelihood,
    kl_divergence,
    log_predictive,
    log_predictive_stirling,
    verify_kl_equivalence,
)
from .pipeline import PipelineResult, generate_scenario, run_pipeline, run_scenario
from .revision import (
    DistanceReport,
    adaptive_eta,
    default_eta,
    distance_report,
    pairwise_distances,
    pfsa_distance,
    revise,
)
from .scoring import ScoreReport, match_classes, score_assignments
from .simulate import (
    LabeledStream,
    RegimeSpec,
    duffing_post,
    duffing_pre,
    integrate_regime,
    make_stream,
    vanderpol,
)
from .symbolic import (
    CountMatrix,
    Partition,
    PfsaModel,
    SymbolString,
    build_partition,
    count_transitions,
    symbolize,
    update_model,
)

__version__ = "0.1.0"
