"""Collaboration measurement over coded group-discourse corpora.

Turns utterance-level discourse codes into system-level collaboration
measurements: per-subsystem order parameters, weekly synergy degrees, the
validation statistics around them, and a prompt-based coding client.

Subpackages
-----------
corpus
    Data model, file ingestion, validation, (group, week) aggregation.
coder
    Prompt-based automatic coding against a chat-completion endpoint.
evalkit
    Confusion matrices, weighted metrics, kappa, stratified folds.
sdm
    Standardization, dispersion-conflict weights, order parameters,
    synergy degrees.
stats
    Permutation, normality, homogeneity, omnibus, and post-hoc tests.
cli
    The ``cps-synergy`` command-line pipeline.
"""

from .corpus import (
    BUILTIN_CODEBOOK,
    SUBSYSTEMS,
    TASK_CODES,
    Code,
    CodebookEntry,
    GroupProfile,
    MetricObservation,
    MetricPanel,
    Utterance,
    aggregate_metrics,
    load_codebook,
    parse_group_profiles,
    parse_utterances,
    validate_corpus,
)
from .coder import (
    CoderConfig,
    CodingReport,
    HttpTransport,
    MockTransport,
    PromptSpec,
    build_prompt,
    code_corpus,
    parse_code,
    render_codebook,
)
from .evalkit import (
    ConfusionMatrix,
    MetricReport,
    cohen_kappa,
    confusion,
    stratified_kfold,
    summarize_runs,
    weighted_metrics,
)
from .sdm import (
    OrderSeries,
    SdmResult,
    StandardizedPanel,
    SubsystemWeights,
    SynergySeries,
    critic_weights,
    order_parameters,
    run_pipeline,
    standardize,
    synergy_degrees,
)
from .stats import (
    OmnibusResult,
    TestResult,
    anova_fisher,
    kruskal_wallis,
    levene_brown_forsythe,
    mann_whitney_u,
    permutation_test_paired,
    run_omnibus,
    shapiro_wilk,
    welch_t,
)

__version__ = "0.1.0"
