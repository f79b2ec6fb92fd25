"""Ground-truth evaluation of feature-additive explainers.

The package builds synthetic white-box models of the form

    F(X) = intercept + sum_j f_j(X[D_j])

where every effect f_j touches a known feature subset D_j, so the exact
per-effect contribution of each prediction is available by construction.
Post-hoc explainers (partial-dependence, local surrogates, kernel and exact
Shapley) are run against the same models and their attributions are aligned
with the ground truth and scored.

Typical flow::

    from addeval import GenerationConfig, generate_model, explain_dataset
    from addeval import sample_dataset, score_explanation

    model = generate_model(GenerationConfig(n_features=4, n_effects=3, seed=7))
    X = sample_dataset(model.n_features, seed=0)
    explanation = explain_dataset("shap", model.as_blackbox(), X[:8], X)
    bundle = score_explanation(model, X[:8], X, explanation)
"""

__version__ = "0.1.0"

from .errors import (
    AddevalError,
    BudgetExceeded,
    DegenerateInput,
    DomainViolation,
    EmptyBackground,
    ExplainFailure,
    ExplainTimeout,
    GenerationExhausted,
    LengthMismatch,
    ModelFormatError,
    NonFiniteOutput,
    ParseError,
    SignatureMismatch,
    SingularFit,
)
from .expressions import (
    Binary,
    Constant,
    OperatorTable,
    Unary,
    Variable,
    count_nonlinearities,
    decompose_additive,
    evaluate,
    expand,
    parse_text,
    signature_of,
    to_text,
    variables_of,
)
from .models import (
    AdditiveModel,
    BlackBox,
    ContributionMatrix,
    ExpectationTable,
    format_signature,
    from_model_text,
    load_contributions,
    load_model,
    parse_signature,
    save_contributions,
    save_model,
    to_model_text,
)
from .generation import GenerationConfig, generate_model, validate_model
from .alignment import (
    MatchComponent,
    Matching,
    ReconciledPair,
    iou,
    maiou,
    match_effects,
    reconcile,
)
from .metrics import (
    EffectScore,
    SampleScore,
    cosine_distance,
    euclidean_distance,
    explainer_accuracy,
    nrmse,
    score_components,
    spearman_rho,
)
from .explainers import (
    EXPLAINER_NAMES,
    Explanation,
    LimeConfig,
    ShapConfig,
    exact_shapley,
    explain_dataset,
    kernel_shap_explain,
    lime_explain,
    load_explanation,
    pdp_explain,
    rescale_linear,
    save_explanation,
)
from .harness import (
    BenchmarkResult,
    EvaluationRecord,
    ExplainerSpec,
    RECORD_COLUMNS,
    SUMMARY_COLUMNS,
    SweepConfig,
    emit_report,
    read_records,
    run_benchmark,
    sample_dataset,
    score_explanation,
    summarize_records,
    write_records,
    write_summary,
)

__all__ = [
    "__version__",
    # errors
    "AddevalError", "BudgetExceeded", "DegenerateInput", "DomainViolation",
    "EmptyBackground", "ExplainFailure", "ExplainTimeout",
    "GenerationExhausted", "LengthMismatch", "ModelFormatError",
    "NonFiniteOutput", "ParseError", "SignatureMismatch", "SingularFit",
    # expressions
    "Binary", "Constant", "OperatorTable", "Unary", "Variable",
    "count_nonlinearities", "decompose_additive", "evaluate", "expand",
    "parse_text", "signature_of", "to_text", "variables_of",
    # models
    "AdditiveModel", "BlackBox", "ContributionMatrix", "ExpectationTable",
    "format_signature", "from_model_text", "load_contributions",
    "load_model", "parse_signature", "save_contributions", "save_model",
    "to_model_text",
    # generation
    "GenerationConfig", "generate_model", "validate_model",
    # alignment
    "MatchComponent", "Matching", "ReconciledPair", "iou", "maiou",
    "match_effects", "reconcile",
    # metrics
    "EffectScore", "SampleScore", "cosine_distance", "euclidean_distance",
    "explainer_accuracy", "nrmse", "score_components", "spearman_rho",
    # explainers
    "EXPLAINER_NAMES", "Explanation", "LimeConfig", "ShapConfig",
    "exact_shapley", "explain_dataset", "kernel_shap_explain",
    "lime_explain", "load_explanation", "pdp_explain", "rescale_linear",
    "save_explanation",
    # harness
    "BenchmarkResult", "EvaluationRecord", "ExplainerSpec", "RECORD_COLUMNS",
    "SUMMARY_COLUMNS", "SweepConfig", "emit_report", "read_records",
    "run_benchmark", "sample_dataset", "score_explanation",
    "summarize_records", "write_records", "write_summary",
]
