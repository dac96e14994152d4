"""Two-stage selective learning for credit default prediction.

Stage one fits a transparent logistic baseline and a two-unit network on the
same standardized features. Stage two trains a five-unit Difference Net on
selective labels that mark where the network beats the baseline, yielding a
reject region with explanations and concentration guarantees on its rate.
"""

from .bounds import epsilon_for_confidence, train_bound, train_test_bound
from .data import (
    Dataset,
    FeatureSpec,
    ScalerParams,
    load_dataset,
    load_generic,
    load_gmsc,
    load_taiwan,
    save_dataset,
    split,
    standardize,
)
from .explain import (
    GlobalImportance,
    LocalExplanation,
    PatternReport,
    categorical_perturbation,
    global_importance,
    local_explanation,
    local_gradient_importance,
    logit_shape,
    pattern_report,
)
from .metrics import (
    ConfusionMatrix,
    RocCurve,
    classification_error,
    confusion,
    recall,
    rejected_set_errors,
    roc_auc,
)
from .models import (
    LogisticModel,
    MlpModel,
    Threshold,
    forward,
    input_gradient,
    load_model,
    predict,
    save_model,
)
from .selective import (
    RejectionSummary,
    SelectiveLabels,
    acceptance_oracle,
    make_selective_labels,
    practical_acceptance_oracle,
    rejection_summary,
    train_difference_net,
)
from .synth import (
    BayesSurrogate,
    Scenario,
    bump_scenario,
    coverage_experiment,
    diminishing_marginal_scenario,
    linear_scenario,
    sample,
    true_rejection_rate,
)
from .training import TrainConfig, TrainTrace, cross_entropy_loss, parameter_gradient, train

__version__ = "0.1.0"
