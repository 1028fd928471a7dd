"""Desk-scale two-view co-training laboratory.

Modules: ``data`` (synthetic two-view generator with a dependence knob),
``classifier`` (per-view logistic classifiers with an agreement loss),
``engine`` (the pseudo-label exchange loop), ``theory`` (benefit/bound
calculators, recursion simulator, trajectory fitting, audits), ``cli``
(config-driven batch runner).
"""

from .data import (
    ConfigError,
    Dataset,
    GeneratorConfig,
    MultimodalInstance,
    apply_shift,
    conditional_dependence_stat,
    generate_dataset,
    independence_proxy,
    load_dataset,
    save_dataset,
)
from .classifier import (
    DivergenceError,
    Prediction,
    TrainConfig,
    ViewClassifier,
    agreement_loss_grad,
    evaluate_error,
    load_classifier,
    new_classifier,
    predict,
    predict_proba,
    pseudo_label,
    save_classifier,
    supervised_loss_grad,
    train,
)
from .engine import (
    CoTrainConfig,
    LemmaReport,
    PseudoLabelRecord,
    RoundMetrics,
    harvest_pseudo_labels,
    initial_classifiers,
    one_step_lemma_experiment,
    run_cotraining,
    select_top_k,
)
from .theory import (
    AuditGrid,
    AuditReport,
    BoundInputs,
    BoundReport,
    ContractionFit,
    GammaInputs,
    disagreement_rate,
    fit_contraction,
    gamma,
    generalization_bound,
    monotonicity_audit,
    simulate_recursion,
)

__version__ = "0.1.0"
