"""sedkit: concept-based self-explanation and self-error detection.

Score and select explanation concepts for a single-class classifier, flag
class-prediction errors by comparing predicted explanations against the
ground truth of the predicted class, and benchmark the R1 / SE / SE+R1
detection schemes on simulated streams, toy trained models, or ingested
prediction logs.
"""

__version__ = "0.1.0"

from .concepts import (
    ConceptMatrix,
    associated_classes,
    detectable_errors,
    explanation_of,
    load_concept_matrix,
    parse_concept_matrix,
)
from .detection import (
    SCHEME_R1,
    SCHEME_SE,
    SCHEME_SE_R1,
    SCHEMES,
    DetectionOutcome,
    EvalReport,
    PredictionRecord,
    evaluate_scheme,
    max_ped_oracle,
    record_outcome,
    sed_flag,
)
from .errors import ParseError, SedkitError, TrainingDivergedError, ValidationError
from .logio import (
    LogHeader,
    project_records,
    read_log,
    validate_against_matrix,
    write_log,
)
from .scoring import (
    ScoreRow,
    ScoreTable,
    importance_score,
    jaccard,
    overall_scores,
    similarity_score,
)
from .simulate import SimulatorSpec, simulate_records
from .toymodel import (
    SEModelParams,
    SyntheticTask,
    TrainConfig,
    TrainResult,
    fgsm_perturb,
    load_model,
    loss,
    make_task,
    predict,
    predict_batch,
    sample_dataset,
    save_model,
    train_sgd,
)
from .workflow import (
    LogBackend,
    SelectionResult,
    SimulatorBackend,
    SweepResult,
    SweepRow,
    ToyModelBackend,
    WorkflowConfig,
    emit_report,
    run_scheme_sweep,
    run_selection_workflow,
)

__all__ = [
    "ConceptMatrix",
    "DetectionOutcome",
    "EvalReport",
    "LogBackend",
    "LogHeader",
    "ParseError",
    "PredictionRecord",
    "SCHEMES",
    "SCHEME_R1",
    "SCHEME_SE",
    "SCHEME_SE_R1",
    "ScoreRow",
    "ScoreTable",
    "SEModelParams",
    "SedkitError",
    "SelectionResult",
    "SimulatorBackend",
    "SimulatorSpec",
    "SweepResult",
    "SweepRow",
    "SyntheticTask",
    "ToyModelBackend",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "ValidationError",
    "WorkflowConfig",
    "associated_classes",
    "detectable_errors",
    "emit_report",
    "evaluate_scheme",
    "explanation_of",
    "fgsm_perturb",
    "importance_score",
    "jaccard",
    "load_concept_matrix",
    "load_model",
    "loss",
    "make_task",
    "max_ped_oracle",
    "overall_scores",
    "parse_concept_matrix",
    "predict",
    "predict_batch",
    "project_records",
    "read_log",
    "record_outcome",
    "run_scheme_sweep",
    "run_selection_workflow",
    "sample_dataset",
    "save_model",
    "sed_flag",
    "similarity_score",
    "simulate_records",
    "train_sgd",
    "validate_against_matrix",
    "write_log",
]
