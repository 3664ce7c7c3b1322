"""perfadapt: direct optimization of multivariate performance measures
(error rate, F1, PRBEP, AUC) for linear classifiers, and adaptation of
black-box auxiliary classifiers to a target measure via feature
augmentation."""

from .adapt import AdaptedModel, adapt, delta_norm, predict_adapted
from .auxiliary import (
    ExternalPredictions,
    LinearSgdModel,
    TreeModel,
    load_external_predictions,
    train_linear_sgd,
    train_tree,
)
from .dataset import (
    AugmentedDataset,
    Dataset,
    Example,
    augment,
    load_svmlight,
    parse_svmlight,
    save_svmlight,
)
from .inference import (
    ConstraintRecord,
    brute_force_most_violated,
    most_violated,
    most_violated_auc,
    most_violated_contingency,
)
from .kernels import BACKEND
from .measures import (
    ContingencyTable,
    MeasureKind,
    MeasureSpec,
    auc_loss,
    contingency,
    evaluate,
    evaluate_all,
    loss,
)
from .solver import (
    Hyperparams,
    LinearModel,
    WorkingSet,
    convex_upper_bound,
    cutting_plane_train,
    solve_restricted_qp,
)
from .sparse import SparseVector

__version__ = "0.1.0"

__all__ = [
    "AdaptedModel",
    "AugmentedDataset",
    "BACKEND",
    "ConstraintRecord",
    "ContingencyTable",
    "Dataset",
    "Example",
    "ExternalPredictions",
    "Hyperparams",
    "LinearModel",
    "LinearSgdModel",
    "MeasureKind",
    "MeasureSpec",
    "SparseVector",
    "TreeModel",
    "WorkingSet",
    "adapt",
    "auc_loss",
    "augment",
    "brute_force_most_violated",
    "contingency",
    "convex_upper_bound",
    "cutting_plane_train",
    "delta_norm",
    "evaluate",
    "evaluate_all",
    "load_external_predictions",
    "load_svmlight",
    "loss",
    "most_violated",
    "most_violated_auc",
    "most_violated_contingency",
    "parse_svmlight",
    "predict_adapted",
    "save_svmlight",
    "solve_restricted_qp",
    "train_linear_sgd",
    "train_tree",
]
