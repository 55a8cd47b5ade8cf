"""Sample- and query-complexity benchmarks for fitting shallow ReLU teachers."""

from .backend import BACKEND, available_backends
from .errors import (
    ConfigError,
    ConvergenceError,
    FitError,
    InsufficientDataError,
    ShapeError,
)
from .rng import RandomSource, derive_seed
from .teacher import TeacherConfig, TeacherNet, generate_dataset, sample_teacher
from .student import StudentNet, forward, init_student
from .trainer import TrainReport, train, train_split
from .width_search import WidthScheme, select_and_train
from .experiment import SweepConfig, run_sweep, run_trial, run_width_ablation, trial_seed
from .conditioning import compute_log_lambda, lambda_sweep

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "ConvergenceError",
    "FitError",
    "InsufficientDataError",
    "RandomSource",
    "ShapeError",
    "StudentNet",
    "SweepConfig",
    "TeacherConfig",
    "TeacherNet",
    "TrainReport",
    "WidthScheme",
    "available_backends",
    "compute_log_lambda",
    "derive_seed",
    "forward",
    "generate_dataset",
    "init_student",
    "lambda_sweep",
    "run_sweep",
    "run_trial",
    "run_width_ablation",
    "sample_teacher",
    "select_and_train",
    "train",
    "train_split",
    "trial_seed",
    "__version__",
]
