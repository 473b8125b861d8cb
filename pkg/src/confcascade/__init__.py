"""Conformal prediction with expanded admission and early-pruning cascades."""

from .baselines import HeuristicKind, HeuristicRule, UnreachableTarget, predict_heuristic, tune_threshold
from .cascade import (
    CascadeResult,
    CorrectionKind,
    CorrectionMethod,
    CostCounter,
    bonferroni,
    cascaded_predict,
    conservative_correct,
    simes,
)
from .conformal import (
    CalibrationMode,
    CalibrationTable,
    PredictionSet,
    calibrate,
    min_admissible_score,
    predict_set,
    smoothed_pvalue,
)
from .core import Dataset, Example, RandomSource, validate_dataset
from .data import ScoreFileError, load_score_file, save_score_file, write_report
from .evaluation import TrialConfig, TrialReport, accuracy, amortized_cost, auc, percentile_band, predictive_efficiency, run_trials
from .synthetic import SynthConfig, synthesize

__version__ = "0.1.0"
