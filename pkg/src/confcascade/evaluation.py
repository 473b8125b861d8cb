"""Trial protocol, metrics and curve summaries for set-valued predictors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import baselines
from .cascade import CorrectionMethod, CostCounter, cascade_outcomes, conservative_bounds
from .conformal import CalibrationMode, PredictionSet, calibrate, candidate_pvalues
from .core import Dataset, Example, RandomSource, validate_dataset

PREDICTORS = ("cp", "min-cp", "cascade-cp", "cascade-min-cp", "topk", "threshold")
METRICS = ("accuracy", "efficiency", "cost", "set_size")

DEFAULT_GRID = tuple(round(0.01 * i, 2) for i in range(1, 100))


def check_grid(values) -> np.ndarray:
    grid = np.asarray(values, dtype=np.float64).reshape(-1)
    if grid.size == 0:
        raise ValueError("epsilon grid is empty")
    if np.any(grid <= 0) or np.any(grid >= 1):
        raise ValueError("epsilon grid values must lie in (0, 1)")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("epsilon grid must be strictly increasing")
    return grid


def accuracy(pred_sets: Sequence[PredictionSet], examples: Sequence[Example]) -> float:
    """Fraction of examples whose prediction set holds at least one admissible label."""
    if len(pred_sets) != len(examples):
        raise ValueError("prediction sets and examples are not aligned")
    hits = [bool(ps.label_set() & e.admissible) for ps, e in zip(pred_sets, examples)]
    return float(np.mean(hits)) if hits else 0.0


def predictive_efficiency(pred_sets: Sequence[PredictionSet], examples: Sequence[Example]) -> float:
    """Mean of |set| / |candidates|; lower is better."""
    if len(pred_sets) != len(examples):
        raise ValueError("prediction sets and examples are not aligned")
    fracs = [len(ps) / e.candidate_count for ps, e in zip(pred_sets, examples)]
    return float(np.mean(fracs)) if fracs else 0.0


def amortized_cost(counters) -> float:
    """Total p-value computations over the total a no-pruning cascade would need."""
    if isinstance(counters, CostCounter):
        counters = [counters]
    total = sum(counters, CostCounter())
    return total.ratio


def auc(eps, values) -> float:
    """Trapezoidal area under ``values(eps)``, divided by the span of ``eps``."""
    eps = np.asarray(eps, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if eps.size == 1:
        return float(values[0])
    return float(np.trapezoid(values, eps) / (eps[-1] - eps[0]))


def percentile_band(values, lo: float = 16, hi: float = 84) -> tuple[float, float]:
    """Nearest-rank percentiles of per-trial values."""
    band = np.percentile(np.asarray(values, dtype=np.float64), [lo, hi], method="inverted_cdf")
    return float(band[0]), float(band[1])


@dataclass(frozen=True)
class TrialConfig:
    trial_count: int = 20
    calibration_fraction: float = 0.8
    seed: int = 0
    predictors: tuple[str, ...] = ("cp",)
    correction: str = "bonferroni"
    layer: int = -1  # score layer for single-layer predictors

    def __post_init__(self):
        if self.trial_count < 1:
            raise ValueError("trial_count must be >= 1")
        if not 0 < self.calibration_fraction < 1:
            raise ValueError("calibration_fraction must lie in (0, 1)")
        object.__setattr__(self, "predictors", tuple(self.predictors))
        unknown = [p for p in self.predictors if p not in PREDICTORS]
        if unknown or not self.predictors:
            raise ValueError(f"unknown predictors {unknown}; choose from {PREDICTORS}")


@dataclass
class TrialReport:
    """Per-(trial, epsilon) metrics for each predictor, with summaries.

    ``values[predictor][metric]`` is an array of shape (n_trials, n_eps).
    """

    grid: np.ndarray
    config: TrialConfig
    values: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)

    @property
    def predictors(self) -> tuple[str, ...]:
        return tuple(self.values)

    def mean(self, predictor: str, metric: str) -> np.ndarray:
        return self.values[predictor][metric].mean(axis=0)

    def band(self, predictor: str, metric: str, lo: float = 16, hi: float = 84) -> tuple[np.ndarray, np.ndarray]:
        v = self.values[predictor][metric]
        bands = np.array([percentile_band(v[:, i], lo, hi) for i in range(v.shape[1])])
        return bands[:, 0], bands[:, 1]

    def trial_aucs(self, predictor: str, metric: str) -> np.ndarray:
        return np.array([auc(self.grid, row) for row in self.values[predictor][metric]])

    def auc(self, predictor: str, metric: str) -> float:
        return auc(self.grid, self.mean(predictor, metric))


def split_indices(n: int, fraction: float, rng: RandomSource) -> tuple[np.ndarray, np.ndarray]:
    n_cal = int(np.floor(fraction * n))
    if n_cal < 1 or n - n_cal < 1:
        raise ValueError(f"split of {n} examples at fraction {fraction} leaves a side empty")
    perm = rng.generator("split").permutation(n)
    return np.sort(perm[:n_cal]), np.sort(perm[n_cal:])


def _summarize(hits, sizes, fracs, comps, denoms) -> dict[str, np.ndarray]:
    # inputs are (n_test, n_eps) except denoms (n_test,)
    return {
        "accuracy": hits.mean(axis=0),
        "efficiency": fracs.mean(axis=0),
        "cost": comps.sum(axis=0) / denoms.sum(),
        "set_size": sizes.mean(axis=0),
    }


def evaluate_split(
    cal: Sequence[Example],
    test: Sequence[Example],
    grid,
    predictor: str,
    rng: RandomSource,
    correction: str = "bonferroni",
    layer: int = -1,
) -> dict[str, np.ndarray]:
    """Metrics at every tolerance in ``grid`` for one calibration/test split.

    Calibration tables and tie draws are computed once and reused across
    the whole grid. For cascades, the survivor sets and computation counts
    at every tolerance are read off the conservative bounds, which gives
    exactly what :func:`cascade.cascaded_predict` does tolerance by tolerance.
    """
    grid = check_grid(grid)
    m = test[0].layer_count
    layer = layer % m
    n_test, n_eps = len(test), len(grid)
    hits = np.zeros((n_test, n_eps), dtype=bool)
    sizes = np.zeros((n_test, n_eps))
    comps = np.zeros((n_test, n_eps))
    denoms = np.zeros(n_test)
    counts = np.array([e.candidate_count for e in test], dtype=np.float64)

    if predictor in ("cp", "min-cp"):
        mode = CalibrationMode.MIN if predictor == "min-cp" else CalibrationMode.STANDARD
        table = calibrate(cal, mode, rng)
        for i, e in enumerate(test):
            keep = candidate_pvalues(e, table, layer, rng)[None, :] > grid[:, None]
            sizes[i] = keep.sum(axis=1)
            hits[i] = keep[:, e.admissible_mask].any(axis=1)
            comps[i] = denoms[i] = e.candidate_count
    elif predictor in ("cascade-cp", "cascade-min-cp"):
        mode = CalibrationMode.MIN if predictor == "cascade-min-cp" else CalibrationMode.STANDARD
        table = calibrate(cal, mode, rng)
        method = CorrectionMethod(correction, m)
        for i, e in enumerate(test):
            keep, comps[i] = cascade_outcomes(conservative_bounds(e, table, method, rng), grid)
            sizes[i] = keep.sum(axis=1)
            hits[i] = keep[:, e.admissible_mask].any(axis=1)
            denoms[i] = m * e.candidate_count
    elif predictor in ("topk", "threshold"):
        kind = baselines.HeuristicKind(predictor)
        gold = baselines.gold_scores(cal, kind, layer, rng)
        cutoffs = np.array([baselines.largest_cutoff(gold, eps) for eps in grid])
        if kind == baselines.HeuristicKind.TOPK:
            cutoffs = np.where(np.isfinite(cutoffs), np.minimum(cutoffs, -1.0), -1.0)
        for i, e in enumerate(test):
            keep = baselines.heuristic_scores(e, kind, layer)[None, :] >= cutoffs[:, None]
            sizes[i] = keep.sum(axis=1)
            hits[i] = keep[:, e.admissible_mask].any(axis=1)
            # no p-values are computed; report the single-pass cost
            comps[i] = denoms[i] = e.candidate_count
    else:
        raise ValueError(f"unknown predictor {predictor!r}")
    return _summarize(hits, sizes, sizes / counts[:, None], comps, denoms)


def run_trials(d: Dataset, grid, cfg: TrialConfig) -> TrialReport:
    """Repeat random calibration/test splits and evaluate each predictor on them.

    Every predictor sees the same split and the same random streams within
    a trial, so comparisons between predictors are paired.
    """
    problems = validate_dataset(d)
    if problems:
        raise ValueError("invalid dataset: " + "; ".join(problems[:5]))
    grid = check_grid(grid)
    if not -d.layer_count <= cfg.layer < d.layer_count:
        raise ValueError(f"layer {cfg.layer} out of range for {d.layer_count} layers")
    master = RandomSource(cfg.seed)
    per_trial = {p: {m: [] for m in METRICS} for p in cfg.predictors}
    for t in range(cfg.trial_count):
        trng = master.child("trial", t)
        cal_idx, test_idx = split_indices(len(d), cfg.calibration_fraction, trng)
        cal = [d.examples[i] for i in cal_idx]
        test = [d.examples[i] for i in test_idx]
        for p in cfg.predictors:
            out = evaluate_split(cal, test, grid, p, trng, cfg.correction, cfg.layer)
            for m in METRICS:
                per_trial[p][m].append(out[m])
    values = {p: {m: np.vstack(v) for m, v in ms.items()} for p, ms in per_trial.items()}
    return TrialReport(grid, cfg, values)
