"""Smoothed conformal p-values, calibration tables and single-layer prediction sets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import Dataset, Example, RandomSource, check_epsilon, sample_answer, validate_dataset


class CalibrationMode(str, Enum):
    STANDARD = "standard"
    MIN = "min"


@dataclass(frozen=True, eq=False)
class CalibrationTable:
    """Sorted calibration scores, one row per layer.

    ``per_layer`` has shape (n_layers, n) and every row is ascending.
    """

    mode: CalibrationMode
    per_layer: np.ndarray

    def __post_init__(self):
        arr = np.array(self.per_layer, dtype=np.float64, ndmin=2)
        if arr.shape[1] < 1:
            raise ValueError("calibration table needs at least one score per layer")
        if np.any(np.diff(arr, axis=1) < 0):
            raise ValueError("calibration scores must be sorted ascending per layer")
        arr.setflags(write=False)
        object.__setattr__(self, "per_layer", arr)
        object.__setattr__(self, "mode", CalibrationMode(self.mode))

    @property
    def n(self) -> int:
        return self.per_layer.shape[1]

    @property
    def layer_count(self) -> int:
        return self.per_layer.shape[0]

    def __eq__(self, other):
        if not isinstance(other, CalibrationTable):
            return NotImplemented
        return self.mode == other.mode and np.array_equal(self.per_layer, other.per_layer)


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Labels kept at one tolerance, with the p-value each was kept on."""

    labels: np.ndarray
    pvalues: np.ndarray
    candidate_count: int
    pvalue_computations: int

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return bool(np.any(self.labels == label))

    def label_set(self) -> frozenset[int]:
        return frozenset(int(y) for y in self.labels)


def smoothed_pvalue(v: float, cal: np.ndarray, tie_draw: float) -> float:
    """Smoothed empirical p-value of score ``v`` against sorted calibration scores.

    ``(#{cal > v} + tie_draw * #{cal == v} + 1) / (n + 1)``, with the
    counts obtained by binary search, so ``cal`` must be ascending.
    """
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"score must be finite, got {v}")
    n = len(cal)
    lo = int(np.searchsorted(cal, v, side="left"))
    hi = int(np.searchsorted(cal, v, side="right"))
    return ((n - hi) + tie_draw * (hi - lo) + 1.0) / (n + 1.0)


def smoothed_pvalues(v: np.ndarray, cal: np.ndarray, tie_draws: np.ndarray) -> np.ndarray:
    """Vectorised :func:`smoothed_pvalue` over an array of scores."""
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("scores must be finite")
    n = len(cal)
    lo = np.searchsorted(cal, v, side="left")
    hi = np.searchsorted(cal, v, side="right")
    return ((n - hi) + tie_draws * (hi - lo) + 1.0) / (n + 1.0)


def min_admissible_score(e: Example, layer: int) -> float:
    """Smallest layer score among the admissible labels of ``e``."""
    if not e.admissible:
        raise ValueError(f"example {e.id!r} has no admissible labels")
    if not 0 <= layer < e.layer_count:
        raise IndexError(f"layer {layer} out of range for {e.layer_count} layers")
    return float(e.scores[e.admissible_mask, layer].min())


def calibration_scores(e: Example, mode: CalibrationMode, rng: RandomSource) -> np.ndarray:
    """The per-layer calibration row contributed by one example."""
    if mode == CalibrationMode.MIN:
        if not e.admissible:
            raise ValueError(f"example {e.id!r} has no admissible labels")
        return e.scores[e.admissible_mask].min(axis=0)
    gold = sample_answer(e, rng)
    return e.scores[e.position(gold)]


def calibrate(d: Dataset | list[Example], mode: CalibrationMode | str, rng: RandomSource) -> CalibrationTable:
    """Build a calibration table from ``d``.

    Standard mode takes the scores of one uniformly drawn gold answer per
    example (the same label for every layer); min mode takes the per-layer
    minimum over the admissible set.
    """
    mode = CalibrationMode(mode)
    if isinstance(d, Dataset):
        problems = validate_dataset(d)
        if problems:
            raise ValueError("invalid dataset: " + "; ".join(problems[:5]))
        examples = d.examples
    else:
        examples = list(d)
    if not examples:
        raise ValueError("cannot calibrate on an empty set")
    rows = np.stack([calibration_scores(e, mode, rng) for e in examples])
    return CalibrationTable(mode, np.sort(rows.T, axis=1))


def candidate_pvalues(e: Example, cal: CalibrationTable, layer: int, rng: RandomSource) -> np.ndarray:
    """Layer p-value of every candidate, using the shared tie draws of ``rng``."""
    if not 0 <= layer < cal.layer_count:
        raise IndexError(f"layer {layer} not in calibration table")
    taus = rng.tie_draws(e.id, layer, e.candidate_count)
    return smoothed_pvalues(e.scores[:, layer], cal.per_layer[layer], taus)


def predict_set(e: Example, cal: CalibrationTable, layer: int, eps: float, rng: RandomSource) -> PredictionSet:
    """Candidates of ``e`` whose layer p-value exceeds ``eps``."""
    eps = check_epsilon(eps)
    p = candidate_pvalues(e, cal, layer, rng)
    keep = p > eps
    return PredictionSet(e.labels[keep], p[keep], e.candidate_count, e.candidate_count)
