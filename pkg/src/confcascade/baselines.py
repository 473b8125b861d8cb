"""Top-k and raw-threshold set predictors tuned on calibration data.

Both rules read a single score layer. The ranking score is the negated
nonconformity (higher is better); top-k ranks candidates within each
example, breaking ties by stored candidate order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .conformal import PredictionSet
from .core import Example, RandomSource, check_epsilon, sample_answer


class HeuristicKind(str, Enum):
    TOPK = "topk"
    THRESHOLD = "threshold"


class UnreachableTarget(ValueError):
    """No cutoff reaches the requested calibration accuracy."""


@dataclass(frozen=True)
class HeuristicRule:
    kind: HeuristicKind
    layer: int
    tau_star: float  # rank count k for top-k, raw score cutoff for threshold

    def __post_init__(self):
        object.__setattr__(self, "kind", HeuristicKind(self.kind))
        if self.kind == HeuristicKind.TOPK:
            if self.tau_star != int(self.tau_star) or self.tau_star < 1:
                raise ValueError(f"top-k cutoff must be a positive integer, got {self.tau_star}")
            object.__setattr__(self, "tau_star", int(self.tau_star))


def ranks(e: Example, layer: int) -> np.ndarray:
    """1-based rank of every candidate by descending score at ``layer``."""
    order = np.argsort(e.scores[:, layer], kind="stable")  # ascending nonconformity
    r = np.empty(e.candidate_count, dtype=np.int64)
    r[order] = np.arange(1, e.candidate_count + 1)
    return r


def heuristic_scores(e: Example, kind: HeuristicKind, layer: int) -> np.ndarray:
    if kind == HeuristicKind.TOPK:
        return -ranks(e, layer).astype(np.float64)
    return -e.scores[:, layer]


def gold_scores(examples: Sequence[Example], kind, layer: int, rng: RandomSource) -> np.ndarray:
    """Heuristic score of one uniformly drawn gold answer per example."""
    kind = HeuristicKind(kind)
    out = np.empty(len(examples))
    for i, e in enumerate(examples):
        gold = sample_answer(e, rng)
        out[i] = heuristic_scores(e, kind, layer)[e.position(gold)]
    return out


def largest_cutoff(gold: np.ndarray, eps: float) -> float:
    """Largest ``t`` with ``mean(gold >= t) >= 1 - eps``.

    The supremum is attained at a gold score: it is the ``r``-th largest,
    where ``r`` is the fewest examples that must be covered.
    """
    n = len(gold)
    need = math.ceil((1.0 - eps) * n - 1e-9)
    if need > n:
        raise UnreachableTarget(f"cannot cover {1 - eps:.6f} of {n} calibration examples")
    if need <= 0:
        return math.inf
    return float(np.sort(gold)[::-1][need - 1])


def tune_threshold(
    cal_examples: Sequence[Example],
    kind: HeuristicKind | str,
    layer: int,
    eps: float,
    rng: RandomSource,
) -> HeuristicRule:
    """Tune the cutoff so calibration gold answers are covered at rate ``1 - eps``."""
    eps = check_epsilon(eps)
    kind = HeuristicKind(kind)
    if not cal_examples:
        raise ValueError("need a non-empty calibration set")
    tau = largest_cutoff(gold_scores(cal_examples, kind, layer, rng), eps)
    if kind == HeuristicKind.TOPK:
        return HeuristicRule(kind, layer, max(1, int(-tau)) if math.isfinite(tau) else 1)
    return HeuristicRule(kind, layer, tau)


def predict_heuristic(e: Example, rule: HeuristicRule) -> PredictionSet:
    """Apply a tuned rule: the ``k`` best candidates, or all scoring at least the cutoff."""
    if rule.kind == HeuristicKind.TOPK:
        keep = ranks(e, rule.layer) <= rule.tau_star
    else:
        keep = -e.scores[:, rule.layer] >= rule.tau_star
    idx = np.flatnonzero(keep)
    if rule.kind == HeuristicKind.TOPK:
        idx = idx[np.argsort(ranks(e, rule.layer)[idx], kind="stable")]
    return PredictionSet(e.labels[idx], np.full(len(idx), np.nan), e.candidate_count, 0)
