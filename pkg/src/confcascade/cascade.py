"""Family-wise p-value corrections and the early-pruning conformal cascade."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .conformal import CalibrationTable, PredictionSet, smoothed_pvalues
from .core import Example, RandomSource, check_epsilon


class CorrectionKind(str, Enum):
    BONFERRONI = "bonferroni"
    SIMES = "simes"
    NONE = "none"


def _check_pvalues(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape[-1] < 1:
        raise ValueError("need at least one p-value")
    if np.any(~(p >= 0.0) | ~(p <= 1.0)):
        raise ValueError("p-values must lie in [0, 1]")
    return p


def bonferroni(p) -> float | np.ndarray:
    """Combined p-value ``min(1, m * min(p))`` over the last axis."""
    p = _check_pvalues(p)
    m = p.shape[-1]
    out = np.minimum(1.0, m * p.min(axis=-1))
    return float(out) if out.ndim == 0 else out


def simes(p) -> float | np.ndarray:
    """Simes combination: ``min(1, min_i m * p_(i) / i)`` over the last axis."""
    p = _check_pvalues(p)
    m = p.shape[-1]
    ranks = np.arange(1, m + 1, dtype=np.float64)
    out = np.minimum(1.0, (m * np.sort(p, axis=-1) / ranks).min(axis=-1))
    return float(out) if out.ndim == 0 else out


def uncorrected(p) -> float | np.ndarray:
    """Raw minimum of the p-values. Not a valid combination for m > 1."""
    p = _check_pvalues(p)
    out = p.min(axis=-1)
    return float(out) if out.ndim == 0 else out


_COMBINERS = {
    CorrectionKind.BONFERRONI: bonferroni,
    CorrectionKind.SIMES: simes,
    CorrectionKind.NONE: uncorrected,
}


@dataclass(frozen=True)
class CorrectionMethod:
    kind: CorrectionKind
    m: int

    def __post_init__(self):
        object.__setattr__(self, "kind", CorrectionKind(self.kind))
        if self.m < 1:
            raise ValueError(f"layer count must be >= 1, got {self.m}")

    def __call__(self, p):
        p = np.asarray(p, dtype=np.float64)
        if p.shape[-1] != self.m:
            raise ValueError(f"expected {self.m} p-values, got {p.shape[-1]}")
        return _COMBINERS[self.kind](p)


def conservative_correct(known, method: CorrectionMethod) -> float | np.ndarray:
    """Correct a known prefix of p-values, treating the unknown rest as 1.

    By monotonicity of the correction the result bounds the fully known
    corrected value from above.
    """
    known = np.asarray(known, dtype=np.float64)
    j = known.shape[-1]
    if j < 1:
        raise ValueError("need at least one known p-value")
    if j > method.m:
        raise ValueError(f"{j} p-values known but the cascade has {method.m} layers")
    pad = np.ones(known.shape[:-1] + (method.m - j,))
    return method(np.concatenate([known, pad], axis=-1))


@dataclass
class CostCounter:
    pvalue_computations: int = 0
    denominator: int = 0

    def __add__(self, other: "CostCounter") -> "CostCounter":
        return CostCounter(
            self.pvalue_computations + other.pvalue_computations,
            self.denominator + other.denominator,
        )

    @property
    def ratio(self) -> float:
        return self.pvalue_computations / self.denominator


@dataclass(frozen=True, eq=False)
class CascadeResult:
    prediction: PredictionSet
    cost: CostCounter
    chain: tuple[frozenset[int], ...]  # C^1 ⊇ C^2 ⊇ ... ⊇ C^m


def _check_shapes(e: Example, cal: CalibrationTable, method: CorrectionMethod):
    if e.layer_count != cal.layer_count:
        raise ValueError(f"example {e.id!r} has {e.layer_count} layers, calibration has {cal.layer_count}")
    if method.m != cal.layer_count:
        raise ValueError(f"correction is set up for {method.m} layers, calibration has {cal.layer_count}")


def cascaded_predict(
    e: Example,
    cal: CalibrationTable,
    eps: float,
    method: CorrectionMethod,
    rng: RandomSource,
) -> CascadeResult:
    """Run the conformal cascade on one example with early pruning.

    All p-values start at 1. At layer ``j`` each surviving candidate gets
    its layer-``j`` p-value, the whole vector is corrected, and the
    candidate survives iff the corrected value exceeds ``eps``. Pruned
    candidates are never scored by later layers.
    """
    eps = check_epsilon(eps)
    _check_shapes(e, cal, method)
    m, k = cal.layer_count, e.candidate_count
    p = np.ones((k, m))
    corrected = np.ones(k)
    alive = np.arange(k)
    cost = CostCounter(0, m * k)
    chain = []
    for j in range(m):
        if len(alive):
            taus = rng.tie_draws(e.id, j, k)[alive]
            p[alive, j] = smoothed_pvalues(e.scores[alive, j], cal.per_layer[j], taus)
            cost.pvalue_computations += len(alive)
            corrected[alive] = method(p[alive])
            alive = alive[corrected[alive] > eps]
        chain.append(frozenset(int(y) for y in e.labels[alive]))
    pred = PredictionSet(e.labels[alive], corrected[alive], k, cost.pvalue_computations)
    return CascadeResult(pred, cost, tuple(chain))


def conservative_bounds(e: Example, cal: CalibrationTable, method: CorrectionMethod, rng: RandomSource) -> np.ndarray:
    """Every candidate's conservative corrected p-value after each layer.

    Returns an array of shape (n_candidates, n_layers) whose column ``j``
    is the correction of the first ``j + 1`` p-values padded with ones.
    All p-values are computed, so this is the no-pruning view of the
    cascade; columns are non-increasing left to right.
    """
    _check_shapes(e, cal, method)
    m, k = cal.layer_count, e.candidate_count
    p = np.ones((k, m))
    out = np.empty((k, m))
    for j in range(m):
        taus = rng.tie_draws(e.id, j, k)
        p[:, j] = smoothed_pvalues(e.scores[:, j], cal.per_layer[j], taus)
        out[:, j] = method(p)
    return out


def cascade_outcomes(bounds: np.ndarray, eps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Survivor masks and p-value computation counts for a grid of tolerances.

    ``bounds`` comes from :func:`conservative_bounds`. Returns the final-set
    mask of shape (n_eps, n_candidates) and the number of p-values the
    pruned cascade computes at each tolerance, shape (n_eps,).
    """
    eps = np.asarray(eps, dtype=np.float64)
    k, m = bounds.shape
    # survival at layer j == bound_j > eps, since bounds only shrink with j
    survive = bounds[None, :, :] > eps[:, None, None]
    computations = k + survive[:, :, : m - 1].sum(axis=(1, 2))
    return survive[:, :, m - 1], computations
