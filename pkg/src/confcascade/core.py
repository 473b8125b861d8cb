"""Data model: examples, datasets, tolerances and seeded random streams."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np


class Example:
    """One instance: candidate labels with per-layer nonconformity scores.

    Parameters
    ----------
    id : str
        Unique example identifier.
    labels : sequence of int
        Candidate label ids, in stored order.
    scores : array-like of shape (n_candidates, n_layers)
        Nonconformity score of each candidate under each cascade layer.
        Lower means more conforming.
    admissible : iterable of int
        Labels accepted as correct (the expanded answer set).
    answers : iterable of int
        Gold answers; expected to be a subset of ``admissible``.

    Construction does not enforce invariants, so malformed instances can
    be inspected by :func:`validate_dataset`.
    """

    __slots__ = ("id", "labels", "scores", "admissible", "answers", "_index")

    def __init__(self, id, labels, scores, admissible, answers):
        self.id = str(id)
        self.labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        scores = np.asarray(scores, dtype=np.float64)
        if scores.ndim == 1:
            scores = scores.reshape(len(self.labels), -1) if len(self.labels) else scores.reshape(0, 0)
        self.scores = scores
        self.admissible = frozenset(int(a) for a in admissible)
        self.answers = frozenset(int(a) for a in answers)
        self.labels.setflags(write=False)
        self.scores.setflags(write=False)
        self._index = None

    @property
    def candidate_count(self) -> int:
        return len(self.labels)

    @property
    def layer_count(self) -> int:
        return self.scores.shape[1] if self.scores.ndim == 2 else 0

    @property
    def candidates(self) -> list[tuple[int, tuple[float, ...]]]:
        return [(int(y), tuple(float(s) for s in row)) for y, row in zip(self.labels, self.scores)]

    def position(self, label: int) -> int:
        """Row index of ``label`` in the candidate list."""
        if self._index is None:
            self._index = {int(y): i for i, y in enumerate(self.labels)}
        return self._index[int(label)]

    def mask(self, labels: Iterable[int]) -> np.ndarray:
        """Boolean mask over candidates marking membership in ``labels``."""
        return np.isin(self.labels, np.fromiter(labels, dtype=np.int64))

    @property
    def admissible_mask(self) -> np.ndarray:
        return self.mask(self.admissible)

    def __eq__(self, other):
        if not isinstance(other, Example):
            return NotImplemented
        return (
            self.id == other.id
            and np.array_equal(self.labels, other.labels)
            and self.scores.shape == other.scores.shape
            and np.array_equal(self.scores, other.scores)
            and self.admissible == other.admissible
            and self.answers == other.answers
        )

    def __hash__(self):
        return hash(self.id)

    def __repr__(self):
        return (
            f"Example(id={self.id!r}, candidates={self.candidate_count}, "
            f"layers={self.layer_count}, admissible={len(self.admissible)}, "
            f"answers={len(self.answers)})"
        )


@dataclass(frozen=True, eq=True)
class Dataset:
    layer_count: int
    examples: tuple[Example, ...]
    layer_names: tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        object.__setattr__(self, "layer_names", tuple(self.layer_names))

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def __getitem__(self, i):
        return self.examples[i]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(self.layer_count, [self.examples[i] for i in indices], self.layer_names, self.metadata)

    @property
    def label_space_sizes(self) -> list[int]:
        return [e.candidate_count for e in self.examples]


def check_epsilon(eps: float) -> float:
    """Return ``eps`` as float, raising ``ValueError`` unless 0 < eps < 1."""
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"tolerance must lie in (0, 1), got {eps}")
    return eps


def validate_dataset(d: Dataset) -> list[str]:
    """List every invariant violation in ``d``; empty when well formed."""
    violations = []
    m = d.layer_count
    if not isinstance(m, (int, np.integer)) or m < 1:
        violations.append(f"dataset: layer_count must be >= 1, got {m!r}")
    seen = set()
    for e in d.examples:
        where = f"example {e.id!r}"
        if e.id in seen:
            violations.append(f"{where}: duplicate id")
        seen.add(e.id)
        if e.candidate_count == 0:
            violations.append(f"{where}: candidates: empty candidate list")
            continue
        if len(np.unique(e.labels)) != e.candidate_count:
            violations.append(f"{where}: candidates: duplicate label ids")
        if np.any(e.labels < 0):
            violations.append(f"{where}: candidates: negative label id")
        if e.scores.ndim != 2 or e.scores.shape[0] != e.candidate_count:
            violations.append(f"{where}: scores: expected one score vector per candidate")
        elif e.scores.shape[1] != m:
            violations.append(
                f"{where}: scores: score vectors have {e.scores.shape[1]} entries, dataset declares {m} layers"
            )
        elif not np.all(np.isfinite(e.scores)):
            violations.append(f"{where}: scores: non-finite entry")
        label_set = set(int(y) for y in e.labels)
        if not e.admissible:
            violations.append(f"{where}: admissible: empty admissible set")
        elif not e.admissible <= label_set:
            violations.append(f"{where}: admissible: labels {sorted(e.admissible - label_set)} are not candidates")
        if not e.answers:
            violations.append(f"{where}: answers: empty answer set")
        elif not e.answers <= e.admissible:
            violations.append(f"{where}: answers: labels {sorted(e.answers - e.admissible)} are not admissible")
    return violations


@lru_cache(maxsize=1 << 16)
def stable_key(key) -> int:
    """Map an int or string to a non-negative 64-bit integer, stable across runs."""
    if isinstance(key, (int, np.integer)) and key >= 0:
        return int(key)
    digest = hashlib.blake2b(repr(key).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class RandomSource:
    """Seed plus a key path; derives independent, reproducible numpy streams.

    Streams are addressed by key rather than drawn sequentially, so the
    same (seed, keys) always yields the same numbers regardless of the
    order in which other streams were consumed.
    """

    seed: int = 0
    path: tuple[int, ...] = ()

    def child(self, *keys) -> "RandomSource":
        return RandomSource(self.seed, self.path + tuple(stable_key(k) for k in keys))

    def generator(self, *keys) -> np.random.Generator:
        entropy = [int(self.seed) & 0xFFFFFFFFFFFFFFFF, *self.path, *(stable_key(k) for k in keys)]
        return np.random.default_rng(np.random.SeedSequence(entropy))

    def tie_draws(self, example_id: str, layer: int, size: int) -> np.ndarray:
        """Uniform tie-break draws for every candidate of one example at one layer."""
        return self.generator("tie", example_id, layer).random(size)

    def answer_index(self, example_id: str, count: int) -> int:
        """Uniformly chosen index into an example's sorted answer list."""
        if count == 1:
            return 0
        return int(self.generator("answer", example_id).integers(count))


def sample_answer(e: Example, rng: RandomSource) -> int:
    """Draw one gold answer uniformly from ``e.answers``."""
    answers = sorted(e.answers)
    return answers[rng.answer_index(e.id, len(answers))]
