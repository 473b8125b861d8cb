"""Synthetic exchangeable score datasets.

Each example draws its admissible labels first, then per-layer scores
for admissible and other candidates from separate normal distributions.
A latent term shared by all layers of a candidate, weighted by ``rho``,
controls how dependent the layers are. Admissible labels also receive a
per-label difficulty offset, so some correct labels are much easier to
find than others.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .core import Dataset, Example


def _per_layer(value, m: int, name: str) -> tuple[float, ...]:
    if np.isscalar(value):
        return (float(value),) * m
    value = tuple(float(v) for v in value)
    if len(value) != m:
        raise ValueError(f"{name} needs {m} entries, got {len(value)}")
    return value


@dataclass(frozen=True)
class SynthConfig:
    example_count: int = 1000
    candidate_count: int = 100
    layer_count: int = 2
    admissible_size: tuple[int, int] = (1, 1)  # inclusive uniform range
    admissible_loc: tuple[float, ...] | float = -2.0
    admissible_scale: tuple[float, ...] | float = 1.0
    other_loc: tuple[float, ...] | float = 0.0
    other_scale: tuple[float, ...] | float = 1.0
    rho: float = 0.0
    difficulty: float = 0.0  # admissible offsets ~ U(0, difficulty), in units of scale
    decimals: int | None = None

    def __post_init__(self):
        m = self.layer_count
        if self.example_count < 1 or self.candidate_count < 1 or m < 1:
            raise ValueError("example_count, candidate_count and layer_count must be >= 1")
        lo, hi = (int(x) for x in self.admissible_size)
        if not 1 <= lo <= hi:
            raise ValueError(f"admissible_size must satisfy 1 <= min <= max, got {self.admissible_size}")
        object.__setattr__(self, "admissible_size", (lo, hi))
        for name in ("admissible_loc", "admissible_scale", "other_loc", "other_scale"):
            object.__setattr__(self, name, _per_layer(getattr(self, name), m, name))
        if any(s <= 0 for s in self.admissible_scale + self.other_scale):
            raise ValueError("scales must be positive")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        if self.difficulty < 0:
            raise ValueError("difficulty must be non-negative")

    @classmethod
    def from_dict(cls, raw: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        extra = set(raw) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**raw)

    @classmethod
    def load(cls, path) -> "SynthConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def fixture(name: str) -> SynthConfig:
    """Load one of the generator configurations shipped with the package."""
    text = resources.files("confcascade").joinpath("fixtures", f"{name}.json").read_text(encoding="utf-8")
    return SynthConfig.from_dict(json.loads(text))


def fixture_names() -> list[str]:
    root = resources.files("confcascade").joinpath("fixtures")
    return sorted(Path(p.name).stem for p in root.iterdir() if p.name.endswith(".json"))


def synthesize(cfg: SynthConfig, seed: int) -> Dataset:
    """Draw ``cfg.example_count`` i.i.d. examples; a pure function of (cfg, seed)."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, 0x5EED]))
    n, k, m = cfg.example_count, cfg.candidate_count, cfg.layer_count
    lo, hi = cfg.admissible_size
    sizes = np.minimum(rng.integers(lo, hi + 1, size=n), k)
    # admissible labels: a uniformly random subset of each example's candidates
    order = np.argsort(rng.random((n, k)), axis=1)
    adm = np.zeros((n, k), dtype=bool)
    np.put_along_axis(adm, order, np.arange(k)[None, :] < sizes[:, None], axis=1)

    latent = rng.standard_normal((n, k, 1))
    noise = rng.standard_normal((n, k, m))
    u = np.sqrt(cfg.rho) * latent + np.sqrt(1.0 - cfg.rho) * noise
    offset = rng.uniform(0.0, 1.0, size=(n, k, 1)) * cfg.difficulty

    a_loc, a_scale = np.array(cfg.admissible_loc), np.array(cfg.admissible_scale)
    o_loc, o_scale = np.array(cfg.other_loc), np.array(cfg.other_scale)
    scores = np.where(adm[..., None], a_loc + a_scale * (u + offset), o_loc + o_scale * u)
    if cfg.decimals is not None:
        scores = np.round(scores, cfg.decimals)

    gold_pick = rng.random(n)
    labels = np.arange(k)
    examples = []
    for i in range(n):
        admissible = np.flatnonzero(adm[i])
        gold = admissible[int(gold_pick[i] * len(admissible))]
        examples.append(Example(f"ex{i:06d}", labels, scores[i], admissible.tolist(), [int(gold)]))
    names = tuple(f"layer{j + 1}" for j in range(m))
    return Dataset(m, examples, names, {"generator": cfg.to_dict(), "seed": int(seed)})
