"""Experiment configuration shared by the CLI and the scripts in ``scripts/``."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .backend import PolicyBackend, ReplayBackend
from .curriculum import ConfigError, CurriculumConfig, run_curriculum
from .data import Problem, load_problems, synthetic_dataset
from .sim import SimBackend, SimConfig


@dataclass(frozen=True)
class DatasetSpec:
    path: Optional[str] = None
    synthetic_size: int = 1050
    synthetic_seed: int = 0

    def load(self, base: Path | None = None) -> list[Problem]:
        if self.path is None:
            return synthetic_dataset(self.synthetic_size, self.synthetic_seed)
        path = Path(self.path)
        if base is not None and not path.is_absolute():
            path = base / path
        return load_problems(path)


@dataclass(frozen=True)
class ExperimentConfig:
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    backend: str = "sim"

    def to_json(self) -> dict:
        return {
            "curriculum": self.curriculum.to_json(),
            "sim": self.sim.to_json(),
            "dataset": {
                "path": self.dataset.path,
                "synthetic_size": self.dataset.synthetic_size,
                "synthetic_seed": self.dataset.synthetic_seed,
            },
            "backend": self.backend,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - {"curriculum", "sim", "dataset", "backend"}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        try:
            return cls(
                curriculum=CurriculumConfig.from_json(d.get("curriculum", {})),
                sim=SimConfig.from_json(d.get("sim", {})),
                dataset=DatasetSpec(**d.get("dataset", {})),
                backend=d.get("backend", "sim"),
            )
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def with_curriculum(self, **changes) -> "ExperimentConfig":
        return replace(self, curriculum=replace(self.curriculum, **changes))


def load_experiment(path: str | Path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_json(json.load(fh))


def build_backend(spec: str, sim: SimConfig | None = None, seed: int = 0) -> PolicyBackend:
    """``sim``, ``replay`` or ``remote:URL``."""
    if spec == "sim":
        return SimBackend.from_config(sim or SimConfig(), seed)
    if spec == "replay":
        return ReplayBackend()
    if spec.startswith("remote:"):
        from .remote import RemoteBackend

        return RemoteBackend(spec[len("remote:"):])
    raise ConfigError(f"unknown backend {spec!r}; use sim, replay or remote:URL")


def strategy_ablation(
    strategies: Sequence[str],
    seeds: Sequence[int],
    base: ExperimentConfig | None = None,
) -> dict[str, list[float]]:
    """Final sim accuracy per seed for each selection strategy.

    Every strategy sees the same dataset, pool and initial policy for a given
    seed, so differences come from the selection rule alone.
    """
    base = base or ExperimentConfig()
    dataset = base.dataset.load()
    out: dict[str, list[float]] = {s: [] for s in strategies}
    for seed in seeds:
        for strategy in strategies:
            config = replace(base.curriculum, strategy=strategy, master_seed=seed)
            backend = SimBackend.from_config(base.sim, seed)
            summary = run_curriculum(dataset, backend, config)
            out[strategy].append(summary.final_accuracy)
    return out
