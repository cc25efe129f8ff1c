"""Benchmark problems: the core record, JSONL I/O and a synthetic stand-in set."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

SUBJECTS = (
    "Prealgebra",
    "Algebra",
    "Number Theory",
    "Counting & Probability",
    "Geometry",
    "Intermediate Algebra",
    "Precalculus",
)


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Problem:
    id: str
    statement: str
    ground_truth: str
    level: int
    subject: str = "Algebra"
    pool_index: int = -1
    responses: tuple[str, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not 1 <= int(self.level) <= 5:
            raise DatasetError(f"{self.id}: level must be in 1..5, got {self.level}")
        if not self.ground_truth:
            raise DatasetError(f"{self.id}: empty ground truth")

    def with_pool_index(self, index: int) -> "Problem":
        return Problem(self.id, self.statement, self.ground_truth, self.level, self.subject, index, self.responses)

    def to_json(self) -> dict:
        d = asdict(self)
        if not self.responses:
            d.pop("responses")
        else:
            d["responses"] = list(self.responses)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Problem":
        try:
            return cls(
                id=str(d["id"]),
                statement=str(d.get("statement", "")),
                ground_truth=str(d["ground_truth"]),
                level=int(d["level"]),
                subject=str(d.get("subject", "Algebra")),
                pool_index=int(d.get("pool_index", -1)),
                responses=tuple(d.get("responses", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"bad problem record {d!r}: {exc}") from exc


def load_problems(path: str | Path) -> list[Problem]:
    problems = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from exc
            problems.append(Problem.from_json(record))
    return problems


def dump_problems(problems: Iterable[Problem], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in problems:
            fh.write(json.dumps(p.to_json(), sort_keys=True) + "\n")


def _random_truth(rng: random.Random) -> str:
    kind = rng.random()
    if kind < 0.6:
        return str(rng.randint(-20, 200))
    if kind < 0.8:
        den = rng.randint(2, 12)
        num = rng.randint(1, 3 * den)
        while num % den == 0:
            num += 1
        return f"\\frac{{{num}}}{{{den}}}"
    if kind < 0.9:
        return f"{rng.randint(2, 9)}\\sqrt{{{rng.choice([2, 3, 5, 6, 7])}}}"
    return f"{rng.randint(0, 50)}.{rng.randint(1, 9)}"


def synthetic_dataset(n: int = 1050, seed: int = 0, subjects: Sequence[str] = SUBJECTS) -> list[Problem]:
    """MATH-shaped problems for the simulator: subject, level 1-5, mixed answer kinds.

    About 40% of ground truths are non-integers, so an unboxed answer loses
    information under last-number extraction, as real transcripts do.
    """
    rng = random.Random(seed)
    out = []
    for i in range(n):
        level = rng.randint(1, 5)
        subject = rng.choice(list(subjects))
        out.append(
            Problem(
                id=f"syn-{seed}-{i:05d}",
                statement=f"Synthetic {subject} problem {i} (level {level}).",
                ground_truth=_random_truth(rng),
                level=level,
                subject=subject,
            )
        )
    return out
