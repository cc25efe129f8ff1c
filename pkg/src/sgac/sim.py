"""Deterministic simulated learner standing in for the LLM policy.

Competence per concept is a logistic curve in ``skill - (level - 3)``.
Wrong answers come from a per-problem confusion set of size ``2**level``,
and each rollout is boxed with probability ``format_rate``; unboxed
non-integer answers get mangled by last-number extraction the way real
transcripts do.

The update surrogate moves skill along ``-loss`` where
``loss = -(1/G) * sum(A_i * y_i)`` and ``y_i`` is +1 when rollout ``i``
actually emitted the true answer. Because ``A_i`` come from verified rewards
while ``y_i`` is the learner's real behaviour, format and extraction noise
in the rewards can push skill the wrong way.
"""

from __future__ import annotations

import functools
import hashlib
import math
import random
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .answer import check_equivalence, extract_boxed, reference_answer
from .backend import Capabilities, ContractViolation
from .data import SUBJECTS, Problem
from .seeding import derive_seed, rollout_seed

LEVEL_OFFSET = 3
CONFUSION_BASE = 2
LOSS_SNAP = 1e-12

_MARKER = "Final answer: "
_PREAMBLES = (
    "Let me work through this carefully.",
    "We set up the relevant relations and simplify.",
    "Reading the problem again, the key step is the substitution.",
    "Checking each case in turn gives the result.",
)


@dataclass(frozen=True)
class SimProblem:
    concept: str
    level: int
    truth: str
    confusion_set_size: int

    def __post_init__(self):
        if self.confusion_set_size < 1:
            raise ContractViolation("confusion_set_size must be >= 1")


@dataclass
class SimPolicyState:
    skill: dict[str, float]
    format_rate: float
    concepts: tuple[str, ...]
    transfer: list[list[float]]
    rng_master_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.format_rate <= 1.0:
            raise ContractViolation("format_rate must be in [0, 1]")
        n = len(self.concepts)
        if len(self.transfer) != n or any(len(row) != n for row in self.transfer):
            raise ContractViolation("transfer must be square over concepts")
        for i, row in enumerate(self.transfer):
            if row[i] != 1.0 or any(not 0.0 <= v <= 1.0 for v in row):
                raise ContractViolation("transfer entries must lie in [0, 1] with a unit diagonal")

    def transfer_to(self, target: str, source: str) -> float:
        if source not in self.concepts or target not in self.concepts:
            return 1.0 if source == target else 0.0
        return self.transfer[self.concepts.index(target)][self.concepts.index(source)]

    def snapshot(self) -> dict:
        return {"skill": dict(sorted(self.skill.items())), "format_rate": self.format_rate}


@dataclass(frozen=True)
class SimConfig:
    """Knobs for building an initial simulated policy."""

    concepts: tuple[str, ...] = SUBJECTS
    base_skill: float = 1.0
    skill_spread: float = 0.5
    format_rate: float = 0.7
    transfer_off_diagonal: float = 0.2
    learning_rate_sim: float = 0.03

    def initial_state(self, seed: int) -> SimPolicyState:
        rng = random.Random(derive_seed(seed, "sim-init"))
        skill = {c: self.base_skill + rng.uniform(-self.skill_spread, self.skill_spread) for c in self.concepts}
        n = len(self.concepts)
        transfer = [[1.0 if i == j else self.transfer_off_diagonal for j in range(n)] for i in range(n)]
        return SimPolicyState(skill, self.format_rate, tuple(self.concepts), transfer, seed)

    def to_json(self) -> dict:
        return {
            "concepts": list(self.concepts),
            "base_skill": self.base_skill,
            "skill_spread": self.skill_spread,
            "format_rate": self.format_rate,
            "transfer_off_diagonal": self.transfer_off_diagonal,
            "learning_rate_sim": self.learning_rate_sim,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "SimConfig":
        d = dict(d)
        if "concepts" in d:
            d["concepts"] = tuple(d["concepts"])
        return cls(**d)


def theta(level: int) -> float:
    return level - LEVEL_OFFSET


def sim_success_prob(state: SimPolicyState, problem: SimProblem) -> float:
    z = state.skill.get(problem.concept, 0.0) - theta(problem.level)
    # split on sign to avoid overflow in exp
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@functools.lru_cache(maxsize=65536)
def confusion_set(truth: str, size: int) -> tuple[str, ...]:
    """``size`` distinct integer answers, none equivalent to ``truth``."""
    start = int.from_bytes(hashlib.blake2b(truth.encode("utf-8"), digest_size=4).digest(), "little") % 97
    out: list[str] = []
    k = start
    while len(out) < size:
        cand = str(k)
        if not check_equivalence(cand, truth)[0]:
            out.append(cand)
        k += 1
    return tuple(out)


def _render(answer: str, boxed: bool, preamble: str) -> str:
    shown = f"\\boxed{{{answer}}}" if boxed else answer
    return f"{preamble} {_MARKER}{shown}"


def sim_generate(state: SimPolicyState, problem: SimProblem, temperature: float, seed: int) -> str:
    if temperature < 0:
        raise ContractViolation("temperature must be >= 0")
    p = sim_success_prob(state, problem)
    wrong = confusion_set(problem.truth, problem.confusion_set_size)
    if temperature == 0:
        correct = p >= 0.5
        boxed = state.format_rate >= 0.5
        return _render(problem.truth if correct else wrong[0], boxed, _PREAMBLES[0])
    rng = random.Random(seed)
    correct = rng.random() < p
    boxed = rng.random() < state.format_rate
    answer = problem.truth if correct else wrong[rng.randrange(len(wrong))]
    return _render(answer, boxed, _PREAMBLES[rng.randrange(len(_PREAMBLES))])


def emitted_answer(response: str) -> str | None:
    """What the simulated policy actually wrote, read back from its own template."""
    _, sep, tail = response.rpartition(_MARKER)
    if not sep:
        return None
    boxed = extract_boxed(tail)
    return boxed if boxed is not None else tail


def sim_apply_update(
    state: SimPolicyState,
    problem: SimProblem,
    rollouts: Sequence,
    advantages: Sequence[float],
    learning_rate_sim: float,
) -> float:
    if len(rollouts) != len(advantages):
        raise ContractViolation(f"{len(rollouts)} rollouts but {len(advantages)} advantages")
    if not rollouts:
        raise ContractViolation("empty update")
    signs = []
    for r in rollouts:
        text = r if isinstance(r, str) else r.response
        signs.append(1.0 if emitted_answer(text) == problem.truth else -1.0)
    loss = -math.fsum(a * y for a, y in zip(advantages, signs)) / len(rollouts)
    if abs(loss) < LOSS_SNAP:
        # cancellation noise when every rollout has the same correctness
        return 0.0
    for concept in state.concepts if problem.concept in state.concepts else (problem.concept,):
        gain = learning_rate_sim * state.transfer_to(concept, problem.concept) * (-loss)
        if gain != 0.0:
            state.skill[concept] = state.skill.get(concept, 0.0) + gain
    return loss


def to_sim_problem(problem: Problem) -> SimProblem:
    return SimProblem(
        concept=problem.subject,
        level=int(problem.level),
        truth=reference_answer(problem.ground_truth),
        confusion_set_size=CONFUSION_BASE ** int(problem.level),
    )


@dataclass
class SimBackend:
    """In-process backend over a ``SimPolicyState``.

    ``learning_rate_sim`` drives the skill update; the learning rate that
    callers forward is an LLM optimizer setting and is ignored here.
    """

    state: SimPolicyState
    learning_rate_sim: float = 0.03
    capabilities: Capabilities = field(default=Capabilities(supports_update=True, deterministic_eval=True))
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    @classmethod
    def from_config(cls, config: SimConfig, seed: int) -> "SimBackend":
        return cls(config.initial_state(seed), config.learning_rate_sim)

    @contextmanager
    def exclusive(self) -> Iterator[None]:
        with self._lock:
            yield

    def generate(self, problem: Problem, n: int, temperature: float, max_new_tokens: int, seed: int) -> list[str]:
        sp = to_sim_problem(problem)
        return [sim_generate(self.state, sp, temperature, rollout_seed(seed, i)) for i in range(n)]

    def apply_update(self, problem: Problem, rollouts, advantages, learning_rate: float) -> float:
        with self._lock:
            return sim_apply_update(self.state, to_sim_problem(problem), rollouts, advantages, self.learning_rate_sim)

    def generate_greedy(self, problems: Sequence[Problem], max_new_tokens: int) -> list[str]:
        return [sim_generate(self.state, to_sim_problem(p), 0.0, 0) for p in problems]
