"""Linear transfer selector: fit, score, pick, and ablate.

A model maps a ``SignalVector`` to predicted downstream accuracy:
``w_p*p_s + w_sigma*var_r + w_d*disagreement + w_level*level + intercept``.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from .seeding import SplitMix64
from .signals import SignalVector

FEATURES = ("p_s", "var_r", "disagreement", "level")
WEIGHT_FIELDS = ("w_p", "w_sigma", "w_d", "w_level")
PINV_RCOND = 1e-10


class FitDegenerate(ValueError):
    pass


class ModelSource(str, enum.Enum):
    FITTED = "Fitted"
    DEPLOYMENT = "Deployment"
    USER_SUPPLIED = "UserSupplied"


@dataclass(frozen=True)
class SelectorModel:
    w_p: float
    w_sigma: float
    w_d: float
    w_level: float
    intercept: float = 0.0
    source: ModelSource = ModelSource.USER_SUPPLIED
    fit_r2: Optional[float] = None

    def __post_init__(self):
        if self.source is ModelSource.FITTED and self.fit_r2 is None:
            raise ValueError("a fitted model carries its in-sample R^2")

    @property
    def weights(self) -> tuple[float, float, float, float]:
        return (self.w_p, self.w_sigma, self.w_d, self.w_level)

    def to_json(self) -> dict:
        d = {name: w for name, w in zip(WEIGHT_FIELDS, self.weights)}
        d["intercept"] = self.intercept
        d["source"] = self.source.value
        if self.fit_r2 is not None:
            d["fit_r2"] = self.fit_r2
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SelectorModel":
        return cls(
            *(float(d[name]) for name in WEIGHT_FIELDS),
            intercept=float(d.get("intercept", 0.0)),
            source=ModelSource(d.get("source", ModelSource.USER_SUPPLIED.value)),
            fit_r2=None if d.get("fit_r2") is None else float(d["fit_r2"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


# Deployment scorer used by the curriculum by default.
DEPLOYMENT_MODEL = SelectorModel(0.005, 0.183, -0.075, 0.219, 0.0, ModelSource.DEPLOYMENT)

# Weights from the original four-candidate fit; its intercept was never recorded.
ORIGINAL_FIT_MODEL = SelectorModel(-0.0574, -0.2511, 0.0393, 0.1095, 0.0, ModelSource.USER_SUPPLIED)


@dataclass(frozen=True)
class TransferRecord:
    signals: SignalVector
    a_down: float

    def __post_init__(self):
        if not 0.0 <= self.a_down <= 1.0:
            raise ValueError(f"a_down must be a proportion, got {self.a_down}")


def _design(records: Sequence[TransferRecord], columns: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([[r.signals.as_row()[c] for c in columns] for r in records], dtype=float).reshape(len(records), len(columns))
    y = np.array([r.a_down for r in records], dtype=float)
    return X, y


def _min_norm_fit(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Least squares with an unpenalized intercept; min-norm weights via pinv."""
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    if not np.any(np.abs(Xc) > 0):
        raise FitDegenerate("every feature is constant across records")
    w = np.linalg.pinv(Xc, rcond=PINV_RCOND) @ (y - y_mean)
    return w, float(y_mean - x_mean @ w)


def r_squared(y: np.ndarray, pred: np.ndarray) -> float:
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else -math.inf
    return 1.0 - ss_res / ss_tot


def fit_selector(records: Sequence[TransferRecord]) -> SelectorModel:
    if len(records) < 2:
        raise FitDegenerate(f"need at least 2 records, got {len(records)}")
    X, y = _design(records, range(4))
    w, b = _min_norm_fit(X, y)
    r2 = r_squared(y, X @ w + b)
    return SelectorModel(*(float(v) for v in w), intercept=b, source=ModelSource.FITTED, fit_r2=r2)


def predict_transfer(model: SelectorModel, s: SignalVector) -> float:
    return (
        model.w_p * s.p_s
        + model.w_sigma * s.var_r
        + model.w_d * s.disagreement
        + model.w_level * s.level
        + model.intercept
    )


def deployment_score(s: SignalVector) -> float:
    return predict_transfer(DEPLOYMENT_MODEL, s)


Scorer = Callable[[SignalVector], float]


def as_scorer(model: Union[SelectorModel, Scorer]) -> Scorer:
    if isinstance(model, SelectorModel):
        return lambda s: predict_transfer(model, s)
    return model


def _signals_of(item) -> SignalVector:
    return item if isinstance(item, SignalVector) else item[1]


def argmax_lowest(scores: Sequence[float]) -> int:
    if len(scores) == 0:
        raise ValueError("empty batch")
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return best


def select_candidate(batch: Sequence, model: Union[SelectorModel, Scorer]) -> int:
    """Index of the highest-scoring candidate; ties go to the lowest index.

    ``batch`` items are ``SignalVector`` or ``(problem, SignalVector)`` pairs.
    """
    scorer = as_scorer(model)
    return argmax_lowest([scorer(_signals_of(item)) for item in batch])


# ----------------------------------------------------------------- strategies

STRATEGY_SCORERS: dict[str, Scorer] = {
    "deployment": deployment_score,
    "original-fit": lambda s: predict_transfer(ORIGINAL_FIT_MODEL, s),
    "variance-max": lambda s: s.var_r,
    "disagreement-max": lambda s: s.disagreement,
    "difficulty-max": lambda s: float(s.level),
}
STRATEGIES = tuple(STRATEGY_SCORERS) + ("random", "model")


def choose(
    signals: Sequence[SignalVector],
    strategy: str,
    model: Optional[SelectorModel] = None,
    seed: int = 0,
) -> tuple[int, list[float]]:
    """Pick a candidate under a named strategy; returns (index, scores)."""
    if strategy == "random":
        scores = [0.0] * len(signals)
        return SplitMix64(seed).below(len(signals)), scores
    if strategy == "model":
        if model is None:
            raise ValueError("strategy 'model' needs a SelectorModel")
        scorer = as_scorer(model)
    else:
        try:
            scorer = STRATEGY_SCORERS[strategy]
        except KeyError:
            raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}") from None
    scores = [scorer(s) for s in signals]
    return argmax_lowest(scores), scores


# ------------------------------------------------------------ leave-one-out

@dataclass(frozen=True)
class ContributionResult:
    configuration: str
    r2: Optional[float]
    rank_corr: Optional[float]


def _refit_quality(records: Sequence[TransferRecord], columns: Sequence[int]) -> tuple[Optional[float], Optional[float]]:
    X, y = _design(records, columns)
    try:
        w, b = _min_norm_fit(X, y)
    except FitDegenerate:
        return None, None
    pred = X @ w + b
    # interpolation leaves ulp-level noise that would split tied targets
    ranked = np.round(pred, 9)
    rho = stats.spearmanr(ranked, y).statistic if np.ptp(ranked) > 0 and np.ptp(y) > 0 else float("nan")
    return r_squared(y, pred), None if math.isnan(rho) else float(rho)


def leave_one_out_contribution(records: Sequence[TransferRecord]) -> list[ContributionResult]:
    """In-sample R^2 and Spearman correlation for the full fit and each drop-one refit."""
    if len(records) < 3:
        raise FitDegenerate(f"need at least 3 records, got {len(records)}")
    out = [ContributionResult("full", *_refit_quality(records, range(4)))]
    for drop, name in enumerate(FEATURES):
        keep = [c for c in range(4) if c != drop]
        out.append(ContributionResult(f"-{name}", *_refit_quality(records, keep)))
    return out


# --------------------------------------------------------------------- I/O

def read_transfer_records(path: str | Path) -> list[TransferRecord]:
    path = Path(path)
    rows: Iterable[dict]
    with open(path, encoding="utf-8") as fh:
        if path.suffix in (".jsonl", ".json"):
            rows = [json.loads(line) for line in fh if line.strip()]
        else:
            rows = list(csv.DictReader(fh))
    return [TransferRecord(SignalVector.from_json(r), float(r["a_down"])) for r in rows]


def load_model(path: str | Path) -> SelectorModel:
    with open(path, encoding="utf-8") as fh:
        return SelectorModel.from_json(json.load(fh))
