"""Selector-guided curriculum for single-problem RL with verifiable rewards."""

from .answer import ExtractedAnswer, ExtractionMethod, MatchStage, VerifyResult, check_equivalence, extract_answer, verify_response
from .curriculum import CurriculumConfig, RunSummary, StepRecord, run_curriculum, summarize_run
from .grpo import BurstConfig, BurstReport, LossPattern, classify_loss_pattern, group_advantages, micro_burst
from .selector import DEPLOYMENT_MODEL, SelectorModel, deployment_score, fit_selector, select_candidate
from .signals import RolloutRecord, SignalVector, collect_signals
from .sim import SimBackend, SimConfig

__all__ = [
    "BurstConfig", "BurstReport", "CurriculumConfig", "DEPLOYMENT_MODEL", "ExtractedAnswer", "ExtractionMethod",
    "LossPattern", "MatchStage", "RolloutRecord", "RunSummary", "SelectorModel", "SignalVector", "SimBackend",
    "SimConfig", "StepRecord", "VerifyResult", "check_equivalence", "classify_loss_pattern", "collect_signals",
    "deployment_score", "extract_answer", "fit_selector", "group_advantages", "micro_burst", "run_curriculum",
    "select_candidate", "summarize_run", "verify_response",
]
