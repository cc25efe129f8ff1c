"""Answer extraction and correctness checking for model responses.

Pipeline: last balanced ``\\boxed{...}`` span, else the last numeric literal;
normalize; then exact string, exact/close numeric, and canonical symbolic
comparison, in that order.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Optional

from . import expr


class ExtractionMethod(str, enum.Enum):
    BOXED = "Boxed"
    LAST_NUMBER = "LastNumber"
    NONE = "None"


class MatchStage(str, enum.Enum):
    EXACT_STRING = "ExactString"
    NUMERIC_EQUAL = "NumericEqual"
    SYMBOLIC_EQUAL = "SymbolicEqual"
    NO_MATCH = "NoMatch"


@dataclass(frozen=True)
class ExtractedAnswer:
    raw_text: str
    normalized: str
    method: ExtractionMethod

    def __post_init__(self):
        empty = self.raw_text == "" and self.normalized == ""
        if (self.method is ExtractionMethod.NONE) != empty:
            raise ValueError("method is None exactly when the answer is empty")


NO_ANSWER = ExtractedAnswer("", "", ExtractionMethod.NONE)


@dataclass(frozen=True)
class VerifyResult:
    correct: bool
    match_stage: MatchStage
    format_ok: bool

    def __post_init__(self):
        if self.correct and self.match_stage is MatchStage.NO_MATCH:
            raise ValueError("a correct result needs a matching stage")


_BOXED_OPEN = re.compile(r"\\boxed\s*\{")
_NUMBER = re.compile(r"-?\d+(?:\.\d+)?(?:/\d+(?:\.\d+)?)?")


def _match_braces(text: str, start: int) -> int | None:
    """Index of the brace closing the one opened just before ``start``."""
    depth = 1
    i, n = start, len(text)
    while i < n:
        c = text[i]
        if c == "\\" and i + 1 < n and text[i + 1] in "{}":
            i += 2
            continue
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return i
        i += 1
    return None


def extract_boxed(response: str) -> Optional[str]:
    """Contents of the last balanced top-level ``\\boxed{}`` span, or None."""
    last = None
    pos = 0
    while (m := _BOXED_OPEN.search(response, pos)) is not None:
        close = _match_braces(response, m.end())
        if close is None:
            # unbalanced: a later (inner) box may still close
            pos = m.start() + 1
            continue
        last = response[m.end():close]
        pos = close + 1
    return last


def extract_last_number(response: str) -> Optional[str]:
    found = _NUMBER.findall(response)
    return found[-1] if found else None


_LEFT_RIGHT = re.compile(r"\\(?:left|right)(?![A-Za-z])")
_THIN_SPACE = re.compile(r"\\[,;:!]")
_WS = re.compile(r"\s+")


def _normalize_once(s: str) -> str:
    s = _WS.sub(" ", s).strip()
    s = s.replace("\\dfrac", "\\frac").replace("\\tfrac", "\\frac")
    s = _LEFT_RIGHT.sub("", s)
    s = _THIN_SPACE.sub("", s)
    while len(s) >= 2 and s[0] == "$" and s[-1] == "$":
        s = s[1:-1].strip()
    s = s.rstrip(".").rstrip()
    return s


def normalize_answer(raw: str) -> str:
    # iterate to a fixed point so the result is idempotent by construction
    prev, cur = None, raw
    while cur != prev:
        prev, cur = cur, _normalize_once(cur)
    return cur


def extract_answer(response: str) -> tuple[ExtractedAnswer, bool]:
    """Extracted answer plus whether a balanced boxed span was present."""
    boxed = extract_boxed(response)
    if boxed is not None:
        norm = normalize_answer(boxed)
        if not norm:
            return NO_ANSWER, True
        return ExtractedAnswer(boxed, norm, ExtractionMethod.BOXED), True
    number = extract_last_number(response)
    if number is None:
        return NO_ANSWER, False
    return ExtractedAnswer(number, normalize_answer(number), ExtractionMethod.LAST_NUMBER), False


def check_equivalence(a: str, b: str) -> tuple[bool, MatchStage]:
    if a == b:
        return True, MatchStage.EXACT_STRING
    try:
        tree_a, tree_b = expr.parse(a), expr.parse(b)
    except (expr.ParseError, RecursionError):
        return False, MatchStage.NO_MATCH
    try:
        if not expr.has_symbols(tree_a) and not expr.has_symbols(tree_b):
            va, vb = expr.evaluate_number(tree_a), expr.evaluate_number(tree_b)
            if expr.numbers_equal(va, vb):
                return True, MatchStage.NUMERIC_EQUAL
    except (expr.ParseError, ArithmeticError, ValueError, RecursionError):
        pass
    try:
        if expr.canonical_form(tree_a).equals(expr.canonical_form(tree_b)):
            return True, MatchStage.SYMBOLIC_EQUAL
    except (expr.ParseError, ArithmeticError, ValueError, RecursionError):
        pass
    return False, MatchStage.NO_MATCH


def reference_answer(ground_truth: str) -> str:
    boxed = extract_boxed(ground_truth)
    return normalize_answer(boxed if boxed is not None else ground_truth)


def grade(response: str, ground_truth: str) -> tuple[ExtractedAnswer, VerifyResult]:
    if not ground_truth:
        raise ValueError("ground_truth must be non-empty")
    answer, format_ok = extract_answer(response)
    if answer.method is ExtractionMethod.NONE:
        return answer, VerifyResult(False, MatchStage.NO_MATCH, format_ok)
    correct, stage = check_equivalence(answer.normalized, reference_answer(ground_truth))
    return answer, VerifyResult(correct, stage, format_ok)


def verify_response(response: str, ground_truth: str) -> VerifyResult:
    return grade(response, ground_truth)[1]
