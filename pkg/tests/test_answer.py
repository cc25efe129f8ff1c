import random

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from sgac.answer import (
    ExtractionMethod,
    MatchStage,
    check_equivalence,
    extract_answer,
    extract_boxed,
    extract_last_number,
    grade,
    normalize_answer,
    verify_response,
)
from sgac.expr import ParseError, canonical_form, evaluate_number, parse


def test_corpus_size(corpus):
    assert len(corpus) >= 40


def test_corpus(corpus):
    failures = []
    for case in corpus:
        v = verify_response(case["response"], case["ground_truth"])
        if (v.correct, v.format_ok) != (case["expect_correct"], case["expect_format_ok"]):
            failures.append((case, v))
    assert not failures


@pytest.mark.parametrize(
    "text,expected",
    [
        ("The answer is \\boxed{42}.", "42"),
        ("\\boxed{\\frac{1}{2}}", "\\frac{1}{2}"),
        ("no box here, answer 7", None),
        ("\\boxed{1} and \\boxed{2}", "2"),
        ("\\boxed{3", None),
        ("\\boxed{a\\{b}", "a\\{b"),
        ("\\boxed {5}", "5"),
    ],
)
def test_extract_boxed(text, expected):
    assert extract_boxed(text) == expected


@pytest.mark.parametrize(
    "text,expected",
    [
        ("so x = 3 or x = 4", "4"),
        ("the result is -0.5", "-0.5"),
        ("purely prose, no digits", None),
        ("ratio 3/4 here", "3/4"),
    ],
)
def test_extract_last_number(text, expected):
    assert extract_last_number(text) == expected


@pytest.mark.parametrize(
    "raw,expected",
    [
        ("  \\frac{1}{2} ", "\\frac{1}{2}"),
        ("\\dfrac{3}{4}", "\\frac{3}{4}"),
        ("42.", "42"),
        ("$\\left(1\\right)$", "(1)"),
    ],
)
def test_normalize(raw, expected):
    assert normalize_answer(raw) == expected


@pytest.mark.parametrize(
    "a,b,stage",
    [
        ("0.5", "\\frac{1}{2}", MatchStage.NUMERIC_EQUAL),
        ("x+x", "2x", MatchStage.SYMBOLIC_EQUAL),
        ("3", "4", MatchStage.NO_MATCH),
        ("7", "7", MatchStage.EXACT_STRING),
        ("3/4", "0.75", MatchStage.NUMERIC_EQUAL),
        ("\\sqrt{2}", "1.4142135623730951", MatchStage.NUMERIC_EQUAL),
    ],
)
def test_check_equivalence_stages(a, b, stage):
    ok, got = check_equivalence(a, b)
    assert got is stage and ok == (stage is not MatchStage.NO_MATCH)


def test_boxed_preferred_over_last_number():
    ans, fmt = extract_answer("\\boxed{3} and later 99")
    assert ans.method is ExtractionMethod.BOXED and ans.normalized == "3" and fmt


def test_no_answer_invariant():
    ans, fmt = extract_answer("nothing")
    assert ans.method is ExtractionMethod.NONE and ans.raw_text == "" and ans.normalized == "" and not fmt
    v = verify_response("nothing", "1")
    assert not v.correct and v.match_stage is MatchStage.NO_MATCH and not v.format_ok


def test_empty_ground_truth_rejected():
    with pytest.raises(ValueError):
        grade("\\boxed{1}", "")


def _nest(depth, leaf):
    s = leaf
    for _ in range(depth):
        s = "{" + s + "}"
    return s


@given(st.integers(5, 30), st.text(alphabet="0123456789+-x", min_size=1, max_size=8))
def test_nested_braces(depth, leaf):
    inner = _nest(depth, leaf)
    assert extract_boxed(f"text \\boxed{{{inner}}} tail") == inner


balanced = st.recursive(
    st.text(alphabet="ab12+ ", max_size=4),
    lambda kids: st.lists(kids, min_size=1, max_size=3).map(lambda xs: "{" + "".join(xs) + "}"),
    max_leaves=20,
)


@given(balanced, st.text(alphabet="xyz. ", max_size=10))
def test_generated_balanced_spans_roundtrip(body, prefix):
    assert extract_boxed(prefix + "\\boxed{" + body + "}") == body


corpus_like = st.sampled_from(
    ["0.5", "\\dfrac{1}{2}", " $42.$ ", "\\left( x \\right)", "3.", "$$7$$", "\\,\\frac{a}{b}..", "  "]
)


@given(st.one_of(corpus_like, st.text(max_size=30)))
def test_normalize_idempotent(s):
    n = normalize_answer(s)
    assert normalize_answer(n) == n


def test_normalize_idempotent_on_corpus(corpus):
    for case in corpus:
        for s in (case["response"], case["ground_truth"]):
            n = normalize_answer(s)
            assert normalize_answer(n) == n


exprs = st.sampled_from(
    ["1", "0.5", "\\frac{1}{2}", "2x", "x+x", "x^2", "(x+1)^2", "x^2+2x+1", "\\sqrt{4}", "2", "\\pi", "-3", "3/4", "0.75"]
)


@given(exprs, exprs)
def test_equivalence_symmetric(a, b):
    assert check_equivalence(a, b)[0] == check_equivalence(b, a)[0]


@given(exprs)
def test_equivalence_reflexive(a):
    assert check_equivalence(a, a)[0]


def _random_poly(rng, x, y, terms):
    expr = 0
    for _ in range(terms):
        expr += (rng.randint(-5, 5) or 1) * x ** rng.randint(0, 3) * y ** rng.randint(0, 2)
    return expr


def _to_latex(expr):
    return str(expr).replace("**", "^").replace("*", "")


def test_symbolic_against_sympy_oracle():
    x, y = sympy.symbols("x y")
    rng = random.Random(3)
    for _ in range(200):
        a = _random_poly(rng, x, y, rng.randint(1, 3))
        b = _random_poly(rng, x, y, rng.randint(1, 3))
        # either the expanded product or a random near-miss
        lhs = f"({_to_latex(a)})({_to_latex(b)})"
        other = sympy.expand(a * b) if rng.random() < 0.5 else sympy.expand(a * b + _random_poly(rng, x, y, 1))
        expect = sympy.expand(a * b - other) == 0
        got = canonical_form(parse(lhs)).equals(canonical_form(parse(_to_latex(other))))
        assert got == expect, (lhs, other)


def test_numeric_evaluator_against_fractions():
    rng = random.Random(9)
    for _ in range(300):
        p, q, r, s = (rng.randint(1, 50) for _ in range(4))
        tex = f"\\frac{{{p}}}{{{q}}}+\\frac{{{r}}}{{{s}}}"
        from fractions import Fraction

        assert evaluate_number(parse(tex)) == Fraction(p, q) + Fraction(r, s)


@pytest.mark.parametrize("bad", ["", "\\frac{1}", "(((", "1+", "\\sqrt", "x^"])
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        parse(bad)


def test_deep_nesting_guard():
    assert check_equivalence("(" * 5000 + "1" + ")" * 5000, "1") == (False, MatchStage.NO_MATCH)


def test_huge_power_guard():
    assert check_equivalence("9^{9^{9^{9}}}", "1")[1] is MatchStage.NO_MATCH


@settings(max_examples=500)
@given(st.binary(max_size=200))
def test_verify_never_raises_on_bytes(data):
    text = data.decode("utf-8", errors="replace")
    verify_response(text, "1")
    verify_response("\\boxed{" + text + "}", text or "0")


@settings(max_examples=300)
@given(st.text(alphabet="\\boxedfrac{}()0123456789^+-*/.x $", max_size=60))
def test_verify_never_raises_on_latexish(text):
    verify_response(text, "\\frac{1}{2}")
