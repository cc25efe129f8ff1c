"""A small LaTeX/plain-text math subset: parse, evaluate, canonicalize.

Supported: integers, decimals, ``+ - * /``, ``\\cdot``, ``\\times``,
implicit multiplication, ``^`` with integer exponents, ``\\frac{a}{b}``,
``\\sqrt{a}`` and ``\\sqrt[n]{a}``, parentheses and braces, single-letter
symbols and Greek-letter commands (``\\pi`` stays a symbol).

Two evaluators share the AST:

* ``evaluate_number`` gives an exact ``Fraction`` when possible and a float
  otherwise (roots of non-perfect powers). Symbols are an error.
* ``canonical_form`` gives a rational function over named symbols with exact
  rational coefficients; two expressions are equal iff ``p1*q2 == p2*q1``.

Anything outside the subset raises ``ParseError``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

MAX_EXPONENT = 512
MAX_BITS = 8192
MAX_TERMS = 2048
MAX_DEPTH = 200

GREEK = {
    "alpha", "beta", "gamma", "delta", "epsilon", "varepsilon", "zeta", "eta",
    "theta", "vartheta", "iota", "kappa", "lambda", "mu", "nu", "xi", "pi",
    "rho", "sigma", "tau", "upsilon", "phi", "varphi", "chi", "psi", "omega",
    "Gamma", "Delta", "Theta", "Lambda", "Xi", "Pi", "Sigma", "Phi", "Psi", "Omega",
}
IGNORED_COMMANDS = {"left", "right", ",", ";", "!", ":", " ", "displaystyle"}
MUL_COMMANDS = {"cdot", "times"}


class ParseError(ValueError):
    pass


class NotNumeric(ParseError):
    """The expression contains symbols, so it has no single numeric value."""


# ---------------------------------------------------------------- tokenizer

_TOKEN = re.compile(
    r"\s+"
    r"|(?P<num>\d+(?:\.\d*)?|\.\d+)"
    r"|(?P<cmd>\\(?:[A-Za-z]+|.))"
    r"|(?P<letter>[A-Za-z])"
    r"|(?P<op>[-+*/^(){}\[\]])",
    re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str


def tokenize(s: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if m is None:
            raise ParseError(f"unexpected character {s[pos]!r} at {pos}")
        pos = m.end()
        kind = m.lastgroup
        if kind is None:
            continue
        text = m.group(kind)
        if kind == "cmd":
            name = text[1:]
            if name in IGNORED_COMMANDS:
                continue
            if name in MUL_COMMANDS:
                tokens.append(Token("op", "*"))
                continue
            if name == "dfrac" or name == "tfrac":
                name = "frac"
            text = "\\" + name
        tokens.append(Token(kind, text))
    return tokens


# ---------------------------------------------------------------------- AST

@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exp: "Node"


@dataclass(frozen=True)
class Root:
    arg: "Node"
    index: "Node | None"


Node = Union[Num, Sym, Neg, BinOp, Pow, Root]


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0
        self.depth = 0

    def peek(self) -> Token | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.take()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, got {tok.text!r}")

    def _enter(self) -> None:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ParseError("expression nested too deeply")

    def parse(self) -> Node:
        if not self.toks:
            raise ParseError("empty expression")
        node = self.expr()
        if self.peek() is not None:
            raise ParseError(f"trailing input at {self.peek().text!r}")
        return node

    def expr(self) -> Node:
        self._enter()
        node = self.term()
        while (tok := self.peek()) is not None and tok.text in ("+", "-") and tok.kind == "op":
            self.take()
            rhs = self.term()
            node = BinOp("+", node, rhs if tok.text == "+" else Neg(rhs))
        self.depth -= 1
        return node

    def _starts_atom(self, tok: Token | None) -> bool:
        if tok is None:
            return False
        if tok.kind in ("num", "letter"):
            return True
        if tok.kind == "cmd":
            return tok.text[1:] in GREEK or tok.text in ("\\frac", "\\sqrt")
        return tok.text in ("(", "{")

    def term(self) -> Node:
        node = self.factor()
        while True:
            tok = self.peek()
            if tok is not None and tok.kind == "op" and tok.text in ("*", "/"):
                self.take()
                rhs = self.factor()
                node = BinOp(tok.text, node, rhs)
            elif self._starts_atom(tok):
                node = BinOp("*", node, self.power())
            else:
                return node

    def factor(self) -> Node:
        tok = self.peek()
        if tok is not None and tok.kind == "op" and tok.text in ("+", "-"):
            self._enter()
            self.take()
            inner = self.factor()
            self.depth -= 1
            return Neg(inner) if tok.text == "-" else inner
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        tok = self.peek()
        if tok is not None and tok.text == "^":
            self.take()
            exp_tok = self.peek()
            if exp_tok is not None and exp_tok.text in ("-", "+"):
                # plain-text "2^-1"
                self._enter()
                exp = self.factor()
                self.depth -= 1
            else:
                exp = self.atom()
            return Pow(base, exp)
        return base

    def group(self) -> Node:
        self.expect("{")
        node = self.expr()
        self.expect("}")
        return node

    def _brace_or_single(self) -> Node:
        # \frac12 style: an unbraced argument is a single character
        tok = self.peek()
        if tok is not None and tok.text == "{":
            return self.group()
        tok = self.take()
        if tok.kind == "num":
            if len(tok.text) > 1:
                self.toks.insert(self.i, Token("num", tok.text[1:]))
            return Num(Fraction(tok.text[0]))
        if tok.kind == "letter":
            return Sym(tok.text)
        raise ParseError(f"bad argument {tok.text!r}")

    def atom(self) -> Node:
        self._enter()
        tok = self.take()
        try:
            if tok.kind == "num":
                text = tok.text[:-1] if tok.text.endswith(".") else tok.text
                return Num(Fraction(text))
            if tok.kind == "letter":
                return Sym(tok.text)
            if tok.kind == "cmd":
                name = tok.text[1:]
                if name in GREEK:
                    return Sym(name)
                if name == "frac":
                    num = self._brace_or_single()
                    den = self._brace_or_single()
                    return BinOp("/", num, den)
                if name == "sqrt":
                    index = None
                    if (nxt := self.peek()) is not None and nxt.text == "[":
                        self.take()
                        index = self.expr()
                        self.expect("]")
                    return Root(self._brace_or_single(), index)
                raise ParseError(f"unsupported command {tok.text!r}")
            if tok.text == "(":
                node = self.expr()
                self.expect(")")
                return node
            if tok.text == "{":
                node = self.expr()
                self.expect("}")
                return node
            raise ParseError(f"unexpected token {tok.text!r}")
        finally:
            self.depth -= 1


def parse(s: str) -> Node:
    return _Parser(tokenize(s)).parse()


# ------------------------------------------------------- numeric evaluation

Number = Union[Fraction, float]


def _check_size(x: Fraction) -> Fraction:
    if x.numerator.bit_length() > MAX_BITS or x.denominator.bit_length() > MAX_BITS:
        raise ParseError("number too large")
    return x


def _int_exponent(e: Number) -> int | None:
    if isinstance(e, Fraction) and e.denominator == 1:
        if abs(e.numerator) > MAX_EXPONENT:
            raise ParseError("exponent too large")
        return e.numerator
    return None


def _exact_root(x: Fraction, n: int) -> Fraction | None:
    if x < 0:
        return None
    parts = []
    for k in (x.numerator, x.denominator):
        r = round(k ** (1.0 / n)) if k.bit_length() < 1000 else None
        if r is None:
            return None
        # the float guess can be off by one
        hit = next((c for c in (r - 1, r, r + 1) if c >= 0 and c**n == k), None)
        if hit is None:
            return None
        parts.append(hit)
    return Fraction(parts[0], parts[1])


def _root(x: Number, n: int) -> Number:
    if n < 1:
        raise ParseError("root index must be a positive integer")
    if isinstance(x, Fraction):
        exact = _exact_root(x, n)
        if exact is not None:
            return exact
    if x < 0:
        if n % 2 == 0:
            raise ParseError("even root of a negative number")
        return -((-float(x)) ** (1.0 / n))
    return float(x) ** (1.0 / n)


def evaluate_number(node: Node) -> Number:
    """Value of a symbol-free expression: exact where possible."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Sym):
        raise NotNumeric(node.name)
    if isinstance(node, Neg):
        return -evaluate_number(node.arg)
    if isinstance(node, BinOp):
        a = evaluate_number(node.left)
        b = evaluate_number(node.right)
        if node.op == "+":
            out = a + b
        elif node.op == "*":
            out = a * b
        else:
            if b == 0:
                raise ParseError("division by zero")
            out = a / b
        return _check_size(out) if isinstance(out, Fraction) else out
    if isinstance(node, Pow):
        base = evaluate_number(node.base)
        exp = evaluate_number(node.exp)
        k = _int_exponent(exp)
        if k is not None and isinstance(base, Fraction):
            if base == 0 and k < 0:
                raise ParseError("division by zero")
            if base.numerator.bit_length() * abs(k) > MAX_BITS or base.denominator.bit_length() * abs(k) > MAX_BITS:
                raise ParseError("number too large")
            return base**k
        if isinstance(exp, Fraction) and isinstance(base, Fraction) and exp.denominator <= MAX_EXPONENT:
            # rational exponent p/q: exact q-th root when it exists
            root = _root(base, exp.denominator)
            return evaluate_number(Pow(Num(root), Num(Fraction(exp.numerator)))) if isinstance(root, Fraction) else float(root) ** exp.numerator
        if base < 0:
            raise ParseError("non-integer power of a negative number")
        return float(base) ** float(exp)
    if isinstance(node, Root):
        n = 2
        if node.index is not None:
            k = _int_exponent(evaluate_number(node.index))
            if k is None:
                raise ParseError("root index must be an integer")
            n = k
        return _root(evaluate_number(node.arg), n)
    raise ParseError(f"unknown node {node!r}")


# ------------------------------------------------------ symbolic canonical

Monomial = tuple  # tuple[tuple[str, int], ...], sorted by symbol name
Poly = dict  # dict[Monomial, Fraction], no zero coefficients


def _poly_const(c: Fraction) -> Poly:
    return {(): c} if c != 0 else {}


def _poly_add(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for mono, c in q.items():
        v = out.get(mono, 0) + c
        if v == 0:
            out.pop(mono, None)
        else:
            out[mono] = v
    return out


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    exps: dict[str, int] = dict(a)
    for name, e in b:
        exps[name] = exps.get(name, 0) + e
    return tuple(sorted((n, e) for n, e in exps.items() if e != 0))


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for ma, ca in p.items():
        for mb, cb in q.items():
            mono = _mono_mul(ma, mb)
            v = out.get(mono, 0) + ca * cb
            if v == 0:
                out.pop(mono, None)
            else:
                out[mono] = v
    if len(out) > MAX_TERMS:
        raise ParseError("expression too large")
    return out


def _poly_neg(p: Poly) -> Poly:
    return {m: -c for m, c in p.items()}


@dataclass(frozen=True)
class RationalForm:
    """``num / den`` with polynomial numerator and denominator (den != 0)."""

    num: tuple  # sorted items of a Poly
    den: tuple

    @staticmethod
    def make(num: Poly, den: Poly) -> "RationalForm":
        if not den:
            raise ParseError("division by zero")
        return RationalForm(tuple(sorted(num.items())), tuple(sorted(den.items())))

    @property
    def num_poly(self) -> Poly:
        return dict(self.num)

    @property
    def den_poly(self) -> Poly:
        return dict(self.den)

    def equals(self, other: "RationalForm") -> bool:
        lhs = _poly_mul(self.num_poly, other.den_poly)
        rhs = _poly_mul(other.num_poly, self.den_poly)
        return lhs == rhs


def _rf(num: Poly, den: Poly | None = None) -> tuple[Poly, Poly]:
    if den is None:
        den = _poly_const(Fraction(1))
    if not den:
        raise ParseError("division by zero")
    return num, den


def _canon(node: Node) -> tuple[Poly, Poly]:
    if isinstance(node, Num):
        return _rf(_poly_const(node.value))
    if isinstance(node, Sym):
        return _rf({((node.name, 1),): Fraction(1)})
    if isinstance(node, Neg):
        n, d = _canon(node.arg)
        return _poly_neg(n), d
    if isinstance(node, BinOp):
        n1, d1 = _canon(node.left)
        n2, d2 = _canon(node.right)
        if node.op == "+":
            if d1 == d2:
                return _poly_add(n1, n2), d1
            return _poly_add(_poly_mul(n1, d2), _poly_mul(n2, d1)), _poly_mul(d1, d2)
        if node.op == "*":
            return _poly_mul(n1, n2), _poly_mul(d1, d2)
        if not n2:
            raise ParseError("division by zero")
        return _rf(_poly_mul(n1, d2), _poly_mul(d1, n2))
    if isinstance(node, Pow):
        try:
            k = _int_exponent(evaluate_number(node.exp))
        except NotNumeric:
            k = None
        if k is None:
            raise ParseError("symbolic form needs an integer exponent")
        n, d = _canon(node.base)
        if k < 0:
            n, d = d, n
            k = -k
            if not d:
                raise ParseError("division by zero")
        out_n, out_d = _poly_const(Fraction(1)), _poly_const(Fraction(1))
        for _ in range(k):
            out_n, out_d = _poly_mul(out_n, n), _poly_mul(out_d, d)
        return out_n, out_d
    if isinstance(node, Root):
        value = evaluate_number(node)
        if not isinstance(value, Fraction):
            raise ParseError("only exact roots have a symbolic form")
        return _rf(_poly_const(value))
    raise ParseError(f"unknown node {node!r}")


def canonical_form(node: Node) -> RationalForm:
    return RationalForm.make(*_canon(node))


def has_symbols(node: Node) -> bool:
    if isinstance(node, Sym):
        return True
    if isinstance(node, Num):
        return False
    if isinstance(node, Neg):
        return has_symbols(node.arg)
    if isinstance(node, BinOp):
        return has_symbols(node.left) or has_symbols(node.right)
    if isinstance(node, Pow):
        return has_symbols(node.base) or has_symbols(node.exp)
    if isinstance(node, Root):
        return has_symbols(node.arg) or (node.index is not None and has_symbols(node.index))
    return False


def numbers_equal(a: Number, b: Number, rel_tol: float = 1e-9) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    try:
        fa, fb = float(a), float(b)
    except OverflowError:
        return False
    if math.isnan(fa) or math.isnan(fb):
        return False
    return math.isclose(fa, fb, rel_tol=rel_tol, abs_tol=0.0)
