"""Recursive-descent parser and renderer for the traffic-law language.

Precedence, loosest to tightest: ``->`` (right associative), ``|``, ``&``,
``U`` (between two unary-level operands, left associative), then the unary
operators ``~``, ``G``, ``F``, ``N``. Comparisons bind tighter than all of them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .formula import (
    INF,
    UNBOUNDED,
    Always,
    And,
    Atom,
    BoolVar,
    Comparison,
    EnumLit,
    Eventually,
    Formula,
    Implies,
    Interval,
    Next,
    Not,
    Num,
    Or,
    SignalRef,
    Until,
    format_number,
)
from .signals import DEFAULT_REGISTRY, FreeRegistry, Registry, UnknownSignalError


class SpecError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg, self.line, self.col = msg, line, col
        super().__init__(f"{line}:{col}: {msg}" if line else msg)


class LexError(SpecError):
    pass


class ParseError(SpecError):
    pass


class UndefinedNameError(SpecError):
    pass


class DuplicateDefinitionError(SpecError):
    pass


class SpecTypeError(SpecError):
    pass


class IntervalError(SpecError):
    pass


KEYWORDS = {"G", "F", "U", "N"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|\|=|==|!=|>=|<=|[&|~()\[\],;=<>.\-])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str  # num | ident | op | kw | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise LexError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        s = m.group()
        if kind == "ident" and s in KEYWORDS:
            kind = "kw"
        if kind not in ("ws", "comment"):
            toks.append(Token(kind, s, line, pos - line_start + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rfind("\n") + 1
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


@dataclass
class SpecFile:
    """Parsed specification: named definitions plus the top-level law."""

    definitions: dict[str, Formula]
    law: str
    constants: dict[str, float] = field(default_factory=dict)

    @property
    def formula(self) -> Formula:
        return self.definitions[self.law]


# raw expression operands before kind resolution
@dataclass
class _RawExpr:
    tok: Token
    name: str | None = None
    arg: float | None = None
    path: tuple[str, ...] = ()
    number: float | None = None

    @property
    def bare(self) -> bool:
        return self.name is not None and self.arg is None and not self.path


class _Parser:
    def __init__(self, text: str, registry: Registry):
        self.toks = tokenize(text)
        self.i = 0
        self.registry = registry
        self.defs: dict[str, Formula] = {}
        self.consts: dict[str, float] = {}
        self.order: list[str] = []
        self.bound: str | None = None

    # -- token helpers -------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.kind != "ident":
            self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def error(self, msg: str, tok: Token | None = None, cls=ParseError):
        t = tok or self.tok
        raise cls(msg, t.line, t.col)

    # -- statements ----------------------------------------------------

    def spec(self) -> SpecFile:
        while self.tok.kind != "eof":
            self.statement()
        if self.bound is None:
            if not self.order:
                raise ParseError("specification defines no law", self.tok.line, self.tok.col)
            self.bound = self.order[-1]
        return SpecFile(self.defs, self.bound, self.consts)

    def statement(self) -> None:
        t = self.expect_ident()
        # Trace trace = EXE(scenario);   -- accepted and ignored
        if t.text == "Trace" and self.tok.kind == "ident":
            self.advance()
            self.expect("=")
            self.expect_ident()
            self.expect("(")
            while not self.at(")"):
                if self.tok.kind == "eof":
                    self.error("unterminated EXE(...)")
                self.advance()
            self.expect(")")
            self.expect(";")
            return
        # trace |= law;
        if self.at("|="):
            self.advance()
            name = self.expect_ident()
            if name.text not in self.defs:
                self.error(f"undefined name {name.text!r}", name, UndefinedNameError)
            if self.bound is not None and self.bound != name.text:
                self.error("only one top-level law per file", name)
            self.bound = name.text
            self.expect(";")
            return
        self.expect("=")
        if t.text in self.defs or t.text in self.consts:
            self.error(f"duplicate definition of {t.text!r}", t, DuplicateDefinitionError)
        if t.text in KEYWORDS or self.registry_has(t.text):
            self.error(f"{t.text!r} is reserved as an operator or signal name", t, DuplicateDefinitionError)
        number = self.try_constant()
        if number is not None:
            self.consts[t.text] = number
        else:
            self.defs[t.text] = self.formula()
            self.order.append(t.text)
        self.expect(";")

    def registry_has(self, name: str) -> bool:
        if isinstance(self.registry, FreeRegistry):
            return False
        return self.registry.knows_name(name)

    def try_constant(self) -> float | None:
        """``name = 2;`` or ``name = -1.5;`` defines a numeric constant."""
        j = self.i
        neg = False
        if self.toks[j].kind == "op" and self.toks[j].text == "-":
            neg = True
            j += 1
        if self.toks[j].kind == "num" and self.toks[j + 1].kind == "op" and self.toks[j + 1].text == ";":
            self.i = j + 1
            v = float(self.toks[j].text)
            return -v if neg else v
        return None

    # -- formulas ------------------------------------------------------

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.at("->"):
            self.advance()
            return Implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.at("|"):
            self.advance()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.until()
        while self.at("&"):
            self.advance()
            f = And(f, self.until())
        return f

    def until(self) -> Formula:
        f = self.unary()
        while self.at("U"):
            self.advance()
            iv = self.interval()
            f = Until(iv, f, self.unary())
        return f

    def unary(self) -> Formula:
        if self.at("~"):
            self.advance()
            return Not(self.unary())
        if self.at("G", "F"):
            op = self.advance().text
            iv = self.interval()
            arg = self.unary()
            return Always(iv, arg) if op == "G" else Eventually(iv, arg)
        if self.at("N"):
            self.advance()
            return Next(self.unary())
        return self.primary()

    def interval(self) -> Interval:
        if not self.at("["):
            return UNBOUNDED
        start = self.advance()
        lo = self.bound_value(allow_inf=False)
        self.expect(",")
        hi = self.bound_value(allow_inf=True)
        self.expect("]")
        if lo > hi:
            self.error(f"malformed interval [{format_number(lo)},{format_number(hi)}]: lo > hi", start, IntervalError)
        return Interval(int(lo), hi if hi == INF else int(hi))

    def bound_value(self, allow_inf: bool) -> float:
        t = self.tok
        if t.kind == "ident" and t.text == "inf" and allow_inf:
            self.advance()
            return INF
        if t.kind == "num":
            v = float(self.advance().text)
        elif t.kind == "ident" and t.text in self.consts:
            v = self.consts[self.advance().text]
        else:
            self.error("expected an interval bound", t, IntervalError)
        if v < 0 or not float(v).is_integer():
            self.error(f"interval bounds must be non-negative whole trace steps, got {format_number(v)}", t, IntervalError)
        return v

    def primary(self) -> Formula:
        if self.at("("):
            self.advance()
            f = self.formula()
            self.expect(")")
            return f
        lhs = self.raw_expr()
        if self.at("==", "!=", ">", "<", ">=", "<="):
            op_tok = self.advance()
            rhs = self.raw_expr()
            return Atom(self.comparison(lhs, op_tok, rhs))
        return self.bare_atom(lhs)

    def raw_expr(self) -> _RawExpr:
        t = self.tok
        if self.at("-") and self.peek().kind == "num":
            self.advance()
            return _RawExpr(t, number=-float(self.advance().text))
        if t.kind == "num":
            return _RawExpr(self.advance(), number=float(t.text))
        if t.kind != "ident":
            self.error(f"expected a formula, found {t.text or 'end of input'!r}")
        self.advance()
        arg = None
        if self.at("("):
            self.advance()
            a = self.tok
            if a.kind == "num":
                arg = float(self.advance().text)
            elif self.at("-") and self.peek().kind == "num":
                self.advance()
                arg = -float(self.advance().text)
            elif a.kind == "ident" and a.text in self.consts:
                arg = self.consts[self.advance().text]
            else:
                self.error("signal argument must be a number or numeric constant", a)
            self.expect(")")
        path = []
        while self.at("."):
            self.advance()
            path.append(self.expect_ident().text)
        return _RawExpr(t, name=t.text, arg=arg, path=tuple(path))

    def bare_atom(self, e: _RawExpr) -> Formula:
        if e.number is not None:
            self.error("a number is not a formula", e.tok)
        if e.bare and e.name in self.defs:
            return self.defs[e.name]
        if e.bare and e.name in self.consts:
            self.error(f"numeric constant {e.name!r} used as a formula", e.tok, SpecTypeError)
        ref = SignalRef(e.name, e.arg, e.path)
        spec = self.lookup(ref, e.tok)
        if spec.kind != "bool":
            self.error(f"signal {ref.key!r} is {spec.kind}-valued; compare it to obtain a formula", e.tok, SpecTypeError)
        return Atom(BoolVar(ref))

    def lookup(self, ref: SignalRef, tok: Token):
        try:
            return self.registry.lookup(ref)
        except UnknownSignalError:
            if ref.arg is None and not ref.path:
                self.error(f"undefined name {ref.name!r}", tok, UndefinedNameError)
            self.error(f"unknown signal {ref.key!r}", tok, UndefinedNameError)

    def operand(self, e: _RawExpr):
        """Resolve to (expr, kind, enum domain); bare unknown identifiers become enum literals."""
        if e.number is not None:
            return Num(e.number), "number", ()
        if e.bare and e.name in self.consts:
            return Num(self.consts[e.name]), "number", ()
        if e.bare and e.name in self.defs:
            self.error(f"formula {e.name!r} used inside a comparison", e.tok, SpecTypeError)
        ref = SignalRef(e.name, e.arg, e.path)
        try:
            # bypass the free-proposition fallback so enum literals still resolve
            spec = Registry.lookup(self.registry, ref)
        except UnknownSignalError:
            if e.bare:
                return EnumLit(e.name), "enumlit", ()
            self.error(f"unknown signal {ref.key!r}", e.tok, UndefinedNameError)
        if spec.kind == "bool":
            self.error(f"Boolean signal {ref.key!r} cannot be compared", e.tok, SpecTypeError)
        return ref, spec.kind, spec.domain

    def comparison(self, lhs: _RawExpr, op_tok: Token, rhs: _RawExpr) -> Comparison:
        op = op_tok.text
        l, lk, ld = self.operand(lhs)
        r, rk, rd = self.operand(rhs)
        if isinstance(self.registry, FreeRegistry):
            # free names take the kind the comparison implies
            if lk == "enumlit":
                l, lk = SignalRef(l.name), ("number" if rk == "number" else "enum")
            elif rk == "enumlit" and lk == "number":
                r, rk = SignalRef(r.name), "number"
        kinds = {lk, rk}
        if kinds == {"number"}:
            return Comparison(l, op, r)
        if "number" in kinds:
            self.error("enum compared with number", op_tok, SpecTypeError)
        if kinds == {"enumlit"}:
            self.error("comparison between two enum literals", op_tok, SpecTypeError)
        if op not in ("==", "!="):
            self.error(f"enum values only support == and !=, not {op!r}", op_tok, SpecTypeError)
        for expr, kind, tok, other_dom in ((l, lk, lhs.tok, rd), (r, rk, rhs.tok, ld)):
            if kind == "enumlit" and other_dom and expr.name not in other_dom:
                self.error(f"{expr.name!r} is not a value of this enum {other_dom}", tok, SpecTypeError)
        if lk == rk == "enum" and ld and rd and ld != rd:
            self.error("comparison between different enum types", op_tok, SpecTypeError)
        return Comparison(l, op, r)


def parse_spec(text: str, registry: Registry = DEFAULT_REGISTRY) -> SpecFile:
    """Parse a specification file into resolved named formulas."""
    return _Parser(text, registry).spec()


def parse_formula(text: str, registry: Registry = DEFAULT_REGISTRY) -> Formula:
    """Parse a single formula (no ``name = ...;`` wrapper)."""
    p = _Parser(text, registry)
    f = p.formula()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r} after formula")
    return f


# -- rendering ---------------------------------------------------------------


def _iv(iv: Interval) -> str:
    return "" if iv.is_default else str(iv)


def render_formula(f: Formula) -> str:
    """Fully parenthesized concrete syntax that parses back to the same tree."""
    if isinstance(f, Atom):
        return f"({f.expr})"
    if isinstance(f, Not):
        return f"(~{render_formula(f.arg)})"
    if isinstance(f, And):
        return f"({render_formula(f.left)} & {render_formula(f.right)})"
    if isinstance(f, Or):
        return f"({render_formula(f.left)} | {render_formula(f.right)})"
    if isinstance(f, Implies):
        return f"({render_formula(f.left)} -> {render_formula(f.right)})"
    if isinstance(f, Until):
        return f"({render_formula(f.left)} U{_iv(f.interval)} {render_formula(f.right)})"
    if isinstance(f, Always):
        return f"G{_iv(f.interval)} {render_formula(f.arg)}"
    if isinstance(f, Eventually):
        return f"F{_iv(f.interval)} {render_formula(f.arg)}"
    if isinstance(f, Next):
        return f"N {render_formula(f.arg)}"
    raise TypeError(f"not a formula: {f!r}")
