"""Finite-sorted variables and the guard expression language.

Guards are boolean combinations of variable-vs-literal comparisons over
finite sorts (enumerations or bounded integer ranges).  Satisfiability and
valuation enumeration are exhaustive: at desk scale this is exact, trivial
to audit, and needs no constraint solver.

Grammar::

    guard  := orExpr
    orExpr := andExpr { "or" andExpr }
    andExpr:= unary { "and" unary }
    unary  := "not" unary | "(" guard ")" | atom
    atom   := "true" | "false" | ident relop literal
    relop  := "=" | "!=" | "<" | "<=" | ">" | ">="
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

DEFAULT_ENUM_BOUND = 1_000_000

Value = Union[int, str]
Valuation = dict  # name -> Value, total over a declaration set


class GuardError(Exception):
    """Base class for guard language errors."""


class GuardSyntaxError(GuardError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class SortError(GuardError):
    """Undeclared variable, sort mismatch, or ill-typed comparison."""


class EnumerationOverflow(GuardError):
    """Valuation space exceeds the configured enumeration bound."""


# ---------------------------------------------------------------------------
# Sorts and declarations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnumSort:
    literals: tuple[str, ...]

    def __post_init__(self):
        if not self.literals:
            raise ValueError("empty enumeration sort")
        if len(set(self.literals)) != len(self.literals):
            raise ValueError(f"duplicate enumeration literals: {self.literals}")

    def values(self) -> tuple[str, ...]:
        return self.literals

    def __contains__(self, value) -> bool:
        return value in self.literals

    def size(self) -> int:
        return len(self.literals)

    def to_obj(self):
        return {"enum": list(self.literals)}


@dataclass(frozen=True)
class IntSort:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty integer range [{self.lo}, {self.hi}]")

    def values(self) -> range:
        return range(self.lo, self.hi + 1)

    def __contains__(self, value) -> bool:
        return isinstance(value, int) and self.lo <= value <= self.hi

    def size(self) -> int:
        return self.hi - self.lo + 1

    def to_obj(self):
        return {"int": [self.lo, self.hi]}


Sort = Union[EnumSort, IntSort]

# Factor variables carry exactly this sort (inactive / active / mitigated).
PHASE_SORT = EnumSort(("0", "a", "m"))

MONITORED = "monitored"
CONTROLLED = "controlled"
FACTOR = "factor"


@dataclass(frozen=True)
class VarDecl:
    name: str
    sort: Sort
    kind: str = MONITORED

    def __post_init__(self):
        if self.kind not in (MONITORED, CONTROLLED, FACTOR):
            raise ValueError(f"unknown variable kind: {self.kind}")
        if self.kind == FACTOR and self.sort != PHASE_SORT:
            raise ValueError(f"factor variable {self.name} must have the phase sort")

    def to_obj(self):
        return {"name": self.name, "sort": self.sort.to_obj(), "kind": self.kind}


def sort_from_obj(obj) -> Sort:
    if "enum" in obj:
        return EnumSort(tuple(str(x) for x in obj["enum"]))
    if "int" in obj:
        lo, hi = obj["int"]
        return IntSort(int(lo), int(hi))
    raise ValueError(f"unknown sort: {obj!r}")


def decl_from_obj(obj) -> VarDecl:
    return VarDecl(obj["name"], sort_from_obj(obj["sort"]), obj.get("kind", MONITORED))


def check_decls(decls: list[VarDecl]) -> None:
    names = [d.name for d in decls]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise SortError(f"duplicate variable declarations: {', '.join(dup)}")


def check_valuation(v: Valuation, decls: list[VarDecl]) -> None:
    """Totality and sort membership."""
    declared = {d.name: d for d in decls}
    missing = sorted(set(declared) - set(v))
    if missing:
        raise SortError(f"valuation missing variables: {', '.join(missing)}")
    extra = sorted(set(v) - set(declared))
    if extra:
        raise SortError(f"valuation has undeclared variables: {', '.join(extra)}")
    for name, value in v.items():
        if value not in declared[name].sort:
            raise SortError(f"value {value!r} not in sort of {name}")


# ---------------------------------------------------------------------------
# Expression AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Comparison:
    var: str
    op: str  # = != < <= > >=
    literal: Value


@dataclass(frozen=True)
class Not:
    operand: "GuardExpr"


@dataclass(frozen=True)
class And:
    left: "GuardExpr"
    right: "GuardExpr"


@dataclass(frozen=True)
class Or:
    left: "GuardExpr"
    right: "GuardExpr"


GuardExpr = Union[BoolConst, Comparison, Not, And, Or]

TRUE = BoolConst(True)
FALSE = BoolConst(False)

_ORDER_OPS = ("<", "<=", ">", ">=")


def print_guard(g: GuardExpr) -> str:
    """Canonical form: fully parenthesized compounds, lowercase keywords.

    This exact text is used for guard deduplication and label hashing, so
    it must stay stable.
    """
    if isinstance(g, BoolConst):
        return "true" if g.value else "false"
    if isinstance(g, Comparison):
        return f"{g.var} {g.op} {g.literal}"
    if isinstance(g, Not):
        return f"(not {print_guard(g.operand)})"
    if isinstance(g, And):
        return f"({print_guard(g.left)} and {print_guard(g.right)})"
    if isinstance(g, Or):
        return f"({print_guard(g.left)} or {print_guard(g.right)})"
    raise TypeError(f"not a guard expression: {g!r}")


def guard_vars(g: GuardExpr) -> set[str]:
    if isinstance(g, Comparison):
        return {g.var}
    if isinstance(g, Not):
        return guard_vars(g.operand)
    if isinstance(g, (And, Or)):
        return guard_vars(g.left) | guard_vars(g.right)
    return set()


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<op>!=|<=|>=|=|<|>|\(|\))|(?P<int>-?\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*))"
)

_KEYWORDS = {"and", "or", "not", "true", "false"}


@dataclass
class _Token:
    kind: str  # op | int | ident | kw | end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise GuardSyntaxError(f"unexpected character {stripped[0]!r}", at)
        if m.lastgroup == "ident" and m.group("ident") in _KEYWORDS:
            tokens.append(_Token("kw", m.group("ident"), m.start("ident")))
        else:
            tokens.append(_Token(m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, decls: list[VarDecl]):
        self.tokens = _tokenize(text)
        self.index = 0
        self.decls = {d.name: d for d in decls}

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            got = tok.text or "end of input"
            raise GuardSyntaxError(f"expected {want}, found {got!r}", tok.pos)
        return self.advance()

    def parse(self) -> GuardExpr:
        g = self.or_expr()
        tok = self.peek()
        if tok.kind != "end":
            raise GuardSyntaxError(f"trailing input {tok.text!r}", tok.pos)
        return g

    def or_expr(self) -> GuardExpr:
        g = self.and_expr()
        while self.peek().kind == "kw" and self.peek().text == "or":
            self.advance()
            g = Or(g, self.and_expr())
        return g

    def and_expr(self) -> GuardExpr:
        g = self.unary()
        while self.peek().kind == "kw" and self.peek().text == "and":
            self.advance()
            g = And(g, self.unary())
        return g

    def unary(self) -> GuardExpr:
        tok = self.peek()
        if tok.kind == "kw" and tok.text == "not":
            self.advance()
            return Not(self.unary())
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            g = self.or_expr()
            self.expect("op", ")")
            return g
        return self.atom()

    def atom(self) -> GuardExpr:
        tok = self.advance()
        if tok.kind == "kw" and tok.text in ("true", "false"):
            return BoolConst(tok.text == "true")
        if tok.kind != "ident":
            got = tok.text or "end of input"
            raise GuardSyntaxError(f"expected atom, found {got!r}", tok.pos)
        var = tok.text
        if var not in self.decls:
            raise SortError(f"undeclared variable: {var}")
        op_tok = self.peek()
        if op_tok.kind != "op" or op_tok.text not in ("=", "!=", "<", "<=", ">", ">="):
            got = op_tok.text or "end of input"
            raise GuardSyntaxError(f"expected comparison operator, found {got!r}", op_tok.pos)
        self.advance()
        lit_tok = self.advance()
        sort = self.decls[var].sort
        if isinstance(sort, IntSort):
            if op_tok.text not in ("=", "!=") + _ORDER_OPS:
                raise SortError(f"operator {op_tok.text} not valid on {var}")
            if lit_tok.kind != "int":
                got = lit_tok.text or "end of input"
                raise SortError(f"integer literal expected for {var}, found {got!r}")
            literal: Value = int(lit_tok.text)
        else:
            if op_tok.text in _ORDER_OPS:
                raise SortError(f"ordering operator {op_tok.text} not valid on enumeration {var}")
            if lit_tok.kind == "end":
                raise GuardSyntaxError("expected literal, found end of input", lit_tok.pos)
            if lit_tok.text not in sort.literals:
                raise SortError(f"literal {lit_tok.text!r} not in sort of {var}")
            literal = lit_tok.text
        return Comparison(var, op_tok.text, literal)


def parse_guard(text: str, decls: list[VarDecl]) -> GuardExpr:
    """Parse a guard over the given declarations."""
    return _Parser(text, decls).parse()


# ---------------------------------------------------------------------------
# Evaluation and enumeration
# ---------------------------------------------------------------------------

def eval_guard(g: GuardExpr, v: Valuation) -> bool:
    if isinstance(g, BoolConst):
        return g.value
    if isinstance(g, Comparison):
        if g.var not in v:
            raise SortError(f"valuation missing variable: {g.var}")
        x = v[g.var]
        op = g.op
        if op == "=":
            return x == g.literal
        if op == "!=":
            return x != g.literal
        if op == "<":
            return x < g.literal
        if op == "<=":
            return x <= g.literal
        if op == ">":
            return x > g.literal
        return x >= g.literal
    if isinstance(g, Not):
        return not eval_guard(g.operand, v)
    if isinstance(g, And):
        return eval_guard(g.left, v) and eval_guard(g.right, v)
    if isinstance(g, Or):
        return eval_guard(g.left, v) or eval_guard(g.right, v)
    raise TypeError(f"not a guard expression: {g!r}")


def valuation_count(decls: list[VarDecl]) -> int:
    n = 1
    for d in decls:
        n *= d.sort.size()
    return n


def enumerate_valuations(
    decls: list[VarDecl], bound: int = DEFAULT_ENUM_BOUND
) -> Iterator[Valuation]:
    """All valuations, lexicographic over declaration order and sort order.

    The empty declaration set yields the single empty valuation.
    """
    total = valuation_count(decls)
    if total > bound:
        raise EnumerationOverflow(
            f"valuation space of size {total} exceeds bound {bound}"
        )

    def rec(i: int, acc: Valuation) -> Iterator[Valuation]:
        if i == len(decls):
            yield dict(acc)
            return
        d = decls[i]
        for value in d.sort.values():
            acc[d.name] = value
            yield from rec(i + 1, acc)
        del acc[d.name]

    return rec(0, {})


def satisfiable(
    g: GuardExpr, decls: list[VarDecl], bound: int = DEFAULT_ENUM_BOUND
) -> Valuation | None:
    """First satisfying valuation in enumeration order, or None."""
    for v in enumerate_valuations(decls, bound):
        if eval_guard(g, v):
            return v
    return None
