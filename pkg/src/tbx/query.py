"""Conditional search language over canonical records.

Grammar (keywords case-insensitive, positions reported in byte
offsets):

    query      := or_expr
    or_expr    := and_expr { OR and_expr }
    and_expr   := unary { AND unary }
    unary      := [ NOT ] atom
    atom       := '(' query ')' | condition
    condition  := key_ref CONTAINS term
                | key_ref IN [ANY] '[' term {',' term} ']'
                | '[' term {',' term} ']' IN [ANY] key_ref
                | key_ref cmp_op date_literal
                | key_ref '=' term
    key_ref    := quoted string | bare word   (synonym-dictionary resolved)
    term       := quoted string | bare word
    cmp_op     := '<' | '<=' | '>' | '>=' | '='
    date_literal := DD.MM.YYYY | MM/YYYY | YYYY

IN requires every listed term to match; IN ANY relaxes that to at
least one. The list may come before or after the key. A '=' applies
to dates when followed by a bare date literal and to values when
followed by a quoted term.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .canonicalize import DateValue, SynonymDictionary
from .errors import QuerySyntaxError, UnknownKey


# ── AST ──────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class And:
    children: tuple


@dataclass(frozen=True)
class Or:
    children: tuple


@dataclass(frozen=True)
class Not:
    child: object


@dataclass(frozen=True)
class Contains:
    key: str
    term: str


@dataclass(frozen=True)
class InAll:
    key: str
    terms: tuple


@dataclass(frozen=True)
class InAny:
    key: str
    terms: tuple


@dataclass(frozen=True)
class DateCmp:
    key: str
    op: str  # < <= > >= =
    date: DateValue


@dataclass(frozen=True)
class Equals:
    key: str
    value: str


# ── Lexer ────────────────────────────────────────────────────────────

_KEYWORDS = {"and", "or", "not", "contains", "in", "any"}
_DATE_DMY = re.compile(r"\d{1,2}\.\d{1,2}\.\d{4}")
_DATE_MY = re.compile(r"\d{1,2}/\d{4}")
_DATE_Y = re.compile(r"\d{4}")
_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class _Token:
    kind: str  # PUNCT OP QSTRING WORD KEYWORD DATE EOF
    text: str
    offset: int


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "()[],":
            tokens.append(_Token("PUNCT", ch, i))
            i += 1
            continue
        if ch in "<>":
            if i + 1 < n and text[i + 1] == "=":
                tokens.append(_Token("OP", text[i : i + 2], i))
                i += 2
            else:
                tokens.append(_Token("OP", ch, i))
                i += 1
            continue
        if ch == "=":
            tokens.append(_Token("OP", "=", i))
            i += 1
            continue
        if ch == '"':
            j = i + 1
            out = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n and text[j + 1] in ('"', "\\"):
                    out.append(text[j + 1])
                    j += 2
                else:
                    out.append(text[j])
                    j += 1
            if j >= n:
                raise QuerySyntaxError("unterminated string", i, expected='closing "')
            tokens.append(_Token("QSTRING", "".join(out), i))
            i = j + 1
            continue
        for pattern in (_DATE_DMY, _DATE_MY, _DATE_Y):
            m = pattern.match(text, i)
            if m:
                tokens.append(_Token("DATE", m.group(0), i))
                i = m.end()
                break
        else:
            m = _WORD.match(text, i)
            if m:
                word = m.group(0)
                kind = "KEYWORD" if word.lower() in _KEYWORDS else "WORD"
                tokens.append(_Token(kind, word, i))
                i = m.end()
                continue
            raise QuerySyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("EOF", "", n))
    return tokens


def parse_date_literal(text: str) -> DateValue | None:
    """Strict query-side date forms: DD.MM.YYYY, MM/YYYY or YYYY."""
    if _DATE_DMY.fullmatch(text):
        d, m, y = text.split(".")
        try:
            return DateValue(year=int(y), month=int(m), day=int(d))
        except ValueError:
            return None
    if _DATE_MY.fullmatch(text):
        m, y = text.split("/")
        if not 1 <= int(m) <= 12:
            return None
        return DateValue(year=int(y), month=int(m))
    if _DATE_Y.fullmatch(text):
        return DateValue(year=int(text))
    return None


# ── Parser ───────────────────────────────────────────────────────────


class _Parser:
    def __init__(self, tokens: list[_Token], dictionary: SynonymDictionary):
        self.tokens = tokens
        self.pos = 0
        self.dictionary = dictionary

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_punct(self, ch: str) -> _Token:
        tok = self.peek()
        if tok.kind != "PUNCT" or tok.text != ch:
            raise QuerySyntaxError(f"got {tok.text!r}" if tok.text else "input ended", tok.offset, expected=repr(ch))
        return self.advance()

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "KEYWORD" and tok.text.lower() == word

    def eat_keyword(self, word: str) -> bool:
        if self.at_keyword(word):
            self.advance()
            return True
        return False

    def parse(self):
        node = self.or_expr()
        tok = self.peek()
        if tok.kind != "EOF":
            raise QuerySyntaxError(f"unexpected {tok.text!r}", tok.offset, expected="end of query")
        return node

    def or_expr(self):
        children = [self.and_expr()]
        while self.eat_keyword("or"):
            children.append(self.and_expr())
        return children[0] if len(children) == 1 else Or(tuple(children))

    def and_expr(self):
        children = [self.unary()]
        while self.eat_keyword("and"):
            children.append(self.unary())
        return children[0] if len(children) == 1 else And(tuple(children))

    def unary(self):
        if self.eat_keyword("not"):
            return Not(self.atom())
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.text == "(":
            self.advance()
            node = self.or_expr()
            self.expect_punct(")")
            return node
        return self.condition()

    def condition(self):
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.text == "[":
            # list-first form: ["a", "b"] IN [ANY] key
            terms = self.term_list()
            if not self.eat_keyword("in"):
                t = self.peek()
                raise QuerySyntaxError(f"got {t.text!r}" if t.text else "input ended", t.offset, expected="IN")
            any_mode = self.eat_keyword("any")
            key = self.key_ref()
            return InAny(key, terms) if any_mode else InAll(key, terms)

        key = self.key_ref()
        if self.eat_keyword("contains"):
            return Contains(key, self.term())
        if self.eat_keyword("in"):
            any_mode = self.eat_keyword("any")
            terms = self.term_list()
            return InAny(key, terms) if any_mode else InAll(key, terms)
        tok = self.peek()
        if tok.kind == "OP":
            self.advance()
            if tok.text == "=":
                value = self.peek()
                if value.kind == "QSTRING" or value.kind == "WORD":
                    self.advance()
                    return Equals(key, value.text)
                if value.kind == "DATE":
                    self.advance()
                    return DateCmp(key, "=", self.date_value(value))
                raise QuerySyntaxError(
                    f"got {value.text!r}" if value.text else "input ended",
                    value.offset,
                    expected="a quoted value or date literal",
                )
            value = self.peek()
            if value.kind != "DATE":
                raise QuerySyntaxError(
                    f"got {value.text!r}" if value.text else "input ended",
                    value.offset,
                    expected="date literal",
                )
            self.advance()
            return DateCmp(key, tok.text, self.date_value(value))
        raise QuerySyntaxError(
            f"got {tok.text!r}" if tok.text else "input ended",
            tok.offset,
            expected="CONTAINS, IN, comparison or =",
        )

    def date_value(self, tok: _Token) -> DateValue:
        value = parse_date_literal(tok.text)
        if value is None:
            raise QuerySyntaxError(f"invalid date {tok.text!r}", tok.offset, expected="date literal")
        return value

    def key_ref(self) -> str:
        tok = self.peek()
        if tok.kind not in ("QSTRING", "WORD"):
            raise QuerySyntaxError(
                f"got {tok.text!r}" if tok.text else "input ended", tok.offset, expected="a key"
            )
        self.advance()
        key = self.dictionary.resolve(tok.text)
        if key is None:
            raise UnknownKey(f"unknown key {tok.text!r} at offset {tok.offset}")
        return key.id

    def term(self) -> str:
        tok = self.peek()
        if tok.kind in ("QSTRING", "WORD", "DATE"):
            self.advance()
            return tok.text
        raise QuerySyntaxError(
            f"got {tok.text!r}" if tok.text else "input ended", tok.offset, expected="a term"
        )

    def term_list(self) -> tuple:
        self.expect_punct("[")
        terms = [self.term()]
        while True:
            tok = self.peek()
            if tok.kind == "PUNCT" and tok.text == ",":
                self.advance()
                terms.append(self.term())
                continue
            break
        self.expect_punct("]")
        return tuple(terms)


def parse_query(text: str, dictionary: SynonymDictionary | None = None):
    """Parse query text into an AST; offsets in errors index into text."""
    dictionary = dictionary or SynonymDictionary.default()
    return _Parser(_lex(text), dictionary).parse()


# ── Canonical printer ────────────────────────────────────────────────


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _format_date(d: DateValue) -> str:
    if d.day is not None:
        return f"{d.day:02d}.{d.month:02d}.{d.year}"
    if d.month is not None:
        return f"{d.month:02d}/{d.year}"
    return str(d.year)


def print_query(node) -> str:
    """Render an AST in the normalized form the parser round-trips."""
    if isinstance(node, And):
        if not node.children:
            raise ValueError("an empty conjunction has no textual form")
        return " AND ".join(_print_operand(c, parent="and") for c in node.children)
    if isinstance(node, Or):
        if not node.children:
            raise ValueError("an empty disjunction has no textual form")
        return " OR ".join(_print_operand(c, parent="or") for c in node.children)
    if isinstance(node, Not):
        return f"NOT {_print_operand(node.child, parent='not')}"
    if isinstance(node, Contains):
        return f"{_quote(node.key)} CONTAINS {_quote(node.term)}"
    if isinstance(node, InAll):
        return f"{_quote(node.key)} IN [{', '.join(_quote(t) for t in node.terms)}]"
    if isinstance(node, InAny):
        return f"{_quote(node.key)} IN ANY [{', '.join(_quote(t) for t in node.terms)}]"
    if isinstance(node, DateCmp):
        return f"{_quote(node.key)} {node.op} {_format_date(node.date)}"
    if isinstance(node, Equals):
        return f"{_quote(node.key)} = {_quote(node.value)}"
    raise TypeError(f"not a query node: {node!r}")


def _print_operand(node, parent: str) -> str:
    text = print_query(node)
    if parent == "and":
        needs_parens = isinstance(node, Or)
    elif parent == "not":
        # the grammar allows a single NOT per unary, so anything
        # compound must be parenthesized to survive a re-parse
        needs_parens = isinstance(node, (And, Or, Not))
    else:
        needs_parens = False
    return f"({text})" if needs_parens else text


# ── Evaluator ────────────────────────────────────────────────────────


def eval_query(node, store) -> list[str]:
    """Evaluate an AST against a record store; ids come back sorted.

    Boolean structure becomes set algebra over drawing ids; NOT is the
    complement against all stored ids. Records without a date never
    satisfy a date comparison.
    """
    return sorted(_eval(node, store, frozenset(store.ids())))


def _eval(node, store, universe: frozenset) -> set:
    if isinstance(node, And):
        result = set(universe)
        for child in node.children:
            result &= _eval(child, store, universe)
        return result
    if isinstance(node, Or):
        result: set = set()
        for child in node.children:
            result |= _eval(child, store, universe)
        return result
    if isinstance(node, Not):
        return set(universe) - _eval(node.child, store, universe)
    if isinstance(node, Contains):
        return store.contains_ids(node.key, node.term)
    if isinstance(node, InAll):
        result = set(universe)
        for term in node.terms:
            result &= store.contains_ids(node.key, term)
        return result
    if isinstance(node, InAny):
        result = set()
        for term in node.terms:
            result |= store.contains_ids(node.key, term)
        return result
    if isinstance(node, DateCmp):
        return _eval_date_cmp(node, store)
    if isinstance(node, Equals):
        return store.equals_ids(node.key, node.value)
    raise TypeError(f"not a query node: {node!r}")


_OPS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "=": lambda a, b: a == b,
}


def _eval_date_cmp(node: DateCmp, store) -> set:
    op = _OPS[node.op]
    if node.date.day is not None:
        granularity = 3
        literal = node.date.sort_key()
    elif node.date.month is not None:
        granularity = 2
        literal = node.date.sort_key()[:2]
    else:
        granularity = 1
        literal = node.date.sort_key()[:1]
    out = set()
    for drawing_id, date in store.dates_for(node.key):
        if date is None:
            continue
        if op(date.sort_key()[:granularity], literal):
            out.add(drawing_id)
    return out
