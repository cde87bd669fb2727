"""SQL predicate factoring: hoist conjuncts shared by every OR-disjunct.

A WHERE clause is parsed into a small boolean AST (atoms combined with
AND/OR/NOT), and ``factor_common_conjuncts`` pulls atoms that occur in every
disjunct of an OR out in front of it:

    (A and B) or (A and C)   ->   A and (B or C)

The transformation is purely syntactic.  Atoms are compared structurally
(case- and whitespace-insensitive, with operand order canonicalized for the
symmetric operators ``=`` and ``<>``); no algebraic reasoning is attempted,
so ``x >= 9`` and ``x >= 9.0`` stay distinct.  Subqueries and EXISTS tests
are carried as opaque atoms and never rewritten internally.  Because every
step is plain boolean algebra over opaque atoms, the result is logically
equivalent to the input for any reading of the atoms.

``rewrite_query`` applies the factoring to a full SELECT statement: the
top-level WHERE is located textually, its predicate replaced, and every
byte outside the predicate preserved.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence, Union

__all__ = [
    "Atom",
    "Not",
    "And",
    "Or",
    "Node",
    "PredicateParseError",
    "RewriteReport",
    "parse_predicate",
    "emit_sql",
    "factor_common_conjuncts",
    "rewrite_query",
    "atoms_of",
    "distinct_atom_count",
    "evaluate",
]


class PredicateParseError(ValueError):
    """Syntax error in a predicate, with the offending position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at offset {pos})")
        self.pos = pos


_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+|--[^\n]*|/\*.*?\*/)
    | (?P<str>'(?:[^']|'')*')
    | (?P<num>\d+(?:\.\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_$]*(?:\.[A-Za-z_][A-Za-z0-9_$]*)*)
    | (?P<op><>|!=|<=|>=|\|\||[=<>+\-*/(),;])
    """,
    re.VERBOSE | re.DOTALL,
)

_COMPARISON_OPS = {"=", "<>", "!=", "<", "<=", ">", ">="}
_SYMMETRIC_OPS = {"=", "<>", "!="}
# Keywords that terminate an operand inside an atom.
_OPERAND_STOP = {"and", "or", "not", "between", "in", "like", "is", "escape"}


def _tokenize(text: str) -> list[tuple[str, int]]:
    """Lexemes with start offsets; whitespace and comments dropped."""
    out: list[tuple[str, int]] = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise PredicateParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            out.append((m.group(), pos))
        pos = m.end()
    return out


def _fold(lexeme: str) -> str:
    # String literals keep case; identifiers/keywords/numbers fold.
    if lexeme.startswith("'"):
        return lexeme
    return lexeme.lower()


@dataclass(frozen=True)
class Atom:
    """A leaf predicate, carried as its token sequence.

    ``key`` is the canonical identity used for structural equality; it folds
    case and, for ``=``/``<>`` comparisons, orders the two operands
    canonically so ``a = b`` and ``b = a`` match.
    """

    kind: str = field(compare=False)
    tokens: tuple[str, ...] = field(compare=False)
    key: tuple[str, ...] = field(compare=True)


@dataclass(frozen=True)
class Not:
    child: "Node"


@dataclass(frozen=True)
class And:
    children: tuple["Node", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["Node", ...]


Node = Union[Atom, Not, And, Or]


def _make_atom(kind: str, tokens: Sequence[str], sym_op_index: int | None = None) -> Atom:
    toks = tuple(tokens)
    folded = tuple(_fold(t) for t in toks)
    key = folded
    if sym_op_index is not None and folded[sym_op_index] in {"=", "<>"}:
        lhs = folded[:sym_op_index]
        rhs = folded[sym_op_index + 1 :]
        if rhs < lhs:
            key = rhs + (folded[sym_op_index],) + lhs
    return Atom(kind, toks, key)


def _flatten(cls, items: Sequence[Node]) -> Node:
    flat: list[Node] = []
    for item in items:
        if isinstance(item, cls):
            flat.extend(item.children)
        else:
            flat.append(item)
    if not flat:
        raise ValueError("empty conjunction/disjunction")
    if len(flat) == 1:
        return flat[0]
    return cls(tuple(flat))


def make_and(items: Sequence[Node]) -> Node:
    return _flatten(And, items)


def make_or(items: Sequence[Node]) -> Node:
    return _flatten(Or, items)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def _peek(self, ahead: int = 0) -> str | None:
        j = self.i + ahead
        return self.tokens[j][0] if j < len(self.tokens) else None

    def _peek_folded(self, ahead: int = 0) -> str | None:
        t = self._peek(ahead)
        return _fold(t) if t is not None else None

    def _pos(self) -> int:
        if self.i < len(self.tokens):
            return self.tokens[self.i][1]
        return len(self.text)

    def _next(self) -> str:
        if self.i >= len(self.tokens):
            raise PredicateParseError("unexpected end of predicate", len(self.text))
        tok = self.tokens[self.i][0]
        self.i += 1
        return tok

    def _expect(self, folded: str) -> str:
        tok = self._peek_folded()
        if tok != folded:
            raise PredicateParseError(f"expected {folded!r}, found {self._peek()!r}", self._pos())
        return self._next()

    def _consume_balanced(self, out: list[str]) -> bool:
        """Consume from an opening '(' through its match; True if a subquery."""
        open_pos = self._pos()
        out.append(self._expect("("))
        depth = 1
        has_select = self._peek_folded() == "select"
        while depth > 0:
            if self.i >= len(self.tokens):
                raise PredicateParseError("unclosed parenthesis", open_pos)
            tok = self._next()
            if tok == "(":
                depth += 1
            elif tok == ")":
                depth -= 1
            if _fold(tok) == "select":
                has_select = True
            out.append(tok)
        return has_select

    def parse(self) -> Node:
        node = self._parse_or()
        if self.i < len(self.tokens):
            raise PredicateParseError(f"trailing input {self._peek()!r}", self._pos())
        return node

    def _parse_or(self) -> Node:
        items = [self._parse_and()]
        while self._peek_folded() == "or":
            self._next()
            items.append(self._parse_and())
        return make_or(items)

    def _parse_and(self) -> Node:
        items = [self._parse_not()]
        while self._peek_folded() == "and":
            self._next()
            items.append(self._parse_not())
        return make_and(items)

    def _parse_not(self) -> Node:
        if self._peek_folded() == "not" and self._peek_folded(1) != "exists":
            # "not exists" stays inside the opaque atom.
            self._next()
            return Not(self._parse_not())
        return self._parse_atom()

    def _parse_atom(self) -> Node:
        tok = self._peek_folded()
        if tok is None:
            raise PredicateParseError("expected predicate", self._pos())
        if tok == "(" and self._peek_folded(1) != "select":
            open_pos = self._pos()
            self._next()
            node = self._parse_or()
            if self._peek_folded() != ")":
                raise PredicateParseError("unclosed parenthesis", open_pos)
            self._next()
            return node
        if tok in {"exists", "not"} :
            # "exists (select ...)" or "not exists (select ...)": opaque.
            toks: list[str] = []
            if tok == "not":
                toks.append(self._next())
            toks.append(self._expect("exists"))
            self._consume_balanced(toks)
            return _make_atom("opaque", toks)
        return self._parse_simple_atom()

    def _parse_operand(self, out: list[str]) -> bool:
        """Consume one scalar operand into ``out``; True if it held a subquery."""
        start = self._pos()
        before = len(out)
        has_subquery = False
        while True:
            tok = self._peek_folded()
            if tok is None:
                break
            if tok in _OPERAND_STOP or tok in _COMPARISON_OPS or tok in {")", ",", ";"}:
                break
            if tok == "(":
                has_subquery |= self._consume_balanced(out)
                continue
            out.append(self._next())
        if len(out) == before:
            raise PredicateParseError("expected operand", start)
        return has_subquery

    def _parse_simple_atom(self) -> Atom:
        lhs: list[str] = []
        start = self._pos()
        opaque = self._parse_operand(lhs)
        if not lhs:
            raise PredicateParseError("expected operand", start)

        tok = self._peek_folded()
        if tok in _COMPARISON_OPS:
            op = self._next()
            rhs: list[str] = []
            opaque |= self._parse_operand(rhs)
            if not rhs:
                raise PredicateParseError("expected right-hand operand", self._pos())
            kind = "opaque" if opaque else "cmp"
            return _make_atom(kind, lhs + [op] + rhs, sym_op_index=len(lhs))

        negated = False
        if tok == "not":
            negated = True
            lhs_with_not = lhs + [self._next()]
            tok = self._peek_folded()
            if tok not in {"between", "in", "like"}:
                raise PredicateParseError(
                    f"expected BETWEEN/IN/LIKE after NOT, found {self._peek()!r}", self._pos()
                )
            lhs = lhs_with_not

        if tok == "between":
            toks = lhs + [self._next()]
            opaque |= self._parse_operand(toks)
            toks.append(self._expect("and"))
            opaque |= self._parse_operand(toks)
            return _make_atom("opaque" if opaque else "between", toks)

        if tok == "in":
            toks = lhs + [self._next()]
            sub = self._consume_balanced(toks)
            return _make_atom("opaque" if (sub or opaque) else "in", toks)

        if tok == "like":
            toks = lhs + [self._next()]
            opaque |= self._parse_operand(toks)
            return _make_atom("opaque" if opaque else "like", toks)

        if tok == "is":
            toks = lhs + [self._next()]
            if self._peek_folded() == "not":
                toks.append(self._next())
            toks.append(self._expect("null"))
            return _make_atom("null", toks)

        raise PredicateParseError(
            f"expected a predicate operator, found {self._peek()!r}", self._pos()
        )


def parse_predicate(text: str) -> Node:
    """Parse a WHERE-clause body into a boolean AST."""
    return _Parser(text).parse()


def _join_tokens(tokens: Sequence[str]) -> str:
    keywords_before_paren = {
        "and", "or", "not", "in", "exists", "between", "like", "is", "select",
        "from", "where", "group", "by", "having", "order",
    }
    parts: list[str] = []
    prev: str | None = None
    for tok in tokens:
        if prev is None:
            parts.append(tok)
        elif tok in {")", ","}:
            parts.append(tok)
        elif prev == "(":
            parts.append(tok)
        elif tok == "(" and re.fullmatch(r"[A-Za-z_][A-Za-z0-9_$.]*", prev or "") and \
                _fold(prev) not in keywords_before_paren:
            parts.append(tok)
        else:
            parts.append(" " + tok)
        prev = tok
    return "".join(parts)


def emit_sql(node: Node) -> str:
    """Deterministic, parenthesized, re-parseable text for an AST."""
    if isinstance(node, Atom):
        return _join_tokens(node.tokens)
    if isinstance(node, Not):
        return "not (" + emit_sql(node.child) + ")"
    if isinstance(node, (And, Or)):
        sep = " and " if isinstance(node, And) else " or "
        parts = []
        for child in node.children:
            text = emit_sql(child)
            if isinstance(child, (And, Or)):
                text = "(" + text + ")"
            parts.append(text)
        return sep.join(parts)
    raise TypeError(f"not an AST node: {node!r}")


@dataclass(frozen=True)
class RewriteReport:
    hoisted: tuple[Atom, ...]
    residual_disjuncts: int
    changed: bool

    @property
    def hoisted_text(self) -> tuple[str, ...]:
        return tuple(emit_sql(a) for a in self.hoisted)


def _conjuncts(node: Node) -> list[Node]:
    if isinstance(node, And):
        return list(node.children)
    return [node]


def _factor(node: Node, hoisted: list[Atom], residuals: list[int]) -> Node:
    if isinstance(node, Atom):
        return node
    if isinstance(node, Not):
        return Not(_factor(node.child, hoisted, residuals))
    if isinstance(node, And):
        return make_and([_factor(c, hoisted, residuals) for c in node.children])

    kids = [_factor(c, hoisted, residuals) for c in node.children]
    disjuncts = [_conjuncts(k) for k in kids]
    first = disjuncts[0]
    common: list[Node] = []
    for cand in first:
        if any(cand == seen for seen in common):
            continue
        if all(any(cand == other for other in d) for d in disjuncts[1:]):
            common.append(cand)
    if not common:
        return make_or(kids)

    for atom in common:
        if isinstance(atom, Atom):
            hoisted.append(atom)
    residual_lists: list[Node] = []
    absorbed = False
    for d in disjuncts:
        rest = [c for c in d if not any(c == k for k in common)]
        if not rest:
            # This disjunct is exactly the common set: by absorption the
            # whole disjunction reduces to the common conjunction.
            absorbed = True
            break
        residual_lists.append(make_and(rest))
    if absorbed:
        return make_and(common)
    residuals.append(len(residual_lists))
    return make_and(common + [make_or(residual_lists)])


def factor_common_conjuncts(node: Node) -> tuple[Node, RewriteReport]:
    """Hoist atoms present in every OR-disjunct, bottom-up over all ORs."""
    hoisted: list[Atom] = []
    residual_counts: list[int] = []
    result = _factor(node, hoisted, residual_counts)
    changed = result != node
    if not changed:
        hoisted = []
        residual_counts = []
    return result, RewriteReport(tuple(hoisted), sum(residual_counts), changed)


def atoms_of(node: Node) -> Iterator[Atom]:
    """All atom instances, left to right (duplicates included)."""
    if isinstance(node, Atom):
        yield node
    elif isinstance(node, Not):
        yield from atoms_of(node.child)
    else:
        for child in node.children:
            yield from atoms_of(child)


def distinct_atom_count(node: Node) -> int:
    return len({a.key for a in atoms_of(node)})


def evaluate(node: Node, assignment: Mapping[tuple[str, ...], bool]) -> bool:
    """Evaluate with atoms read as opaque booleans keyed by ``Atom.key``."""
    if isinstance(node, Atom):
        return bool(assignment[node.key])
    if isinstance(node, Not):
        return not evaluate(node.child, assignment)
    if isinstance(node, And):
        return all(evaluate(c, assignment) for c in node.children)
    if isinstance(node, Or):
        return any(evaluate(c, assignment) for c in node.children)
    raise TypeError(f"not an AST node: {node!r}")


_STMT_TOKEN_RE = re.compile(
    r"""
      '(?:[^']|'')*'
    | --[^\n]*
    | /\*.*?\*/
    | [A-Za-z_][A-Za-z0-9_$]*(?:\.[A-Za-z_][A-Za-z0-9_$]*)*
    | [()]
    """,
    re.VERBOSE | re.DOTALL,
)

_PREDICATE_END_KEYWORDS = {
    "group", "having", "order", "limit", "offset", "union", "intersect",
    "except", "window", "fetch",
}


def _locate_where(sql: str) -> tuple[int, int] | None:
    """(pred_start, pred_end) for the body of the first depth-0 WHERE."""
    depth = 0
    pred_start: int | None = None
    for m in _STMT_TOKEN_RE.finditer(sql):
        tok = m.group()
        if tok == "(":
            depth += 1
            continue
        if tok == ")":
            depth -= 1
            continue
        if tok.startswith("'") or tok.startswith("--") or tok.startswith("/*"):
            continue
        low = tok.lower()
        if pred_start is None:
            if depth == 0 and low == "where":
                pred_start = m.end()
        elif depth == 0 and low in _PREDICATE_END_KEYWORDS:
            return pred_start, m.start()
    if pred_start is None:
        return None
    end = sql.find(";", pred_start)
    if end != -1 and not _semicolon_in_string(sql, pred_start, end):
        return pred_start, end
    return pred_start, len(sql)


def _semicolon_in_string(sql: str, start: int, semi_pos: int) -> bool:
    in_str = False
    for i in range(start, semi_pos):
        if sql[i] == "'":
            in_str = not in_str
    return in_str


def rewrite_query(sql: str) -> tuple[str, RewriteReport]:
    """Factor the top-level WHERE of a SELECT statement, in place.

    Everything outside the predicate is byte-preserved.  A statement with
    no top-level WHERE comes back unchanged with ``changed=False``; an
    unparseable predicate raises and leaves the input untouched.
    """
    loc = _locate_where(sql)
    unchanged = RewriteReport((), 0, False)
    if loc is None:
        return sql, unchanged
    pred_start, pred_end = loc
    predicate_text = sql[pred_start:pred_end]
    ast = parse_predicate(predicate_text)
    factored, report = factor_common_conjuncts(ast)
    if not report.changed:
        return sql, unchanged
    new_predicate = emit_sql(factored)
    rewritten = sql[:pred_start] + "\n    " + new_predicate + "\n" + sql[pred_end:]
    return rewritten, report
