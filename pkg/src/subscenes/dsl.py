"""Declarative sub-scene pattern language: lexer, AST, parser, unparser.

One pattern per source unit::

    pattern straight_road {
      match (a:Lane)-[NEXT]->(b:Lane);
      mark S(a, b);
      count(root);
    }

A ``match`` statement describes a chain of node patterns joined by edge
patterns (``-[KIND]->`` directed, ``-[KIND]-`` either direction), with
optional ``where`` predicates on node attributes.  ``mark`` records the
nodes bound by the preceding match under a label; later statements can
match marked nodes with ``(x:@label)``, which is how larger structures
are composed out of simpler ones.  ``count(root)`` reports whether the
scene's root segment was marked; ``count(label)`` reports the size of a
mark set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

from .graph import EdgeKind, NodeKind

NODE_KIND_NAMES = {kind.value: kind for kind in NodeKind}
EDGE_KIND_NAMES = {"NEXT": EdgeKind.NEXT, "CONNECTED_TO": EdgeKind.CONNECTED_TO, "ON": EdgeKind.ON}
EDGE_KIND_SPELLING = {v: k for k, v in EDGE_KIND_NAMES.items()}

KEYWORDS = frozenset({"pattern", "match", "where", "and", "mark", "count", "in"})

LiteralValue = Union[str, float]


class DslError(Exception):
    """Base class for pattern-language errors, carrying a source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class PatternSyntaxError(DslError):
    def __init__(self, line: int, col: int, expected: tuple[str, ...], found: str):
        message = f"expected {' or '.join(expected)}, found {found}"
        super().__init__(message, line, col)
        self.expected = expected
        self.found = found


class UnboundVariableError(DslError):
    def __init__(self, name: str, line: int, col: int):
        super().__init__(f"variable {name!r} is not bound by a match statement", line, col)
        self.name = name


class UnknownKindError(DslError):
    def __init__(self, name: str, line: int, col: int, *, edge: bool = False):
        what = "edge kind" if edge else "node kind"
        super().__init__(f"unknown {what} {name!r}", line, col)
        self.name = name


class UnknownMarkLabelError(DslError):
    def __init__(self, label: str, line: int, col: int):
        super().__init__(f"mark label {label!r} is not produced by an earlier statement", line, col)
        self.label = label


class DuplicatePatternNameError(DslError):
    def __init__(self, name: str, line: int, col: int):
        super().__init__(f"duplicate pattern name {name!r}", line, col)
        self.name = name


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_line: int
    end_col: int

    @staticmethod
    def cover(first: "Span", last: "Span") -> "Span":
        return Span(first.line, first.col, last.end_line, last.end_col)


_NO_SPAN = Span(0, 0, 0, 0)


@dataclass(frozen=True)
class NodePattern:
    """``(var:Kind)`` or ``(var:@label)``."""

    var: str
    label: str
    is_mark: bool = False
    span: Span = field(default=_NO_SPAN, compare=False, repr=False)

    @property
    def kind(self) -> NodeKind:
        return NODE_KIND_NAMES[self.label]


@dataclass(frozen=True)
class EdgePattern:
    """Edge between consecutive node patterns of a chain."""

    kind: EdgeKind
    directed: bool = True
    span: Span = field(default=_NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Comparison:
    var: str
    attr: str
    op: str
    value: LiteralValue
    span: Span = field(default=_NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Membership:
    var: str
    attr: str
    values: tuple[LiteralValue, ...]
    span: Span = field(default=_NO_SPAN, compare=False, repr=False)


Predicate = Union[Comparison, Membership]


@dataclass(frozen=True)
class MatchStatement:
    nodes: tuple[NodePattern, ...]
    edges: tuple[EdgePattern, ...]
    predicates: tuple[Predicate, ...] = ()
    span: Span = field(default=_NO_SPAN, compare=False, repr=False)

    def variables(self) -> list[str]:
        seen: list[str] = []
        for pattern in self.nodes:
            if pattern.var not in seen:
                seen.append(pattern.var)
        return seen


@dataclass(frozen=True)
class MarkStatement:
    label: str
    variables: tuple[str, ...]
    span: Span = field(default=_NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class CountStatement:
    target: str  # "root" or a mark label
    span: Span = field(default=_NO_SPAN, compare=False, repr=False)

    @property
    def is_root(self) -> bool:
        return self.target == "root"


Statement = Union[MatchStatement, MarkStatement, CountStatement]


@dataclass(frozen=True)
class PatternQuery:
    name: str
    statements: tuple[Statement, ...]
    span: Span = field(default=_NO_SPAN, compare=False, repr=False)

    def mark_labels(self) -> list[str]:
        seen: list[str] = []
        for stmt in self.statements:
            if isinstance(stmt, MarkStatement) and stmt.label not in seen:
                seen.append(stmt.label)
        return seen


# --- lexer -----------------------------------------------------------------

_PUNCT = ("{", "}", "(", ")", ":", ";", ",", ".", "@")


@dataclass(frozen=True)
class _Token:
    type: str  # IDENT NUMBER STRING punct/operator spelling, EOF
    text: str
    value: object
    span: Span


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i = 1, 1, 0
    n = len(source)

    def make(tok_type: str, text: str, value: object, start_line: int, start_col: int) -> None:
        tokens.append(
            _Token(tok_type, text, value, Span(start_line, start_col, line, col))
        )

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":  # comment to end of line
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            col += j - i
            i = j
            make("IDENT", text, text, start_line, start_col)
            continue
        if ch.isdigit() or (
            ch == "-" and i + 1 < n and (source[i + 1].isdigit() or source[i + 1] == ".")
        ):
            j = i + 1 if ch == "-" else i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == ".":
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            col += j - i
            i = j
            try:
                value = float(text)
            except ValueError:
                raise PatternSyntaxError(start_line, start_col, ("a number",), repr(text)) from None
            make("NUMBER", text, value, start_line, start_col)
            continue
        if ch == '"':
            j = i + 1
            chars: list[str] = []
            while j < n and source[j] != '"':
                if source[j] == "\\" and j + 1 < n and source[j + 1] in ('"', "\\"):
                    chars.append(source[j + 1])
                    j += 2
                elif source[j] == "\n":
                    break
                else:
                    chars.append(source[j])
                    j += 1
            if j >= n or source[j] != '"':
                col += j - i
                raise PatternSyntaxError(start_line, start_col, ('closing "',), "end of line")
            text = source[i : j + 1]
            col += j + 1 - i
            i = j + 1
            make("STRING", text, "".join(chars), start_line, start_col)
            continue
        if ch == "-":
            if i + 1 < n and source[i + 1] == "[":
                i += 2
                col += 2
                make("-[", "-[", None, start_line, start_col)
                continue
            raise PatternSyntaxError(start_line, start_col, ("'-['", "a number"), "'-'")
        if ch == "]":
            if source.startswith("]->", i):
                i += 3
                col += 3
                make("]->", "]->", None, start_line, start_col)
                continue
            if source.startswith("]-", i):
                i += 2
                col += 2
                make("]-", "]-", None, start_line, start_col)
                continue
            raise PatternSyntaxError(start_line, start_col, ("']->'", "']-'"), "']'")
        if ch in ("!", "<", ">", "="):
            if source.startswith("!=", i):
                op = "!="
            elif source.startswith("<=", i):
                op = "<="
            elif source.startswith(">=", i):
                op = ">="
            elif ch in ("<", ">", "="):
                op = ch
            else:
                raise PatternSyntaxError(start_line, start_col, ("a comparison",), repr(ch))
            i += len(op)
            col += len(op)
            make(op, op, None, start_line, start_col)
            continue
        if ch in _PUNCT:
            i += 1
            col += 1
            make(ch, ch, None, start_line, start_col)
            continue
        raise PatternSyntaxError(start_line, start_col, ("a token",), repr(ch))

    tokens.append(_Token("EOF", "", None, Span(line, col, line, col)))
    return tokens


# --- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        if token.type != "EOF":
            self.pos += 1
        return token

    def expect(self, *types: str) -> _Token:
        token = self.peek()
        if token.type not in types:
            found = f"{token.text!r}" if token.type != "EOF" else "end of input"
            raise PatternSyntaxError(
                token.span.line, token.span.col, tuple(f"'{t}'" for t in types), found
            )
        return self.advance()

    def expect_keyword(self, word: str) -> _Token:
        token = self.peek()
        if token.type != "IDENT" or token.text != word:
            found = f"{token.text!r}" if token.type != "EOF" else "end of input"
            raise PatternSyntaxError(token.span.line, token.span.col, (f"'{word}'",), found)
        return self.advance()

    def expect_ident(self, what: str = "an identifier") -> _Token:
        token = self.peek()
        if token.type != "IDENT" or token.text in KEYWORDS:
            found = f"{token.text!r}" if token.type != "EOF" else "end of input"
            raise PatternSyntaxError(token.span.line, token.span.col, (what,), found)
        return self.advance()

    def at_keyword(self, word: str) -> bool:
        token = self.peek()
        return token.type == "IDENT" and token.text == word

    def parse_query(self) -> PatternQuery:
        start = self.expect_keyword("pattern")
        name = self.expect_ident("a pattern name")
        self.expect("{")
        statements: list[Statement] = []
        while not self.peek().type == "}":
            statements.append(self.parse_statement())
        close = self.expect("}")
        if not statements:
            raise PatternSyntaxError(
                close.span.line, close.span.col, ("a statement",), "'}'"
            )
        query = PatternQuery(
            name=name.text,
            statements=tuple(statements),
            span=Span.cover(start.span, close.span),
        )
        _validate(query)
        return query

    def parse_statement(self) -> Statement:
        token = self.peek()
        if self.at_keyword("match"):
            return self.parse_match()
        if self.at_keyword("mark"):
            return self.parse_mark()
        if self.at_keyword("count"):
            return self.parse_count()
        found = f"{token.text!r}" if token.type != "EOF" else "end of input"
        raise PatternSyntaxError(
            token.span.line, token.span.col, ("'match'", "'mark'", "'count'"), found
        )

    def parse_match(self) -> MatchStatement:
        start = self.expect_keyword("match")
        nodes = [self.parse_node_pattern()]
        edges: list[EdgePattern] = []
        while self.peek().type == "-[":
            edges.append(self.parse_edge_pattern())
            nodes.append(self.parse_node_pattern())
        predicates: list[Predicate] = []
        if self.at_keyword("where"):
            self.advance()
            predicates.append(self.parse_predicate())
            while self.at_keyword("and"):
                self.advance()
                predicates.append(self.parse_predicate())
        end = self.expect(";")
        return MatchStatement(
            nodes=tuple(nodes),
            edges=tuple(edges),
            predicates=tuple(predicates),
            span=Span.cover(start.span, end.span),
        )

    def parse_node_pattern(self) -> NodePattern:
        start = self.expect("(")
        var = self.expect_ident("a variable name")
        self.expect(":")
        token = self.peek()
        if token.type == "@":
            self.advance()
            label = self.expect_ident("a mark label")
            end = self.expect(")")
            return NodePattern(
                var=var.text, label=label.text, is_mark=True,
                span=Span.cover(start.span, end.span),
            )
        name = self.expect_ident("a node kind")
        if name.text not in NODE_KIND_NAMES:
            raise UnknownKindError(name.text, name.span.line, name.span.col)
        end = self.expect(")")
        return NodePattern(
            var=var.text, label=name.text, is_mark=False,
            span=Span.cover(start.span, end.span),
        )

    def parse_edge_pattern(self) -> EdgePattern:
        start = self.expect("-[")
        name = self.expect_ident("an edge kind")
        if name.text not in EDGE_KIND_NAMES:
            raise UnknownKindError(name.text, name.span.line, name.span.col, edge=True)
        close = self.expect("]->", "]-")
        return EdgePattern(
            kind=EDGE_KIND_NAMES[name.text],
            directed=close.type == "]->",
            span=Span.cover(start.span, close.span),
        )

    def parse_predicate(self) -> Predicate:
        var = self.expect_ident("a variable name")
        self.expect(".")
        attr = self.expect_ident("an attribute name")
        token = self.peek()
        if token.type == "IDENT" and token.text == "in":
            self.advance()
            self.expect("{")
            values = [self.parse_literal()]
            while self.peek().type == ",":
                self.advance()
                values.append(self.parse_literal())
            end = self.expect("}")
            return Membership(
                var=var.text, attr=attr.text, values=tuple(values),
                span=Span.cover(var.span, end.span),
            )
        op = self.expect("=", "!=", "<", "<=", ">", ">=")
        value, value_span = self.parse_literal_with_span()
        return Comparison(
            var=var.text, attr=attr.text, op=op.type, value=value,
            span=Span.cover(var.span, value_span),
        )

    def parse_literal(self) -> LiteralValue:
        return self.parse_literal_with_span()[0]

    def parse_literal_with_span(self) -> tuple[LiteralValue, Span]:
        token = self.peek()
        if token.type in ("NUMBER", "STRING"):
            self.advance()
            return token.value, token.span  # type: ignore[return-value]
        found = f"{token.text!r}" if token.type != "EOF" else "end of input"
        raise PatternSyntaxError(
            token.span.line, token.span.col, ("a number", "a string"), found
        )

    def parse_mark(self) -> MarkStatement:
        start = self.expect_keyword("mark")
        label = self.expect_ident("a mark label")
        self.expect("(")
        variables = [self.expect_ident("a variable name").text]
        while self.peek().type == ",":
            self.advance()
            variables.append(self.expect_ident("a variable name").text)
        self.expect(")")
        end = self.expect(";")
        return MarkStatement(
            label=label.text, variables=tuple(variables),
            span=Span.cover(start.span, end.span),
        )

    def parse_count(self) -> CountStatement:
        start = self.expect_keyword("count")
        self.expect("(")
        target = self.expect_ident("'root' or a mark label")
        self.expect(")")
        end = self.expect(";")
        return CountStatement(target=target.text, span=Span.cover(start.span, end.span))


def _validate(query: PatternQuery) -> None:
    """Static checks: variable binding and mark-label availability."""
    produced: set[str] = set()
    current_vars: set[str] = set()
    have_match = False
    for stmt in query.statements:
        if isinstance(stmt, MatchStatement):
            have_match = True
            current_vars = set(stmt.variables())
            for pattern in stmt.nodes:
                if pattern.is_mark and pattern.label not in produced:
                    raise UnknownMarkLabelError(
                        pattern.label, pattern.span.line, pattern.span.col
                    )
            for pred in stmt.predicates:
                if pred.var not in current_vars:
                    raise UnboundVariableError(pred.var, pred.span.line, pred.span.col)
        elif isinstance(stmt, MarkStatement):
            if not have_match:
                raise UnboundVariableError(
                    stmt.variables[0], stmt.span.line, stmt.span.col
                )
            for var in stmt.variables:
                if var not in current_vars:
                    raise UnboundVariableError(var, stmt.span.line, stmt.span.col)
            produced.add(stmt.label)
        elif isinstance(stmt, CountStatement):
            if not stmt.is_root and stmt.target not in produced:
                raise UnknownMarkLabelError(stmt.target, stmt.span.line, stmt.span.col)


def parse(source: str) -> PatternQuery:
    """Parse exactly one pattern definition."""
    parser = _Parser(source)
    query = parser.parse_query()
    token = parser.peek()
    if token.type != "EOF":
        raise PatternSyntaxError(
            token.span.line, token.span.col, ("end of input",), f"{token.text!r}"
        )
    return query


def parse_many(source: str) -> list[PatternQuery]:
    """Parse a sequence of pattern definitions; names must be unique."""
    parser = _Parser(source)
    queries: list[PatternQuery] = []
    names: set[str] = set()
    while parser.peek().type != "EOF":
        query = parser.parse_query()
        if query.name in names:
            raise DuplicatePatternNameError(query.name, query.span.line, query.span.col)
        names.add(query.name)
        queries.append(query)
    if not queries:
        token = parser.peek()
        raise PatternSyntaxError(token.span.line, token.span.col, ("'pattern'",), "end of input")
    return queries


# --- unparser ---------------------------------------------------------------


def format_literal(value: LiteralValue) -> str:
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    return repr(value)


def _format_predicate(pred: Predicate) -> str:
    if isinstance(pred, Membership):
        inner = ", ".join(format_literal(v) for v in pred.values)
        return f"{pred.var}.{pred.attr} in {{{inner}}}"
    return f"{pred.var}.{pred.attr} {pred.op} {format_literal(pred.value)}"


def _format_statement(stmt: Statement) -> str:
    if isinstance(stmt, MatchStatement):
        parts = [f"({stmt.nodes[0].var}:{'@' if stmt.nodes[0].is_mark else ''}{stmt.nodes[0].label})"]
        for edge, node in zip(stmt.edges, stmt.nodes[1:]):
            arrow = "->" if edge.directed else "-"
            mark = "@" if node.is_mark else ""
            parts.append(f"-[{EDGE_KIND_SPELLING[edge.kind]}]{arrow}({node.var}:{mark}{node.label})")
        text = "match " + "".join(parts)
        if stmt.predicates:
            text += " where " + " and ".join(_format_predicate(p) for p in stmt.predicates)
        return text + ";"
    if isinstance(stmt, MarkStatement):
        return f"mark {stmt.label}({', '.join(stmt.variables)});"
    return f"count({stmt.target});"


def unparse(query: PatternQuery) -> str:
    """Canonical source text; ``parse(unparse(q))`` equals ``q`` structurally."""
    lines = [f"pattern {query.name} {{"]
    for stmt in query.statements:
        lines.append("  " + _format_statement(stmt))
    lines.append("}")
    return "\n".join(lines) + "\n"


def unparse_many(queries: Iterable[PatternQuery]) -> str:
    return "\n".join(unparse(q) for q in queries)
