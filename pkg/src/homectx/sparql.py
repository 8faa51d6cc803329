"""Parser and evaluator for a small SPARQL subset.

Supported: SELECT [DISTINCT], conjunctive basic graph patterns with
variables in any position, ``filter(datatype(?v)=xsd:T)``, and
ORDER BY ASC/DESC.  Anything beyond the subset fails loudly by feature
name.  Evaluation is an index-backed nested-loop join over the patterns
in written order; its correctness is pinned to a brute-force oracle in
the tests, not to a planner.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Optional

from .rdf import (
    BUILTIN_PREFIXES,
    Iri,
    Literal,
    ParseError,
    Term,
    TriplePattern,
    TripleStore,
    Variable,
    _Lexer,
    _resolve,
    term_key,
    xsd,
)

_UNSUPPORTED = (
    "OPTIONAL", "UNION", "MINUS", "GRAPH", "BIND", "VALUES", "LIMIT",
    "OFFSET", "GROUP", "HAVING", "CONSTRUCT", "ASK", "DESCRIBE", "SERVICE",
)

_NUMERIC_DATATYPES = (xsd("double"), xsd("positiveInteger"))


class QueryError(ValueError):
    """Semantic error in an otherwise well-formed query."""


@dataclass(frozen=True)
class FilterExpr:
    """datatype(?variable) = datatype-IRI"""

    variable: Variable
    datatype: Iri


@dataclass(frozen=True)
class OrderKey:
    variable: Variable
    descending: bool


@dataclass
class Query:
    distinct: bool
    projection: list  # of Variable, in written order
    patterns: list    # of TriplePattern, in written order
    filters: list = field(default_factory=list)
    order_keys: list = field(default_factory=list)

    def validate(self):
        if not self.projection:
            raise QueryError("projection must not be empty")
        bound = set()
        for p in self.patterns:
            bound |= {v.name for v in p.variables()}
        for v in self.projection:
            if v.name not in bound:
                raise QueryError(f"variable ?{v.name} projected but never bound")
        for f in self.filters:
            if f.variable.name not in bound:
                raise QueryError(f"variable ?{f.variable.name} filtered but never bound")
        for k in self.order_keys:
            if k.variable.name not in bound:
                raise QueryError(f"variable ?{k.variable.name} ordered but never bound")


@dataclass
class ResultTable:
    header: list   # of Variable
    rows: list     # of tuples of Term, one per projected variable


# --- parsing -----------------------------------------------------------------

_VAR_RE = re.compile(r"\?([A-Za-z_][A-Za-z0-9_]*)")
_WORD_RE = re.compile(r"[A-Za-z]+")


class _QueryLexer(_Lexer):
    def peek_word(self) -> str:
        self.skip_ws()
        m = _WORD_RE.match(self.text, self.pos)
        return m.group(0) if m else ""

    def take_keyword(self, word: str) -> bool:
        self.skip_ws()
        if self.peek_word().upper() == word:
            self._advance(len(word))
            return True
        return False

    def read_variable(self) -> Variable:
        self.skip_ws()
        m = _VAR_RE.match(self.text, self.pos)
        if not m:
            raise self.error("expected variable")
        self._advance(len(m.group(0)))
        return Variable(m.group(1))


def _reject_unsupported(lexer: _QueryLexer):
    word = lexer.peek_word()
    if word.upper() in _UNSUPPORTED:
        raise lexer.error(f"unsupported feature {word.upper()}")


def _parse_pattern_term(lexer: _QueryLexer, allow_literal: bool):
    lexer.skip_ws()
    if lexer.peek() == "?":
        return lexer.read_variable()
    from .rdf import _parse_term
    return _parse_term(lexer, BUILTIN_PREFIXES, allow_literal)


def parse_query(text: str) -> Query:
    """Parse query text into an AST, preserving pattern order."""
    lexer = _QueryLexer(text)
    if not lexer.take_keyword("SELECT"):
        _reject_unsupported(lexer)
        raise lexer.error("expected SELECT")
    distinct = lexer.take_keyword("DISTINCT")
    projection = []
    while True:
        lexer.skip_ws()
        if lexer.peek() != "?":
            break
        projection.append(lexer.read_variable())
    if not lexer.take_keyword("WHERE"):
        raise lexer.error("expected WHERE")
    lexer.skip_ws()
    lexer.expect("{")

    patterns: list[TriplePattern] = []
    filters: list[FilterExpr] = []
    while True:
        lexer.skip_ws()
        if lexer.peek() == "}":
            lexer.expect("}")
            break
        if not lexer.peek():
            raise lexer.error("unterminated WHERE block")
        _reject_unsupported(lexer)
        if lexer.peek_word().upper() == "FILTER":
            lexer.take_keyword("FILTER")
            lexer.skip_ws()
            lexer.expect("(")
            if not lexer.take_keyword("DATATYPE"):
                raise lexer.error("only datatype(...) filters are supported")
            lexer.skip_ws()
            lexer.expect("(")
            var = lexer.read_variable()
            lexer.skip_ws()
            lexer.expect(")")
            lexer.skip_ws()
            lexer.expect("=")
            lexer.skip_ws()
            prefix, local = lexer.read_pname()
            dt = _resolve(lexer, BUILTIN_PREFIXES, prefix, local)
            lexer.skip_ws()
            lexer.expect(")")
            lexer.skip_ws()
            lexer.take(".")  # trailing dot after a filter is optional
            filters.append(FilterExpr(var, dt))
            continue
        line, col = lexer.line, lexer.col
        s = _parse_pattern_term(lexer, allow_literal=False)
        p = _parse_pattern_term(lexer, allow_literal=False)
        o = _parse_pattern_term(lexer, allow_literal=True)
        lexer.skip_ws()
        lexer.expect(".")
        try:
            patterns.append(TriplePattern(s, p, o))
        except ValueError as exc:
            raise ParseError(str(exc), line, col) from None

    order_keys: list[OrderKey] = []
    if lexer.take_keyword("ORDER"):
        if not lexer.take_keyword("BY"):
            raise lexer.error("expected BY after ORDER")
        while True:
            lexer.skip_ws()
            if lexer.take_keyword("DESC"):
                descending = True
            elif lexer.take_keyword("ASC"):
                descending = False
            elif lexer.peek() == "?":
                order_keys.append(OrderKey(lexer.read_variable(), False))
                continue
            else:
                break
            lexer.skip_ws()
            lexer.expect("(")
            var = lexer.read_variable()
            lexer.skip_ws()
            lexer.expect(")")
            order_keys.append(OrderKey(var, descending))
        if not order_keys:
            raise lexer.error("ORDER BY needs at least one key")
    if not lexer.at_end():
        _reject_unsupported(lexer)
        raise lexer.error("unexpected trailing input")

    query = Query(distinct, projection, patterns, filters, order_keys)
    query.validate()
    return query


# --- evaluation --------------------------------------------------------------

def _substitute(pattern: TriplePattern, binding: dict) -> Optional[TriplePattern]:
    """Plug bound variables into the pattern; None when a literal lands in a
    subject or predicate slot (such a binding can match nothing)."""
    def sub(t):
        if isinstance(t, Variable):
            return binding.get(t.name, t)
        return t
    s, p, o = sub(pattern.subject), sub(pattern.predicate), sub(pattern.object)
    if isinstance(s, Literal) or isinstance(p, Literal):
        return None
    return TriplePattern(s, p, o)


def _solutions(store: TripleStore, patterns: list) -> list[dict]:
    """Nested-loop join in pattern order; yields one binding per solution."""
    bindings = [{}]
    for pattern in patterns:
        next_bindings = []
        for binding in bindings:
            concrete = _substitute(pattern, binding)
            if concrete is None:
                continue
            for triple in store.match(concrete):
                extended = dict(binding)
                for pos, val in ((concrete.subject, triple.subject),
                                 (concrete.predicate, triple.predicate),
                                 (concrete.object, triple.object)):
                    if isinstance(pos, Variable):
                        # a variable repeated within one pattern must bind
                        # the same term in every position
                        if extended.setdefault(pos.name, val) != val:
                            break
                else:
                    next_bindings.append(extended)
        bindings = next_bindings
    return bindings


def _passes(binding: dict, filters: list) -> bool:
    for f in filters:
        term = binding.get(f.variable.name)
        if not (isinstance(term, Literal) and term.datatype == f.datatype):
            return False
    return True


def project_solutions(store: TripleStore, query: Query) -> list[tuple]:
    """Projected rows before DISTINCT and sorting (exposed for oracle tests)."""
    return [
        tuple(binding[v.name] for v in query.projection)
        for binding in _solutions(store, query.patterns)
        if _passes(binding, query.filters)
    ]


def _numeric_value(term) -> Optional[float]:
    if isinstance(term, Literal) and term.datatype in _NUMERIC_DATATYPES:
        return float(term.lexical)
    return None


def _compare_terms(a, b) -> int:
    """Canonical order with numerics first, by value, then everything else."""
    na, nb = _numeric_value(a), _numeric_value(b)
    if na is not None and nb is not None:
        return (na > nb) - (na < nb)
    if na is not None:
        return -1
    if nb is not None:
        return 1
    ka, kb = term_key(a), term_key(b)
    return (ka > kb) - (ka < kb)


def evaluate(store: TripleStore, query: Query) -> ResultTable:
    """Evaluate the query: join, filter, project, DISTINCT, sort."""
    rows = project_solutions(store, query)
    if query.distinct:
        seen = set()
        unique = []
        for row in rows:
            if row not in seen:
                seen.add(row)
                unique.append(row)
        rows = unique

    var_index = {v.name: i for i, v in enumerate(query.projection)}
    binding_cache = {}
    if any(k.variable.name not in var_index for k in query.order_keys):
        # Order key not projected: re-derive full bindings to sort on it.
        full = [b for b in _solutions(store, query.patterns)
                if _passes(b, query.filters)]
        for b in full:
            key = tuple(b[v.name] for v in query.projection)
            binding_cache.setdefault(key, b)

    def order_term(row, key: OrderKey):
        if key.variable.name in var_index:
            return row[var_index[key.variable.name]]
        return binding_cache.get(row, {}).get(key.variable.name)

    def compare(row_a, row_b) -> int:
        for key in query.order_keys:
            ta, tb = order_term(row_a, key), order_term(row_b, key)
            if ta is None and tb is None:
                continue
            if ta is None:  # unbound sorts last regardless of direction
                return 1
            if tb is None:
                return -1
            c = _compare_terms(ta, tb)
            if c:
                return -c if key.descending else c
        for ta, tb in zip(row_a, row_b):  # deterministic tie-break
            ka, kb = term_key(ta), term_key(tb)
            if ka != kb:
                return -1 if ka < kb else 1
        return 0

    rows.sort(key=cmp_to_key(compare))
    return ResultTable(header=list(query.projection), rows=rows)


# --- presentation ------------------------------------------------------------

def render_term(term: Term, compact: bool = False) -> str:
    if isinstance(term, Iri):
        return term.local if compact else term.written
    return term.lexical if compact else term.written


def format_results(table: ResultTable, mode: str = "table") -> str:
    """Render a result table; "table" is fixed-width, "tsv" is machine-readable."""
    header = [f"?{v.name}" for v in table.header]
    if mode == "tsv":
        lines = ["\t".join(header)]
        lines += ["\t".join(render_term(t) for t in row) for row in table.rows]
        return "\n".join(lines) + "\n"
    cells = [header] + [[render_term(t, compact=True) for t in row]
                        for row in table.rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = []
    for i, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
