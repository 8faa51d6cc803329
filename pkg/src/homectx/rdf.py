"""RDF terms, triples, an indexed in-memory store, and a small Turtle dialect.

The dialect is deliberately tiny: ``@prefix`` declarations, one
``subject predicate object .`` statement per dot, prefixed names, typed
literals (``"lex"^^xsd:type``) and ``#`` comments.  Two prefixes are built
in: the empty prefix for the home namespace and ``xsd:``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date as _date
from typing import Iterator, Union

HOME_NS = "http://smarthome.example/home#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"

BUILTIN_PREFIXES = {"": HOME_NS, "xsd": XSD_NS}


class ParseError(ValueError):
    """Syntax or datatype error, carrying a 1-based line/column position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Iri:
    """A resource name, split into namespace and local part."""

    namespace: str
    local: str

    def __post_init__(self):
        if not self.local:
            raise ValueError("IRI local name must be non-empty")

    @property
    def written(self) -> str:
        if self.namespace == HOME_NS:
            return f":{self.local}"
        if self.namespace == XSD_NS:
            return f"xsd:{self.local}"
        return f"<{self.namespace}{self.local}>"

    def __repr__(self):
        return self.written


def home(local: str) -> Iri:
    return Iri(HOME_NS, local)


def xsd(local: str) -> Iri:
    return Iri(XSD_NS, local)


_TIME_RE = re.compile(r"^\d{2}:\d{2}:\d{2}$")
_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


def _valid_double(lex: str) -> bool:
    try:
        v = float(lex)
    except ValueError:
        return False
    return v == v and v not in (float("inf"), float("-inf"))


def _valid_date(lex: str) -> bool:
    if not _DATE_RE.match(lex):
        return False
    try:
        _date.fromisoformat(lex)
    except ValueError:
        return False
    return True


def _valid_time(lex: str) -> bool:
    if not _TIME_RE.match(lex):
        return False
    h, m, s = (int(p) for p in lex.split(":"))
    return h < 24 and m < 60 and s < 60


# Only these literal datatypes are accepted; anything else is a parse error.
DATATYPE_VALIDATORS = {
    xsd("double"): _valid_double,
    xsd("boolean"): lambda lex: lex in ("true", "false"),
    xsd("string"): lambda lex: True,
    xsd("date"): _valid_date,
    xsd("time"): _valid_time,
    xsd("positiveInteger"): lambda lex: lex.isdigit() and int(lex) >= 1,
}


@dataclass(frozen=True)
class Literal:
    """A typed literal value; equality is structural on (lexical, datatype)."""

    lexical: str
    datatype: Iri

    def __post_init__(self):
        validator = DATATYPE_VALIDATORS.get(self.datatype)
        if validator is None:
            raise ValueError(f"unsupported literal datatype {self.datatype.written}")
        if not validator(self.lexical):
            raise ValueError(
                f"invalid lexical form {self.lexical!r} for {self.datatype.written}"
            )

    @property
    def written(self) -> str:
        return f'"{escape_string(self.lexical)}"^^{self.datatype.written}'

    def __repr__(self):
        return self.written


Term = Union[Iri, Literal]


def term_key(term: Term):
    """Total order over terms: IRIs first, then literals by (datatype, lexical)."""
    if isinstance(term, Iri):
        return (0, term.namespace, term.local, "")
    return (1, term.datatype.namespace, term.datatype.local, term.lexical)


@dataclass(frozen=True)
class Variable:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("variable name must be non-empty")

    def __repr__(self):
        return f"?{self.name}"


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term

    def __post_init__(self):
        if not isinstance(self.subject, Iri):
            raise ValueError("triple subject must be an IRI")
        if not isinstance(self.predicate, Iri):
            raise ValueError("triple predicate must be an IRI")
        if not isinstance(self.object, (Iri, Literal)):
            raise ValueError("triple object must be an IRI or literal")

    def sort_key(self):
        return (term_key(self.subject), term_key(self.predicate), term_key(self.object))


PatternTerm = Union[Iri, Literal, Variable]


@dataclass(frozen=True)
class TriplePattern:
    """A triple with variables allowed in any position (predicate included)."""

    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def __post_init__(self):
        if not isinstance(self.subject, (Iri, Variable)):
            raise ValueError("pattern subject must be an IRI or variable")
        if not isinstance(self.predicate, (Iri, Variable)):
            raise ValueError("pattern predicate must be an IRI or variable")
        if not isinstance(self.object, (Iri, Literal, Variable)):
            raise ValueError("pattern object must be a term or variable")

    def variables(self) -> set[Variable]:
        return {p for p in (self.subject, self.predicate, self.object)
                if isinstance(p, Variable)}


_EMPTY: frozenset = frozenset()


class TripleStore:
    """Set of triples with (S), (P), (O), (S,P) and (P,O) lookup indexes.

    Single-writer / multiple-reader: reads may run concurrently, but callers
    must serialize mutations externally (the ingest server does).
    """

    def __init__(self, triples=None):
        self._triples: set[Triple] = set()
        self._by_s: dict = {}
        self._by_p: dict = {}
        self._by_o: dict = {}
        self._by_sp: dict = {}
        self._by_po: dict = {}
        if triples:
            for t in triples:
                self.insert(t)

    def __len__(self):
        return len(self._triples)

    def __contains__(self, t: Triple):
        return t in self._triples

    def __iter__(self) -> Iterator[Triple]:
        return iter(sorted(self._triples, key=Triple.sort_key))

    def insert(self, t: Triple) -> bool:
        """Add a triple; returns True iff it was not already present."""
        if t in self._triples:
            return False
        self._triples.add(t)
        self._by_s.setdefault(t.subject, set()).add(t)
        self._by_p.setdefault(t.predicate, set()).add(t)
        self._by_o.setdefault(t.object, set()).add(t)
        self._by_sp.setdefault((t.subject, t.predicate), set()).add(t)
        self._by_po.setdefault((t.predicate, t.object), set()).add(t)
        return True

    def match(self, pattern: TriplePattern) -> list[Triple]:
        """All triples unifying with the pattern, in canonical order."""
        s = pattern.subject if isinstance(pattern.subject, Iri) else None
        p = pattern.predicate if isinstance(pattern.predicate, Iri) else None
        o = pattern.object if not isinstance(pattern.object, Variable) else None
        if s is not None and p is not None:
            candidates = self._by_sp.get((s, p), _EMPTY)
        elif p is not None and o is not None:
            candidates = self._by_po.get((p, o), _EMPTY)
        elif s is not None:
            candidates = self._by_s.get(s, _EMPTY)
        elif p is not None:
            candidates = self._by_p.get(p, _EMPTY)
        elif o is not None:
            candidates = self._by_o.get(o, _EMPTY)
        else:
            candidates = self._triples
        out = [t for t in candidates
               if (s is None or t.subject == s)
               and (p is None or t.predicate == p)
               and (o is None or t.object == o)]
        out.sort(key=Triple.sort_key)
        return out


# --- Turtle-subset lexer/parser ---------------------------------------------

_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}


def escape_string(s: str) -> str:
    return (s.replace("\\", "\\\\").replace('"', '\\"')
            .replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t"))


_PN_PREFIX_RE = re.compile(r"[A-Za-z][A-Za-z0-9_-]*")
_PN_LOCAL_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_-]*")


class _Lexer:
    """Shared character scanner for the data and query grammars."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.col)

    def _advance(self, n: int = 1):
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def skip_ws(self, comments: bool = True):
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c in " \t\r\n":
                self._advance()
            elif comments and c == "#":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self._advance()
            else:
                break

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, literal: str) -> bool:
        if self.text.startswith(literal, self.pos):
            self._advance(len(literal))
            return True
        return False

    def expect(self, literal: str):
        if not self.take(literal):
            raise self.error(f"expected {literal!r}")

    def read_regex(self, regex: re.Pattern) -> str | None:
        m = regex.match(self.text, self.pos)
        if not m:
            return None
        self._advance(len(m.group(0)))
        return m.group(0)

    def read_pname(self) -> tuple[str, str | None]:
        """Read ``prefix:local`` (local may be absent, for @prefix lines)."""
        prefix = self.read_regex(_PN_PREFIX_RE) or ""
        if not self.take(":"):
            raise self.error("expected prefixed name")
        local = self.read_regex(_PN_LOCAL_RE)
        return prefix, local

    def read_string(self) -> str:
        self.expect('"')
        out = []
        while True:
            c = self.peek()
            if not c or c == "\n":
                raise self.error("unterminated string literal")
            self._advance()
            if c == '"':
                return "".join(out)
            if c == "\\":
                esc = self.peek()
                if esc not in _ESCAPES:
                    raise self.error(f"unknown escape \\{esc}")
                self._advance()
                out.append(_ESCAPES[esc])
            else:
                out.append(c)

    def read_iriref(self) -> str:
        self.expect("<")
        end = self.text.find(">", self.pos)
        if end == -1:
            raise self.error("unterminated IRI reference")
        iri = self.text[self.pos:end]
        self._advance(end - self.pos + 1)
        return iri


def _resolve(lexer: _Lexer, prefixes: dict, prefix: str, local: str | None) -> Iri:
    if local is None:
        raise lexer.error("prefixed name is missing its local part")
    ns = prefixes.get(prefix)
    if ns is None:
        raise lexer.error(f"undeclared prefix {prefix + ':'!r}")
    return Iri(ns, local)


def _parse_term(lexer: _Lexer, prefixes: dict, allow_literal: bool) -> Term:
    lexer.skip_ws()
    line, col = lexer.line, lexer.col
    if lexer.peek() == '"':
        if not allow_literal:
            raise ParseError("literal not allowed here", line, col)
        lex = lexer.read_string()
        lexer.expect("^^")
        prefix, local = lexer.read_pname()
        dt = _resolve(lexer, prefixes, prefix, local)
        try:
            return Literal(lex, dt)
        except ValueError as exc:
            raise ParseError(str(exc), line, col) from None
    prefix, local = lexer.read_pname()
    return _resolve(lexer, prefixes, prefix, local)


def parse_data(text: str) -> list[Triple]:
    """Parse a Turtle-subset document into triples, in document order."""
    lexer = _Lexer(text)
    prefixes = dict(BUILTIN_PREFIXES)
    triples: list[Triple] = []
    while not lexer.at_end():
        if lexer.take("@prefix"):
            lexer.skip_ws()
            prefix, local = lexer.read_pname()
            if local is not None:
                raise lexer.error("prefix declaration must end with ':'")
            lexer.skip_ws()
            prefixes[prefix] = lexer.read_iriref()
            lexer.skip_ws()
            lexer.expect(".")
            continue
        line, col = lexer.line, lexer.col
        s = _parse_term(lexer, prefixes, allow_literal=False)
        p = _parse_term(lexer, prefixes, allow_literal=False)
        o = _parse_term(lexer, prefixes, allow_literal=True)
        lexer.skip_ws()
        lexer.expect(".")
        try:
            triples.append(Triple(s, p, o))
        except ValueError as exc:
            raise ParseError(str(exc), line, col) from None
    return triples


def serialize(store) -> str:
    """Canonical Turtle-subset text; parse_data(serialize(s)) == s as a set.

    ``store`` may be a TripleStore or any iterable of triples.
    """
    triples = sorted(store, key=Triple.sort_key)
    extra_ns = sorted({
        term.namespace
        for t in triples
        for term in (t.subject, t.predicate, t.object)
        if isinstance(term, Iri) and term.namespace not in (HOME_NS, XSD_NS)
    })
    labels = {HOME_NS: "", XSD_NS: "xsd"}
    lines = [f"@prefix : <{HOME_NS}> .", f"@prefix xsd: <{XSD_NS}> ."]
    for i, ns in enumerate(extra_ns, start=1):
        labels[ns] = f"ns{i}"
        lines.append(f"@prefix ns{i}: <{ns}> .")

    def written(term: Term) -> str:
        if isinstance(term, Iri):
            label = labels[term.namespace]
            return f"{label}:{term.local}"
        return f'"{escape_string(term.lexical)}"^^{written(term.datatype)}'

    for t in triples:
        lines.append(f"{written(t.subject)} {written(t.predicate)} {written(t.object)} .")
    return "\n".join(lines) + "\n"
