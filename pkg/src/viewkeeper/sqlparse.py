"""Parser for the DDL and view subset.

Schema files hold ``CREATE TABLE`` statements::

    CREATE TABLE Student (
      Roll_no INTEGER,
      Name TEXT(16),
      Dep_no INTEGER,
      PRIMARY KEY (Roll_no),
      FOREIGN KEY (Dep_no) REFERENCES Department(Dep_no)
    );

View files hold ``CREATE VIEW name AS SELECT ... FROM ... WHERE ...`` where the
WHERE clause is a conjunction of FK equijoins and single-relation conditions.
Unquoted values such as ``2010-2014`` are read as text. ``--`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal

from . import predicates as P
from .catalog import (
    AttributeDef,
    Catalog,
    ForeignKey,
    JoinEdge,
    RelationDef,
    ViewDef,
    make_catalog,
    validate_view,
)
from .errors import DuplicateNameError, ParseError, ViewError

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*)
  | (?P<bare>\d+(?:-\d+)+)
  | (?P<number>\d+\.\d+|\d+)
  | (?P<string>'(?:[^']|'')*')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*|"[^"]+")
  | (?P<op><>|!=|<=|>=|[=<>])
  | (?P<punct>[(),;.*])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int

    @property
    def value(self) -> object:
        if self.kind == "number":
            return Decimal(self.text) if "." in self.text else int(self.text)
        if self.kind == "string":
            return self.text[1:-1].replace("''", "'")
        if self.kind == "bare":
            return self.text
        if self.kind == "ident" and self.text.startswith('"'):
            return self.text[1:-1]
        return self.text


def tokenize(text: str, source: str | None = None) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col, source)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            if kind == "op" and chunk == "!=":
                chunk = "<>"
            tokens.append(Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, source: str | None):
        self.source = source
        self.tokens = tokenize(text, source)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        found = tok.text or "end of input"
        return ParseError(f"{message} (found {found!r})", tok.line, tok.column, self.source)

    def at_keyword(self, *words: str) -> bool:
        return self.tok.kind == "ident" and self.tok.text.upper() in words

    def keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.error(f"expected {word}")
        return self.advance()

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "op") and self.tok.text == text

    def punct(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected {what}")
        return self.advance()

    def int_literal(self) -> int:
        tok = self.tok
        if tok.kind != "number" or "." in tok.text:
            raise self.error("expected integer")
        self.advance()
        return int(tok.text)

    def ident_list(self) -> list[str]:
        self.punct("(")
        names = [self.ident().value]
        while self.at(","):
            self.advance()
            names.append(self.ident().value)
        self.punct(")")
        return names

    def skip_semicolons(self):
        while self.at(";"):
            self.advance()


# ---------------------------------------------------------------------------
# CREATE TABLE
# ---------------------------------------------------------------------------

_TYPES = {
    "INTEGER": "integer",
    "INT": "integer",
    "DECIMAL": "decimal",
    "NUMERIC": "decimal",
    "TEXT": "text",
    "VARCHAR": "text",
    "CHAR": "text",
}


def parse_schema(text: str, source: str | None = None) -> Catalog:
    """Parse DDL text into a validated :class:`Catalog`."""
    p = _Parser(text, source)
    relations: list[RelationDef] = []
    seen: set[str] = set()
    p.skip_semicolons()
    while p.tok.kind != "eof":
        start = p.tok
        rel = _create_table(p)
        if rel.name.lower() in seen:
            raise DuplicateNameError(
                f"{_where(source, start)}duplicate relation {rel.name!r}"
            )
        seen.add(rel.name.lower())
        relations.append(rel)
        p.skip_semicolons()
    return make_catalog(relations)


def _where(source: str | None, tok: Token) -> str:
    return f"{source + ':' if source else ''}{tok.line}:{tok.column}: "


def _create_table(p: _Parser) -> RelationDef:
    p.keyword("CREATE")
    p.keyword("TABLE")
    name = p.ident("table name").value
    p.punct("(")
    attrs: list[AttributeDef] = []
    pk: list[str] = []
    fks: list[ForeignKey] = []
    while True:
        if p.at(")"):
            break
        if p.at_keyword("PRIMARY"):
            p.advance()
            p.keyword("KEY")
            if pk:
                raise p.error(f"{name}: second primary key")
            pk = p.ident_list()
        elif p.at_keyword("FOREIGN"):
            p.advance()
            p.keyword("KEY")
            local = p.ident_list()
            fks.append(_references(p, tuple(local)))
        else:
            tok = p.ident("column name")
            col = tok.value
            if any(a.name.lower() == col.lower() for a in attrs):
                raise DuplicateNameError(
                    f"{_where(p.source, tok)}duplicate attribute {col!r} in {name}"
                )
            attrs.append(_column_type(p, col))
            while p.at_keyword("PRIMARY", "REFERENCES", "NOT"):
                if p.at_keyword("PRIMARY"):
                    p.advance()
                    p.keyword("KEY")
                    if pk:
                        raise p.error(f"{name}: second primary key")
                    pk = [col]
                elif p.at_keyword("NOT"):
                    p.advance()
                    p.keyword("NULL")
                else:
                    fks.append(_references(p, (col,)))
        if not p.at(","):
            break
        p.advance()
    p.punct(")")
    if not pk:
        raise p.error(f"table {name} declares no PRIMARY KEY")
    return RelationDef(name, tuple(attrs), tuple(pk), tuple(fks))


def _column_type(p: _Parser, col: str) -> AttributeDef:
    tok = p.ident("column type")
    domain = _TYPES.get(tok.text.upper())
    if domain is None:
        raise p.error(f"unknown type {tok.text!r}", tok)
    length = None
    if domain == "text":
        p.punct("(")
        length = p.int_literal()
        p.punct(")")
    elif domain == "decimal" and p.at("("):
        # precision/scale are accepted and ignored; width is fixed at 8 bytes
        p.advance()
        p.int_literal()
        if p.at(","):
            p.advance()
            p.int_literal()
        p.punct(")")
    return AttributeDef(col, domain, length)


def _references(p: _Parser, local: tuple[str, ...]) -> ForeignKey:
    p.keyword("REFERENCES")
    target = p.ident("referenced table").value
    remote: tuple[str, ...] = ()
    if p.at("("):
        remote = tuple(p.ident_list())
    return ForeignKey(local, target, remote)


# ---------------------------------------------------------------------------
# CREATE VIEW
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Attr:
    qualifier: str | None
    name: str
    tok: Token


@dataclass(frozen=True)
class _Lit:
    value: object
    tok: Token


@dataclass(frozen=True)
class _Cmp:
    left: _Attr | _Lit
    op: str
    right: _Attr | _Lit
    tok: Token


@dataclass(frozen=True)
class _Bool:
    kind: str  # "and" | "or"
    terms: tuple


@dataclass(frozen=True)
class ViewSyntax:
    """A view as written, before names are resolved against a catalog."""

    name: str
    select: tuple[_Attr, ...]
    tables: tuple[tuple[str, str | None, Token], ...]
    where: object | None


def parse_view_syntax(text: str, source: str | None = None) -> list[ViewSyntax]:
    """Syntax-only pass over one or more ``CREATE VIEW`` statements."""
    p = _Parser(text, source)
    views = []
    p.skip_semicolons()
    while p.tok.kind != "eof":
        views.append(_create_view(p))
        p.skip_semicolons()
    return views


def _create_view(p: _Parser) -> ViewSyntax:
    p.keyword("CREATE")
    p.keyword("VIEW")
    name = p.ident("view name").value
    p.keyword("AS")
    p.keyword("SELECT")
    select = [_attr_ref(p)]
    while p.at(","):
        p.advance()
        if p.at_keyword("FROM"):  # tolerate a trailing comma before FROM
            break
        select.append(_attr_ref(p))
    p.keyword("FROM")
    tables = [_table_ref(p)]
    while p.at(","):
        p.advance()
        tables.append(_table_ref(p))
    where = None
    if p.at_keyword("WHERE"):
        p.advance()
        where = _or_expr(p)
    if not (p.at(";") or p.tok.kind == "eof" or p.at_keyword("CREATE")):
        raise p.error("expected end of view")
    return ViewSyntax(name, tuple(select), tuple(tables), where)


def _attr_ref(p: _Parser) -> _Attr:
    tok = p.ident("attribute")
    if p.at("."):
        p.advance()
        attr = p.ident("attribute")
        return _Attr(tok.value, attr.value, tok)
    return _Attr(None, tok.value, tok)


def _table_ref(p: _Parser) -> tuple[str, str | None, Token]:
    tok = p.ident("relation name")
    alias = None
    if p.at_keyword("AS"):
        p.advance()
        alias = p.ident("alias").value
    elif p.tok.kind == "ident" and not p.at_keyword("WHERE", "CREATE"):
        alias = p.advance().value
    return tok.value, alias, tok


def _or_expr(p: _Parser):
    terms = [_and_expr(p)]
    while p.at_keyword("OR"):
        p.advance()
        terms.append(_and_expr(p))
    return terms[0] if len(terms) == 1 else _Bool("or", tuple(terms))


def _and_expr(p: _Parser):
    terms = [_atom(p)]
    while p.at_keyword("AND"):
        p.advance()
        terms.append(_atom(p))
    return terms[0] if len(terms) == 1 else _Bool("and", tuple(terms))


def _atom(p: _Parser):
    if p.at("("):
        p.advance()
        inner = _or_expr(p)
        p.punct(")")
        return inner
    start = p.tok
    left = _operand(p)
    if p.tok.kind != "op":
        raise p.error("expected comparison operator")
    op = p.advance().text
    right = _operand(p)
    return _Cmp(left, op, right, start)


def _operand(p: _Parser):
    tok = p.tok
    if tok.kind in ("number", "string", "bare"):
        p.advance()
        return _Lit(tok.value, tok)
    if tok.kind == "ident":
        return _attr_ref(p)
    raise p.error("expected attribute or literal")


def parse_view(text: str, catalog: Catalog, source: str | None = None) -> ViewDef:
    """Parse and resolve a single view definition against ``catalog``."""
    syntax = parse_view_syntax(text, source)
    if len(syntax) != 1:
        raise ViewError(f"expected exactly one CREATE VIEW, found {len(syntax)}")
    return resolve_view(syntax[0], catalog, source)


def parse_views(text: str, catalog: Catalog, source: str | None = None) -> list[ViewDef]:
    return [resolve_view(s, catalog, source) for s in parse_view_syntax(text, source)]


class _Resolver:
    def __init__(self, syntax: ViewSyntax, catalog: Catalog, source: str | None):
        self.catalog = catalog
        self.source = source
        self.view = syntax.name
        self.relations: list[str] = []
        self.scope: dict[str, str] = {}
        for name, alias, tok in syntax.tables:
            rel = catalog.find(name)
            if rel is None:
                raise self.fail(f"unknown relation {name!r}", tok)
            if rel.name in self.relations:
                raise self.fail(f"relation {rel.name} listed twice", tok)
            self.relations.append(rel.name)
            for key in {rel.name.lower(), (alias or rel.name).lower()}:
                if key in self.scope and self.scope[key] != rel.name:
                    raise self.fail(f"ambiguous name {key!r}", tok)
                self.scope[key] = rel.name

    def fail(self, message: str, tok: Token) -> ViewError:
        return ViewError(f"{_where(self.source, tok)}view {self.view}: {message}")

    def attr(self, ref: _Attr) -> tuple[str, str]:
        if ref.qualifier is not None:
            rel = self.scope.get(ref.qualifier.lower())
            if rel is None:
                raise self.fail(f"unknown relation or alias {ref.qualifier!r}", ref.tok)
            found = self.catalog.relations[rel].find(ref.name)
            if found is None:
                raise self.fail(f"attribute not found: {ref.qualifier}.{ref.name}", ref.tok)
            return rel, found.name
        hits = [
            (rel, self.catalog.relations[rel].find(ref.name))
            for rel in self.relations
            if self.catalog.relations[rel].find(ref.name) is not None
        ]
        if not hits:
            raise self.fail(f"attribute not found: {ref.name}", ref.tok)
        if len(hits) > 1:
            raise self.fail(f"ambiguous attribute {ref.name!r}", ref.tok)
        return hits[0][0], hits[0][1].name

    def literal(self, rel: str, attr: str, lit: _Lit) -> object:
        adef = self.catalog.relations[rel].attribute(attr)
        value = lit.value
        ok = (
            (adef.domain == "text" and lit.tok.kind in ("string", "bare"))
            or (adef.domain == "integer" and isinstance(value, int))
            or (adef.domain == "decimal" and lit.tok.kind == "number")
        )
        if not ok:
            raise self.fail(f"{lit.tok.text} is not comparable with {rel}.{attr}", lit.tok)
        return Decimal(value) if adef.domain == "decimal" else value

    def local(self, node) -> tuple[str, P.Predicate]:
        """Resolve a condition that must mention exactly one relation."""
        if isinstance(node, _Bool):
            parts = [self.local(t) for t in node.terms]
            rels = {r for r, _ in parts}
            if len(rels) != 1:
                raise self.fail("a condition combining relations must be an equijoin", _first_tok(node))
            terms = tuple(p for _, p in parts)
            return rels.pop(), (P.And(terms) if node.kind == "and" else P.Or(terms))
        left, op, right = node.left, node.op, node.right
        if isinstance(left, _Lit) and isinstance(right, _Attr):
            left, right, op = right, left, P.FLIPPED[op]
        if isinstance(left, _Lit):
            raise self.fail("comparison needs an attribute", node.tok)
        if isinstance(right, _Attr):
            raise self.fail("attribute-to-attribute comparisons must be FK equijoins", node.tok)
        rel, attr = self.attr(left)
        return rel, P.Comparison(attr, op, self.literal(rel, attr, right))


def _first_tok(node) -> Token:
    while isinstance(node, _Bool):
        node = node.terms[0]
    return node.tok


def _conjuncts(node) -> list:
    if node is None:
        return []
    if isinstance(node, _Bool) and node.kind == "and":
        out = []
        for t in node.terms:
            out.extend(_conjuncts(t))
        return out
    return [node]


def resolve_view(syntax: ViewSyntax, catalog: Catalog, source: str | None = None) -> ViewDef:
    """Resolve names, split WHERE into joins and local predicates, validate."""
    r = _Resolver(syntax, catalog, source)
    output = []
    for ref in syntax.select:
        pair = r.attr(ref)
        if pair in output:
            raise r.fail(f"duplicate output attribute {pair[0]}.{pair[1]}", ref.tok)
        output.append(pair)

    equalities: dict[frozenset, list[tuple[tuple[str, str], tuple[str, str], Token]]] = {}
    locals_: dict[str, list[P.Predicate]] = {}
    for node in _conjuncts(syntax.where):
        if (
            isinstance(node, _Cmp)
            and isinstance(node.left, _Attr)
            and isinstance(node.right, _Attr)
        ):
            a, b = r.attr(node.left), r.attr(node.right)
            if node.op != "=" or a[0] == b[0]:
                raise r.fail("join does not match declared FK (only FK equijoins allowed)", node.tok)
            equalities.setdefault(frozenset((a[0], b[0])), []).append((a, b, node.tok))
            continue
        rel, pred = r.local(node)
        locals_.setdefault(rel, []).append(pred)

    joins = []
    for pair in sorted(equalities, key=sorted):
        joins.extend(_match_fks(r, catalog, equalities[pair]))

    local_predicates = {rel: P.conjoin(preds) for rel, preds in locals_.items()}
    view = ViewDef(
        syntax.name,
        tuple(r.relations),
        tuple(joins),
        {rel: local_predicates[rel] for rel in r.relations if rel in local_predicates},
        tuple(output),
    )
    validate_view(catalog, view)
    return view


def _match_fks(r: _Resolver, catalog: Catalog, eqs) -> list[JoinEdge]:
    """Cover a group of equalities between two relations with declared FKs."""
    remaining = {}
    for a, b, tok in eqs:
        remaining.setdefault(frozenset((a, b)), tok)
    (x, _), (y, _) = eqs[0][0], eqs[0][1]
    edges = []
    for child, parent in ((x, y), (y, x)):
        for fk in catalog.relations[child].foreign_keys:
            if fk.target != parent:
                continue
            needed = [frozenset(((child, la), (parent, ra))) for la, ra in fk.pairs]
            if all(n in remaining for n in needed):
                for n in needed:
                    del remaining[n]
                edges.append(JoinEdge(child, parent, fk))
    if remaining:
        tok = min(remaining.values(), key=lambda t: (t.line, t.column))
        raise r.fail("join does not match declared FK", tok)
    return edges
