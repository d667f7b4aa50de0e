"""Graph query language over dependency graphs.

Implements a small matching-only subset of the Grew treebank query
language: one ``pattern { ... }`` block followed by zero or more
``without { ... }`` blocks. Clauses are node constraints
(``V [upos="VERB", Case=Nom];``) or labeled edges
(``V -[nsubj]-> SUBJ;``). A pattern binding is kept only if no without
block can be satisfied by any injective extension of it
(negation-as-failure; new variables inside a without block are
existentially quantified).

Deprel matching is exact on the full label by default, so ``nsubj`` does
not match ``nsubj:pass``; pass ``subtype_match=True`` to let a bare label
match any of its subtypes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .conllu import DepGraph, Token, Treebank
from .errors import ContractError

_KEYWORDS = ("pattern", "without")


class QueryParseError(ContractError):
    """Syntactically malformed query text."""

    def __init__(self, message: str, line: int, col: int):
        self.line = line
        self.col = col
        super().__init__(f"{message} (line {line}, column {col})")


class QuerySemanticError(ContractError):
    """Well-formed syntax with inconsistent variable usage."""


@dataclass(frozen=True)
class NodeConstraint:
    var: str
    clauses: tuple[tuple[str, str], ...]  # (key, exact value); key "upos" or a feature name


@dataclass(frozen=True)
class EdgeConstraint:
    src: str
    label: str
    dst: str


@dataclass(frozen=True)
class ClauseBlock:
    kind: str  # "pattern" | "without"
    nodes: tuple[NodeConstraint, ...]
    edges: tuple[EdgeConstraint, ...]
    vars: tuple[str, ...]  # first-appearance order, node clauses then edge-introduced


@dataclass(frozen=True)
class QueryProgram:
    pattern: ClauseBlock
    withouts: tuple[ClauseBlock, ...]
    source: str = ""


@dataclass(frozen=True)
class Match:
    sent_id: str
    binding: dict[str, int] = field(hash=False, default_factory=dict)

    def key(self, var_order: tuple[str, ...]) -> tuple[int, ...]:
        return tuple(self.binding[v] for v in var_order)


# --- lexer ---------------------------------------------------------------

_SINGLE = {"{": "LBRACE", "}": "RBRACE", "[": "LBRACKET", "]": "RBRACKET",
           ",": "COMMA", ";": "SEMI", "=": "EQUALS", ":": "COLON"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: str
    line: int
    col: int


def _lex(src: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col = 1, 1
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith("//", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        if src.startswith("->", i):
            toks.append(_Tok("ARROW", "->", line, col))
            i += 2
            col += 2
            continue
        if ch == "-":
            toks.append(_Tok("MINUS", "-", line, col))
            i += 1
            col += 1
            continue
        if ch in _SINGLE:
            toks.append(_Tok(_SINGLE[ch], ch, line, col))
            i += 1
            col += 1
            continue
        if ch == '"':
            j = i + 1
            while j < n and src[j] not in '"\n':
                j += 1
            if j >= n or src[j] != '"':
                raise QueryParseError("unterminated string literal", line, col)
            toks.append(_Tok("STRING", src[i + 1:j], line, col))
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(_Tok("IDENT", src[i:j], line, col))
            col += j - i
            i = j
            continue
        raise QueryParseError(f"unexpected character {ch!r}", line, col)
    toks.append(_Tok("EOF", "", line, col))
    return toks


# --- parser --------------------------------------------------------------

class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def take(self, kind: str, what: str | None = None) -> _Tok:
        tok = self.toks[self.pos]
        if tok.kind != kind:
            expected = what or kind
            raise QueryParseError(
                f"expected {expected}, found {tok.value!r}" if tok.value else f"expected {expected}",
                tok.line, tok.col,
            )
        self.pos += 1
        return tok

    def parse_program(self, source: str) -> QueryProgram:
        head = self.take("IDENT", "'pattern'")
        if head.value != "pattern":
            raise QueryParseError("query must start with a pattern block", head.line, head.col)
        pattern = self.parse_block("pattern")
        withouts = []
        while self.peek().kind == "IDENT":
            kw = self.take("IDENT", "'without'")
            if kw.value != "without":
                raise QueryParseError(f"expected 'without', found {kw.value!r}", kw.line, kw.col)
            withouts.append(self.parse_block("without"))
        self.take("EOF", "end of query")

        if not pattern.vars:
            raise QuerySemanticError("pattern block declares no variables")
        declared = {nc.var for nc in pattern.nodes}
        for e in pattern.edges:
            for v in (e.src, e.dst):
                if v not in declared:
                    raise QuerySemanticError(
                        f"pattern edge references undeclared variable {v!r}"
                    )
        return QueryProgram(pattern=pattern, withouts=tuple(withouts), source=source)

    def parse_block(self, kind: str) -> ClauseBlock:
        self.take("LBRACE", "'{'")
        nodes: list[NodeConstraint] = []
        edges: list[EdgeConstraint] = []
        order: list[str] = []
        node_vars: set[str] = set()
        while self.peek().kind != "RBRACE":
            var_tok = self.take("IDENT", "a variable name")
            var = var_tok.value
            nxt = self.peek()
            if nxt.kind == "LBRACKET":
                if var in node_vars:
                    raise QuerySemanticError(
                        f"variable {var!r} has two node clauses in one {kind} block"
                    )
                node_vars.add(var)
                nodes.append(NodeConstraint(var, self.parse_constraints()))
            elif nxt.kind == "MINUS":
                edges.append(self.parse_edge(var, var_tok))
            else:
                raise QueryParseError(
                    f"expected '[' or '-[' after variable {var!r}", nxt.line, nxt.col
                )
            if var not in order:
                order.append(var)
            last = edges[-1].dst if nxt.kind == "MINUS" else None
            if last is not None and last not in order:
                order.append(last)
            self.take("SEMI", "';'")
        self.take("RBRACE", "'}'")
        return ClauseBlock(kind=kind, nodes=tuple(nodes), edges=tuple(edges), vars=tuple(order))

    def parse_constraints(self) -> tuple[tuple[str, str], ...]:
        self.take("LBRACKET", "'['")
        clauses: list[tuple[str, str]] = []
        while self.peek().kind != "RBRACKET":
            key = self.take("IDENT", "a feature name").value
            self.take("EQUALS", "'='")
            val_tok = self.peek()
            if val_tok.kind in ("STRING", "IDENT"):
                self.pos += 1
                clauses.append((key, val_tok.value))
            else:
                raise QueryParseError("expected a value", val_tok.line, val_tok.col)
            if self.peek().kind == "COMMA":
                self.pos += 1
        self.take("RBRACKET", "']'")
        return tuple(clauses)

    def parse_edge(self, src: str, src_tok: _Tok) -> EdgeConstraint:
        self.take("MINUS", "'-['")
        self.take("LBRACKET", "'-['")
        parts = [self.take("IDENT", "a relation label").value]
        while self.peek().kind == "COLON":
            self.pos += 1
            parts.append(self.take("IDENT", "a relation subtype").value)
        self.take("RBRACKET", "']->'")
        self.take("ARROW", "']->'")
        dst = self.take("IDENT", "a variable name").value
        if dst == src:
            raise QuerySemanticError(f"edge from {src!r} to itself is not allowed")
        return EdgeConstraint(src=src, label=":".join(parts), dst=dst)


def parse_query(source: str) -> QueryProgram:
    """Parse query text into a QueryProgram AST."""
    return _Parser(_lex(source)).parse_program(source)


# --- matcher -------------------------------------------------------------

def _deprel_matches(query_label: str, token_deprel: str, subtype_match: bool) -> bool:
    if token_deprel == query_label:
        return True
    if subtype_match and ":" not in query_label:
        return token_deprel.split(":", 1)[0] == query_label
    return False


def _node_satisfies(tok: Token, clauses: tuple[tuple[str, str], ...]) -> bool:
    for key, value in clauses:
        got = tok.upos if key == "upos" else tok.feats.get(key)
        if got != value:
            return False
    return True


class _GraphIndex:
    """Per-graph edge lookup shared by pattern and without evaluation."""

    def __init__(self, graph: DepGraph, subtype_match: bool):
        self.graph = graph
        self.subtype_match = subtype_match
        self.by_id = {t.id: t for t in graph.tokens}
        self.out: dict[int, list[tuple[str, int]]] = {}
        for head, deprel, dep in graph.edges:
            self.out.setdefault(head, []).append((deprel, dep))

    def has_edge(self, src_id: int, label: str, dst_id: int) -> bool:
        for deprel, dep in self.out.get(src_id, ()):
            if dep == dst_id and _deprel_matches(label, deprel, self.subtype_match):
                return True
        return False


def _solve(
    index: _GraphIndex,
    variables: tuple[str, ...],
    node_clauses: dict[str, tuple[tuple[str, str], ...]],
    edges: tuple[EdgeConstraint, ...],
    fixed: dict[str, int],
    find_all: bool,
    excluded: frozenset[int] = frozenset(),
) -> list[dict[str, int]]:
    """Backtracking search for injective assignments extending ``fixed``.

    Variables already in ``fixed`` must still satisfy their node clauses.
    ``excluded`` holds token ids free variables may not take (tokens bound
    by an enclosing pattern). With find_all=False, stops at the first
    complete assignment.
    """
    tokens = index.graph.tokens
    for var, tid in fixed.items():
        if not _node_satisfies(index.by_id[tid], node_clauses.get(var, ())):
            return []

    free = [v for v in variables if v not in fixed]
    candidates: dict[str, list[int]] = {}
    for v in free:
        cands = [t.id for t in tokens if _node_satisfies(t, node_clauses.get(v, ()))]
        if not cands:
            return []
        candidates[v] = cands
    free.sort(key=lambda v: len(candidates[v]))

    results: list[dict[str, int]] = []
    binding = dict(fixed)
    used = set(fixed.values()) | set(excluded)

    def edges_ok() -> bool:
        for e in edges:
            if e.src in binding and e.dst in binding:
                if not index.has_edge(binding[e.src], e.label, binding[e.dst]):
                    return False
        return True

    def backtrack(i: int) -> bool:
        if i == len(free):
            results.append(dict(binding))
            return not find_all
        var = free[i]
        for tid in candidates[var]:
            if tid in used:
                continue
            binding[var] = tid
            used.add(tid)
            ok = all(
                index.has_edge(binding[e.src], e.label, binding[e.dst])
                for e in edges
                if (e.src == var or e.dst == var) and e.src in binding and e.dst in binding
            )
            if ok and backtrack(i + 1):
                return True
            used.discard(tid)
            del binding[var]
        return False

    if not free:
        if edges_ok():
            results.append(dict(binding))
        return results

    if not edges_ok():
        return []
    backtrack(0)
    return results


def _without_satisfiable(index: _GraphIndex, block: ClauseBlock, bound: dict[str, int]) -> bool:
    node_clauses = {nc.var: nc.clauses for nc in block.nodes}
    fixed = {v: bound[v] for v in block.vars if v in bound}
    found = _solve(
        index, block.vars, node_clauses, block.edges, fixed,
        find_all=False, excluded=frozenset(bound.values()),
    )
    return bool(found)


def match_graph(q: QueryProgram, g: DepGraph, subtype_match: bool = False) -> list[Match]:
    """All injective pattern assignments not excluded by any without block.

    Deterministic: results are ordered by the token ids bound to the
    pattern variables in declaration order.
    """
    index = _GraphIndex(g, subtype_match)
    node_clauses = {nc.var: nc.clauses for nc in q.pattern.nodes}
    assignments = _solve(
        index, q.pattern.vars, node_clauses, q.pattern.edges, fixed={}, find_all=True
    )
    kept = [
        b for b in assignments
        if not any(_without_satisfiable(index, w, b) for w in q.withouts)
    ]
    matches = [Match(sent_id=g.sent_id, binding=b) for b in kept]
    matches.sort(key=lambda m: m.key(q.pattern.vars))
    return matches


def match_treebank(q: QueryProgram, tb: Treebank, subtype_match: bool = False) -> list[Match]:
    """Concatenation of match_graph over the treebank in sentence order."""
    out: list[Match] = []
    for g in tb.graphs:
        out.extend(match_graph(q, g, subtype_match=subtype_match))
    return out
