"""CONLL-U parsing and serialization.

Reads UD v2 ten-column treebank text into an immutable in-memory model
(Token / DepGraph / Treebank) carrying the morphological features the
query engine and lexicon operate on. Multiword-token ranges and empty
nodes are preserved for round-tripping but excluded from the dependency
graph. All strings are NFC-normalized at parse time; Mkhedruli has no
upper/lower case, so no case folding is applied anywhere.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from io import StringIO
from typing import Iterable, Iterator, TextIO

from .errors import ContractError

N_COLUMNS = 10


class ConlluParseError(ContractError):
    """Malformed CONLL-U input, with line number and sentence context."""

    def __init__(self, message: str, line_no: int | None = None, sent_id: str | None = None):
        self.line_no = line_no
        self.sent_id = sent_id
        where = []
        if line_no is not None:
            where.append(f"line {line_no}")
        if sent_id:
            where.append(f"sentence {sent_id!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


def _nfc(s: str) -> str:
    return unicodedata.normalize("NFC", s)


def parse_feats(feats: str, line_no: int | None = None, sent_id: str | None = None) -> dict[str, str]:
    """Parse a `Name=Value|Name=Value` feature column into an ordered dict."""
    if feats == "_" or feats == "":
        return {}
    out: dict[str, str] = {}
    for pair in feats.split("|"):
        name, sep, value = pair.partition("=")
        if not sep or not name or not value:
            raise ConlluParseError(f"malformed feature pair {pair!r}", line_no, sent_id)
        if name in out:
            raise ConlluParseError(f"duplicate feature name {name!r}", line_no, sent_id)
        out[name] = value
    return out


def format_feats(feats: dict[str, str]) -> str:
    """Serialize features sorted case-insensitively, per CONLL-U convention."""
    if not feats:
        return "_"
    return "|".join(f"{k}={feats[k]}" for k in sorted(feats, key=str.lower))


@dataclass(frozen=True)
class Token:
    """One syntactic word of a sentence."""

    id: int
    form: str
    lemma: str
    upos: str
    xpos: str
    feats: dict[str, str]
    head: int
    deprel: str
    deps: str  # enhanced dependencies, stored verbatim, never queried
    misc: str

    def to_columns(self) -> list[str]:
        return [
            str(self.id), self.form, self.lemma, self.upos, self.xpos,
            format_feats(self.feats), str(self.head), self.deprel, self.deps, self.misc,
        ]


@dataclass(frozen=True)
class TokenRange:
    """A multiword-token line such as `3-4`; opaque to querying."""

    start: int
    end: int
    columns: tuple[str, ...]


@dataclass(frozen=True)
class EmptyNode:
    """An empty-node line such as `3.1`; opaque to querying."""

    anchor: int
    index: int
    columns: tuple[str, ...]


@dataclass
class DepGraph:
    """One sentence as a rooted labeled dependency graph."""

    sent_id: str
    text: str
    tokens: list[Token]
    comments: list[str] = field(default_factory=list)
    ranges: list[TokenRange] = field(default_factory=list)
    empty_nodes: list[EmptyNode] = field(default_factory=list)

    @property
    def edges(self) -> list[tuple[int, str, int]]:
        """(head_id, deprel, dependent_id) triples, one per non-root token."""
        return [(t.head, t.deprel, t.id) for t in self.tokens if t.head != 0]

    @property
    def root_ids(self) -> list[int]:
        return [t.id for t in self.tokens if t.head == 0]

    @property
    def multi_root(self) -> bool:
        return len(self.root_ids) != 1

    def token_by_id(self, tid: int) -> Token:
        return self.tokens[tid - 1]

    def dependents_of(self, tid: int) -> list[Token]:
        return [t for t in self.tokens if t.head == tid]


@dataclass
class Treebank:
    """An ordered collection of sentence graphs plus provenance."""

    graphs: list[DepGraph]
    source: str = ""
    renamed_sent_ids: list[str] = field(default_factory=list)
    skipped: list[tuple[str, int, str]] = field(default_factory=list)  # (sent_id, line_no, message)

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self) -> Iterator[DepGraph]:
        return iter(self.graphs)


def _parse_token_line(cols: list[str], line_no: int, sent_id: str) -> Token:
    tid_s = cols[0]
    try:
        tid = int(tid_s)
    except ValueError:
        raise ConlluParseError(f"non-integer token id {tid_s!r}", line_no, sent_id)
    if tid < 1:
        raise ConlluParseError(f"token id must be >= 1, got {tid}", line_no, sent_id)
    try:
        head = int(cols[6])
    except ValueError:
        raise ConlluParseError(f"non-integer head {cols[6]!r}", line_no, sent_id)
    if head < 0:
        raise ConlluParseError(f"negative head {head}", line_no, sent_id)
    if head == tid:
        raise ConlluParseError(f"token {tid} heads itself", line_no, sent_id)
    return Token(
        id=tid,
        form=cols[1],
        lemma=cols[2],
        upos=cols[3],
        xpos=cols[4],
        feats=parse_feats(cols[5], line_no, sent_id),
        head=head,
        deprel=cols[7],
        deps=cols[8],
        misc=cols[9],
    )


def _parse_sentence(lines: list[tuple[int, str]]) -> DepGraph:
    sent_id = ""
    text = ""
    comments: list[str] = []
    tokens: list[Token] = []
    ranges: list[TokenRange] = []
    empty_nodes: list[EmptyNode] = []

    for line_no, line in lines:
        if line.startswith("#"):
            comments.append(line)
            if line.startswith("# sent_id"):
                sent_id = line.split("=", 1)[1].strip() if "=" in line else ""
            elif line.startswith("# text ") or line.startswith("# text="):
                text = line.split("=", 1)[1].strip() if "=" in line else ""
            continue
        cols = line.split("\t")
        if len(cols) != N_COLUMNS:
            raise ConlluParseError(
                f"expected {N_COLUMNS} tab-separated columns, got {len(cols)}", line_no, sent_id
            )
        tid = cols[0]
        if "-" in tid:
            a, _, b = tid.partition("-")
            try:
                start, end = int(a), int(b)
            except ValueError:
                raise ConlluParseError(f"malformed token range id {tid!r}", line_no, sent_id)
            ranges.append(TokenRange(start, end, tuple(cols)))
        elif "." in tid:
            a, _, b = tid.partition(".")
            try:
                anchor, index = int(a), int(b)
            except ValueError:
                raise ConlluParseError(f"malformed empty node id {tid!r}", line_no, sent_id)
            empty_nodes.append(EmptyNode(anchor, index, tuple(cols)))
        else:
            tokens.append(_parse_token_line(cols, line_no, sent_id))

    seen_ids = set()
    for tok in tokens:
        if tok.id in seen_ids:
            raise ConlluParseError(f"duplicate token id {tok.id}", sent_id=sent_id)
        seen_ids.add(tok.id)
    for i, tok in enumerate(tokens, start=1):
        if tok.id != i:
            raise ConlluParseError(
                f"token ids must be 1..n in surface order, got {tok.id} at position {i}",
                sent_id=sent_id,
            )
    n = len(tokens)
    for tok in tokens:
        if tok.head > n:
            raise ConlluParseError(
                f"token {tok.id} has head {tok.head} outside sentence of length {n}",
                sent_id=sent_id,
            )

    return DepGraph(
        sent_id=sent_id, text=text, tokens=tokens,
        comments=comments, ranges=ranges, empty_nodes=empty_nodes,
    )


def _rename_duplicate(graph: DepGraph, new_id: str) -> None:
    graph.sent_id = new_id
    graph.comments = [
        f"# sent_id = {new_id}" if c.startswith("# sent_id") else c for c in graph.comments
    ]
    if not any(c.startswith("# sent_id") for c in graph.comments):
        graph.comments.insert(0, f"# sent_id = {new_id}")


def parse_conllu(
    stream: TextIO | Iterable[str],
    source: str = "<stream>",
    lenient: bool = False,
) -> Treebank:
    """Parse CONLL-U text into a Treebank.

    Strict by default: any malformed sentence raises ConlluParseError. With
    lenient=True, bad sentences are skipped and recorded in
    ``Treebank.skipped`` instead. Duplicate sent_ids are renamed with a
    deterministic ``#n`` suffix and recorded in ``renamed_sent_ids``.
    """
    graphs: list[DepGraph] = []
    skipped: list[tuple[str, int, str]] = []
    block: list[tuple[int, str]] = []

    def flush() -> None:
        if not block:
            return
        first_line = block[0][0]
        try:
            graphs.append(_parse_sentence(block))
        except ConlluParseError as err:
            if not lenient:
                raise
            skipped.append((err.sent_id or "", err.line_no or first_line, str(err)))
        block.clear()

    for line_no, raw in enumerate(stream, start=1):
        line = _nfc(raw.rstrip("\n").rstrip("\r"))
        if line.strip() == "":
            flush()
        else:
            block.append((line_no, line))
    flush()

    renamed: list[str] = []
    seen: dict[str, int] = {}
    for g in graphs:
        sid = g.sent_id
        if sid in seen:
            seen[sid] += 1
            _rename_duplicate(g, f"{sid}#{seen[sid]}")
            renamed.append(sid)
        else:
            seen[sid] = 1

    return Treebank(graphs=graphs, source=source, renamed_sent_ids=renamed, skipped=skipped)


def parse_conllu_text(text: str, source: str = "<string>", lenient: bool = False) -> Treebank:
    return parse_conllu(StringIO(text), source=source, lenient=lenient)


def parse_conllu_file(path: str, lenient: bool = False) -> Treebank:
    with open(path, encoding="utf-8") as fh:
        return parse_conllu(fh, source=str(path), lenient=lenient)


def serialize_graph(graph: DepGraph) -> str:
    lines: list[str] = list(graph.comments)
    ranges_by_start: dict[int, list[TokenRange]] = {}
    for r in graph.ranges:
        ranges_by_start.setdefault(r.start, []).append(r)
    empties_by_anchor: dict[int, list[EmptyNode]] = {}
    for e in graph.empty_nodes:
        empties_by_anchor.setdefault(e.anchor, []).append(e)
    for e in empties_by_anchor.get(0, []):
        lines.append("\t".join(e.columns))
    for tok in graph.tokens:
        for r in ranges_by_start.get(tok.id, []):
            lines.append("\t".join(r.columns))
        lines.append("\t".join(tok.to_columns()))
        for e in sorted(empties_by_anchor.get(tok.id, []), key=lambda e: e.index):
            lines.append("\t".join(e.columns))
    return "\n".join(lines) + "\n"


def serialize_conllu(tb: Treebank) -> str:
    """Serialize a Treebank so that re-parsing reproduces it field-for-field."""
    return "\n".join(serialize_graph(g) for g in tb.graphs)


def write_conllu(tb: Treebank, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_conllu(tb))


def count_feature(tb: Treebank, feature: str, value: str) -> int:
    """Number of tokens across the treebank carrying feature=value."""
    return sum(
        1 for g in tb.graphs for t in g.tokens if t.feats.get(feature) == value
    )
