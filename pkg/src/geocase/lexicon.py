"""Case-form lexicon extracted from treebank annotations.

Collects, for every noun lemma and number, the attested surface forms of
the three argument-structure cases (nominative, ergative, dative), merges
a human-supplied supplement file for the gaps, and exposes case
frequencies for the built-in reference scorer. Annotation noise is
resolved by majority vote over attestation counts, ties by first
occurrence; both are recorded so nothing is cleaned silently.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field, replace

from .conllu import Treebank, count_feature
from .errors import ContractError

CASES = ("Nom", "Erg", "Dat")
NUMBERS = ("Sing", "Plur")

PROV_TREEBANK = "treebank"
PROV_SUPPLEMENT = "supplement"


class SupplementError(ContractError):
    """Malformed supplement file."""

    def __init__(self, message: str, row_no: int | None = None):
        self.row_no = row_no
        suffix = f" (row {row_no})" if row_no is not None else ""
        super().__init__(f"{message}{suffix}")


@dataclass(frozen=True)
class CaseParadigm:
    """Surface forms of one (lemma, number) across the three cases."""

    lemma: str
    number: str
    forms: dict[str, str]        # case -> surface form
    provenance: dict[str, str]   # case -> treebank | supplement

    @property
    def complete(self) -> bool:
        return all(c in self.forms for c in CASES)

    @property
    def syncretic(self) -> bool:
        return len(set(self.forms.values())) < len(self.forms)


@dataclass
class LexiconReport:
    skipped_missing_lemma: int = 0
    skipped_missing_number: int = 0
    ties: list[tuple[str, str, str, str, str]] = field(default_factory=list)
    # (lemma, number, case, chosen form, rejected form)
    conflicts: list[tuple[str, str, str, str, str]] = field(default_factory=list)
    # (lemma, number, case, kept form, rejected supplement form)


@dataclass
class Lexicon:
    paradigms: dict[tuple[str, str], CaseParadigm]
    report: LexiconReport = field(default_factory=LexiconReport)

    def get(self, lemma: str, number: str) -> CaseParadigm | None:
        return self.paradigms.get((lemma, number))

    def complete_paradigms(self) -> list[CaseParadigm]:
        return [p for p in self.paradigms.values() if p.complete]

    def __len__(self) -> int:
        return len(self.paradigms)


def build_lexicon(tb: Treebank, upos: tuple[str, ...] = ("NOUN",)) -> Lexicon:
    """Collect case paradigms from every eligible token in the treebank.

    Only tokens whose upos is listed, carrying a Case in {Nom, Erg, Dat}
    and a Number in {Sing, Plur}, contribute. Conflicting surface forms
    for one (lemma, number, case) are resolved by attestation count, ties
    by first occurrence; ties are recorded in the report.
    """
    report = LexiconReport()
    # (lemma, number, case) -> form -> [count, first occurrence index]
    seen: dict[tuple[str, str, str], dict[str, list[int]]] = {}
    position = 0
    for g in tb.graphs:
        for tok in g.tokens:
            position += 1
            if tok.upos not in upos:
                continue
            case = tok.feats.get("Case")
            if case not in CASES:
                continue
            if not tok.lemma or tok.lemma == "_":
                report.skipped_missing_lemma += 1
                continue
            number = tok.feats.get("Number")
            if number not in NUMBERS:
                report.skipped_missing_number += 1
                continue
            forms = seen.setdefault((tok.lemma, number, case), {})
            if tok.form in forms:
                forms[tok.form][0] += 1
            else:
                forms[tok.form] = [1, position]

    paradigms: dict[tuple[str, str], CaseParadigm] = {}
    for (lemma, number, case), forms in seen.items():
        ranked = sorted(forms.items(), key=lambda kv: (-kv[1][0], kv[1][1]))
        winner = ranked[0][0]
        for other, (count, _) in ranked[1:]:
            if count == forms[winner][0]:
                report.ties.append((lemma, number, case, winner, other))
        key = (lemma, number)
        if key not in paradigms:
            paradigms[key] = CaseParadigm(lemma, number, {}, {})
        paradigms[key].forms[case] = winner
        paradigms[key].provenance[case] = PROV_TREEBANK

    return Lexicon(paradigms=paradigms, report=report)


@dataclass(frozen=True)
class SupplementRow:
    lemma: str
    number: str
    case: str
    form: str
    annotator: str
    row_no: int


def parse_supplement(lines) -> list[SupplementRow]:
    """Parse supplement TSV lines: lemma, number, case, form, annotator."""
    rows: list[SupplementRow] = []
    for row_no, raw in enumerate(lines, start=1):
        line = unicodedata.normalize("NFC", raw.rstrip("\n").rstrip("\r"))
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 5:
            raise SupplementError(f"expected 5 tab-separated columns, got {len(cols)}", row_no)
        lemma, number, case, form, annotator = (c.strip() for c in cols)
        if case not in CASES:
            raise SupplementError(f"unknown case label {case!r}", row_no)
        if number not in NUMBERS:
            raise SupplementError(f"unknown number label {number!r}", row_no)
        if not lemma or not form:
            raise SupplementError("empty lemma or form", row_no)
        rows.append(SupplementRow(lemma, number, case, form, annotator, row_no))
    return rows


def load_supplement(path: str) -> list[SupplementRow]:
    with open(path, encoding="utf-8") as fh:
        return parse_supplement(fh)


def merge_supplement(lex: Lexicon, rows: list[SupplementRow]) -> Lexicon:
    """Fill paradigm gaps from supplement rows; existing forms always win.

    A row whose (lemma, number, case) is already present with a different
    form is rejected and recorded as a conflict. Idempotent: merging the
    same rows twice changes nothing further.
    """
    paradigms = {
        key: replace(p, forms=dict(p.forms), provenance=dict(p.provenance))
        for key, p in lex.paradigms.items()
    }
    report = LexiconReport(
        skipped_missing_lemma=lex.report.skipped_missing_lemma,
        skipped_missing_number=lex.report.skipped_missing_number,
        ties=list(lex.report.ties),
        conflicts=list(lex.report.conflicts),
    )
    for row in rows:
        key = (row.lemma, row.number)
        if key not in paradigms:
            paradigms[key] = CaseParadigm(row.lemma, row.number, {}, {})
        p = paradigms[key]
        existing = p.forms.get(row.case)
        if existing is None:
            p.forms[row.case] = row.form
            p.provenance[row.case] = PROV_SUPPLEMENT
        elif existing != row.form:
            report.conflicts.append((row.lemma, row.number, row.case, existing, row.form))
    return Lexicon(paradigms=paradigms, report=report)


@dataclass(frozen=True)
class CaseFrequencyTable:
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def rel(self, case: str) -> float:
        return self.counts[case] / self.total


def case_frequencies(tb: Treebank) -> CaseFrequencyTable:
    """Treebank-wide counts and relative frequencies of the three cases."""
    counts = {case: count_feature(tb, "Case", case) for case in CASES}
    if sum(counts.values()) == 0:
        raise ContractError("case frequency table undefined: no Nom/Erg/Dat tokens found")
    return CaseFrequencyTable(counts=counts)
