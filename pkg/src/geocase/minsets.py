"""Minimal-set test generation.

Turns query matches plus the case lexicon into the seven task datasets:
each test is a sentence with the tested noun replaced by a ``[TARGET]``
placeholder, three candidate forms of that noun (nominative, ergative,
dative; same lemma and number), and the case the context requires.
Substituting the correct candidate back into the context reproduces the
source sentence, so scorers always score real sentences rather than
mask-filling templates.
"""
from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field

from .conllu import DepGraph, Treebank
from .errors import ContractError, InternalError
from .lexicon import CASES, Lexicon
from .query import Match, QueryProgram, parse_query

PLACEHOLDER = "[TARGET]"

# candidate order inside a test record
CANDIDATE_ORDER = ("Nom", "Erg", "Dat")

# deprels whose dependents inflect in case agreement with their noun head;
# masking such a head would change more than one surface feature
AGREEING_DEPRELS = frozenset({"amod", "det", "nummod"})

TASK_IDS = (
    "intransitive-nom-subj",
    "transitive-nom-dat-subj",
    "transitive-nom-dat-obj",
    "transitive-erg-nom-subj",
    "transitive-erg-nom-obj",
    "transitive-dat-nom-subj",
    "transitive-dat-nom-obj",
)

_QUERY_INTRANSITIVE_NOM = """\
// Intransitive Nom
pattern {
    V [upos="VERB"];
    SUBJ [Case="Nom"];
    V -[nsubj]-> SUBJ;
}
without {
    V [upos="VERB"];
    V -[nsubj]-> SUBJ;
    V -[obj]-> OBJ;
}
"""

def _transitive_query(subj_case: str, obj_case: str) -> str:
    return (
        f"// Transitive {subj_case}-{obj_case}\n"
        "pattern {\n"
        '  V [upos="VERB"];\n'
        f'  SUBJ [Case="{subj_case}"];\n'
        f'  OBJ [Case="{obj_case}"];\n'
        "  V -[nsubj]-> SUBJ;\n"
        "  V -[obj]-> OBJ;\n"
        "}\n"
    )

CONSTRUCTION_QUERIES: dict[str, str] = {
    "intransitive-nom": _QUERY_INTRANSITIVE_NOM,
    "transitive-nom-dat": _transitive_query("Nom", "Dat"),
    "transitive-erg-nom": _transitive_query("Erg", "Nom"),
    "transitive-dat-nom": _transitive_query("Dat", "Nom"),
}


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    construction: str  # key into CONSTRUCTION_QUERIES
    query: QueryProgram
    tested_var: str    # SUBJ or OBJ
    gold_case: str
    target_count: int


def builtin_task_specs() -> list[TaskSpec]:
    """The seven built-in tasks: one intransitive, three transitive pairs."""
    queries = {name: parse_query(src) for name, src in CONSTRUCTION_QUERIES.items()}
    specs = [
        TaskSpec("intransitive-nom-subj", "intransitive-nom",
                 queries["intransitive-nom"], "SUBJ", "Nom", 70),
    ]
    for construction, subj_case, obj_case in (
        ("transitive-nom-dat", "Nom", "Dat"),
        ("transitive-erg-nom", "Erg", "Nom"),
        ("transitive-dat-nom", "Dat", "Nom"),
    ):
        q = queries[construction]
        specs.append(TaskSpec(f"{construction}-subj", construction, q, "SUBJ", subj_case, 50))
        specs.append(TaskSpec(f"{construction}-obj", construction, q, "OBJ", obj_case, 50))
    assert [s.task_id for s in specs] == list(TASK_IDS)
    return specs


@dataclass(frozen=True)
class Candidate:
    form: str
    case: str


@dataclass(frozen=True)
class MinimalSetTest:
    test_id: str
    task_id: str
    context: str
    candidates: tuple[Candidate, ...]
    gold_case: str
    source_sent_id: str
    lemma: str
    number: str

    def gold_form(self) -> str:
        for c in self.candidates:
            if c.case == self.gold_case:
                return c.form
        raise InternalError(f"test {self.test_id} has no gold candidate")


@dataclass
class GenerationReport:
    task_id: str
    target: int
    emitted: int = 0
    skips: list[tuple[str, str]] = field(default_factory=list)  # (sent_id, reason)

    @property
    def shortfall(self) -> int:
        return max(0, self.target - self.emitted)


def mask_context(text: str, form: str) -> tuple[str | None, str | None]:
    """Replace the single whole-word occurrence of ``form`` in ``text``.

    Returns (context, None) on success or (None, reason) when the form
    occurs zero or more than one time as a standalone word.
    """
    pattern = re.compile(rf"(?<!\w){re.escape(form)}(?!\w)")
    hits = list(pattern.finditer(text))
    if len(hits) > 1:
        return None, "ambiguous-surface-form"
    if not hits:
        return None, "form-not-in-text"
    start, end = hits[0].span()
    return text[:start] + PLACEHOLDER + text[end:], None


def _normalize_ws(s: str) -> str:
    return " ".join(s.split())


def validate_test(test: MinimalSetTest) -> list[str]:
    """All structural invariants of one test; empty list means valid."""
    problems = []
    if test.context.count(PLACEHOLDER) != 1:
        problems.append(f"context must contain exactly one {PLACEHOLDER}")
    cases = [c.case for c in test.candidates]
    if sorted(cases) != sorted(CASES):
        problems.append(f"candidate cases {cases} are not a bijection onto {CASES}")
    if sum(1 for c in test.candidates if c.case == test.gold_case) != 1:
        problems.append("exactly one candidate must carry the gold case")
    if len({c.form for c in test.candidates}) != 3:
        problems.append("candidate forms must be three distinct strings")
    if test.gold_case not in CASES:
        problems.append(f"unknown gold case {test.gold_case!r}")
    return problems


def check_gold_substitution(test: MinimalSetTest, source_text: str) -> bool:
    """Gold candidate substituted into the context reproduces the source
    sentence, modulo whitespace normalization."""
    rebuilt = test.context.replace(PLACEHOLDER, test.gold_form(), 1)
    return _normalize_ws(rebuilt) == _normalize_ws(source_text)


def generate_task(
    spec: TaskSpec,
    matches: list[Match],
    tb: Treebank,
    lex: Lexicon,
    seed: int | None = None,
) -> tuple[list[MinimalSetTest], GenerationReport]:
    """Build up to ``spec.target_count`` tests from matches in order.

    Deterministic: matches are consumed in treebank order unless a seed is
    given, in which case they are shuffled once with that seed. Every
    emitted test satisfies all structural invariants; everything else is
    skipped with a reason in the report.
    """
    graphs = {g.sent_id: g for g in tb.graphs}
    report = GenerationReport(task_id=spec.task_id, target=spec.target_count)
    ordered = list(matches)
    if seed is not None:
        random.Random(seed).shuffle(ordered)

    tests: list[MinimalSetTest] = []
    seen: set[tuple[str, str]] = set()
    for match in ordered:
        if len(tests) >= spec.target_count:
            break
        if spec.tested_var not in match.binding:
            raise InternalError(
                f"tested variable {spec.tested_var!r} unbound in match for {match.sent_id}"
            )
        graph = graphs.get(match.sent_id)
        if graph is None:
            raise InternalError(f"match references unknown sentence {match.sent_id!r}")
        token = graph.token_by_id(match.binding[spec.tested_var])

        if token.feats.get("Case") != spec.gold_case:
            report.skips.append((match.sent_id, "case-mismatch"))
            continue
        if not token.lemma or token.lemma == "_":
            report.skips.append((match.sent_id, "missing-lemma"))
            continue
        number = token.feats.get("Number")
        if number is None:
            report.skips.append((match.sent_id, "missing-number"))
            continue
        paradigm = lex.get(token.lemma, number)
        if paradigm is None or not paradigm.complete:
            report.skips.append((match.sent_id, "incomplete-paradigm"))
            continue
        if _has_agreeing_dependent(graph, token.id):
            report.skips.append((match.sent_id, "case-agreeing-dependent"))
            continue

        forms = {
            case: (token.form if case == spec.gold_case else paradigm.forms[case])
            for case in CASES
        }
        if len(set(forms.values())) != 3:
            report.skips.append((match.sent_id, "syncretic-paradigm"))
            continue
        context, reason = mask_context(graph.text, token.form)
        if context is None:
            report.skips.append((match.sent_id, reason))
            continue
        key = (context, token.lemma)
        if key in seen:
            report.skips.append((match.sent_id, "duplicate-test"))
            continue
        seen.add(key)
        tests.append(
            MinimalSetTest(
                test_id=f"{spec.task_id}-{len(tests) + 1:03d}",
                task_id=spec.task_id,
                context=context,
                candidates=tuple(Candidate(forms[c], c) for c in CANDIDATE_ORDER),
                gold_case=spec.gold_case,
                source_sent_id=match.sent_id,
                lemma=token.lemma,
                number=number,
            )
        )
    report.emitted = len(tests)
    return tests, report


def _has_agreeing_dependent(graph: DepGraph, token_id: int) -> bool:
    for dep in graph.dependents_of(token_id):
        base = dep.deprel.split(":", 1)[0]
        if base in AGREEING_DEPRELS and "Case" in dep.feats:
            return True
    return False


# --- dataset files ---------------------------------------------------------

class DatasetFormatError(ContractError):
    def __init__(self, message: str, line_no: int | None = None, field_name: str | None = None):
        self.line_no = line_no
        self.field_name = field_name
        where = []
        if line_no is not None:
            where.append(f"line {line_no}")
        if field_name:
            where.append(f"field {field_name!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


_FIELDS = ("test_id", "task_id", "context", "candidates", "gold_case",
           "source_sent_id", "lemma", "number")
_STR_FIELDS = ("test_id", "task_id", "context", "gold_case", "source_sent_id",
               "lemma", "number")


def to_record(test: MinimalSetTest) -> dict:
    return {
        "test_id": test.test_id,
        "task_id": test.task_id,
        "context": test.context,
        "candidates": [{"form": c.form, "case": c.case} for c in test.candidates],
        "gold_case": test.gold_case,
        "source_sent_id": test.source_sent_id,
        "lemma": test.lemma,
        "number": test.number,
    }


def from_record(record: dict, line_no: int | None = None) -> MinimalSetTest:
    if not isinstance(record, dict):
        raise DatasetFormatError("record is not an object", line_no)
    for name in _FIELDS:
        if name not in record:
            raise DatasetFormatError("missing field", line_no, name)
    for name in record:
        if name not in _FIELDS:
            raise DatasetFormatError("unknown field", line_no, name)
    for name in _STR_FIELDS:
        if not isinstance(record[name], str):
            raise DatasetFormatError("field must be a string", line_no, name)
    raw_candidates = record["candidates"]
    if not isinstance(raw_candidates, list) or len(raw_candidates) != 3:
        raise DatasetFormatError("candidates must be a list of 3 entries", line_no, "candidates")
    candidates = []
    for entry in raw_candidates:
        if (
            not isinstance(entry, dict)
            or set(entry) != {"form", "case"}
            or not all(isinstance(v, str) for v in entry.values())
        ):
            raise DatasetFormatError(
                "candidate entries must be {form, case} string pairs", line_no, "candidates"
            )
        candidates.append(Candidate(form=entry["form"], case=entry["case"]))
    test = MinimalSetTest(
        test_id=record["test_id"],
        task_id=record["task_id"],
        context=record["context"],
        candidates=tuple(candidates),
        gold_case=record["gold_case"],
        source_sent_id=record["source_sent_id"],
        lemma=record["lemma"],
        number=record["number"],
    )
    problems = validate_test(test)
    if problems:
        raise DatasetFormatError(problems[0], line_no, "candidates" if "candidate" in problems[0] else None)
    return test


def write_dataset(tests: list[MinimalSetTest], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for test in tests:
            fh.write(json.dumps(to_record(test), ensure_ascii=False) + "\n")


def read_dataset(path: str) -> list[MinimalSetTest]:
    tests = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise DatasetFormatError(f"invalid JSON: {err.msg}", line_no)
            tests.append(from_record(record, line_no))
    return tests
