"""Scoring contracts, the accuracy metric, and the frequency reference scorer.

A scorer emits one record per test with per-candidate log-probabilities:
sentence-level (joint log-probability of the whole tokenized sentence with
the candidate substituted) and, for bidirectional scorers, word-level
(joint log-probability of the candidate's tokens only, given the full
context). Causal scorers must omit word-level values: they cannot see the
context to the right of the target. A candidate is judged correct only if
the required case's log-probability strictly exceeds both alternatives;
ties count as incorrect and are flagged for auditing. Log base e
throughout.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ContractError
from .lexicon import CASES, CaseFrequencyTable
from .minsets import MinimalSetTest

LEVEL_WL = "WL"
LEVEL_SL = "SL"
LEVELS = (LEVEL_WL, LEVEL_SL)

KIND_MASKED = "masked"
KIND_CAUSAL = "causal"
KIND_REFERENCE = "reference"
KINDS = (KIND_MASKED, KIND_CAUSAL, KIND_REFERENCE)

# deterministic preference order when log-probabilities tie exactly
TIE_ORDER = ("Nom", "Dat", "Erg")

# flat per-context-word cost used by the reference scorer so that
# sentence-level scores depend on length but never change the verdict
_UNIFORM_WORD_LOGPROB = math.log(1.0 / 3.0)


@dataclass(frozen=True)
class CandidateScore:
    case: str
    sl_logprob: float
    wl_logprob: float | None
    target_token_count: int
    sentence_token_count: int


@dataclass(frozen=True)
class ScoreRecord:
    test_id: str
    scorer_id: str
    scorer_kind: str
    candidates: tuple[CandidateScore, ...]

    def by_case(self) -> dict[str, CandidateScore]:
        return {c.case: c for c in self.candidates}


@dataclass(frozen=True)
class Verdict:
    test_id: str
    task_id: str
    gold_case: str
    level: str
    correct: bool
    preferred_case: str
    tie: bool
    gold_target_tokens: int
    gold_sentence_tokens: int


@dataclass(frozen=True)
class TaskResult:
    task_id: str
    scorer_id: str
    level: str
    n: int
    n_correct: int
    accuracy: float
    verdicts: tuple[Verdict, ...]

    @property
    def ties(self) -> int:
        return sum(1 for v in self.verdicts if v.tie)


def wl_logprob(token_logprobs: Sequence[float]) -> float:
    """Joint word-level log-probability: sum over the target's tokens."""
    if len(token_logprobs) == 0:
        raise ContractError("word-level scoring requires at least one target token")
    return math.fsum(token_logprobs)


def sl_logprob(token_logprobs: Sequence[float]) -> float:
    """Joint sentence-level log-probability: sum over all sentence tokens."""
    if len(token_logprobs) == 0:
        raise ContractError("sentence-level scoring requires at least one token")
    return math.fsum(token_logprobs)


def _level_value(candidate: CandidateScore, level: str) -> float:
    if level == LEVEL_SL:
        return candidate.sl_logprob
    if level == LEVEL_WL:
        if candidate.wl_logprob is None:
            raise ContractError(
                f"word-level value requested but absent for case {candidate.case}"
            )
        return candidate.wl_logprob
    raise ContractError(f"unknown scoring level {level!r}")


def judge(test: MinimalSetTest, record: ScoreRecord, level: str) -> Verdict:
    """Correct iff the gold candidate strictly beats both alternatives.

    The preferred case is the argmax; exact ties are broken by the fixed
    order Nom, Dat, Erg and flagged, and a tied gold is judged incorrect.
    """
    if record.test_id != test.test_id:
        raise ContractError(
            f"record {record.test_id!r} does not belong to test {test.test_id!r}"
        )
    by_case = record.by_case()
    if set(by_case) != set(CASES):
        raise ContractError(f"record for {test.test_id!r} must cover cases {CASES}")
    values = {case: _level_value(by_case[case], level) for case in CASES}
    best = max(values.values())
    top = [case for case in TIE_ORDER if values[case] == best]
    preferred = top[0]
    tie = len(top) > 1
    gold = by_case[test.gold_case]
    return Verdict(
        test_id=test.test_id,
        task_id=test.task_id,
        gold_case=test.gold_case,
        level=level,
        correct=(preferred == test.gold_case and not tie),
        preferred_case=preferred,
        tie=tie,
        gold_target_tokens=gold.target_token_count,
        gold_sentence_tokens=gold.sentence_token_count,
    )


def accuracy(
    tests: Sequence[MinimalSetTest],
    records: Iterable[ScoreRecord],
    level: str,
) -> TaskResult:
    """Proportion of tests whose gold candidate wins at the given level.

    Requires exactly one record per test for a single scorer.
    """
    if not tests:
        raise ContractError("accuracy undefined over zero tests")
    task_ids = {t.task_id for t in tests}
    if len(task_ids) != 1:
        raise ContractError(f"tests span multiple tasks: {sorted(task_ids)}")
    by_id: dict[str, ScoreRecord] = {}
    duplicates = []
    for record in records:
        if record.test_id in by_id:
            duplicates.append(record.test_id)
        by_id[record.test_id] = record
    if duplicates:
        raise ContractError(f"duplicate records for tests: {sorted(set(duplicates))}")
    missing = [t.test_id for t in tests if t.test_id not in by_id]
    if missing:
        raise ContractError(f"missing records for tests: {missing}")
    scorer_ids = {r.scorer_id for r in by_id.values()}
    if len(scorer_ids) != 1:
        raise ContractError(f"records span multiple scorers: {sorted(scorer_ids)}")

    verdicts = tuple(judge(t, by_id[t.test_id], level) for t in tests)
    n_correct = sum(1 for v in verdicts if v.correct)
    return TaskResult(
        task_id=next(iter(task_ids)),
        scorer_id=next(iter(scorer_ids)),
        level=level,
        n=len(verdicts),
        n_correct=n_correct,
        accuracy=n_correct / len(verdicts),
        verdicts=verdicts,
    )


def reference_score(
    test: MinimalSetTest,
    freq: CaseFrequencyTable,
    scorer_id: str = "reference-freq",
) -> ScoreRecord:
    """Deterministic baseline scoring each candidate by its case frequency.

    Word-level is the log relative frequency of the candidate's case;
    sentence-level adds a flat per-word context cost, identical across the
    three candidates, so both levels always prefer the same case.
    """
    if freq.total <= 0:
        raise ContractError("reference scorer needs a nonzero frequency table")
    context_words = len(test.context.split()) - 1  # placeholder slot excluded
    candidates = []
    for cand in test.candidates:
        count = freq.counts[cand.case]
        if count <= 0:
            raise ContractError(f"case {cand.case} has zero frequency; score undefined")
        wl = math.log(count / freq.total)
        candidates.append(
            CandidateScore(
                case=cand.case,
                sl_logprob=context_words * _UNIFORM_WORD_LOGPROB + wl,
                wl_logprob=wl,
                target_token_count=1,
                sentence_token_count=context_words + 1,
            )
        )
    return ScoreRecord(
        test_id=test.test_id,
        scorer_id=scorer_id,
        scorer_kind=KIND_REFERENCE,
        candidates=tuple(candidates),
    )


# --- score files -----------------------------------------------------------

def record_to_json(record: ScoreRecord) -> dict:
    candidates = []
    for c in record.candidates:
        entry: dict = {"case": c.case}
        if c.wl_logprob is not None:
            entry["wl_logprob"] = c.wl_logprob
        entry["sl_logprob"] = c.sl_logprob
        entry["target_token_count"] = c.target_token_count
        entry["sentence_token_count"] = c.sentence_token_count
        candidates.append(entry)
    return {
        "test_id": record.test_id,
        "scorer_id": record.scorer_id,
        "scorer_kind": record.scorer_kind,
        "candidates": candidates,
    }


class ScoreFormatError(ContractError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        suffix = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"{message}{suffix}")


_CAND_REQUIRED = ("case", "sl_logprob", "target_token_count", "sentence_token_count")


def json_to_record(obj: dict, line_no: int | None = None) -> ScoreRecord:
    if not isinstance(obj, dict):
        raise ScoreFormatError("record is not an object", line_no)
    for name in ("test_id", "scorer_id", "scorer_kind", "candidates"):
        if name not in obj:
            raise ScoreFormatError(f"missing field {name!r}", line_no)
    extra = set(obj) - {"test_id", "scorer_id", "scorer_kind", "candidates"}
    if extra:
        raise ScoreFormatError(f"unknown fields {sorted(extra)}", line_no)
    if obj["scorer_kind"] not in KINDS:
        raise ScoreFormatError(f"unknown scorer_kind {obj['scorer_kind']!r}", line_no)
    raw = obj["candidates"]
    if not isinstance(raw, list) or len(raw) != 3:
        raise ScoreFormatError("candidates must be a list of 3 entries", line_no)
    candidates = []
    for entry in raw:
        if not isinstance(entry, dict):
            raise ScoreFormatError("candidate entry is not an object", line_no)
        for name in _CAND_REQUIRED:
            if name not in entry:
                raise ScoreFormatError(f"candidate missing field {name!r}", line_no)
        if entry["case"] not in CASES:
            raise ScoreFormatError(f"unknown case label {entry['case']!r}", line_no)
        extra = set(entry) - set(_CAND_REQUIRED) - {"wl_logprob"}
        if extra:
            raise ScoreFormatError(f"candidate has unknown fields {sorted(extra)}", line_no)
        wl = entry.get("wl_logprob")
        for name in ("sl_logprob", "wl_logprob"):
            value = entry.get(name)
            if value is None:
                continue
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ScoreFormatError(f"{name} must be a number", line_no)
            if not math.isfinite(value):
                raise ScoreFormatError(f"{name} must be finite", line_no)
        for name in ("target_token_count", "sentence_token_count"):
            value = entry.get(name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ScoreFormatError(f"{name} must be an integer >= 1", line_no)
        candidates.append(
            CandidateScore(
                case=entry["case"],
                sl_logprob=float(entry["sl_logprob"]),
                wl_logprob=None if wl is None else float(wl),
                target_token_count=entry["target_token_count"],
                sentence_token_count=entry["sentence_token_count"],
            )
        )
    return ScoreRecord(
        test_id=obj["test_id"],
        scorer_id=obj["scorer_id"],
        scorer_kind=obj["scorer_kind"],
        candidates=tuple(candidates),
    )


def write_scores(records: Sequence[ScoreRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_json(record), ensure_ascii=False, allow_nan=False) + "\n")


def read_scores(path: str) -> list[ScoreRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise ScoreFormatError(f"invalid JSON: {err.msg}", line_no)
            records.append(json_to_record(obj, line_no))
    return records


def validate_records(
    tests: Sequence[MinimalSetTest], records: Sequence[ScoreRecord]
) -> list[str]:
    """Cross-check score records against their dataset; returns problems.

    Enforces the full wire contract: known test ids, one record per test
    per scorer, the candidate-case bijection, normalized log-probabilities
    (<= 0), and the rule that causal scorers never report word-level
    values while masked and reference scorers always do.
    """
    problems: list[str] = []
    tests_by_id = {t.test_id: t for t in tests}
    seen: set[tuple[str, str]] = set()
    for record in records:
        where = f"record for test {record.test_id!r} from {record.scorer_id!r}"
        test = tests_by_id.get(record.test_id)
        if test is None:
            problems.append(f"{where}: unknown test_id")
            continue
        key = (record.scorer_id, record.test_id)
        if key in seen:
            problems.append(f"{where}: duplicate record")
            continue
        seen.add(key)
        if record.scorer_kind not in KINDS:
            problems.append(f"{where}: unknown scorer_kind {record.scorer_kind!r}")
            continue
        cases = [c.case for c in record.candidates]
        if sorted(cases) != sorted(c.case for c in test.candidates):
            problems.append(f"{where}: candidate cases {cases} do not match the test")
            continue
        for cand in record.candidates:
            if cand.sl_logprob > 0:
                problems.append(f"{where}: positive sl_logprob for {cand.case}")
            if cand.wl_logprob is not None and cand.wl_logprob > 0:
                problems.append(f"{where}: positive wl_logprob for {cand.case}")
            if record.scorer_kind == KIND_CAUSAL and cand.wl_logprob is not None:
                problems.append(
                    f"{where}: causal scorers must omit wl_logprob ({cand.case})"
                )
            if record.scorer_kind in (KIND_MASKED, KIND_REFERENCE) and cand.wl_logprob is None:
                problems.append(
                    f"{where}: {record.scorer_kind} scorers must report wl_logprob ({cand.case})"
                )
    all_scorers = {s for (s, _) in seen}
    for test in tests:
        scorers_seen = {s for (s, t) in seen if t == test.test_id}
        for scorer in sorted(all_scorers - scorers_seen):
            problems.append(f"missing record for test {test.test_id!r} from {scorer!r}")
    return problems
