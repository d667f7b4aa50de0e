"""Reader for the minimal-set dataset wire format.

Implements the dataset schema from the pipeline's docs/schemas.md
independently: this package talks to the generator strictly through
files, never through its code.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

PLACEHOLDER = "[TARGET]"
CASES = ("Nom", "Erg", "Dat")


class DatasetError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        suffix = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"{message}{suffix}")


@dataclass(frozen=True)
class Candidate:
    form: str
    case: str


@dataclass(frozen=True)
class MinsetItem:
    test_id: str
    task_id: str
    context: str
    candidates: tuple[Candidate, ...]
    gold_case: str

    def sentence_for(self, candidate: Candidate) -> str:
        return self.context.replace(PLACEHOLDER, candidate.form, 1)

    def target_span(self, candidate: Candidate) -> tuple[int, int]:
        start = self.context.index(PLACEHOLDER)
        return start, start + len(candidate.form)


def read_dataset(path: str) -> list[MinsetItem]:
    items: list[MinsetItem] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise DatasetError(f"invalid JSON: {err.msg}", line_no)
            try:
                candidates = tuple(
                    Candidate(form=c["form"], case=c["case"]) for c in obj["candidates"]
                )
                item = MinsetItem(
                    test_id=obj["test_id"],
                    task_id=obj["task_id"],
                    context=obj["context"],
                    candidates=candidates,
                    gold_case=obj["gold_case"],
                )
            except (KeyError, TypeError) as err:
                raise DatasetError(f"malformed record: {err}", line_no)
            if item.context.count(PLACEHOLDER) != 1:
                raise DatasetError(
                    f"context must contain {PLACEHOLDER} exactly once", line_no
                )
            if len(candidates) != 3 or sorted(c.case for c in candidates) != sorted(CASES):
                raise DatasetError("candidates must cover Nom/Erg/Dat exactly", line_no)
            items.append(item)
    return items
