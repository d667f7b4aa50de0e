"""Word- and sentence-level log-probability scoring with HF models.

Masked models score sentences by pseudo-log-likelihood (each content
position masked once with everything else visible) and the target word by
the same per-position values restricted to the candidate's token span.
Causal models score sentences left-to-right behind a BOS prefix and emit
no word-level values at all: with a left-only context the target's
probability would ignore the rest of the sentence.

Inference only, no sampling: identical inputs and weights give identical
scores.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import torch
from transformers import AutoModelForCausalLM, AutoModelForMaskedLM, AutoTokenizer

from .dataset import Candidate, MinsetItem

KIND_MASKED = "masked"
KIND_CAUSAL = "causal"


class ScorerError(RuntimeError):
    pass


class ZeroTokenError(ScorerError):
    """The tokenizer produced no tokens for a candidate's span."""


@dataclass
class ScorerSpec:
    model_id: str
    kind: str
    scorer_id: str = ""
    batch_size: int = 16
    device: str = "cpu"
    include_leading_space: bool = False

    def __post_init__(self):
        if self.kind not in (KIND_MASKED, KIND_CAUSAL):
            raise ScorerError(f"unknown scorer kind {self.kind!r}")
        if not self.scorer_id:
            self.scorer_id = self.model_id.rstrip("/").rsplit("/", 1)[-1]


@dataclass(frozen=True)
class CandidateScores:
    case: str
    sl_logprob: float
    wl_logprob: float | None
    target_token_count: int
    sentence_token_count: int


def _overlaps(offset: tuple[int, int], span: tuple[int, int]) -> bool:
    return offset[0] < span[1] and offset[1] > span[0]


class _Base:
    def __init__(self, spec: ScorerSpec):
        self.spec = spec
        self.tokenizer = AutoTokenizer.from_pretrained(spec.model_id)
        self.device = torch.device(spec.device)

    def _encode(self, sentence: str):
        enc = self.tokenizer(
            sentence,
            return_offsets_mapping=True,
            return_special_tokens_mask=True,
            add_special_tokens=True,
        )
        ids = enc["input_ids"]
        offsets = enc["offset_mapping"]
        special = enc["special_tokens_mask"]
        content = [
            i for i in range(len(ids))
            if not special[i] and offsets[i][1] > offsets[i][0]
        ]
        return ids, offsets, content

    def _target_positions(self, sentence: str, offsets, content, span) -> list[int]:
        start, end = span
        if self.spec.include_leading_space and start > 0 and sentence[start - 1] == " ":
            start -= 1
        return [i for i in content if _overlaps(tuple(offsets[i]), (start, end))]


class MaskedScorer(_Base):
    def __init__(self, spec: ScorerSpec):
        super().__init__(spec)
        if self.tokenizer.mask_token_id is None:
            raise ScorerError(f"{spec.model_id}: no mask token; not a masked LM")
        self.model = AutoModelForMaskedLM.from_pretrained(spec.model_id)
        self.model.to(self.device)
        self.model.eval()

    @torch.no_grad()
    def _position_logprobs(self, ids: list[int], positions: list[int]) -> dict[int, float]:
        """Log-probability of the original token at each position, that
        position masked and all others visible."""
        out: dict[int, float] = {}
        for chunk_start in range(0, len(positions), self.spec.batch_size):
            chunk = positions[chunk_start:chunk_start + self.spec.batch_size]
            batch = torch.tensor([ids] * len(chunk), device=self.device)
            for row, pos in enumerate(chunk):
                batch[row, pos] = self.tokenizer.mask_token_id
            logits = self.model(input_ids=batch).logits
            logprobs = torch.log_softmax(logits, dim=-1)
            for row, pos in enumerate(chunk):
                out[pos] = float(logprobs[row, pos, ids[pos]])
        return out

    def score_candidate(self, item: MinsetItem, candidate: Candidate) -> CandidateScores:
        sentence = item.sentence_for(candidate)
        ids, offsets, content = self._encode(sentence)
        if not content:
            raise ZeroTokenError(f"{item.test_id}: sentence tokenizes to nothing")
        targets = self._target_positions(sentence, offsets, content,
                                         item.target_span(candidate))
        if not targets:
            raise ZeroTokenError(
                f"{item.test_id}: candidate {candidate.form!r} has no tokens"
            )
        per_position = self._position_logprobs(ids, content)
        return CandidateScores(
            case=candidate.case,
            sl_logprob=math.fsum(per_position[i] for i in content),
            wl_logprob=math.fsum(per_position[i] for i in targets),
            target_token_count=len(targets),
            sentence_token_count=len(content),
        )


class CausalScorer(_Base):
    def __init__(self, spec: ScorerSpec):
        super().__init__(spec)
        self.model = AutoModelForCausalLM.from_pretrained(spec.model_id)
        self.model.to(self.device)
        self.model.eval()
        self.prefix_id = self.tokenizer.bos_token_id
        if self.prefix_id is None:
            self.prefix_id = self.tokenizer.eos_token_id
        if self.prefix_id is None:
            raise ScorerError(
                f"{spec.model_id}: no BOS/EOS token to anchor left-to-right scoring"
            )

    def _encode(self, sentence: str):
        enc = self.tokenizer(
            sentence,
            return_offsets_mapping=True,
            add_special_tokens=False,
        )
        ids = enc["input_ids"]
        offsets = enc["offset_mapping"]
        content = [i for i in range(len(ids)) if offsets[i][1] > offsets[i][0]]
        return ids, offsets, content

    @torch.no_grad()
    def score_candidate(self, item: MinsetItem, candidate: Candidate) -> CandidateScores:
        sentence = item.sentence_for(candidate)
        ids, offsets, content = self._encode(sentence)
        if not ids or not content:
            raise ZeroTokenError(f"{item.test_id}: sentence tokenizes to nothing")
        targets = self._target_positions(sentence, offsets, content,
                                         item.target_span(candidate))
        if not targets:
            raise ZeroTokenError(
                f"{item.test_id}: candidate {candidate.form!r} has no tokens"
            )
        input_ids = torch.tensor([[self.prefix_id] + list(ids)], device=self.device)
        logits = self.model(input_ids=input_ids).logits
        logprobs = torch.log_softmax(logits[0, :-1], dim=-1)
        per_token = [float(logprobs[i, ids[i]]) for i in range(len(ids))]
        return CandidateScores(
            case=candidate.case,
            sl_logprob=math.fsum(per_token[i] for i in content),
            wl_logprob=None,
            target_token_count=len(targets),
            sentence_token_count=len(content),
        )


def load_scorer(spec: ScorerSpec):
    try:
        if spec.kind == KIND_MASKED:
            return MaskedScorer(spec)
        return CausalScorer(spec)
    except (OSError, ValueError) as err:
        raise ScorerError(f"failed to load {spec.model_id}: {err}") from err


def score_dataset(spec: ScorerSpec, tests: list[MinsetItem]):
    """Score every candidate of every test; returns (records, skipped).

    A test where any candidate yields zero tokens is excluded whole and
    reported in ``skipped`` as (test_id, reason). Records come back sorted
    by test_id.
    """
    scorer = load_scorer(spec)
    records = []
    skipped: list[tuple[str, str]] = []
    for item in tests:
        candidates = []
        try:
            for candidate in item.candidates:
                scores = scorer.score_candidate(item, candidate)
                candidates.append(scores)
        except ZeroTokenError as err:
            skipped.append((item.test_id, str(err)))
            continue
        records.append(
            {
                "test_id": item.test_id,
                "scorer_id": spec.scorer_id,
                "scorer_kind": spec.kind,
                "candidates": [_candidate_json(c) for c in candidates],
            }
        )
    records.sort(key=lambda r: r["test_id"])
    return records, skipped


def _candidate_json(scores: CandidateScores) -> dict:
    entry: dict = {"case": scores.case}
    if scores.wl_logprob is not None:
        entry["wl_logprob"] = scores.wl_logprob
    entry["sl_logprob"] = scores.sl_logprob
    entry["target_token_count"] = scores.target_token_count
    entry["sentence_token_count"] = scores.sentence_token_count
    return entry


def write_records(records: list[dict], path: str) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, allow_nan=False) + "\n")


def report_skips(skipped: list[tuple[str, str]]) -> None:
    for test_id, reason in skipped:
        print(f"excluded {test_id}: {reason}", file=sys.stderr)
