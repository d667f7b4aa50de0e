"""Secondary acceptance: tiny pinned models drive the full evaluate path.

Score files from the pinned masked and causal models must pass the
pipeline's validator with zero errors (exit 0 from `geocase evaluate`),
causal records must carry no word-level values, and the emitted report
must have the accuracy-matrix shape: a word-level section without the
causal scorer and a sentence-level section with both.
"""
import json
import subprocess
import sys

import pytest

from conftest import CAUSAL_MODEL, MASKED_MODEL
from lmscore.scorer import ScorerSpec, score_dataset, write_records


@pytest.fixture(scope="module")
def score_files(fixture_items, tmp_path_factory):
    out = tmp_path_factory.mktemp("scores")
    paths = []
    for model, kind in ((MASKED_MODEL, "masked"), (CAUSAL_MODEL, "causal")):
        spec = ScorerSpec(model_id=model, kind=kind)
        records, skipped = score_dataset(spec, fixture_items)
        assert skipped == []
        path = out / f"{spec.scorer_id}.jsonl"
        write_records(records, str(path))
        paths.append(path)
    return out, paths


def test_acceptance_scorer_contract(dataset_dir, score_files, tmp_path):
    scores_dir, paths = score_files

    causal_lines = (scores_dir / "tiny-causal.jsonl").read_text(encoding="utf-8")
    assert "wl_logprob" not in causal_lines

    eval_dir = tmp_path / "eval"
    proc = subprocess.run(
        [sys.executable, "-m", "geocase.cli", "evaluate",
         "--datasets", str(dataset_dir),
         "--scores", str(scores_dir),
         "--out", str(eval_dir)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, f"validator rejected scores:\n{proc.stderr}"

    report = (eval_dir / "report.txt").read_text(encoding="utf-8")
    wl_section = report.split("Word-level accuracy")[1].split("Sentence-level accuracy")[0]
    sl_section = report.split("Sentence-level accuracy")[1].split("Pooled accuracy")[0]
    assert "tiny-masked" in wl_section
    assert "tiny-causal" not in wl_section
    assert "tiny-masked" in sl_section
    assert "tiny-causal" in sl_section
    assert "transitive-erg-nom-subj" in report
    assert "transitive-nom-dat-subj" in report

    accuracy_rows = (eval_dir / "accuracy.tsv").read_text(encoding="utf-8").splitlines()
    levels_by_scorer = {}
    for line in accuracy_rows[1:]:
        scorer_id, level = line.split("\t")[:2]
        levels_by_scorer.setdefault(scorer_id, set()).add(level)
    assert levels_by_scorer["tiny-masked"] == {"WL", "SL"}
    assert levels_by_scorer["tiny-causal"] == {"SL"}
    print("ACCEPTANCE scorer-contract: PASS "
          f"(validator clean, report shaped, {len(accuracy_rows) - 1} accuracy rows)")


def test_acceptance_rejects_corrupted_scores(dataset_dir, score_files, tmp_path):
    scores_dir, _ = score_files
    corrupt_dir = tmp_path / "corrupt"
    corrupt_dir.mkdir()
    lines = (scores_dir / "tiny-causal.jsonl").read_text(encoding="utf-8").splitlines()
    record = json.loads(lines[0])
    record["candidates"][0]["wl_logprob"] = -1.0  # causal must not report WL
    lines[0] = json.dumps(record, ensure_ascii=False)
    (corrupt_dir / "tiny-causal.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (corrupt_dir / "tiny-masked.jsonl").write_text(
        (scores_dir / "tiny-masked.jsonl").read_text(encoding="utf-8"), encoding="utf-8")
    proc = subprocess.run(
        [sys.executable, "-m", "geocase.cli", "evaluate",
         "--datasets", str(dataset_dir),
         "--scores", str(corrupt_dir),
         "--out", str(tmp_path / "eval2")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "must omit wl_logprob" in proc.stderr
