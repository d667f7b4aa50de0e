import json
from pathlib import Path

import pytest

SCORER_DIR = Path(__file__).resolve().parent.parent
MASKED_MODEL = str(SCORER_DIR / "tests" / "models" / "tiny-masked")
CAUSAL_MODEL = str(SCORER_DIR / "tests" / "models" / "tiny-causal")

# 4 tests across 2 tasks, full dataset schema (the evaluate CLI is strict)
FIXTURE_TESTS = [
    {
        "test_id": "transitive-erg-nom-subj-001",
        "task_id": "transitive-erg-nom-subj",
        "context": "[TARGET] სახლი ააშენა.",
        "candidates": [
            {"form": "მამა", "case": "Nom"},
            {"form": "მამამ", "case": "Erg"},
            {"form": "მამას", "case": "Dat"},
        ],
        "gold_case": "Erg",
        "source_sent_id": "fx-1",
        "lemma": "მამა",
        "number": "Sing",
    },
    {
        "test_id": "transitive-erg-nom-subj-002",
        "task_id": "transitive-erg-nom-subj",
        "context": "[TARGET] სურათი დახატა.",
        "candidates": [
            {"form": "ბავშვი", "case": "Nom"},
            {"form": "ბავშვმა", "case": "Erg"},
            {"form": "ბავშვს", "case": "Dat"},
        ],
        "gold_case": "Erg",
        "source_sent_id": "fx-2",
        "lemma": "ბავშვი",
        "number": "Sing",
    },
    {
        "test_id": "transitive-nom-dat-subj-001",
        "task_id": "transitive-nom-dat-subj",
        "context": "[TARGET] სურათს ხატავს.",
        "candidates": [
            {"form": "ბავშვი", "case": "Nom"},
            {"form": "ბავშვმა", "case": "Erg"},
            {"form": "ბავშვს", "case": "Dat"},
        ],
        "gold_case": "Nom",
        "source_sent_id": "fx-3",
        "lemma": "ბავშვი",
        "number": "Sing",
    },
    {
        "test_id": "transitive-nom-dat-subj-002",
        "task_id": "transitive-nom-dat-subj",
        "context": "ქალაქში [TARGET] სახლს აშენებს.",
        "candidates": [
            {"form": "კაცი", "case": "Nom"},
            {"form": "კაცმა", "case": "Erg"},
            {"form": "კაცს", "case": "Dat"},
        ],
        "gold_case": "Nom",
        "source_sent_id": "fx-4",
        "lemma": "კაცი",
        "number": "Sing",
    },
]


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("datasets")
    by_task = {}
    for record in FIXTURE_TESTS:
        by_task.setdefault(record["task_id"], []).append(record)
    for task_id, records in by_task.items():
        with open(root / f"{task_id}.jsonl", "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return root


@pytest.fixture(scope="session")
def fixture_items(dataset_dir):
    from lmscore.dataset import read_dataset

    items = []
    for path in sorted(dataset_dir.glob("*.jsonl")):
        items.extend(read_dataset(str(path)))
    return items
