"""Command-line pipeline: extract, lexicon, generate, score-ref, evaluate, report.

Subcommands hand off through files so external scorers can slot in
between generation and evaluation. Every command writes a manifest with
content hashes of its outputs; identical inputs must yield identical
hashes. Exit codes: 0 success, 1 usage or configuration problem, 2 data
contract violation, 3 generation finished with a shortfall.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import analysis, conllu, lexicon, minsets, query, scoring
from .errors import ConfigError, ContractError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CONTRACT = 2
EXIT_PARTIAL = 3

REFERENCE_SCORER_ID = "reference-freq"

# headline statistics of the treebank release the pipeline is tuned to;
# deltas against these are recorded in every generation manifest
PINNED_SENTENCES = 3013
PINNED_CASE_COUNTS = {"Nom": 11438, "Dat": 10034, "Erg": 475}


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise ConfigError(message)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_tsv(path: Path, rows: list[list[str]]) -> None:
    _write_text(path, "".join("\t".join(row) + "\n" for row in rows))


def _write_manifest(out_dir: Path, files: list[Path], extra: dict | None = None) -> Path:
    manifest = {
        "files": {
            str(p.relative_to(out_dir)): {"sha256": _sha256(p), "bytes": p.stat().st_size}
            for p in sorted(files)
        },
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    _write_text(path, json.dumps(manifest, sort_keys=True, indent=2, ensure_ascii=False) + "\n")
    return path


def _require_file(path_str: str, what: str) -> Path:
    if not path_str:
        raise ConfigError(f"missing {what} path")
    path = Path(path_str)
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _out_dir(path_str: str) -> Path:
    if not path_str:
        raise ConfigError("missing output directory (--out)")
    out = Path(path_str)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_treebank(args) -> conllu.Treebank:
    path = _require_file(args.treebank, "treebank")
    tb = conllu.parse_conllu_file(str(path), lenient=args.lenient)
    if tb.skipped:
        for sent_id, line_no, message in tb.skipped:
            print(f"skipped sentence {sent_id or '?'} (line {line_no}): {message}",
                  file=sys.stderr)
    return tb


def _load_lexicon(tb: conllu.Treebank, args) -> lexicon.Lexicon:
    lex = lexicon.build_lexicon(tb)
    if getattr(args, "supplement", None):
        rows = lexicon.load_supplement(str(_require_file(args.supplement, "supplement")))
        lex = lexicon.merge_supplement(lex, rows)
    for conflict in lex.report.conflicts:
        print(f"supplement conflict ignored: {conflict}", file=sys.stderr)
    return lex


# --- subcommands ---------------------------------------------------------------

def cmd_extract(args) -> int:
    tb = _load_treebank(args)
    out = _out_dir(args.out)
    matches_dir = out / "matches"
    matches_dir.mkdir(exist_ok=True)

    if args.query:
        named = []
        for qpath in args.query:
            path = _require_file(qpath, "query file")
            try:
                program = query.parse_query(path.read_text(encoding="utf-8"))
            except ContractError as err:
                raise ContractError(f"query {path.name}: {err}") from err
            named.append((path.stem, program))
    else:
        named = [
            (name, query.parse_query(src))
            for name, src in minsets.CONSTRUCTION_QUERIES.items()
        ]

    written = []
    for name, program in named:
        matches = query.match_treebank(program, tb, subtype_match=args.subtype_match)
        rows = [["sent_id", "binding"]]
        for m in matches:
            binding = ",".join(f"{v}={m.binding[v]}" for v in program.pattern.vars)
            rows.append([m.sent_id, binding])
        path = matches_dir / f"{name}.tsv"
        _write_tsv(path, rows)
        written.append(path)
        print(f"{name}: {len(matches)} matches -> {path}")
    _write_manifest(out, written, {"treebank": _treebank_stats(tb, args.treebank)})
    return EXIT_OK


def cmd_lexicon(args) -> int:
    tb = _load_treebank(args)
    lex = _load_lexicon(tb, args)
    out = _out_dir(args.out)

    rows = [["lemma", "number", "case", "form", "provenance"]]
    for (lemma, number) in sorted(lex.paradigms):
        paradigm = lex.paradigms[(lemma, number)]
        for case in lexicon.CASES:
            if case in paradigm.forms:
                rows.append([lemma, number, case, paradigm.forms[case],
                             paradigm.provenance[case]])
    lex_path = out / "lexicon.tsv"
    _write_tsv(lex_path, rows)

    report_rows = [["kind", "detail"]]
    report_rows.append(["skipped-missing-lemma", str(lex.report.skipped_missing_lemma)])
    report_rows.append(["skipped-missing-number", str(lex.report.skipped_missing_number)])
    for tie in lex.report.ties:
        report_rows.append(["tie", "|".join(tie)])
    for conflict in lex.report.conflicts:
        report_rows.append(["conflict", "|".join(conflict)])
    report_path = out / "lexicon-report.tsv"
    _write_tsv(report_path, report_rows)

    complete = len(lex.complete_paradigms())
    print(f"{len(lex)} paradigms ({complete} complete) -> {lex_path}")
    _write_manifest(out, [lex_path, report_path],
                    {"treebank": _treebank_stats(tb, args.treebank)})
    return EXIT_OK


def _treebank_stats(tb: conllu.Treebank, source: str) -> dict:
    counts = {case: conllu.count_feature(tb, "Case", case) for case in lexicon.CASES}
    return {
        "source": Path(source).name,
        "sentences": len(tb),
        "case_counts": counts,
        "pinned_reference": {
            "sentences": PINNED_SENTENCES,
            "case_counts": dict(PINNED_CASE_COUNTS),
        },
        "delta": {
            "sentences": len(tb) - PINNED_SENTENCES,
            "case_counts": {
                case: counts[case] - PINNED_CASE_COUNTS[case] for case in lexicon.CASES
            },
        },
    }


def cmd_generate(args) -> int:
    tb = _load_treebank(args)
    lex = _load_lexicon(tb, args)
    out = _out_dir(args.out)
    datasets_dir = out / "datasets"
    datasets_dir.mkdir(exist_ok=True)
    reports_dir = out / "reports"
    reports_dir.mkdir(exist_ok=True)

    specs = minsets.builtin_task_specs()
    match_cache: dict[str, list[query.Match]] = {}
    written = []
    summary_rows = [["task_id", "target", "emitted", "shortfall"]]
    skip_rows = [["task_id", "sent_id", "reason"]]
    shortfall = False
    for spec in specs:
        if spec.construction not in match_cache:
            match_cache[spec.construction] = query.match_treebank(
                spec.query, tb, subtype_match=args.subtype_match
            )
        tests, report = minsets.generate_task(
            spec, match_cache[spec.construction], tb, lex, seed=args.seed
        )
        path = datasets_dir / f"{spec.task_id}.jsonl"
        minsets.write_dataset(tests, str(path))
        written.append(path)
        summary_rows.append([spec.task_id, str(report.target), str(report.emitted),
                             str(report.shortfall)])
        for sent_id, reason in report.skips:
            skip_rows.append([spec.task_id, sent_id, reason])
        if report.shortfall:
            shortfall = True
            print(f"{spec.task_id}: emitted {report.emitted}/{report.target} "
                  f"(shortfall {report.shortfall})", file=sys.stderr)
        else:
            print(f"{spec.task_id}: emitted {report.emitted}/{report.target}")

    summary_path = reports_dir / "generation-summary.tsv"
    _write_tsv(summary_path, summary_rows)
    skips_path = reports_dir / "generation-skips.tsv"
    _write_tsv(skips_path, skip_rows)
    written += [summary_path, skips_path]
    _write_manifest(out, written, {"treebank": _treebank_stats(tb, args.treebank),
                                   "seed": args.seed})
    return EXIT_PARTIAL if shortfall else EXIT_OK


def _dataset_files(dir_path: Path) -> list[Path]:
    files = sorted(dir_path.glob("*.jsonl"))
    if not files:
        raise ConfigError(f"no dataset files (*.jsonl) in {dir_path}")
    return files


def cmd_score_ref(args) -> int:
    tb = _load_treebank(args)
    freq = lexicon.case_frequencies(tb)
    datasets_dir = Path(args.datasets)
    if not datasets_dir.is_dir():
        raise ConfigError(f"dataset directory not found: {datasets_dir}")
    out = _out_dir(args.out)
    scores_dir = out / "scores"
    scores_dir.mkdir(exist_ok=True)

    written = []
    total = 0
    for dataset_path in _dataset_files(datasets_dir):
        tests = minsets.read_dataset(str(dataset_path))
        records = [scoring.reference_score(t, freq, scorer_id=REFERENCE_SCORER_ID)
                   for t in tests]
        path = scores_dir / f"{dataset_path.stem}.{REFERENCE_SCORER_ID}.jsonl"
        scoring.write_scores(records, str(path))
        written.append(path)
        total += len(records)
    print(f"scored {total} tests with {REFERENCE_SCORER_ID}")
    _write_manifest(out, written, {"scorer_id": REFERENCE_SCORER_ID,
                                   "case_counts": freq.counts})
    return EXIT_OK


def _collect_score_files(paths: list[str]) -> list[Path]:
    files: list[Path] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files.extend(sorted(path.rglob("*.jsonl")))
        elif path.is_file():
            files.append(path)
        else:
            raise ConfigError(f"score path not found: {path}")
    if not files:
        raise ConfigError("no score files found")
    return files


def cmd_evaluate(args) -> int:
    datasets_dir = Path(args.datasets)
    if not datasets_dir.is_dir():
        raise ConfigError(f"dataset directory not found: {datasets_dir}")
    tests_by_task: dict[str, list[minsets.MinimalSetTest]] = {}
    for dataset_path in _dataset_files(datasets_dir):
        tests = minsets.read_dataset(str(dataset_path))
        if tests:
            tests_by_task[tests[0].task_id] = tests
    all_tests = [t for tests in tests_by_task.values() for t in tests]
    if not all_tests:
        raise ContractError("datasets contain no tests")

    records: list[scoring.ScoreRecord] = []
    for path in _collect_score_files(args.scores):
        records.extend(scoring.read_scores(str(path)))

    problems = scoring.validate_records(all_tests, records)
    if problems:
        for problem in problems:
            print(f"contract violation: {problem}", file=sys.stderr)
        raise ContractError(f"{len(problems)} score contract violation(s)")

    by_scorer: dict[str, list[scoring.ScoreRecord]] = {}
    kinds: dict[str, set[str]] = {}
    for record in records:
        by_scorer.setdefault(record.scorer_id, []).append(record)
        kinds.setdefault(record.scorer_id, set()).add(record.scorer_kind)
    for scorer_id, kind_set in kinds.items():
        if len(kind_set) > 1:
            raise ContractError(f"scorer {scorer_id!r} mixes kinds {sorted(kind_set)}")

    results: list[scoring.TaskResult] = []
    for scorer_id in sorted(by_scorer):
        kind = next(iter(kinds[scorer_id]))
        levels = (scoring.LEVEL_SL,) if kind == scoring.KIND_CAUSAL else scoring.LEVELS
        recs_by_test = {r.test_id: r for r in by_scorer[scorer_id]}
        for task_id, tests in sorted(tests_by_task.items()):
            task_records = [recs_by_test[t.test_id] for t in tests]
            for level in levels:
                results.append(scoring.accuracy(tests, task_records, level))

    tests_by_id = {t.test_id: t for t in all_tests}
    report = analysis.build_report(results, records, tests_by_id, corr_unit=args.corr_unit)

    out = _out_dir(args.out)
    written = []
    report_path = out / "report.txt"
    _write_text(report_path, analysis.emit_report(report))
    written.append(report_path)
    for name, rows in (
        ("accuracy.tsv", analysis.accuracy_tsv_rows(report)),
        ("preferences.tsv", analysis.preferences_tsv_rows(report)),
        ("correlations.tsv", analysis.correlations_tsv_rows(report)),
        ("avg_probability.tsv", analysis.avg_probability_tsv_rows(report)),
    ):
        path = out / name
        _write_tsv(path, rows)
        written.append(path)
    _write_manifest(out, written, {"corr_unit": args.corr_unit})
    print(f"report written to {report_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    path = Path(args.eval) / "report.txt"
    if not path.is_file():
        raise ConfigError(f"no report found at {path}; run `geocase evaluate` first")
    sys.stdout.write(path.read_text(encoding="utf-8"))
    return EXIT_OK


# --- argument wiring -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="geocase",
        description="Generate and evaluate Georgian case-alignment minimal-set tests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = _ArgumentParser(add_help=False)
    common.add_argument("--out", default="", help="output directory")
    strictness = common.add_mutually_exclusive_group()
    strictness.add_argument("--lenient", dest="lenient", action="store_true",
                            default=True, help="skip malformed sentences (default)")
    strictness.add_argument("--strict", dest="lenient", action="store_false",
                            help="fail on the first malformed sentence")

    tb_common = _ArgumentParser(add_help=False, parents=[common])
    tb_common.add_argument("--treebank", default="", help="CONLL-U treebank path")
    tb_common.add_argument("--subtype-match", action="store_true",
                           help="let bare deprels match subtyped relations")

    p = sub.add_parser("extract", parents=[tb_common],
                       help="run queries over the treebank and write match listings")
    p.add_argument("--query", action="append", default=[],
                   help="query file (repeatable; default: built-in constructions)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("lexicon", parents=[tb_common],
                       help="extract the case-form lexicon")
    p.add_argument("--supplement", default="", help="supplement TSV path")
    p.set_defaults(func=cmd_lexicon)

    p = sub.add_parser("generate", parents=[tb_common],
                       help="generate the seven minimal-set datasets")
    p.add_argument("--supplement", default="", help="supplement TSV path")
    p.add_argument("--seed", type=int, default=None,
                   help="shuffle matches with this seed before selection")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score-ref", parents=[tb_common],
                       help="score datasets with the frequency reference scorer")
    p.add_argument("--datasets", required=True, help="directory of dataset .jsonl files")
    p.set_defaults(func=cmd_score_ref)

    p = sub.add_parser("evaluate", parents=[common],
                       help="validate score files and emit the evaluation report")
    p.add_argument("--datasets", required=True, help="directory of dataset .jsonl files")
    p.add_argument("--scores", nargs="+", required=True,
                   help="score files or directories")
    p.add_argument("--corr-unit", choices=("test", "task"), default="test",
                   help="observation unit for length correlations")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="print a previously computed report")
    p.add_argument("--eval", required=True, help="evaluate output directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ContractError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
