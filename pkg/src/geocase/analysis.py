"""Error-preference and correlation analyses plus report assembly.

Takes per-task verdicts and score records and produces: the accuracy
matrix, pooled accuracy per required case, the breakdown of which case
models prefer when they fail, point-biserial correlations between
per-test correctness and tokenized lengths, and per-case mean word-level
probabilities. Output is deterministic: identical inputs produce
byte-identical documents.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from scipy import stats as _scipy_stats

from .errors import ContractError
from .lexicon import CASES
from .minsets import TASK_IDS, MinimalSetTest
from .scoring import LEVELS, ScoreRecord, TaskResult

# display order for case columns: most to least frequent in Georgian
CASE_DISPLAY_ORDER = ("Nom", "Dat", "Erg")

VARIABLES = ("target_token_length", "sentence_token_length")


# --- error preferences -------------------------------------------------------

@dataclass(frozen=True)
class TaskPreference:
    failures: int  # non-tie failures
    ties: int
    counts: dict[str, int]  # preferred case -> count, over non-tie failures
    pct: dict[str, float]   # preferred case -> percentage of failures


@dataclass(frozen=True)
class CasePreference:
    gold_case: str
    defined: bool
    failures: int
    ties: int
    per_task: dict[str, TaskPreference]
    pooled_test_pct: dict[str, float]
    pooled_task_pct: dict[str, float]
    sigma_population: dict[str, float]
    sigma_sample: dict[str, float | None]  # None when fewer than two tasks failed


def _pop_sigma(values: Sequence[float]) -> float:
    mean = math.fsum(values) / len(values)
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / len(values))


def _sample_sigma(values: Sequence[float]) -> float | None:
    if len(values) < 2:
        return None
    mean = math.fsum(values) / len(values)
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1))


def preference_breakdown(results: Sequence[TaskResult]) -> dict[str, CasePreference]:
    """Which case wins when the gold case loses, per gold case.

    Ties are excluded from the preference distribution and counted
    separately; percentages over the two non-gold cases therefore sum to
    100 for every task with at least one non-tie failure. The per-task
    leading percentages also feed the cross-task sigma (population
    convention; the sample convention is reported alongside).
    """
    keys = {(r.scorer_id, r.level) for r in results}
    if len(keys) > 1:
        raise ContractError(f"preference breakdown over mixed scorers/levels: {sorted(keys)}")
    by_gold: dict[str, list[TaskResult]] = {}
    for r in results:
        by_gold.setdefault(r.verdicts[0].gold_case, []).append(r)

    out: dict[str, CasePreference] = {}
    for gold in CASES:
        tasks = by_gold.get(gold, [])
        others = [c for c in CASE_DISPLAY_ORDER if c != gold]
        per_task: dict[str, TaskPreference] = {}
        pooled_counts = {c: 0 for c in others}
        pooled_ties = 0
        for r in sorted(tasks, key=lambda r: r.task_id):
            counts = {c: 0 for c in others}
            ties = 0
            for v in r.verdicts:
                if v.correct:
                    continue
                if v.tie:
                    ties += 1
                    continue
                counts[v.preferred_case] += 1
            failures = sum(counts.values())
            pct = {
                c: (100.0 * counts[c] / failures) if failures else 0.0 for c in others
            }
            per_task[r.task_id] = TaskPreference(failures=failures, ties=ties,
                                                 counts=counts, pct=pct)
            for c in others:
                pooled_counts[c] += counts[c]
            pooled_ties += ties

        total_failures = sum(pooled_counts.values())
        if not tasks or total_failures == 0:
            out[gold] = CasePreference(
                gold_case=gold, defined=False, failures=0, ties=pooled_ties,
                per_task=per_task, pooled_test_pct={}, pooled_task_pct={},
                sigma_population={}, sigma_sample={},
            )
            continue

        failing = [tp for tp in per_task.values() if tp.failures > 0]
        pooled_test = {c: 100.0 * pooled_counts[c] / total_failures for c in others}
        pooled_task = {
            c: math.fsum(tp.pct[c] for tp in failing) / len(failing) for c in others
        }
        sigma_pop = {c: _pop_sigma([tp.pct[c] for tp in failing]) for c in others}
        sigma_smp = {c: _sample_sigma([tp.pct[c] for tp in failing]) for c in others}
        out[gold] = CasePreference(
            gold_case=gold, defined=True, failures=total_failures, ties=pooled_ties,
            per_task=per_task, pooled_test_pct=pooled_test, pooled_task_pct=pooled_task,
            sigma_population=sigma_pop, sigma_sample=sigma_smp,
        )
    return out


# --- correlations ------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p: float
    n: int
    variable: str = ""
    gold_case: str = ""
    scorer_id: str = ""
    level: str = ""
    unit: str = "test"


def pearson(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """Sample Pearson r with a two-sided p from the t-distribution (n-2 df)."""
    if len(xs) != len(ys):
        raise ContractError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 3:
        raise ContractError(f"need at least 3 observations, got {n}")
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("pearson r undefined: zero variance")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        p = 0.0
    else:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p = 2.0 * float(_scipy_stats.t.sf(abs(t), n - 2))
    return CorrelationResult(r=r, p=p, n=n)


def _verdict_length(verdict, variable: str) -> float:
    if variable == "target_token_length":
        return float(verdict.gold_target_tokens)
    return float(verdict.gold_sentence_tokens)


def correlation_rows(
    results: Sequence[TaskResult], unit: str = "test"
) -> tuple[list[CorrelationResult], list[str]]:
    """Correctness-vs-length correlations per scorer, level, and gold case.

    unit="test" correlates the per-test binary verdict with the gold
    candidate's tokenized length (point-biserial). unit="task" correlates
    task accuracies with task mean lengths. Undefined groups (too few
    observations or no variance) are skipped with a notice.
    """
    if unit not in ("test", "task"):
        raise ContractError(f"unknown correlation unit {unit!r}")
    rows: list[CorrelationResult] = []
    notices: list[str] = []
    grouped: dict[tuple[str, str, str], list[TaskResult]] = {}
    for r in results:
        grouped.setdefault((r.scorer_id, r.level, r.verdicts[0].gold_case), []).append(r)
    for (scorer_id, level, gold) in sorted(grouped):
        tasks = grouped[(scorer_id, level, gold)]
        for variable in VARIABLES:
            if unit == "test":
                xs = [1.0 if v.correct else 0.0 for t in tasks for v in t.verdicts]
                ys = [_verdict_length(v, variable) for t in tasks for v in t.verdicts]
            else:
                xs = [t.accuracy for t in tasks]
                ys = [
                    math.fsum(_verdict_length(v, variable) for v in t.verdicts) / t.n
                    for t in tasks
                ]
            label = f"{scorer_id}/{level}/{gold}/{variable}/unit={unit}"
            try:
                res = pearson(xs, ys)
            except (ValueError, ContractError) as err:
                notices.append(f"correlation skipped for {label}: {err}")
                continue
            rows.append(
                replace(res, variable=variable, gold_case=gold,
                        scorer_id=scorer_id, level=level, unit=unit)
            )
    return rows, notices


# --- token length and probability summaries ----------------------------------

def token_length_stats(records: Iterable[ScoreRecord]) -> dict[str, float]:
    """Arithmetic mean target token count per scorer, over all candidates."""
    sums: dict[str, list[int]] = {}
    for record in records:
        acc = sums.setdefault(record.scorer_id, [0, 0])
        for cand in record.candidates:
            acc[0] += cand.target_token_count
            acc[1] += 1
    return {scorer: total / n for scorer, (total, n) in sorted(sums.items())}


@dataclass(frozen=True)
class AvgProbabilityRow:
    scorer_id: str
    task_id: str
    case: str
    n: int
    geometric_mean: float
    arithmetic_mean: float


def avg_probability_rows(
    tests_by_id: dict[str, MinimalSetTest], records: Sequence[ScoreRecord]
) -> list[AvgProbabilityRow]:
    """Mean word-level probability each scorer assigns to every case.

    Only scorers reporting word-level values contribute. Both the
    geometric mean (exp of mean log-probability) and the arithmetic mean
    of plain probabilities are emitted.
    """
    acc: dict[tuple[str, str, str], list[float]] = {}
    for record in records:
        test = tests_by_id.get(record.test_id)
        if test is None:
            continue
        for cand in record.candidates:
            if cand.wl_logprob is None:
                continue
            acc.setdefault((record.scorer_id, test.task_id, cand.case), []).append(
                cand.wl_logprob
            )
    rows = []
    for (scorer_id, task_id, case) in sorted(
        acc, key=lambda k: (k[0], TASK_IDS.index(k[1]) if k[1] in TASK_IDS else 99, k[2])
    ):
        logs = acc[(scorer_id, task_id, case)]
        rows.append(
            AvgProbabilityRow(
                scorer_id=scorer_id,
                task_id=task_id,
                case=case,
                n=len(logs),
                geometric_mean=math.exp(math.fsum(logs) / len(logs)),
                arithmetic_mean=math.fsum(math.exp(v) for v in logs) / len(logs),
            )
        )
    return rows


# --- pooled accuracy ----------------------------------------------------------

@dataclass(frozen=True)
class PooledAccuracy:
    scorer_id: str
    level: str
    gold_case: str
    n: int
    n_correct: int
    accuracy: float


def pooled_accuracy_by_gold(results: Sequence[TaskResult]) -> list[PooledAccuracy]:
    """Test-weighted accuracy pooled over tasks sharing a gold case."""
    grouped: dict[tuple[str, str, str], list[TaskResult]] = {}
    for r in results:
        grouped.setdefault((r.scorer_id, r.level, r.verdicts[0].gold_case), []).append(r)
    pooled = []
    for key in sorted(grouped):
        tasks = grouped[key]
        n = sum(t.n for t in tasks)
        n_correct = sum(t.n_correct for t in tasks)
        pooled.append(
            PooledAccuracy(
                scorer_id=key[0], level=key[1], gold_case=key[2],
                n=n, n_correct=n_correct, accuracy=n_correct / n,
            )
        )
    return pooled


# --- report assembly -----------------------------------------------------------

@dataclass
class Report:
    results: list[TaskResult]
    pooled: list[PooledAccuracy]
    preferences: dict[tuple[str, str], dict[str, CasePreference]]  # (scorer, level) ->
    correlations: list[CorrelationResult]
    notices: list[str]
    mean_target_lengths: dict[str, float]
    avg_probability: list[AvgProbabilityRow]
    corr_unit: str = "test"


def build_report(
    results: Sequence[TaskResult],
    records: Sequence[ScoreRecord],
    tests_by_id: dict[str, MinimalSetTest],
    corr_unit: str = "test",
) -> Report:
    if not results:
        raise ContractError("report needs at least one task result")
    preferences = {}
    for scorer_id in sorted({r.scorer_id for r in results}):
        for level in LEVELS:
            subset = [r for r in results if r.scorer_id == scorer_id and r.level == level]
            if subset:
                preferences[(scorer_id, level)] = preference_breakdown(subset)
    correlations, notices = correlation_rows(results, unit=corr_unit)
    return Report(
        results=sorted(results, key=lambda r: (r.scorer_id, r.level,
                                               TASK_IDS.index(r.task_id)
                                               if r.task_id in TASK_IDS else 99)),
        pooled=pooled_accuracy_by_gold(results),
        preferences=preferences,
        correlations=correlations,
        notices=notices,
        mean_target_lengths=token_length_stats(records),
        avg_probability=avg_probability_rows(tests_by_id, records),
        corr_unit=corr_unit,
    )


def _fmt_pct(value: float) -> str:
    return f"{value:.1f}"


def _fmt_sig(value: float) -> str:
    return f"{value:.2g}"


_CASE_NAMES = {"Nom": "nominative", "Erg": "ergative", "Dat": "dative"}


def emit_report(report: Report) -> str:
    """Render the consolidated human-readable report deterministically."""
    lines: list[str] = []
    out = lines.append
    out("Georgian case-alignment evaluation")
    out("==================================")
    out("")

    task_ids = [t for t in TASK_IDS if any(r.task_id == t for r in report.results)]
    extra = sorted({r.task_id for r in report.results} - set(task_ids))
    task_ids += extra
    for level, title in (("WL", "Word-level accuracy (%)"),
                         ("SL", "Sentence-level accuracy (%)")):
        rows = [r for r in report.results if r.level == level]
        if not rows:
            continue
        out(title)
        header = ["scorer"] + task_ids
        table = []
        for scorer_id in sorted({r.scorer_id for r in rows}):
            cells = [scorer_id]
            by_task = {r.task_id: r for r in rows if r.scorer_id == scorer_id}
            for task in task_ids:
                r = by_task.get(task)
                cells.append(_fmt_pct(100.0 * r.accuracy) if r else "-")
            table.append(cells)
        lines.extend(_format_table(header, table))
        out("")

    out("Pooled accuracy by required case (%) [test-weighted]")
    header = ["scorer", "level"] + [f"{c}" for c in CASE_DISPLAY_ORDER]
    table = []
    for scorer_id in sorted({p.scorer_id for p in report.pooled}):
        for level in LEVELS:
            entries = {p.gold_case: p for p in report.pooled
                       if p.scorer_id == scorer_id and p.level == level}
            if not entries:
                continue
            table.append(
                [scorer_id, level]
                + [_fmt_pct(100.0 * entries[c].accuracy) if c in entries else "-"
                   for c in CASE_DISPLAY_ORDER]
            )
    lines.extend(_format_table(header, table))
    out("")

    out("Preferred case on failed tests")
    for (scorer_id, level) in sorted(report.preferences):
        breakdown = report.preferences[(scorer_id, level)]
        for gold in CASE_DISPLAY_ORDER:
            pref = breakdown.get(gold)
            if pref is None:
                continue
            prefix = f"  {scorer_id} {level} gold={gold}:"
            if not pref.defined:
                out(f"{prefix} no failed tests (undefined)")
                continue
            parts = []
            for case in CASE_DISPLAY_ORDER:
                if case == gold or case not in pref.pooled_test_pct:
                    continue
                sigma = pref.sigma_population[case]
                parts.append(
                    f"{_CASE_NAMES[case]} {_fmt_pct(pref.pooled_test_pct[case])}%"
                    f" (σ={_fmt_pct(sigma)} over {len(pref.per_task)} task(s))"
                )
            tie_note = f"; ties={pref.ties}" if pref.ties else ""
            out(f"{prefix} {pref.failures} failures; " + "; ".join(parts) + tie_note)
    out("")

    out(f"Tokenized-length correlations (Pearson; unit={report.corr_unit})")
    if report.correlations:
        header = ["scorer", "level", "gold", "variable", "n", "r", "p"]
        table = [
            [c.scorer_id, c.level, c.gold_case, c.variable, str(c.n),
             _fmt_sig(c.r), _fmt_sig(c.p)]
            for c in report.correlations
        ]
        lines.extend(_format_table(header, table))
    else:
        out("  no correlations computed")
    for notice in report.notices:
        out(f"  note: {notice}")
    out("")

    out("Mean target token length per scorer")
    for scorer_id, mean in report.mean_target_lengths.items():
        out(f"  {scorer_id}: {mean:.1f}")
    out("")

    if report.avg_probability:
        out("Mean word-level probability per case (geometric / arithmetic)")
        header = ["scorer", "task", "case", "n", "geometric", "arithmetic"]
        table = [
            [row.scorer_id, row.task_id, row.case, str(row.n),
             f"{row.geometric_mean:.4f}", f"{row.arithmetic_mean:.4f}"]
            for row in report.avg_probability
        ]
        lines.extend(_format_table(header, table))
        out("")
    return "\n".join(lines) + "\n"


def _format_table(header: list[str], rows: list[list[str]]) -> list[str]:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    return [fmt(header)] + [fmt(r) for r in rows]


# --- machine-readable rows -----------------------------------------------------

def accuracy_tsv_rows(report: Report) -> list[list[str]]:
    rows = [["scorer_id", "level", "task_id", "gold_case", "n", "n_correct",
             "accuracy", "ties"]]
    for r in report.results:
        rows.append([
            r.scorer_id, r.level, r.task_id, r.verdicts[0].gold_case,
            str(r.n), str(r.n_correct), repr(r.accuracy), str(r.ties),
        ])
    for p in report.pooled:
        rows.append([
            p.scorer_id, p.level, "pooled", p.gold_case,
            str(p.n), str(p.n_correct), repr(p.accuracy), "",
        ])
    return rows


def preferences_tsv_rows(report: Report) -> list[list[str]]:
    rows = [["scorer_id", "level", "gold_case", "scope", "preferred_case",
             "count", "value"]]
    for (scorer_id, level) in sorted(report.preferences):
        breakdown = report.preferences[(scorer_id, level)]
        for gold in CASE_DISPLAY_ORDER:
            pref = breakdown.get(gold)
            if pref is None:
                continue
            if not pref.defined:
                rows.append([scorer_id, level, gold, "undefined", "", "", ""])
                continue
            for task_id, tp in pref.per_task.items():
                for case, count in tp.counts.items():
                    rows.append([scorer_id, level, gold, task_id, case,
                                 str(count), repr(tp.pct[case])])
                rows.append([scorer_id, level, gold, task_id, "ties",
                             str(tp.ties), ""])
            for case in pref.pooled_test_pct:
                rows.append([scorer_id, level, gold, "pooled-test", case,
                             "", repr(pref.pooled_test_pct[case])])
                rows.append([scorer_id, level, gold, "pooled-task", case,
                             "", repr(pref.pooled_task_pct[case])])
                rows.append([scorer_id, level, gold, "sigma-population", case,
                             "", repr(pref.sigma_population[case])])
                smp = pref.sigma_sample[case]
                rows.append([scorer_id, level, gold, "sigma-sample", case,
                             "", "" if smp is None else repr(smp)])
    return rows


def correlations_tsv_rows(report: Report) -> list[list[str]]:
    rows = [["scorer_id", "level", "gold_case", "variable", "unit", "n", "r", "p"]]
    for c in report.correlations:
        rows.append([c.scorer_id, c.level, c.gold_case, c.variable, c.unit,
                     str(c.n), repr(c.r), repr(c.p)])
    return rows


def avg_probability_tsv_rows(report: Report) -> list[list[str]]:
    rows = [["scorer_id", "task_id", "case", "n", "geometric_mean_prob",
             "arithmetic_mean_prob"]]
    for row in report.avg_probability:
        rows.append([row.scorer_id, row.task_id, row.case, str(row.n),
                     repr(row.geometric_mean), repr(row.arithmetic_mean)])
    return rows
