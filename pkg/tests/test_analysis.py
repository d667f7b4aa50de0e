import math
import random

import pytest
from scipy import stats as scipy_stats

from geocase.analysis import (
    avg_probability_rows,
    build_report,
    correlation_rows,
    emit_report,
    pearson,
    pooled_accuracy_by_gold,
    preference_breakdown,
    token_length_stats,
)
from geocase.errors import ContractError
from geocase.lexicon import CASES
from geocase.minsets import Candidate, MinimalSetTest, PLACEHOLDER
from geocase.scoring import CandidateScore, ScoreRecord, TaskResult, Verdict
from oracles import oracle_pearson_r


def make_verdict(i, task_id, gold, preferred=None, tie=False,
                 target_len=2, sent_len=8, level="WL"):
    preferred = preferred or gold
    return Verdict(
        test_id=f"{task_id}-{i:03d}",
        task_id=task_id,
        gold_case=gold,
        level=level,
        correct=(preferred == gold and not tie),
        preferred_case=preferred,
        tie=tie,
        gold_target_tokens=target_len,
        gold_sentence_tokens=sent_len,
    )


def make_result(task_id, gold, verdict_plan, scorer_id="m1", level="WL"):
    """verdict_plan: list of (preferred, tie) or (preferred, tie, target_len, sent_len)."""
    verdicts = []
    for i, plan in enumerate(verdict_plan, start=1):
        preferred, tie, *rest = plan
        target_len = rest[0] if rest else 2
        sent_len = rest[1] if len(rest) > 1 else 8
        verdicts.append(
            make_verdict(i, task_id, gold, preferred, tie, target_len, sent_len, level)
        )
    n_correct = sum(1 for v in verdicts if v.correct)
    return TaskResult(
        task_id=task_id, scorer_id=scorer_id, level=level,
        n=len(verdicts), n_correct=n_correct,
        accuracy=n_correct / len(verdicts), verdicts=tuple(verdicts),
    )


# --- pearson -----------------------------------------------------------------

def test_pearson_collinear():
    assert pearson([1, 2, 3], [1, 2, 3]).r == pytest.approx(1.0)
    assert pearson([1, 2, 3], [3, 2, 1]).r == pytest.approx(-1.0)
    assert pearson([1, 2, 3], [1, 2, 3]).p == 0.0


def test_pearson_small_fixture_matches_oracle():
    xs, ys = [1.0, 2.0, 3.0, 4.0], [2.0, 1.0, 4.0, 3.0]
    res = pearson(xs, ys)
    assert abs(res.r - oracle_pearson_r(xs, ys)) < 1e-9
    ref_r, ref_p = scipy_stats.pearsonr(xs, ys)
    assert res.r == pytest.approx(float(ref_r), abs=1e-12)
    assert res.p == pytest.approx(float(ref_p), rel=1e-9)


def test_pearson_random_against_oracle_and_scipy():
    rng = random.Random(424242)
    for _ in range(200):
        n = rng.randint(3, 40)
        xs = [rng.uniform(-50, 50) for _ in range(n)]
        ys = [rng.uniform(-50, 50) for _ in range(n)]
        if len(set(xs)) == 1 or len(set(ys)) == 1:
            continue
        res = pearson(xs, ys)
        assert abs(res.r - oracle_pearson_r(xs, ys)) < 1e-9
        ref_r, ref_p = scipy_stats.pearsonr(xs, ys)
        assert res.r == pytest.approx(float(ref_r), abs=1e-9)
        assert res.p == pytest.approx(float(ref_p), rel=1e-6, abs=1e-12)


def test_pearson_affine_invariance_and_sign_flip():
    rng = random.Random(7)
    xs = [rng.uniform(0, 10) for _ in range(25)]
    ys = [rng.uniform(0, 10) for _ in range(25)]
    base = pearson(xs, ys).r
    scaled = pearson([3.5 * x + 11.0 for x in xs], ys).r
    assert scaled == pytest.approx(base, abs=1e-12)
    flipped = pearson([-x for x in xs], ys).r
    assert flipped == pytest.approx(-base, abs=1e-12)


def test_pearson_errors():
    with pytest.raises(ValueError):
        pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ContractError):
        pearson([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ContractError):
        pearson([1.0, 2.0, 3.0], [1.0, 2.0])


# --- preference breakdown ------------------------------------------------------

def test_preferences_all_nom_on_dative_failures():
    result = make_result(
        "transitive-nom-dat-obj", "Dat",
        [("Nom", False)] * 10 + [("Dat", False)] * 5,
    )
    breakdown = preference_breakdown([result])
    pref = breakdown["Dat"]
    assert pref.defined
    assert pref.pooled_test_pct["Nom"] == pytest.approx(100.0)
    assert pref.sigma_population["Nom"] == pytest.approx(0.0)
    assert pref.failures == 10


def test_preferences_two_task_sigma_is_half_gap():
    task1 = make_result(
        "transitive-nom-dat-obj", "Dat",
        [("Nom", False)] * 42 + [("Erg", False)] * 8 + [("Dat", False)] * 10,
    )
    task2 = make_result(
        "transitive-dat-nom-subj", "Dat",
        [("Nom", False)] * 41 + [("Erg", False)] * 9 + [("Dat", False)] * 10,
    )
    breakdown = preference_breakdown([task1, task2])
    pref = breakdown["Dat"]
    assert pref.per_task["transitive-nom-dat-obj"].pct["Nom"] == pytest.approx(84.0)
    assert pref.per_task["transitive-dat-nom-subj"].pct["Nom"] == pytest.approx(82.0)
    assert pref.sigma_population["Nom"] == pytest.approx(1.0)
    assert pref.sigma_sample["Nom"] == pytest.approx(math.sqrt(2.0))
    assert pref.pooled_test_pct["Nom"] == pytest.approx(83.0)
    assert pref.pooled_task_pct["Nom"] == pytest.approx(83.0)


def test_preferences_percentages_sum_to_100():
    rng = random.Random(17)
    for _ in range(20):
        plan = []
        for _ in range(rng.randint(1, 60)):
            preferred = rng.choice(("Nom", "Erg", "Dat"))
            tie = rng.random() < 0.15
            plan.append((preferred, tie))
        result = make_result("transitive-nom-dat-subj", "Nom", plan)
        pref = preference_breakdown([result])["Nom"]
        if pref.defined:
            assert sum(pref.pooled_test_pct.values()) == pytest.approx(100.0, abs=1e-9)


def test_preferences_no_failures_undefined():
    result = make_result("transitive-erg-nom-subj", "Erg", [("Erg", False)] * 5)
    breakdown = preference_breakdown([result])
    assert not breakdown["Erg"].defined
    assert not breakdown["Nom"].defined  # no nominative-gold tasks at all


def test_preferences_ties_excluded_but_counted():
    result = make_result(
        "transitive-erg-nom-subj", "Erg",
        [("Nom", False)] * 3 + [("Nom", True)] * 2,
    )
    pref = preference_breakdown([result])["Erg"]
    assert pref.failures == 3
    assert pref.ties == 2
    assert pref.pooled_test_pct["Nom"] == pytest.approx(100.0)


def test_preferences_reject_mixed_scorers():
    a = make_result("transitive-erg-nom-subj", "Erg", [("Nom", False)], scorer_id="a")
    b = make_result("transitive-erg-nom-obj", "Nom", [("Nom", False)], scorer_id="b")
    with pytest.raises(ContractError):
        preference_breakdown([a, b])


# --- correlations over verdicts -------------------------------------------------

def test_correlation_rows_point_biserial():
    # longer targets fail more often: negative r expected
    plan = [("Nom", False, 1, 5)] * 10 + [("Erg", False, 4, 9)] * 10
    result = make_result("transitive-nom-dat-subj", "Nom", plan)
    rows, notices = correlation_rows([result])
    assert notices == []
    by_var = {r.variable: r for r in rows}
    assert by_var["target_token_length"].r < 0
    assert by_var["sentence_token_length"].r < 0
    assert by_var["target_token_length"].n == 20
    # hand check against pearson on the raw columns
    xs = [1.0] * 10 + [0.0] * 10
    ys = [1.0] * 10 + [4.0] * 10
    assert by_var["target_token_length"].r == pytest.approx(pearson(xs, ys).r)


def test_correlation_rows_skip_degenerate_groups():
    result = make_result("transitive-nom-dat-subj", "Nom", [("Nom", False, 2, 8)] * 10)
    rows, notices = correlation_rows([result])
    assert rows == []
    assert len(notices) == 2  # both variables skipped: no variance in correctness
    rows_task, notices_task = correlation_rows([result], unit="task")
    assert rows_task == []
    assert notices_task  # a single task cannot support a correlation


# --- summaries -------------------------------------------------------------------

def _uniform_record(test_id, scorer_id, count, wl=-1.0):
    return ScoreRecord(
        test_id=test_id, scorer_id=scorer_id, scorer_kind="masked",
        candidates=tuple(
            CandidateScore(case=c, sl_logprob=-5.0, wl_logprob=wl,
                           target_token_count=count, sentence_token_count=10)
            for c in CASES
        ),
    )


def test_token_length_stats():
    records = [_uniform_record(f"t-{i}", "m1", c) for i, c in enumerate((4, 4, 5))]
    stats = token_length_stats(records)
    assert stats["m1"] == pytest.approx((4 + 4 + 5) / 3)
    assert token_length_stats([_uniform_record("t", "m2", 2)])["m2"] == 2.0


def test_token_length_ordering_preserved():
    plans = {
        "a-wordpiece": [4] * 9 + [5],       # mean 4.1
        "b-sentencepiece": [2] * 7 + [3] * 3,  # 2.3
        "c-sentencepiece": [2] * 8 + [3] * 2,  # 2.2
        "d-sentencepiece": [2] * 9 + [3],      # 2.1
        "e-monolingual": [1] * 6 + [2] * 4,    # 1.4
    }
    records = []
    for scorer, counts in plans.items():
        records += [_uniform_record(f"{scorer}-{i}", scorer, c)
                    for i, c in enumerate(counts)]
    stats = token_length_stats(records)
    assert stats["a-wordpiece"] == pytest.approx(4.1)
    assert stats["e-monolingual"] == pytest.approx(1.4)
    ordered = sorted(stats, key=stats.get, reverse=True)
    assert ordered == list(plans)


def _mk_test(test_id, task_id, gold="Nom"):
    return MinimalSetTest(
        test_id=test_id, task_id=task_id,
        context=f"{PLACEHOLDER} x y",
        candidates=(Candidate("a", "Nom"), Candidate("am", "Erg"), Candidate("as", "Dat")),
        gold_case=gold, source_sent_id="s", lemma="a", number="Sing",
    )


def test_avg_probability_rows_geometric_and_arithmetic():
    tests = {"t-1": _mk_test("t-1", "intransitive-nom-subj"),
             "t-2": _mk_test("t-2", "intransitive-nom-subj")}
    records = [
        _uniform_record("t-1", "m1", 1, wl=math.log(0.2)),
        _uniform_record("t-2", "m1", 1, wl=math.log(0.8)),
    ]
    rows = avg_probability_rows(tests, records)
    nom = next(r for r in rows if r.case == "Nom")
    assert nom.n == 2
    assert nom.geometric_mean == pytest.approx(math.sqrt(0.2 * 0.8))
    assert nom.arithmetic_mean == pytest.approx(0.5)
    # causal records without wl contribute nothing
    causal = ScoreRecord(
        test_id="t-1", scorer_id="c1", scorer_kind="causal",
        candidates=tuple(CandidateScore(c, -5.0, None, 1, 10) for c in CASES),
    )
    assert all(r.scorer_id != "c1" for r in avg_probability_rows(tests, [causal]))


def test_pooled_accuracy_test_weighted():
    a = make_result("transitive-erg-nom-obj", "Nom", [("Nom", False)] * 8 + [("Dat", False)] * 2)
    b = make_result("intransitive-nom-subj", "Nom", [("Nom", False)] * 3 + [("Dat", False)] * 7)
    pooled = pooled_accuracy_by_gold([a, b])
    assert len(pooled) == 1
    entry = pooled[0]
    assert entry.n == 20
    assert entry.n_correct == 11
    assert entry.accuracy == pytest.approx(11 / 20)
    # equals the recount from raw verdicts
    raw = [v.correct for r in (a, b) for v in r.verdicts]
    assert entry.accuracy == pytest.approx(sum(raw) / len(raw))


# --- report ---------------------------------------------------------------------

def _small_report():
    results = [
        make_result("intransitive-nom-subj", "Nom",
                    [("Nom", False, 1, 5)] * 6 + [("Dat", False, 3, 9)] * 4,
                    scorer_id="m1"),
        make_result("transitive-erg-nom-subj", "Erg",
                    [("Nom", False, 2, 7)] * 5 + [("Erg", False, 2, 6)] * 5,
                    scorer_id="m1"),
        make_result("intransitive-nom-subj", "Nom",
                    [("Nom", False, 1, 5)] * 10,
                    scorer_id="m2", level="SL"),
    ]
    tests = {}
    records = []
    for r in results:
        for v in r.verdicts:
            tests[v.test_id] = _mk_test(v.test_id, r.task_id, gold=v.gold_case)
    records = [_uniform_record(t, "m1", 2, wl=math.log(0.3)) for t in tests]
    return results, records, tests


def test_emit_report_deterministic_and_shaped():
    results, records, tests = _small_report()
    report = build_report(results, records, tests)
    text1 = emit_report(report)
    text2 = emit_report(build_report(results, records, tests))
    assert text1 == text2
    assert "Word-level accuracy (%)" in text1
    assert "Sentence-level accuracy (%)" in text1
    assert "intransitive-nom-subj" in text1
    assert "m1" in text1 and "m2" in text1
    # scorers are sorted in each section
    wl_section = text1.split("Word-level accuracy")[1].split("Sentence-level")[0]
    assert wl_section.index("m1") < len(wl_section)


def test_emit_report_empty_correlations_notice():
    result = make_result("intransitive-nom-subj", "Nom", [("Nom", False, 2, 8)] * 5)
    records, tests = [], {}
    for v in result.verdicts:
        tests[v.test_id] = _mk_test(v.test_id, result.task_id)
        records.append(_uniform_record(v.test_id, "m1", 2))
    report = build_report([result], records, tests)
    text = emit_report(report)
    assert "no correlations computed" in text
    assert "note:" in text
