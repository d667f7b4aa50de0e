import random

import pytest

from geocase.conllu import Treebank, parse_conllu_text
from geocase.errors import ContractError
from geocase.lexicon import (
    CASES,
    SupplementError,
    build_lexicon,
    case_frequencies,
    merge_supplement,
    parse_supplement,
)


def _noun_line(i, form, lemma, case, number="Sing", upos="NOUN"):
    return f"{i}\t{form}\t{lemma}\t{upos}\t_\tCase={case}|Number={number}\t0\troot\t_\t_"


def _single_token_sentences(specs):
    blocks = []
    for n, (form, lemma, case, *rest) in enumerate(specs, start=1):
        number = rest[0] if rest else "Sing"
        blocks.append(f"# sent_id = s{n}\n" + _noun_line(1, form, lemma, case, number) + "\n")
    return parse_conllu_text("\n".join(blocks))


def test_complete_paradigm_from_treebank(micro_treebank):
    lex = build_lexicon(micro_treebank)
    bav = lex.get("bavshvi", "Sing")
    assert bav is not None and bav.complete and not bav.syncretic
    assert bav.forms == {"Nom": "bavshvi", "Erg": "bavshvma", "Dat": "bavshvs"}
    assert all(v == "treebank" for v in bav.provenance.values())
    mama = lex.get("mama", "Sing")
    assert mama.complete
    assert mama.forms == {"Nom": "mama", "Erg": "mamam", "Dat": "mamas"}


def test_incomplete_paradigm_excluded_until_supplemented(micro_treebank):
    lex = build_lexicon(micro_treebank)
    sakhli = lex.get("sakhli", "Sing")
    assert sakhli is not None and not sakhli.complete
    assert set(sakhli.forms) == {"Nom", "Dat"}
    rows = parse_supplement(["sakhli\tSing\tErg\tsakhlma\ta01"])
    merged = merge_supplement(lex, rows)
    got = merged.get("sakhli", "Sing")
    assert got.complete
    assert got.forms["Erg"] == "sakhlma"
    assert got.provenance["Erg"] == "supplement"
    # original untouched
    assert not lex.get("sakhli", "Sing").complete


def test_empty_treebank_empty_lexicon():
    assert len(build_lexicon(Treebank(graphs=[]))) == 0


def test_majority_vote_and_tie_reporting():
    tb = _single_token_sentences(
        [
            ("deda", "deda", "Nom"),
            ("dedaa", "deda", "Nom"),
            ("deda", "deda", "Nom"),
            ("dzma", "dzma", "Nom"),
            ("dzmaa", "dzma", "Nom"),
        ]
    )
    lex = build_lexicon(tb)
    assert lex.get("deda", "Sing").forms["Nom"] == "deda"  # 2 vs 1
    assert lex.get("dzma", "Sing").forms["Nom"] == "dzma"  # tie, first occurrence
    assert ("dzma", "Sing", "Nom", "dzma", "dzmaa") in lex.report.ties
    assert not any(t[0] == "deda" for t in lex.report.ties)


def test_skip_reporting_for_missing_lemma_and_number():
    src = (
        "1\tformonly\t_\tNOUN\t_\tCase=Nom|Number=Sing\t0\troot\t_\t_\n"
        "2\tnonum\tnonum\tNOUN\t_\tCase=Nom\t1\tnmod\t_\t_\n"
    )
    lex = build_lexicon(parse_conllu_text(src))
    assert len(lex) == 0
    assert lex.report.skipped_missing_lemma == 1
    assert lex.report.skipped_missing_number == 1


def test_only_listed_upos_enter_lexicon(micro_treebank):
    src = (
        "1\tme\tme\tPRON\t_\tCase=Nom|Number=Sing\t0\troot\t_\t_\n"
        "2\tbavshvi\tbavshvi\tNOUN\t_\tCase=Nom|Number=Sing\t1\tnmod\t_\t_\n"
    )
    tb = parse_conllu_text(src)
    assert set(build_lexicon(tb).paradigms) == {("bavshvi", "Sing")}
    with_pron = build_lexicon(tb, upos=("NOUN", "PRON"))
    assert set(with_pron.paradigms) == {("bavshvi", "Sing"), ("me", "Sing")}


def test_paradigms_keyed_by_number():
    tb = _single_token_sentences(
        [
            ("bavshvi", "bavshvi", "Nom", "Sing"),
            ("bavshvebi", "bavshvi", "Nom", "Plur"),
        ]
    )
    lex = build_lexicon(tb)
    assert lex.get("bavshvi", "Sing").forms["Nom"] == "bavshvi"
    assert lex.get("bavshvi", "Plur").forms["Nom"] == "bavshvebi"


def test_syncretic_paradigm_flagged():
    tb = _single_token_sentences(
        [
            ("kva", "kva", "Nom"),
            ("kva", "kva", "Dat"),  # irregular: same surface form
            ("kvam", "kva", "Erg"),
        ]
    )
    p = build_lexicon(tb).get("kva", "Sing")
    assert p.complete and p.syncretic


def test_supplement_conflict_rejected(micro_treebank):
    lex = build_lexicon(micro_treebank)
    rows = parse_supplement(["bavshvi\tSing\tNom\tbavshviX\ta01"])
    merged = merge_supplement(lex, rows)
    assert merged.get("bavshvi", "Sing").forms["Nom"] == "bavshvi"
    assert ("bavshvi", "Sing", "Nom", "bavshvi", "bavshviX") in merged.report.conflicts


def test_supplement_idempotent(micro_treebank):
    lex = build_lexicon(micro_treebank)
    rows = parse_supplement(
        ["sakhli\tSing\tErg\tsakhlma\ta01", "surati\tSing\tDat\tsurats\ta01"]
    )
    once = merge_supplement(lex, rows)
    twice = merge_supplement(once, rows)
    assert once.paradigms == twice.paradigms
    assert once.report.conflicts == twice.report.conflicts


def test_empty_supplement_noop(micro_treebank):
    lex = build_lexicon(micro_treebank)
    assert merge_supplement(lex, []).paradigms == lex.paradigms


@pytest.mark.parametrize(
    "line,fragment",
    [
        ("sakhli\tSing\tErg\tsakhlma", "5 tab-separated columns"),
        ("sakhli\tSing\tGen\tsakhlis\ta01", "unknown case"),
        ("sakhli\tDual\tErg\tsakhlma\ta01", "unknown number"),
        ("\tSing\tErg\tsakhlma\ta01", "empty lemma"),
    ],
)
def test_supplement_load_errors(line, fragment):
    with pytest.raises(SupplementError) as err:
        parse_supplement(["# comment", "", line])
    assert fragment in str(err.value)
    assert err.value.row_no == 3


def test_supplement_comments_and_blanks_skipped():
    rows = parse_supplement(["# header", "", "a\tSing\tErg\tam\tann-1"])
    assert len(rows) == 1
    assert rows[0].annotator == "ann-1"


def test_case_frequencies(micro_treebank):
    table = case_frequencies(micro_treebank)
    assert table.counts == {"Nom": 7, "Erg": 3, "Dat": 3}
    assert table.total == 13
    assert abs(sum(table.rel(c) for c in CASES) - 1.0) < 1e-12


def test_case_frequencies_uniform():
    tb = _single_token_sentences(
        [("a", "a", "Nom"), ("bm", "b", "Erg"), ("cs", "c", "Dat")]
    )
    table = case_frequencies(tb)
    for case in CASES:
        assert table.rel(case) == pytest.approx(1 / 3)


def test_case_frequencies_all_zero_errors():
    with pytest.raises(ContractError):
        case_frequencies(Treebank(graphs=[]))


def test_case_frequencies_additive(micro_treebank):
    half_a = Treebank(graphs=micro_treebank.graphs[:2])
    half_b = Treebank(graphs=micro_treebank.graphs[2:])
    whole = case_frequencies(micro_treebank)
    a = case_frequencies(half_a)
    b = case_frequencies(half_b)
    for case in CASES:
        assert a.counts[case] + b.counts[case] == whole.counts[case]


def test_build_lexicon_order_stable_under_permutation(micro_treebank):
    rng = random.Random(5)
    base = build_lexicon(micro_treebank)
    assert not base.report.ties  # no ties in the micro fixture
    for _ in range(5):
        graphs = list(micro_treebank.graphs)
        rng.shuffle(graphs)
        shuffled = build_lexicon(Treebank(graphs=graphs))
        assert shuffled.paradigms == base.paradigms
