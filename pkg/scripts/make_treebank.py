#!/usr/bin/env python3
"""Build the synthetic Georgian treebank and supplement shipped in data/.

The real GLC UD release cannot be redistributed here, so this script
synthesizes a stand-in corpus with the same headline statistics
(3,013 sentences; Case counts Nom 11,438 / Dat 10,034 / Erg 475) and
enough of each subject-object construction to generate the full seven
datasets once the ergative supplement is merged. Everything is
deterministic: rerunning the script reproduces the same bytes.

Noun morphology follows the regular declension: consonant stems take
-i/-ma/-s for Nom/Erg/Dat, vowel stems take zero/-m/-s. Ergative forms of
the "supplement pool" lemmas never appear in the treebank; the generated
supplement file provides them, mirroring a corpus whose ergative rows
were added by an annotator rather than harvested.

Usage: python3 scripts/make_treebank.py [--out-dir data]
"""
from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from geocase.conllu import DepGraph, Token, TokenRange, EmptyNode, Treebank, write_conllu

SEED = 20250809

TARGET_SENTENCES = 3013
TARGET_COUNTS = {"Nom": 11438, "Dat": 10034, "Erg": 475}

N_INTRANS = 90
N_NOM_DAT = 75
N_ERG_NOM = 70
N_DAT_NOM = 70

VOWELS = "აეიოუ"
CONSONANTS = "ბგდვზთკლმნპჟრსტფქღყშჩცძწჭხჯჰ"

# real nouns seed the pools so the corpus contains genuine Georgian words
REAL_CONS_STEMS = ["ბავშვ", "სახლ", "წიგნ", "სურათ", "კაც", "ქალ", "ხელ", "გზ",
                   "ქალაქ", "სიტყვ", "მთ", "წყალ", "პურ", "ძაღლ", "კატ"]
REAL_VOWEL_STEMS = ["მამა", "დედა", "ბიძა", "დეიდა"]


class Nouns:
    """Unique noun lemmas with full regular declensions."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.used_forms: set[str] = set()
        self.real_cons = list(REAL_CONS_STEMS)
        self.real_vowel = list(REAL_VOWEL_STEMS)

    def _syllable(self) -> str:
        return self.rng.choice(CONSONANTS) + self.rng.choice(VOWELS)

    def _new_root(self) -> tuple[str, bool]:
        if self.real_cons:
            return self.real_cons.pop(0), False
        if self.real_vowel:
            return self.real_vowel.pop(0), True
        vowel_stem = self.rng.random() < 0.25
        n = self.rng.randint(2, 3)
        root = "".join(self._syllable() for _ in range(n))
        if vowel_stem:
            root = root[:-1] + self.rng.choice("აეო")  # vowel stems end in a/e/o
        else:
            root += self.rng.choice(CONSONANTS)
        return root, vowel_stem

    def make(self):
        while True:
            root, vowel_stem = self._new_root()
            entry = NounLemma(root, vowel_stem)
            forms = set(entry.all_forms())
            if len(forms) == 6 and not (forms & self.used_forms):
                self.used_forms |= forms
                return entry


class NounLemma:
    def __init__(self, root: str, vowel_stem: bool):
        self.root = root
        self.vowel_stem = vowel_stem
        self.lemma = self.form("Nom", "Sing")

    def form(self, case: str, number: str) -> str:
        if number == "Plur":
            stem = (self.root[:-1] if self.vowel_stem else self.root) + "ებ"
            return {"Nom": stem + "ი", "Erg": stem + "მა", "Dat": stem + "ს"}[case]
        if self.vowel_stem:
            return {"Nom": self.root, "Erg": self.root + "მ", "Dat": self.root + "ს"}[case]
        return {"Nom": self.root + "ი", "Erg": self.root + "მა", "Dat": self.root + "ს"}[case]

    def all_forms(self):
        return [self.form(c, n) for n in ("Sing", "Plur") for c in ("Nom", "Erg", "Dat")]


REAL_VERBS = [
    # (present, past, perfect) of real verbs anchor the corpus
    ("ხატავს", "დახატა", "დაუხატავს"),
    ("აშენებს", "ააშენა", "აუშენებია"),
    ("ჭამს", "ჭამა", "უჭამია"),
    ("კითხულობს", "წაიკითხა", "წაუკითხავს"),
    ("ხედავს", "დაინახა", "დაუნახავს"),
]


class Verbs:
    def __init__(self, rng: random.Random, used_forms: set[str]):
        self.rng = rng
        self.used = used_forms
        self.real = list(REAL_VERBS)

    def make(self):
        while True:
            if self.real:
                pres, past, perf = self.real.pop(0)
            else:
                stem = self.rng.choice(CONSONANTS) + self.rng.choice(VOWELS) \
                    + self.rng.choice(CONSONANTS) + self.rng.choice(VOWELS)
                pres = stem + "ვს"
                past = "და" + stem + "ა"
                perf = "და" + stem + "ია"
            forms = {pres, past, perf}
            if len(forms) == 3 and not (forms & self.used):
                self.used |= forms
                lemma = pres
                return {"Pres": pres, "Past": past, "Perf": perf, "lemma": lemma}


def make_adverbs(rng: random.Random, used: set[str], n: int) -> list[str]:
    out = []
    while len(out) < n:
        word = rng.choice(CONSONANTS) + rng.choice(VOWELS) + rng.choice(CONSONANTS) + "ად"
        if word not in used:
            used.add(word)
            out.append(word)
    return out


def noun_token(tid: int, entry: NounLemma, case: str, number: str, head: int,
               deprel: str, misc: str = "_") -> Token:
    return Token(tid, entry.form(case, number), entry.lemma, "NOUN", "_",
                 {"Case": case, "Number": number}, head, deprel, "_", misc)


def verb_token(tid: int, verb: dict, screeve: str, head: int, deprel: str,
               misc: str = "_") -> Token:
    feats = {"Pres": {"Tense": "Pres"}, "Past": {"Tense": "Past"},
             "Perf": {"Aspect": "Perf"}}[screeve]
    return Token(tid, verb[screeve], verb["lemma"], "VERB", "_", dict(feats),
                 head, deprel, "_", misc)


def finish_sentence(sent_id: str, tokens: list[Token]) -> DepGraph:
    """Attach the final period and assemble text with SpaceAfter handling."""
    last = tokens[-1]
    tokens[-1] = Token(last.id, last.form, last.lemma, last.upos, last.xpos,
                       last.feats, last.head, last.deprel, last.deps, "SpaceAfter=No")
    root_id = next(t.id for t in tokens if t.head == 0)
    tokens.append(Token(len(tokens) + 1, ".", ".", "PUNCT", "_", {}, root_id,
                        "punct", "_", "_"))
    text = " ".join(t.form for t in tokens[:-1]) + "."
    return DepGraph(
        sent_id=sent_id,
        text=text,
        tokens=tokens,
        comments=[f"# sent_id = {sent_id}", f"# text = {text}"],
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default=str(Path(__file__).resolve().parent.parent / "data"))
    args = parser.parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = random.Random(SEED)
    nouns = Nouns(rng)

    a_subj = [nouns.make() for _ in range(15)]   # ergative attested in the treebank
    a_obj = [nouns.make() for _ in range(15)]
    b_subj = [nouns.make() for _ in range(60)]   # ergative only via the supplement
    b_obj = [nouns.make() for _ in range(60)]
    a_all = a_subj + a_obj
    b_all = b_subj + b_obj

    verbs = Verbs(rng, nouns.used_forms)
    constr_verbs = [verbs.make() for _ in range(13)]
    filler_verbs = [verbs.make() for _ in range(12)]
    adverbs = make_adverbs(rng, nouns.used_forms, 8)

    graphs: list[DepGraph] = []
    case_used = {"Nom": 0, "Dat": 0, "Erg": 0}

    def emit(graph: DepGraph) -> None:
        forms = [t.form for t in graph.tokens]
        assert len(forms) == len(set(forms)), f"duplicate form in {graph.sent_id}: {forms}"
        for t in graph.tokens:
            case = t.feats.get("Case")
            if case:
                case_used[case] += 1
        graphs.append(graph)

    sent_no = 0

    def next_id() -> str:
        nonlocal sent_no
        sent_no += 1
        return f"synth-{sent_no:04d}"

    # intransitive nominative: SUBJ [ADV] V .
    for k in range(N_INTRANS):
        subj = a_subj[k % 15] if k < 20 else b_subj[(k - 20) % 60]
        verb = constr_verbs[k % 13]
        if k % 3 != 0:
            adv = adverbs[k % 8]
            tokens = [
                noun_token(1, subj, "Nom", "Sing", 3, "nsubj"),
                Token(2, adv, adv, "ADV", "_", {}, 3, "advmod", "_", "_"),
                verb_token(3, verb, "Pres", 0, "root"),
            ]
        else:
            tokens = [
                noun_token(1, subj, "Nom", "Sing", 2, "nsubj"),
                verb_token(2, verb, "Pres", 0, "root"),
            ]
        emit(finish_sentence(next_id(), tokens))

    # transitive constructions: SUBJ OBJ V .
    def transitive(n, subj_case, obj_case, screeve, subj_pick, obj_pick):
        for k in range(n):
            subj = subj_pick(k)
            obj = obj_pick(k)
            verb = constr_verbs[(k * 5 + 2) % 13]
            tokens = [
                noun_token(1, subj, subj_case, "Sing", 3, "nsubj"),
                noun_token(2, obj, obj_case, "Sing", 3, "obj"),
                verb_token(3, verb, screeve, 0, "root"),
            ]
            emit(finish_sentence(next_id(), tokens))

    transitive(
        N_NOM_DAT, "Nom", "Dat", "Pres",
        lambda k: a_subj[k % 15] if k < 10 else b_subj[(k - 10) % 60],
        lambda k: a_obj[k % 15] if k >= 65 else b_obj[(k * 7 + 3) % 60],
    )
    transitive(
        N_ERG_NOM, "Erg", "Nom", "Past",
        lambda k: a_subj[k % 15],
        lambda k: a_obj[k % 15] if k < 10 else b_obj[(k * 3 + 1) % 60],
    )
    transitive(
        N_DAT_NOM, "Dat", "Nom", "Perf",
        lambda k: a_subj[k % 15] if k < 10 else b_subj[(k * 11 + 7) % 60],
        lambda k: a_obj[k % 15] if k >= 60 else b_obj[(k * 13 + 5) % 60],
    )

    # filler sentences: oblique noun clusters around a present-tense verb,
    # tuned so the corpus hits the target case counts exactly
    n_filler = TARGET_SENTENCES - sent_no
    remaining = {c: TARGET_COUNTS[c] - case_used[c] for c in TARGET_COUNTS}
    assert all(v >= 0 for v in remaining.values()), remaining
    base_nom, extra_nom = divmod(remaining["Nom"], n_filler)
    base_dat, extra_dat = divmod(remaining["Dat"], n_filler)
    assert remaining["Erg"] <= n_filler

    # guarantee every paradigm the generator relies on is attested:
    # every pool lemma in Nom and Dat, pool A additionally in Erg
    coverage = {
        "Nom": [(entry, "Sing") for entry in a_all + b_all],
        "Dat": [(entry, "Sing") for entry in a_all + b_all],
        "Erg": [(entry, "Sing") for entry in a_all],
    }

    def pick(case: str, used_forms: set[str]):
        queue = coverage[case]
        while queue:
            entry, number = queue.pop(0)
            if entry.form(case, number) not in used_forms:
                return entry, number
            queue.insert(0, (entry, number))  # try again in the next sentence
            break
        pool = a_all if case == "Erg" else a_all + b_all
        for _ in range(50):
            entry = rng.choice(pool)
            number = "Plur" if case != "Erg" and rng.random() < 0.10 else "Sing"
            if entry.form(case, number) not in used_forms:
                return entry, number
        raise AssertionError("could not find a fresh filler noun")

    for k in range(n_filler):
        quota = [("Nom", base_nom + (1 if k < extra_nom else 0)),
                 ("Dat", base_dat + (1 if k < extra_dat else 0)),
                 ("Erg", 1 if k < remaining["Erg"] else 0)]
        verb = filler_verbs[k % len(filler_verbs)]
        used_forms = {verb["Pres"]}
        slots: list[tuple[NounLemma, str, str]] = []
        for case, count in quota:
            for _ in range(count):
                entry, number = pick(case, used_forms)
                used_forms.add(entry.form(case, number))
                slots.append((entry, case, number))
        rng.shuffle(slots)
        verb_id = len(slots) + 1
        tokens = [
            noun_token(i + 1, entry, case, number, verb_id, "obl")
            for i, (entry, case, number) in enumerate(slots)
        ]
        tokens.append(verb_token(verb_id, verb, "Pres", 0, "root"))
        graph = finish_sentence(next_id(), tokens)
        emit(graph)

    assert sent_no == TARGET_SENTENCES, sent_no
    assert case_used == TARGET_COUNTS, case_used
    texts = [g.text for g in graphs]
    assert len(texts) == len(set(texts)), "sentence texts must be unique"

    # structural garnish on filler sentences: one multiword-token range and
    # one empty node, so round-tripping real-world files stays exercised
    g = graphs[-5]
    g.ranges.append(TokenRange(1, 2, (
        "1-2", g.tokens[0].form + g.tokens[1].form, "_", "_", "_", "_", "_", "_", "_", "_",
    )))
    g = graphs[-4]
    g.empty_nodes.append(EmptyNode(2, 1, (
        "2.1", "მისი", "მისი", "PRON", "_", "_", "_", "_", "_", "_",
    )))

    tb = Treebank(graphs=graphs, source="synthetic")
    treebank_path = out_dir / "treebank-synthetic.conllu"
    write_conllu(tb, str(treebank_path))

    supplement_rows = sorted(
        (entry.lemma, "Sing", "Erg", entry.form("Erg", "Sing"))
        for entry in b_all
    )
    supplement_path = out_dir / "supplement.tsv"
    with open(supplement_path, "w", encoding="utf-8") as fh:
        fh.write("# ergative supplement: annotator-style case forms for lemmas\n")
        fh.write("# whose ergative is unattested in the treebank\n")
        fh.write("# columns: lemma number case form annotator\n")
        for lemma, number, case, form in supplement_rows:
            fh.write(f"{lemma}\t{number}\t{case}\t{form}\tannot-1\n")

    token_count = sum(len(g.tokens) for g in graphs)
    print(f"{treebank_path}: {len(graphs)} sentences, {token_count} tokens")
    print(f"case counts: {case_used}")
    print(f"{supplement_path}: {len(supplement_rows)} rows")
    return 0


if __name__ == "__main__":
    sys.exit(main())
