import pytest

from geocase.conllu import parse_conllu_text

# Hand-built micro treebank covering the four construction types.
# Romanized forms for readability; the shipped treebank is Mkhedruli.
MICRO_CONLLU = """\
# sent_id = s-erg-1
# text = mamam sakhli aashena.
1\tmamam\tmama\tNOUN\t_\tCase=Erg|Number=Sing\t3\tnsubj\t_\t_
2\tsakhli\tsakhli\tNOUN\t_\tCase=Nom|Number=Sing\t3\tobj\t_\t_
3\taashena\tasheneba\tVERB\t_\tTense=Past\t0\troot\t_\tSpaceAfter=No
4\t.\t.\tPUNCT\t_\t_\t3\tpunct\t_\t_

# sent_id = s-intrans-1
# text = bavshvi tchams
1\tbavshvi\tbavshvi\tNOUN\t_\tCase=Nom|Number=Sing\t2\tnsubj\t_\t_
2\ttchams\ttchama\tVERB\t_\tTense=Pres\t0\troot\t_\t_

# sent_id = s-nomdat-1
# text = mama sakhls ashenebs
1\tmama\tmama\tNOUN\t_\tCase=Nom|Number=Sing\t3\tnsubj\t_\t_
2\tsakhls\tsakhli\tNOUN\t_\tCase=Dat|Number=Sing\t3\tobj\t_\t_
3\tashenebs\tasheneba\tVERB\t_\tTense=Pres\t0\troot\t_\t_

# sent_id = s-erg-2
# text = mamam sakhli aashena da bavshvma surati dakhata
1\tmamam\tmama\tNOUN\t_\tCase=Erg|Number=Sing\t3\tnsubj\t_\t_
2\tsakhli\tsakhli\tNOUN\t_\tCase=Nom|Number=Sing\t3\tobj\t_\t_
3\taashena\tasheneba\tVERB\t_\tTense=Past\t0\troot\t_\t_
4\tda\tda\tCCONJ\t_\t_\t7\tcc\t_\t_
5\tbavshvma\tbavshvi\tNOUN\t_\tCase=Erg|Number=Sing\t7\tnsubj\t_\t_
6\tsurati\tsurati\tNOUN\t_\tCase=Nom|Number=Sing\t7\tobj\t_\t_
7\tdakhata\tdakhatva\tVERB\t_\tTense=Past\t3\tconj\t_\t_

# sent_id = s-datnom-1
# text = mamas sakhli aushenebia
1\tmamas\tmama\tNOUN\t_\tCase=Dat|Number=Sing\t3\tnsubj\t_\t_
2\tsakhli\tsakhli\tNOUN\t_\tCase=Nom|Number=Sing\t3\tobj\t_\t_
3\taushenebia\tasheneba\tVERB\t_\tAspect=Perf\t0\troot\t_\t_

# sent_id = s-nomdat-2
# text = katsi bavshvs khedavs
1\tkatsi\tkatsi\tNOUN\t_\tCase=Nom|Number=Sing\t3\tnsubj\t_\t_
2\tbavshvs\tbavshvi\tNOUN\t_\tCase=Dat|Number=Sing\t3\tobj\t_\t_
3\tkhedavs\tkhedva\tVERB\t_\tTense=Pres\t0\troot\t_\t_
"""


@pytest.fixture(scope="session")
def micro_treebank():
    return parse_conllu_text(MICRO_CONLLU, source="micro")
