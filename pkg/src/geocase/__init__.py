"""Minimal-set syntactic tests for Georgian split-ergative case alignment.

Pipeline: parse a UD treebank, match subject-object constructions with a
small graph query language, build a nominative/ergative/dative lexicon,
generate masked minimal-set tests, score them (reference scorer built in,
external model scorers via the file contracts), and analyze accuracy,
error preferences, and tokenization-length correlations.
"""

__version__ = "0.1.0"
