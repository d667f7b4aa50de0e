"""Language-model scorers for Georgian case-alignment minimal-set datasets."""

__version__ = "0.1.0"
