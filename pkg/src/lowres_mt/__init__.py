"""Low-resource machine translation experimentation toolkit.

Provides corpus preparation, n-gram language models and data selection,
phrase-table construction (alignment, triangulation, pruning, induction),
a compact trainable sequence-to-sequence model, evaluation, and a
declarative multistage/back-translation experiment pipeline.
"""

__version__ = "0.1.0"
