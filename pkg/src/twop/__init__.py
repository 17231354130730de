"""Symbolic computation with coloured set-operads and their algebras.

Subpackages cover graph-substitution operads, enveloping and twisted-arrow
constructions, canonical decompositions, factorization systems, Segal and
2-Segal conditions, Reedy structure, and certified comparisons with
classical index categories.
"""

__version__ = "0.1.0"
