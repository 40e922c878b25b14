"""Lexical/semantic legal retrieval and entailment pipeline."""

__version__ = "0.1.0"
