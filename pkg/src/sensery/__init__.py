"""Toolkit for recognizing audible/olfactible concept mentions in text.

Builds labeled training data from raw text via trigger patterns, human
yes/no/notsure judgments, and embedding-similarity expansion, then trains
and evaluates BIO sequence taggers (a linear-chain CRF and an LSTM with
character features and output-layer recurrence).
"""

__version__ = "0.1.0"
