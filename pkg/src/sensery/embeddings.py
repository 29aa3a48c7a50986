"""Word vectors: loading the text format, phrase averaging, cosine
similarity, and a deterministic 2-component PCA."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .textcore import ParseError, Token


class UndefinedVectorError(ValueError):
    """Every token of the phrase is out of vocabulary."""


class DegenerateDataError(ValueError):
    """PCA input has zero covariance (all points identical)."""


@dataclass(frozen=True)
class PhraseVector:
    vector: np.ndarray
    covered: int  # in-vocabulary token count, >= 1


class EmbeddingTable:
    """Immutable word -> dense vector map. Lookup is case-folded."""

    def __init__(self, dim: int, entries: dict[str, np.ndarray]):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self._entries = entries

    def __contains__(self, word: str) -> bool:
        return word.casefold() in self._entries

    def __getitem__(self, word: str) -> np.ndarray:
        return self._entries[word.casefold()]

    def get(self, word: str) -> np.ndarray | None:
        return self._entries.get(word.casefold())

    def __len__(self) -> int:
        return len(self._entries)

    def words(self) -> list[str]:
        return list(self._entries)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Parse the whitespace-separated text vector format.

    An optional first line `<count> <dim>` is skipped. Duplicate words keep
    their first occurrence.
    """
    entries: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        lines = list(enumerate(fh, start=1))
    if lines:
        parts = lines[0][1].split()
        if len(parts) == 2 and all(p.isdigit() for p in parts):
            lines = lines[1:]  # header `<count> <dim>`: trust the rows instead
    for lineno, raw in lines:
        if not raw.strip():
            continue
        cols = raw.split()
        word, comps = cols[0], cols[1:]
        if not comps:
            raise ParseError("row has no vector components", lineno)
        try:
            vec = np.array([float(c) for c in comps], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(f"bad float in row: {exc}", lineno) from exc
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise ParseError(f"expected {dim} components, got {len(vec)}", lineno)
        entries.setdefault(word.casefold(), vec)
    if dim is None:
        raise ParseError("embedding file contains no vectors")
    return EmbeddingTable(dim, entries)


def phrase_vector(
    phrase: Sequence[Token | str], table: EmbeddingTable
) -> PhraseVector:
    """Component-wise mean of the in-vocabulary token vectors.

    OOV tokens are skipped; a phrase with no in-vocabulary token raises
    UndefinedVectorError and must be excluded by the caller.
    """
    if not phrase:
        raise ValueError("phrase must be non-empty")
    vecs = []
    for tok in phrase:
        word = tok.lower if isinstance(tok, Token) else str(tok)
        v = table.get(word)
        if v is not None:
            vecs.append(v)
    if not vecs:
        words = [t.surface if isinstance(t, Token) else t for t in phrase]
        raise UndefinedVectorError(f"all tokens OOV: {words}")
    return PhraseVector(np.mean(vecs, axis=0), covered=len(vecs))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for zero-norm vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def pca2(
    vectors: Sequence[np.ndarray], tol: float = 1e-9, max_iter: int = 10_000
) -> np.ndarray:
    """Project vectors onto the top-2 principal axes of their covariance.

    Power iteration with deflation from a fixed start vector keeps the
    result deterministic; each axis's sign is normalized by forcing its
    largest-magnitude loading positive.
    """
    X = np.asarray(list(vectors), dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 3:
        raise ValueError("need at least 3 vectors")
    X = X - X.mean(axis=0)
    cov = X.T @ X / (X.shape[0] - 1)
    if not np.any(np.abs(cov) > 0):
        raise DegenerateDataError("all input vectors are identical")
    axes = []
    for _ in range(2):
        axes.append(_power_iterate(cov, tol, max_iter))
        lam = axes[-1] @ cov @ axes[-1]
        cov = cov - lam * np.outer(axes[-1], axes[-1])
    return X @ np.stack(axes, axis=1)


def _power_iterate(cov: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    d = cov.shape[0]
    # fixed deterministic start: all-ones plus a ramp, never the zero vector
    v = np.ones(d) + np.arange(d) / max(d, 1)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            break  # start vector is in the null space; keep current axis
        w /= norm
        if np.linalg.norm(w - v) < tol or np.linalg.norm(w + v) < tol:
            v = w
            break
        v = w
    i = int(np.argmax(np.abs(v)))
    if v[i] < 0:
        v = -v
    return v
