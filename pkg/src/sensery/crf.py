"""Linear-chain CRF over the 3-tag BIO alphabet: hand-rolled features,
exact forward-backward inference, Viterbi decoding with structural BIO
constraints, and deterministic mini-batch gradient training."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .postag import pos_tag
from .textcore import BioTag, TaggedSentence, Token

TAGS = (BioTag.B, BioTag.I, BioTag.O)  # index order fixes tie-breaking
TAG_INDEX = {t: i for i, t in enumerate(TAGS)}
N_TAGS = 3
NEG_INF = -1e30

# small negative bias on B/I emissions so the all-zero-feature decode is all-O
BIAS_FEATURE = "bias"
BIAS_INIT = -1e-3
BOUNDARY = "<s>"


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"non-finite loss at epoch {epoch}")


def _shape(word: str) -> str:
    if all(not c.isalnum() for c in word):
        return "punct"
    if any(c.isdigit() for c in word):
        return "digit"
    if word[0].isupper():
        return "cap"
    return "lower"


def featurize(tokens: Sequence[Token], i: int) -> list[str]:
    """Emission features for position i: word-identity window, prefixes and
    suffixes of the center word, neighboring POS, word shape, and a bias."""
    n = len(tokens)
    feats = [BIAS_FEATURE]
    for off in (-2, -1, 0, 1, 2):
        j = i + off
        word = tokens[j].lower if 0 <= j < n else BOUNDARY
        feats.append(f"w[{off}]={word}")
    center = tokens[i].lower
    for k in range(1, 5):
        if k <= len(center):
            feats.append(f"x[0]pre{k}={center[:k]}")
            feats.append(f"x[0]suf{k}={center[-k:]}")
    for off in (-1, 0, 1):
        j = i + off
        pos = pos_tag(tokens[j]) if 0 <= j < n else BOUNDARY
        feats.append(f"pos[{off}]={pos}")
    feats.append(f"shape={_shape(tokens[i].surface)}")
    return feats


class FeatureVocab:
    """Feature string -> dense index map, frozen after construction."""

    def __init__(self, features: Sequence[str]):
        self.index = {f: i for i, f in enumerate(dict.fromkeys(features))}
        self.features = list(self.index)

    def __len__(self) -> int:
        return len(self.index)

    @classmethod
    def from_data(cls, data: Sequence[TaggedSentence]) -> "FeatureVocab":
        feats = [BIAS_FEATURE]
        for sent in data:
            for i in range(len(sent)):
                feats.extend(featurize(sent.tokens, i))
        return cls(feats)


@dataclass
class CrfModel:
    vocab: FeatureVocab
    emission: np.ndarray  # (|features|, 3)
    transition: np.ndarray  # (3, 3), [from, to]
    start: np.ndarray  # (3,)
    stop: np.ndarray  # (3,)
    l2: float = 1e-4

    @classmethod
    def initial(cls, vocab: FeatureVocab, l2: float = 1e-4) -> "CrfModel":
        emission = np.zeros((len(vocab), N_TAGS))
        emission[vocab.index[BIAS_FEATURE], TAG_INDEX[BioTag.B]] = BIAS_INIT
        emission[vocab.index[BIAS_FEATURE], TAG_INDEX[BioTag.I]] = BIAS_INIT
        return cls(
            vocab=vocab,
            emission=emission,
            transition=np.zeros((N_TAGS, N_TAGS)),
            start=np.zeros(N_TAGS),
            stop=np.zeros(N_TAGS),
            l2=l2,
        )

    def feature_ids(self, tokens: Sequence[Token]) -> list[list[int]]:
        idx = self.vocab.index
        return [
            [idx[f] for f in featurize(tokens, i) if f in idx]
            for i in range(len(tokens))
        ]

    def emissions(self, tokens: Sequence[Token]) -> np.ndarray:
        """(n, 3) emission score matrix; unknown features contribute nothing."""
        ids = self.feature_ids(tokens)
        out = np.zeros((len(tokens), N_TAGS))
        for i, fs in enumerate(ids):
            if fs:
                out[i] = self.emission[fs].sum(axis=0)
        return out


def _logsumexp(a: np.ndarray, axis=None):
    m = np.max(a, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis) if axis is not None else float(out.item())


def sequence_score(model: CrfModel, emit: np.ndarray, tags: Sequence[int]) -> float:
    s = model.start[tags[0]] + emit[0, tags[0]]
    for i in range(1, len(tags)):
        s += model.transition[tags[i - 1], tags[i]] + emit[i, tags[i]]
    return float(s + model.stop[tags[-1]])


def log_partition(model: CrfModel, sentence: Sequence[Token]) -> float:
    """log sum over all tag sequences of exp(score), by the forward recursion."""
    emit = model.emissions(sentence)
    return _forward(model, emit)


def _forward(model: CrfModel, emit: np.ndarray) -> float:
    alpha = model.start + emit[0]
    for i in range(1, emit.shape[0]):
        alpha = _logsumexp(alpha[:, None] + model.transition, axis=0) + emit[i]
    return float(_logsumexp(alpha + model.stop))


def _forward_backward(model: CrfModel, emit: np.ndarray):
    """Position marginals (n,3), pairwise marginals (n-1,3,3), and log Z."""
    n = emit.shape[0]
    alphas = np.empty((n, N_TAGS))
    alphas[0] = model.start + emit[0]
    for i in range(1, n):
        alphas[i] = (
            _logsumexp(alphas[i - 1][:, None] + model.transition, axis=0) + emit[i]
        )
    betas = np.empty((n, N_TAGS))
    betas[-1] = model.stop
    for i in range(n - 2, -1, -1):
        betas[i] = _logsumexp(
            model.transition + (emit[i + 1] + betas[i + 1])[None, :], axis=1
        )
    log_z = float(_logsumexp(alphas[-1] + betas[-1]))
    unary = np.exp(alphas + betas - log_z)
    pair = np.empty((max(n - 1, 0), N_TAGS, N_TAGS))
    for i in range(n - 1):
        m = (
            alphas[i][:, None]
            + model.transition
            + (emit[i + 1] + betas[i + 1])[None, :]
        )
        pair[i] = np.exp(m - log_z)
    return unary, pair, log_z


def nll_and_gradient(
    model: CrfModel, batch: Sequence[TaggedSentence]
) -> tuple[float, dict[str, np.ndarray]]:
    """Regularized negative log-likelihood and its exact gradient.

    The gradient of each block is expected feature counts (forward-backward
    marginals) minus empirical counts, plus the l2 term.
    """
    g_emit = np.zeros_like(model.emission)
    g_trans = np.zeros_like(model.transition)
    g_start = np.zeros_like(model.start)
    g_stop = np.zeros_like(model.stop)
    loss = 0.0
    for sent in batch:
        ids = model.feature_ids(sent.tokens)
        emit = np.zeros((len(sent), N_TAGS))
        for i, fs in enumerate(ids):
            if fs:
                emit[i] = model.emission[fs].sum(axis=0)
        gold = [TAG_INDEX[t] for t in sent.tags]
        unary, pair, log_z = _forward_backward(model, emit)
        loss += log_z - sequence_score(model, emit, gold)
        for i, fs in enumerate(ids):
            delta = unary[i].copy()
            delta[gold[i]] -= 1.0
            for f in fs:
                g_emit[f] += delta
        g_start += unary[0]
        g_start[gold[0]] -= 1.0
        g_stop += unary[-1]
        g_stop[gold[-1]] -= 1.0
        for i in range(len(sent) - 1):
            g_trans += pair[i]
            g_trans[gold[i], gold[i + 1]] -= 1.0
    if model.l2 > 0:
        for w, g in (
            (model.emission, g_emit),
            (model.transition, g_trans),
            (model.start, g_start),
            (model.stop, g_stop),
        ):
            loss += 0.5 * model.l2 * float(np.sum(w * w))
            g += model.l2 * w
    return float(loss), {
        "emission": g_emit,
        "transition": g_trans,
        "start": g_start,
        "stop": g_stop,
    }


def viterbi(model: CrfModel, sentence: Sequence[Token]) -> list[BioTag]:
    """Best tag sequence under structural BIO constraints (start->I and O->I
    are forbidden); ties break toward the lower tag index, B < I < O."""
    emit = model.emissions(sentence)
    n = emit.shape[0]
    trans = model.transition.copy()
    trans[TAG_INDEX[BioTag.O], TAG_INDEX[BioTag.I]] = NEG_INF
    start = model.start.copy()
    start[TAG_INDEX[BioTag.I]] = NEG_INF
    delta = start + emit[0]
    back = np.zeros((n, N_TAGS), dtype=int)
    for i in range(1, n):
        scores = delta[:, None] + trans
        back[i] = np.argmax(scores, axis=0)  # argmax ties -> lowest index
        delta = scores[back[i], np.arange(N_TAGS)] + emit[i]
    delta = delta + model.stop
    best = int(np.argmax(delta))
    path = [best]
    for i in range(n - 1, 0, -1):
        path.append(int(back[i, path[-1]]))
    path.reverse()
    return [TAGS[t] for t in path]


@dataclass
class CrfTrainConfig:
    epochs: int = 30
    step: float = 0.1
    l2: float = 1e-4
    batch_size: int = 8
    seed: int = 0


def train_crf(
    data: Sequence[TaggedSentence], config: CrfTrainConfig | None = None
) -> CrfModel:
    """Mini-batch gradient descent with 1/(1+epoch) step decay; fully
    deterministic for a fixed seed."""
    if not data:
        raise ValueError("training data must be non-empty")
    config = config or CrfTrainConfig()
    vocab = FeatureVocab.from_data(data)
    model = CrfModel.initial(vocab, l2=config.l2)
    order = list(range(len(data)))
    rng = random.Random(config.seed)
    for epoch in range(config.epochs):
        rng.shuffle(order)
        step = config.step / (1.0 + epoch)
        for b in range(0, len(order), config.batch_size):
            batch = [data[j] for j in order[b : b + config.batch_size]]
            loss, grad = nll_and_gradient(model, batch)
            if not np.isfinite(loss):
                raise DivergenceError(epoch)
            scale = step / len(batch)
            model.emission -= scale * grad["emission"]
            model.transition -= scale * grad["transition"]
            model.start -= scale * grad["start"]
            model.stop -= scale * grad["stop"]
    return model


def tag(model: CrfModel, sentences: Sequence[Sequence[Token]]) -> list[list[BioTag]]:
    return [viterbi(model, s) for s in sentences]


# --- serialization: versioned JSON with a checksum over the payload ---


def save_crf(model: CrfModel, path: str | Path) -> None:
    payload = {
        "format": "sensery-crf",
        "version": 1,
        "features": model.vocab.features,
        "shapes": {
            "emission": list(model.emission.shape),
            "transition": list(model.transition.shape),
        },
        "emission": model.emission.ravel().tolist(),
        "transition": model.transition.ravel().tolist(),
        "start": model.start.tolist(),
        "stop": model.stop.tolist(),
        "l2": model.l2,
    }
    blob = json.dumps(payload, sort_keys=True)
    payload["checksum"] = hashlib.sha256(blob.encode()).hexdigest()
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_crf(path: str | Path) -> CrfModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != "sensery-crf":
        raise ValueError(f"{path}: not a CRF model file")
    checksum = payload.pop("checksum", None)
    blob = json.dumps(payload, sort_keys=True)
    if checksum != hashlib.sha256(blob.encode()).hexdigest():
        raise ValueError(f"{path}: checksum mismatch")
    vocab = FeatureVocab(payload["features"])
    emission = np.array(payload["emission"]).reshape(payload["shapes"]["emission"])
    transition = np.array(payload["transition"]).reshape(
        payload["shapes"]["transition"]
    )
    return CrfModel(
        vocab=vocab,
        emission=emission,
        transition=transition,
        start=np.array(payload["start"]),
        stop=np.array(payload["stop"]),
        l2=payload["l2"],
    )
