"""LSTM sense tagger with character features and output-layer recurrence.

Per token the model concatenates a window-LSTM encoding, a bidirectional
character encoding, the center word's embedding, and the previous output
distribution, then predicts BIO probabilities through a softmax layer:
d_t = softmax(W_d . [v_m; v_ca; v_s; d_{t-1}]). All math is double
precision with hand-written reverse-mode gradients so the whole model is
checkable against finite differences.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .embeddings import EmbeddingTable
from .textcore import BioTag, TaggedSentence, Token

TAGS = (BioTag.B, BioTag.I, BioTag.O)
TAG_INDEX = {t: i for i, t in enumerate(TAGS)}
N_TAGS = 3

PAD = "<pad>"
UNK = "<unk>"
UNK_CHAR = "\x00"

VARIANTS = ("base", "or", "char", "or+char")


class DivergenceError(RuntimeError):
    def __init__(self, epoch: int, index: int):
        self.epoch = epoch
        self.index = index
        super().__init__(f"non-finite loss at epoch {epoch}, sentence {index}")


def parse_variant(spec: str) -> str:
    """Normalize variant spellings like "or,char" / "+OR+CHAR" to canonical."""
    parts = {p for p in spec.lower().replace("+", ",").split(",") if p}
    parts.discard("base")
    parts.discard("lstm")
    if not parts <= {"or", "char"}:
        raise ValueError(f"unknown variant {spec!r}")
    if parts == {"or", "char"}:
        return "or+char"
    return parts.pop() if parts else "base"


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z))
    return e / e.sum()


@dataclass
class LstmCellParams:
    """Combined-gate parameterization: z = W x + U h + b, gates [i, f, o, g]."""

    W: np.ndarray  # (4H, D)
    U: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)

    @property
    def hidden_dim(self) -> int:
        return self.U.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    @classmethod
    def create(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator):
        scale = 1.0 / np.sqrt(max(input_dim, hidden_dim))
        W = rng.uniform(-scale, scale, (4 * hidden_dim, input_dim))
        U = rng.uniform(-scale, scale, (4 * hidden_dim, hidden_dim))
        b = np.zeros(4 * hidden_dim)
        b[hidden_dim : 2 * hidden_dim] = 1.0  # forget-gate bias
        return cls(W, U, b)


def lstm_step(
    cell: LstmCellParams, x: np.ndarray, h: np.ndarray, c: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """One LSTM cell update: c' = f*c + i*g, h' = o*tanh(c')."""
    if x.shape[0] != cell.input_dim or h.shape[0] != cell.hidden_dim:
        raise ValueError(
            f"dim mismatch: x{x.shape} h{h.shape} for cell "
            f"({cell.input_dim} -> {cell.hidden_dim})"
        )
    H = cell.hidden_dim
    z = cell.W @ x + cell.U @ h + cell.b
    i = _sigmoid(z[:H])
    f = _sigmoid(z[H : 2 * H])
    o = _sigmoid(z[2 * H : 3 * H])
    g = np.tanh(z[3 * H :])
    c_new = f * c + i * g
    h_new = o * np.tanh(c_new)
    return h_new, c_new


def _lstm_forward(cell: LstmCellParams, xs: list[np.ndarray]):
    """Run the cell over xs from a zero state, caching for backward."""
    H = cell.hidden_dim
    h = np.zeros(H)
    c = np.zeros(H)
    cache = []
    for x in xs:
        z = cell.W @ x + cell.U @ h + cell.b
        i = _sigmoid(z[:H])
        f = _sigmoid(z[H : 2 * H])
        o = _sigmoid(z[2 * H : 3 * H])
        g = np.tanh(z[3 * H :])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        cache.append((x, h, c, i, f, o, g, tc))
        h, c = h_new, c_new
    return h, cache


def _lstm_backward(cell: LstmCellParams, cache, dh_last: np.ndarray):
    """Backprop dh_last through the cached sequence.

    Returns (dW, dU, db, dxs) where dxs[t] is the gradient w.r.t. xs[t].
    """
    dW = np.zeros_like(cell.W)
    dU = np.zeros_like(cell.U)
    db = np.zeros_like(cell.b)
    dh = dh_last.copy()
    dc = np.zeros_like(dh_last)
    dxs = [None] * len(cache)
    for t in range(len(cache) - 1, -1, -1):
        x, h_prev, c_prev, i, f, o, g, tc = cache[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_prev = dc * f
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                do * o * (1.0 - o),
                dg * (1.0 - g * g),
            ]
        )
        dW += np.outer(dz, x)
        dU += np.outer(dz, h_prev)
        db += dz
        dxs[t] = cell.W.T @ dz
        dh = cell.U.T @ dz
        dc = dc_prev
    return dW, dU, db, dxs


@dataclass
class NeuralConfig:
    word_dim: int = 50
    window_hidden: int = 100  # h_m
    char_dim: int = 25  # d_c
    char_hidden: int = 25  # per direction; v_ca has twice this length
    window: int = 5  # m, odd

    def __post_init__(self):
        if self.window % 2 != 1:
            raise ValueError("window length m must be odd")


@dataclass
class NeuralTaggerModel:
    config: NeuralConfig
    word_index: dict[str, int]
    char_index: dict[str, int]
    word_emb: np.ndarray  # (Vw, d_w); rows for PAD and UNK included
    char_emb: np.ndarray  # (Vc, d_c); row for UNK_CHAR included
    char_fwd: LstmCellParams
    char_bwd: LstmCellParams
    window_cell: LstmCellParams
    W_d: np.ndarray  # (3, h_m + h_c + d_w + 3)
    b_d: np.ndarray  # (3,)
    d0_logits: np.ndarray  # (3,), softmaxed into the initial output distribution

    @property
    def char_out_dim(self) -> int:
        return 2 * self.config.char_hidden

    def concat_dim(self) -> int:
        cfg = self.config
        return cfg.window_hidden + self.char_out_dim + cfg.word_dim + N_TAGS

    def blocks(self):
        """Column slices of W_d for [v_m; v_ca; v_s; d_prev]."""
        cfg = self.config
        a = cfg.window_hidden
        b = a + self.char_out_dim
        c = b + cfg.word_dim
        return slice(0, a), slice(a, b), slice(b, c), slice(c, c + N_TAGS)

    def word_id(self, word: str) -> int:
        return self.word_index.get(word, self.word_index[UNK])

    def char_ids(self, word: str) -> list[int]:
        unk = self.char_index[UNK_CHAR]
        return [self.char_index.get(ch, unk) for ch in word]

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            "word_emb": self.word_emb,
            "char_emb": self.char_emb,
            "char_fwd.W": self.char_fwd.W,
            "char_fwd.U": self.char_fwd.U,
            "char_fwd.b": self.char_fwd.b,
            "char_bwd.W": self.char_bwd.W,
            "char_bwd.U": self.char_bwd.U,
            "char_bwd.b": self.char_bwd.b,
            "window_cell.W": self.window_cell.W,
            "window_cell.U": self.window_cell.U,
            "window_cell.b": self.window_cell.b,
            "W_d": self.W_d,
            "b_d": self.b_d,
            "d0_logits": self.d0_logits,
        }


def build_model(
    data: Sequence[TaggedSentence],
    config: NeuralConfig | None = None,
    pretrained: EmbeddingTable | None = None,
    seed: int = 0,
) -> NeuralTaggerModel:
    """Build vocabularies from the data and initialize all parameter blocks.

    Word embeddings start from the pretrained table where available (which
    also fixes word_dim); character embeddings are learned from scratch.
    """
    config = config or NeuralConfig()
    if pretrained is not None and pretrained.dim != config.word_dim:
        config = NeuralConfig(
            word_dim=pretrained.dim,
            window_hidden=config.window_hidden,
            char_dim=config.char_dim,
            char_hidden=config.char_hidden,
            window=config.window,
        )
    words = [PAD, UNK]
    chars = [UNK_CHAR]
    seen_w, seen_c = set(words), set(chars)
    for sent in data:
        for tok in sent.tokens:
            if tok.lower not in seen_w:
                seen_w.add(tok.lower)
                words.append(tok.lower)
            for ch in tok.lower:
                if ch not in seen_c:
                    seen_c.add(ch)
                    chars.append(ch)
    if pretrained is not None:
        # pretrained words enter the vocabulary so unseen-at-train-time words
        # keep their pretrained positions instead of collapsing to UNK
        for w in pretrained.words():
            if w not in seen_w:
                seen_w.add(w)
                words.append(w)
    rng = np.random.default_rng(seed)
    scale = 0.1
    word_emb = rng.uniform(-scale, scale, (len(words), config.word_dim))
    word_emb[0] = 0.0  # PAD starts at zero but is trainable
    if pretrained is not None:
        for i, w in enumerate(words):
            v = pretrained.get(w)
            if v is not None:
                word_emb[i] = v
    char_emb = rng.uniform(-scale, scale, (len(chars), config.char_dim))
    model = NeuralTaggerModel(
        config=config,
        word_index={w: i for i, w in enumerate(words)},
        char_index={c: i for i, c in enumerate(chars)},
        word_emb=word_emb,
        char_emb=char_emb,
        char_fwd=LstmCellParams.create(config.char_dim, config.char_hidden, rng),
        char_bwd=LstmCellParams.create(config.char_dim, config.char_hidden, rng),
        window_cell=LstmCellParams.create(config.word_dim, config.window_hidden, rng),
        W_d=np.zeros((N_TAGS, 0)),
        b_d=np.zeros(N_TAGS),
        d0_logits=np.zeros(N_TAGS),
    )
    model.W_d = rng.uniform(-scale, scale, (N_TAGS, model.concat_dim()))
    return model


def encode_chars(word: str, model: NeuralTaggerModel) -> np.ndarray:
    """Bidirectional character encoding: concatenated final hidden states of
    a forward and a backward recurrence over the character embeddings."""
    if not word:
        raise ValueError("word must be non-empty")
    xs = [model.char_emb[i] for i in model.char_ids(word)]
    h_f, _ = _lstm_forward(model.char_fwd, xs)
    h_b, _ = _lstm_forward(model.char_bwd, xs[::-1])
    return np.concatenate([h_f, h_b])


def encode_window(
    sentence: Sequence[Token], i: int, model: NeuralTaggerModel
) -> tuple[np.ndarray, np.ndarray]:
    """(v_m, v_s): final hidden state of the window LSTM over the m word
    embeddings centered at i (pad embedding outside the sentence), and the
    center word's own embedding."""
    if not 0 <= i < len(sentence):
        raise ValueError(f"position {i} out of range")
    ids = _window_ids(sentence, i, model)
    xs = [model.word_emb[j] for j in ids]
    v_m, _ = _lstm_forward(model.window_cell, xs)
    v_s = model.word_emb[model.word_id(sentence[i].lower)]
    return v_m, v_s


def _window_ids(
    sentence: Sequence[Token], i: int, model: NeuralTaggerModel
) -> list[int]:
    k = (model.config.window - 1) // 2
    pad = model.word_index[PAD]
    ids = []
    for j in range(i - k, i + k + 1):
        if 0 <= j < len(sentence):
            ids.append(model.word_id(sentence[j].lower))
        else:
            ids.append(pad)
    return ids


def predict_step(
    v_m: np.ndarray,
    v_ca: np.ndarray,
    v_s: np.ndarray,
    d_prev: np.ndarray,
    model: NeuralTaggerModel,
) -> np.ndarray:
    """d_t = softmax(W_d . [v_m; v_ca; v_s; d_prev] + b_d)."""
    if abs(float(d_prev.sum()) - 1.0) > 1e-9 or np.any(d_prev < -1e-12):
        raise ValueError("d_prev must be a probability distribution")
    u = np.concatenate([v_m, v_ca, v_s, d_prev])
    return softmax(model.W_d @ u + model.b_d)


def _forward_token(
    model: NeuralTaggerModel,
    sentence: Sequence[Token],
    i: int,
    d_block: np.ndarray,
    variant: str,
    want_cache: bool,
):
    """Compute d_t for one token; d_block is the (possibly zeroed) previous
    output block. Returns (d_t, cache)."""
    cfg = model.config
    win_ids = _window_ids(sentence, i, model)
    xs = [model.word_emb[j] for j in win_ids]
    v_m, win_cache = _lstm_forward(model.window_cell, xs)
    if "char" in variant:
        word = sentence[i].lower
        char_ids = model.char_ids(word)
        cxs = [model.char_emb[j] for j in char_ids]
        h_f, ch_f_cache = _lstm_forward(model.char_fwd, cxs)
        h_b, ch_b_cache = _lstm_forward(model.char_bwd, cxs[::-1])
        v_ca = np.concatenate([h_f, h_b])
    else:
        char_ids, ch_f_cache, ch_b_cache = [], None, None
        v_ca = np.zeros(model.char_out_dim)
    center = model.word_id(sentence[i].lower)
    v_s = model.word_emb[center]
    u = np.concatenate([v_m, v_ca, v_s, d_block])
    d_t = softmax(model.W_d @ u + model.b_d)
    cache = None
    if want_cache:
        cache = (win_ids, win_cache, char_ids, ch_f_cache, ch_b_cache, center, u)
    return d_t, cache


def _d0(model: NeuralTaggerModel) -> np.ndarray:
    return softmax(model.d0_logits)


def tag_sentence(
    model: NeuralTaggerModel, sentence: Sequence[Token], variant: str = "or+char"
) -> list[BioTag]:
    """Left-to-right greedy decode; with OR the previous predicted
    distribution feeds the next step. A repair pass rewrites any I that
    would follow O into B, so the output is always BIO-valid."""
    variant = parse_variant(variant)
    use_or = "or" in variant
    d_prev = _d0(model) if use_or else np.zeros(N_TAGS)
    tags: list[int] = []
    for i in range(len(sentence)):
        d_t, _ = _forward_token(model, sentence, i, d_prev, variant, False)
        tags.append(int(np.argmax(d_t)))  # argmax ties -> lowest index, B < I < O
        if use_or:
            d_prev = d_t
    out = [TAGS[t] for t in tags]
    for i in range(len(out)):
        if out[i] is BioTag.I and (i == 0 or out[i - 1] is BioTag.O):
            out[i] = BioTag.B
    return out


@dataclass
class TrainConfig:
    epochs: int = 30
    step: float = 0.05
    seed: int = 0
    teacher_forcing: bool = True
    clip: float = 5.0
    variant: str = "or+char"


def sentence_loss_and_grad(
    model: NeuralTaggerModel,
    sentence: TaggedSentence,
    variant: str = "or+char",
    teacher_forcing: bool = True,
) -> tuple[float, dict[str, np.ndarray]]:
    """Summed per-token cross-entropy against the gold tags plus the full
    reverse-mode gradient over every enabled parameter block.

    With teacher forcing the previous-output block is the gold one-hot (a
    constant), so only d0_logits receives gradient through the recurrence;
    without it the previous prediction is fed in but treated as constant.
    """
    variant = parse_variant(variant)
    use_or = "or" in variant
    use_char = "char" in variant
    grads = {k: np.zeros_like(v) for k, v in model.parameters().items()}
    m_slice, c_slice, s_slice, d_slice = model.blocks()
    loss = 0.0
    d0 = _d0(model)
    d_prev = d0 if use_or else np.zeros(N_TAGS)
    d0_grad_pending = np.zeros(N_TAGS)
    for i in range(len(sentence)):
        gold = TAG_INDEX[sentence.tags[i]]
        d_t, cache = _forward_token(model, sentence.tokens, i, d_prev, variant, True)
        win_ids, win_cache, char_ids, ch_f_cache, ch_b_cache, center, u = cache
        loss += -np.log(max(d_t[gold], 1e-300))
        dlogits = d_t.copy()
        dlogits[gold] -= 1.0
        grads["W_d"] += np.outer(dlogits, u)
        grads["b_d"] += dlogits
        du = model.W_d.T @ dlogits
        # previous-output block: gradient reaches d0_logits only at t=0
        if use_or and i == 0:
            d0_grad_pending = du[d_slice]
        # center word embedding
        grads["word_emb"][center] += du[s_slice]
        # window LSTM
        dW, dU, db, dxs = _lstm_backward(model.window_cell, win_cache, du[m_slice])
        grads["window_cell.W"] += dW
        grads["window_cell.U"] += dU
        grads["window_cell.b"] += db
        for j, dx in zip(win_ids, dxs):
            grads["word_emb"][j] += dx
        # character encoders
        if use_char:
            hc = model.config.char_hidden
            dv_ca = du[c_slice]
            dWf, dUf, dbf, dxf = _lstm_backward(model.char_fwd, ch_f_cache, dv_ca[:hc])
            dWb, dUb, dbb, dxb = _lstm_backward(model.char_bwd, ch_b_cache, dv_ca[hc:])
            grads["char_fwd.W"] += dWf
            grads["char_fwd.U"] += dUf
            grads["char_fwd.b"] += dbf
            grads["char_bwd.W"] += dWb
            grads["char_bwd.U"] += dUb
            grads["char_bwd.b"] += dbb
            for j, dx in zip(char_ids, dxf):
                grads["char_emb"][j] += dx
            for j, dx in zip(reversed(char_ids), dxb):
                grads["char_emb"][j] += dx
        if use_or:
            if teacher_forcing:
                one_hot = np.zeros(N_TAGS)
                one_hot[gold] = 1.0
                d_prev = one_hot
            else:
                d_prev = d_t  # fed forward but detached from the gradient
    if use_or:
        # d0 = softmax(d0_logits): apply the softmax Jacobian
        grads["d0_logits"] += d0 * (
            d0_grad_pending - float(d0 @ d0_grad_pending)
        )
    return float(loss), grads


def train(
    model: NeuralTaggerModel,
    data: Sequence[TaggedSentence],
    config: TrainConfig | None = None,
) -> NeuralTaggerModel:
    """Per-sentence SGD over a seeded shuffle with gradient-norm clipping.

    Mutates and returns the model; fixed seed means bit-identical runs.
    """
    if not data:
        raise ValueError("training data must be non-empty")
    config = config or TrainConfig()
    variant = parse_variant(config.variant)
    params = model.parameters()
    order = list(range(len(data)))
    rng = random.Random(config.seed)
    for epoch in range(config.epochs):
        rng.shuffle(order)
        for idx in order:
            loss, grads = sentence_loss_and_grad(
                model, data[idx], variant, config.teacher_forcing
            )
            if not np.isfinite(loss):
                raise DivergenceError(epoch, idx)
            norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            scale = config.step
            if config.clip > 0 and norm > config.clip:
                scale *= config.clip / norm
            for name, g in grads.items():
                params[name] -= scale * g
    return model


# --- serialization: versioned JSON, row-major weight arrays, checksum ---


def save_neural(model: NeuralTaggerModel, path: str | Path) -> None:
    cfg = model.config
    payload = {
        "format": "sensery-neural",
        "version": 1,
        "config": {
            "word_dim": cfg.word_dim,
            "window_hidden": cfg.window_hidden,
            "char_dim": cfg.char_dim,
            "char_hidden": cfg.char_hidden,
            "window": cfg.window,
        },
        "words": list(model.word_index),
        "chars": list(model.char_index),
        "params": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in model.parameters().items()
        },
    }
    blob = json.dumps(payload, sort_keys=True)
    payload["checksum"] = hashlib.sha256(blob.encode()).hexdigest()
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_neural(path: str | Path) -> NeuralTaggerModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != "sensery-neural":
        raise ValueError(f"{path}: not a neural model file")
    checksum = payload.pop("checksum", None)
    blob = json.dumps(payload, sort_keys=True)
    if checksum != hashlib.sha256(blob.encode()).hexdigest():
        raise ValueError(f"{path}: checksum mismatch")
    cfg = NeuralConfig(**payload["config"])
    arrays = {
        name: np.array(spec["data"], dtype=np.float64).reshape(spec["shape"])
        for name, spec in payload["params"].items()
    }
    model = NeuralTaggerModel(
        config=cfg,
        word_index={w: i for i, w in enumerate(payload["words"])},
        char_index={c: i for i, c in enumerate(payload["chars"])},
        word_emb=arrays["word_emb"],
        char_emb=arrays["char_emb"],
        char_fwd=LstmCellParams(
            arrays["char_fwd.W"], arrays["char_fwd.U"], arrays["char_fwd.b"]
        ),
        char_bwd=LstmCellParams(
            arrays["char_bwd.W"], arrays["char_bwd.U"], arrays["char_bwd.b"]
        ),
        window_cell=LstmCellParams(
            arrays["window_cell.W"], arrays["window_cell.U"], arrays["window_cell.b"]
        ),
        W_d=arrays["W_d"],
        b_d=arrays["b_d"],
        d0_logits=arrays["d0_logits"],
    )
    return model
