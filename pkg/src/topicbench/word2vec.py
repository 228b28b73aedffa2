"""Word vectors trained with skip-gram negative sampling (CBOW optional),
mean-pooled into document embeddings.

The trainer is plain sequential SGD with a linear learning-rate decay;
negative samples come from the unigram distribution raised to 0.75. The
input-layer matrix is the embedding. The analytic gradient routines below
are the exact functions applied during training, so a finite-difference
check on them covers the optimizer's arithmetic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import Corpus, Vocabulary
from .embeddings import EmbeddingMatrix
from .errors import ConfigError, ValidationError


@dataclass(frozen=True)
class W2VConfig:
    dim: int = 200
    window: int = 5
    negatives: int = 5
    epochs: int = 15
    initial_lr: float = 0.025
    min_lr: float = 1e-4
    mode: str = "skipgram"  # or "cbow"
    subsample_t: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.negatives < 1:
            raise ConfigError(f"negatives must be >= 1, got {self.negatives}")
        if self.min_lr > self.initial_lr:
            raise ConfigError("min_lr must not exceed initial_lr")
        if self.mode not in ("skipgram", "cbow"):
            raise ConfigError(f"mode must be skipgram or cbow, got {self.mode!r}")


@dataclass
class W2VModel:
    input_vectors: np.ndarray  # (V, dim); the embedding matrix
    output_vectors: np.ndarray  # (V, dim)
    vocabulary: Vocabulary
    config: W2VConfig


# ---------------------------------------------------------------------------
# SGNS loss and gradients
# ---------------------------------------------------------------------------


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


def sgns_loss(center_vec: np.ndarray, context_vecs: np.ndarray, labels: np.ndarray) -> float:
    """Negative-sampling loss for one center vector against a stack of
    output vectors labeled 1 (observed context) or 0 (noise)."""
    logits = context_vecs @ center_vec
    # -[y log sigma(x) + (1-y) log sigma(-x)], stable via logaddexp
    losses = labels * np.logaddexp(0.0, -logits) + (1.0 - labels) * np.logaddexp(0.0, logits)
    return float(losses.sum())


def sgns_gradients(
    center_vec: np.ndarray, context_vecs: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of sgns_loss w.r.t. the center vector and each
    output vector."""
    logits = context_vecs @ center_vec
    err = _sigmoid(logits) - labels  # dL/dlogit
    grad_center = err @ context_vecs
    grad_context = err[:, None] * center_vec[None, :]
    return grad_center, grad_context


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def _noise_cumulative(vocab: Vocabulary) -> np.ndarray:
    counts = np.asarray([vocab.frequencies[t] for t in vocab.tokens], dtype=np.float64)
    weights = counts**0.75
    return np.cumsum(weights / weights.sum())


def _keep_probs(vocab: Vocabulary, t: float) -> np.ndarray:
    """Frequent-word subsampling keep probabilities (the classic
    (sqrt(f/t) + 1) * t/f rule, clipped to 1)."""
    counts = np.asarray([vocab.frequencies[tok] for tok in vocab.tokens], dtype=np.float64)
    if t <= 0:
        return np.ones_like(counts)
    freq = counts / counts.sum()
    keep = (np.sqrt(freq / t) + 1.0) * (t / freq)
    return np.minimum(keep, 1.0)


def fit_word2vec(corpus: Corpus, vocab: Vocabulary, config: W2VConfig) -> W2VModel:
    """Sequential SGD over (center, context) pairs with negative sampling.
    Deterministic given config.seed."""
    if not corpus:
        raise ValidationError("corpus is empty")
    docs = [
        np.asarray([vocab.token_to_index[t] for t in d.tokens if t in vocab], dtype=np.int64)
        for d in corpus
    ]
    total_tokens = sum(d.size for d in docs)
    if total_tokens == 0:
        raise ValidationError("corpus has no in-vocabulary tokens")

    rng = np.random.default_rng(config.seed)
    V = len(vocab)
    dim = config.dim
    syn0 = (rng.random((V, dim)) - 0.5) / dim  # input layer, classic init
    syn1 = np.zeros((V, dim))
    cum = _noise_cumulative(vocab)
    keep = _keep_probs(vocab, config.subsample_t)

    planned = config.epochs * total_tokens
    seen = 0
    lr_span = config.initial_lr - config.min_lr

    ctx_buf = np.empty(config.negatives + 1, dtype=np.int64)
    labels = np.zeros(config.negatives + 1)
    labels[0] = 1.0

    def draw_negatives(target: int) -> None:
        filled = 1
        attempts = 0
        while filled < ctx_buf.size and attempts < 100 * ctx_buf.size:
            w = int(np.searchsorted(cum, rng.random()))
            attempts += 1
            if w != target:
                ctx_buf[filled] = w
                filled += 1
        while filled < ctx_buf.size:  # degenerate vocabularies only
            ctx_buf[filled] = target
            filled += 1

    for _ in range(config.epochs):
        for doc in docs:
            if doc.size == 0:
                continue
            kept = doc[rng.random(doc.size) < keep[doc]]
            seen += doc.size
            lr = max(config.min_lr, config.initial_lr - lr_span * (seen / planned))
            n = kept.size
            for pos in range(n):
                b = int(rng.integers(0, config.window))
                span = config.window - b
                lo, hi = max(0, pos - span), min(n, pos + span + 1)
                if config.mode == "skipgram":
                    # window word is the network input, center word the
                    # predicted output (the word2vec.c convention)
                    for pos2 in range(lo, hi):
                        if pos2 == pos:
                            continue
                        inp = kept[pos2]
                        target = kept[pos]
                        ctx_buf[0] = target
                        draw_negatives(target)
                        v_in = syn0[inp]
                        outs = syn1[ctx_buf]
                        g_in, g_out = sgns_gradients(v_in, outs, labels)
                        np.add.at(syn1, ctx_buf, -lr * g_out)
                        syn0[inp] = v_in - lr * g_in
                else:  # cbow
                    ctx_idx = np.concatenate([kept[lo:pos], kept[pos + 1 : hi]])
                    if ctx_idx.size == 0:
                        continue
                    target = kept[pos]
                    ctx_buf[0] = target
                    draw_negatives(target)
                    l1 = syn0[ctx_idx].mean(axis=0)
                    outs = syn1[ctx_buf]
                    g_in, g_out = sgns_gradients(l1, outs, labels)
                    np.add.at(syn1, ctx_buf, -lr * g_out)
                    np.add.at(syn0, ctx_idx, -(lr / ctx_idx.size) * g_in)

    if not (np.isfinite(syn0).all() and np.isfinite(syn1).all()):
        raise ValidationError("training diverged: non-finite vectors")
    return W2VModel(input_vectors=syn0, output_vectors=syn1, vocabulary=vocab, config=config)


# ---------------------------------------------------------------------------
# Lookup and pooling
# ---------------------------------------------------------------------------


def word_vector(model: W2VModel, token: str) -> Optional[np.ndarray]:
    """The token's input vector, or None when out of vocabulary."""
    idx = model.vocabulary.token_to_index.get(token)
    if idx is None:
        return None
    return model.input_vectors[idx]


def doc_embedding(model: W2VModel, tokens: Sequence[str]) -> np.ndarray:
    """Arithmetic mean of the input vectors of in-vocabulary tokens."""
    ids = [model.vocabulary.token_to_index[t] for t in tokens if t in model.vocabulary]
    if not ids:
        raise ValidationError("no in-vocabulary tokens to embed")
    return model.input_vectors[ids].mean(axis=0)


def doc_embedding_matrix(model: W2VModel, corpus: Corpus) -> EmbeddingMatrix:
    rows = []
    failed = []
    for d in corpus:
        try:
            rows.append(doc_embedding(model, d.tokens))
        except ValidationError:
            failed.append(d.id)
    if failed:
        raise ValidationError(f"documents with zero in-vocabulary tokens: {failed}")
    return EmbeddingMatrix(
        values=np.vstack(rows), backend="word2vec", doc_ids=tuple(d.id for d in corpus)
    )


def mean_pool_batch(model: W2VModel, token_lists: Sequence[Sequence[str]]) -> np.ndarray:
    """Mean-pool many token sequences at once; sequences with no known
    tokens become zero rows (used by the explanation layer, whose
    perturbations may empty a document)."""
    out = np.zeros((len(token_lists), model.config.dim))
    for i, tokens in enumerate(token_lists):
        ids = [model.vocabulary.token_to_index[t] for t in tokens if t in model.vocabulary]
        if ids:
            out[i] = model.input_vectors[ids].mean(axis=0)
    return out


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def save_word2vec(model: W2VModel, path: str | Path) -> None:
    meta = {
        "config": {
            "dim": model.config.dim,
            "window": model.config.window,
            "negatives": model.config.negatives,
            "epochs": model.config.epochs,
            "initial_lr": model.config.initial_lr,
            "min_lr": model.config.min_lr,
            "mode": model.config.mode,
            "subsample_t": model.config.subsample_t,
            "seed": model.config.seed,
        },
        "vocab_hash": model.vocabulary.content_hash(),
        "vocab_tokens": model.vocabulary.tokens,
        "vocab_freqs": [model.vocabulary.frequencies[t] for t in model.vocabulary.tokens],
    }
    np.savez(
        path,
        input_vectors=model.input_vectors,
        output_vectors=model.output_vectors,
        meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
    )


def load_word2vec(path: str | Path) -> W2VModel:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        vocab = Vocabulary(
            token_to_index={t: i for i, t in enumerate(meta["vocab_tokens"])},
            frequencies=dict(zip(meta["vocab_tokens"], meta["vocab_freqs"])),
        )
        if vocab.content_hash() != meta["vocab_hash"]:
            raise ValidationError("vocabulary hash mismatch in model container")
        return W2VModel(
            input_vectors=data["input_vectors"].copy(),
            output_vectors=data["output_vectors"].copy(),
            vocabulary=vocab,
            config=W2VConfig(**meta["config"]),
        )


def export_text(model: W2VModel, path: str | Path) -> None:
    """Write 'token v1 v2 ...' lines for eyeballing the vectors."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for token in model.vocabulary.tokens:
            vec = model.input_vectors[model.vocabulary.token_to_index[token]]
            fh.write(token + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")
