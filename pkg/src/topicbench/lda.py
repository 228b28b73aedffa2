"""Latent topic model trained by collapsed Gibbs sampling.

Documents are embedded as their posterior topic distributions (an N x K
matrix). Posterior means for both the document-topic and topic-word
matrices are estimated by averaging count-based estimates over the
post-burn-in iterations of the chain.

Determinism: every document owns an RNG stream seeded from (config seed,
document id), and the sampler visits documents in id order regardless of
their position in the corpus. Permuting the corpus therefore permutes the
embedding rows and changes nothing else.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .corpus import Corpus, Vocabulary
from .embeddings import EmbeddingMatrix
from .errors import ValidationError

LL_EVERY = 50  # corpus log-likelihood sampling stride (iterations)


@dataclass(frozen=True)
class LdaConfig:
    K: int = 100
    alpha: Optional[float] = None  # document-topic prior; defaults to 50/K
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 800
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValidationError(f"K must be >= 1, got {self.K}")
        if self.alpha is not None and self.alpha <= 0:
            raise ValidationError(f"alpha must be > 0, got {self.alpha}")
        if self.beta <= 0:
            raise ValidationError(f"beta must be > 0, got {self.beta}")
        if not 0 <= self.burn_in < self.iterations:
            raise ValidationError(
                f"need 0 <= burn_in < iterations, got {self.burn_in} / {self.iterations}"
            )

    @property
    def alpha_value(self) -> float:
        return self.alpha if self.alpha is not None else 50.0 / self.K


@dataclass
class LdaModel:
    topic_word: np.ndarray  # (K, V), rows on the simplex
    doc_topic: np.ndarray  # (N, K), rows on the simplex, corpus order
    config: LdaConfig
    vocabulary: Vocabulary
    doc_ids: tuple[str, ...]
    ll_trace: np.ndarray  # (n_points, 2): iteration, log-likelihood


# ---------------------------------------------------------------------------
# RNG: xorshift64* with one stream per document
# ---------------------------------------------------------------------------


def _doc_seed(seed: int, doc_id: str) -> np.uint64:
    digest = hashlib.sha256(f"{seed}:{doc_id}".encode("utf-8")).digest()
    value = int.from_bytes(digest[:8], "little")
    return np.uint64(value or 0x9E3779B97F4A7C15)


@njit(cache=True, inline="always")
def _next_double(states, i):
    x = states[i]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    states[i] = x
    return np.float64(
        (x * np.uint64(0x2545F4914F6CDD1D)) >> np.uint64(11)
    ) * (1.0 / 9007199254740992.0)


# ---------------------------------------------------------------------------
# Gibbs kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _gibbs_fit(tok, doc_off, K, V, alpha, beta, iterations, burn_in, seeds):
    n_docs = doc_off.size - 1
    n_tok = tok.size
    z = np.zeros(n_tok, dtype=np.int32)
    n_kv = np.zeros((K, V), dtype=np.int64)
    n_k = np.zeros(K, dtype=np.int64)
    n_mk = np.zeros((n_docs, K), dtype=np.int64)
    states = seeds.copy()

    for m in range(n_docs):
        for j in range(doc_off[m], doc_off[m + 1]):
            k = int(_next_double(states, m) * K)
            if k >= K:
                k = K - 1
            z[j] = k
            w = tok[j]
            n_kv[k, w] += 1
            n_k[k] += 1
            n_mk[m, k] += 1

    acc_theta = np.zeros((n_docs, K))
    acc_phi = np.zeros((K, V))
    n_samples = 0
    n_ll = (iterations + LL_EVERY - 1) // LL_EVERY
    ll_iter = np.zeros(n_ll, dtype=np.int64)
    ll_val = np.zeros(n_ll)
    ll_n = 0
    p = np.empty(K)
    vbeta = V * beta

    for it in range(iterations):
        for m in range(n_docs):
            for j in range(doc_off[m], doc_off[m + 1]):
                w = tok[j]
                k = z[j]
                n_kv[k, w] -= 1
                n_k[k] -= 1
                n_mk[m, k] -= 1
                total = 0.0
                for kk in range(K):
                    val = (n_kv[kk, w] + beta) / (n_k[kk] + vbeta) * (n_mk[m, kk] + alpha)
                    p[kk] = val
                    total += val
                u = _next_double(states, m) * total
                acc = 0.0
                k = K - 1
                for kk in range(K):
                    acc += p[kk]
                    if u < acc:
                        k = kk
                        break
                z[j] = k
                n_kv[k, w] += 1
                n_k[k] += 1
                n_mk[m, k] += 1

        if it % LL_EVERY == 0:
            ll = 0.0
            for m in range(n_docs):
                len_m = doc_off[m + 1] - doc_off[m]
                denom_theta = len_m + K * alpha
                for j in range(doc_off[m], doc_off[m + 1]):
                    w = tok[j]
                    pw = 0.0
                    for kk in range(K):
                        theta = (n_mk[m, kk] + alpha) / denom_theta
                        phi = (n_kv[kk, w] + beta) / (n_k[kk] + vbeta)
                        pw += theta * phi
                    ll += np.log(pw)
            ll_iter[ll_n] = it
            ll_val[ll_n] = ll
            ll_n += 1

        if it >= burn_in:
            n_samples += 1
            for m in range(n_docs):
                len_m = doc_off[m + 1] - doc_off[m]
                denom = len_m + K * alpha
                for kk in range(K):
                    acc_theta[m, kk] += (n_mk[m, kk] + alpha) / denom
            for kk in range(K):
                denom = n_k[kk] + vbeta
                for w in range(V):
                    acc_phi[kk, w] += (n_kv[kk, w] + beta) / denom

    return acc_theta / n_samples, acc_phi / n_samples, ll_iter[:ll_n], ll_val[:ll_n]


@njit(cache=True)
def _gibbs_fold_in(tok, doc_off, phi, alpha, iterations, burn_in, seeds):
    """Sample topic assignments for held-out documents with the topic-word
    matrix held fixed. Zero-token documents yield the uniform prior mean."""
    n_docs = doc_off.size - 1
    K = phi.shape[0]
    out = np.zeros((n_docs, K))
    states = seeds.copy()
    p = np.empty(K)
    for m in range(n_docs):
        start, end = doc_off[m], doc_off[m + 1]
        len_m = end - start
        n_mk = np.zeros(K, dtype=np.int64)
        z = np.zeros(len_m, dtype=np.int32)
        for j in range(len_m):
            k = int(_next_double(states, m) * K)
            if k >= K:
                k = K - 1
            z[j] = k
            n_mk[k] += 1
        n_samples = 0
        denom = len_m + K * alpha
        for it in range(iterations):
            for j in range(len_m):
                w = tok[start + j]
                k = z[j]
                n_mk[k] -= 1
                total = 0.0
                for kk in range(K):
                    val = phi[kk, w] * (n_mk[kk] + alpha)
                    p[kk] = val
                    total += val
                u = _next_double(states, m) * total
                acc = 0.0
                k = K - 1
                for kk in range(K):
                    acc += p[kk]
                    if u < acc:
                        k = kk
                        break
                z[j] = k
                n_mk[k] += 1
            if it >= burn_in:
                n_samples += 1
                for kk in range(K):
                    out[m, kk] += (n_mk[kk] + alpha) / denom
        out[m] /= n_samples
    return out


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def _encode_corpus(corpus: Corpus, vocab: Vocabulary):
    """Token-id arrays in canonical (id-sorted) document order."""
    order = sorted(range(len(corpus)), key=lambda i: corpus[i].id)
    empty = []
    tok_ids = []
    offsets = [0]
    for i in order:
        doc = corpus[i]
        ids = [vocab.token_to_index[t] for t in doc.tokens if t in vocab]
        if not ids:
            empty.append(doc.id)
        tok_ids.extend(ids)
        offsets.append(len(tok_ids))
    if empty:
        raise ValidationError(f"documents with zero in-vocabulary tokens: {empty}")
    return (
        np.asarray(tok_ids, dtype=np.int32),
        np.asarray(offsets, dtype=np.int64),
        order,
    )


def fit_lda(corpus: Corpus, vocab: Vocabulary, config: LdaConfig) -> LdaModel:
    if not corpus:
        raise ValidationError("corpus is empty")
    tok, off, order = _encode_corpus(corpus, vocab)
    seeds = np.asarray(
        [_doc_seed(config.seed, corpus[i].id) for i in order], dtype=np.uint64
    )
    theta_sorted, phi, ll_iter, ll_val = _gibbs_fit(
        tok,
        off,
        config.K,
        len(vocab),
        config.alpha_value,
        config.beta,
        config.iterations,
        config.burn_in,
        seeds,
    )
    theta = np.empty_like(theta_sorted)
    for pos, i in enumerate(order):
        theta[i] = theta_sorted[pos]
    return LdaModel(
        topic_word=phi,
        doc_topic=theta,
        config=config,
        vocabulary=vocab,
        doc_ids=tuple(d.id for d in corpus),
        ll_trace=np.column_stack([ll_iter, ll_val]),
    )


def doc_embeddings(model: LdaModel) -> EmbeddingMatrix:
    return EmbeddingMatrix(values=model.doc_topic.copy(), backend="lda", doc_ids=model.doc_ids)


def infer_topics(
    model: LdaModel, tokens: Sequence[str], iterations: int = 100, seed: int = 0
) -> np.ndarray:
    """Embed a held-out document by fold-in sampling against the trained
    topic-word matrix. Burn-in is the first half of the iterations."""
    ids = [model.vocabulary.token_to_index[t] for t in tokens if t in model.vocabulary]
    if not ids:
        raise ValidationError("no in-vocabulary tokens to infer from")
    return fold_in_batch(model, [ids], iterations=iterations, seed=seed)[0]


def fold_in_batch(
    model: LdaModel,
    token_id_lists: Sequence[Sequence[int]],
    iterations: int = 100,
    seed: int = 0,
) -> np.ndarray:
    """Vectorized fold-in for many (possibly empty) token-id sequences.
    Empty sequences get the prior mean (uniform). Stream index is positional,
    so results depend only on (seed, position, content)."""
    offsets = [0]
    flat: list[int] = []
    for ids in token_id_lists:
        flat.extend(ids)
        offsets.append(len(flat))
    seeds = np.asarray(
        [_doc_seed(seed, str(i)) for i in range(len(token_id_lists))], dtype=np.uint64
    )
    return _gibbs_fold_in(
        np.asarray(flat, dtype=np.int32),
        np.asarray(offsets, dtype=np.int64),
        model.topic_word,
        model.config.alpha_value,
        iterations,
        iterations // 2,
        seeds,
    )


def top_words(model: LdaModel, topic: int, n: int) -> list[tuple[str, float]]:
    """The n most probable tokens of one topic, descending probability,
    lexicographic on ties."""
    if not 0 <= topic < model.config.K:
        raise ValidationError(f"topic {topic} out of range [0, {model.config.K})")
    row = model.topic_word[topic]
    tokens = model.vocabulary.tokens
    ranked = sorted(zip(tokens, row), key=lambda tv: (-tv[1], tv[0]))
    return [(t, float(v)) for t, v in ranked[: max(n, 0)]]


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def save_lda(model: LdaModel, path: str | Path) -> None:
    meta = {
        "config": {
            "K": model.config.K,
            "alpha": model.config.alpha,
            "beta": model.config.beta,
            "iterations": model.config.iterations,
            "burn_in": model.config.burn_in,
            "seed": model.config.seed,
        },
        "vocab_hash": model.vocabulary.content_hash(),
        "doc_ids": list(model.doc_ids),
        "vocab_tokens": model.vocabulary.tokens,
        "vocab_freqs": [model.vocabulary.frequencies[t] for t in model.vocabulary.tokens],
    }
    np.savez(
        path,
        topic_word=model.topic_word,
        doc_topic=model.doc_topic,
        ll_trace=model.ll_trace,
        meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
    )


def load_lda(path: str | Path) -> LdaModel:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        vocab = Vocabulary(
            token_to_index={t: i for i, t in enumerate(meta["vocab_tokens"])},
            frequencies=dict(zip(meta["vocab_tokens"], meta["vocab_freqs"])),
        )
        if vocab.content_hash() != meta["vocab_hash"]:
            raise ValidationError("vocabulary hash mismatch in model container")
        return LdaModel(
            topic_word=data["topic_word"].copy(),
            doc_topic=data["doc_topic"].copy(),
            config=LdaConfig(**meta["config"]),
            vocabulary=vocab,
            doc_ids=tuple(meta["doc_ids"]),
            ll_trace=data["ll_trace"].copy(),
        )
