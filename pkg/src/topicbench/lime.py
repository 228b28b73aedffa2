"""Local surrogate explanations for any embedding + classifier pipeline.

One explanation works on a document's distinct tokens: random subsets are
blanked out, the full pipeline is queried on every perturbed variant, and a
weighted ridge regression per class maps token presence to predicted
probability. The signed regression weights are the per-token contributions.

The pipeline under explanation is a batch callable: it takes a sequence of
token sequences and returns an (n, 4) probability matrix. It must accept
any token subset, including the empty one.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .corpus import LABELS, Document, TopicLabel
from .errors import TopicbenchError, ValidationError

Pipeline = Callable[[Sequence[Sequence[str]]], np.ndarray]


@dataclass(frozen=True)
class LimeConfig:
    n_samples: int = 2000
    kernel_width: Optional[float] = None  # defaults to 0.75 * sqrt(d) per document
    surrogate_l2: float = 1.0
    top_k: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 10:
            raise ValidationError(f"n_samples must be >= 10, got {self.n_samples}")
        if self.top_k < 1:
            raise ValidationError(f"top_k must be >= 1, got {self.top_k}")
        if self.kernel_width is not None and self.kernel_width <= 0:
            raise ValidationError(f"kernel_width must be > 0, got {self.kernel_width}")

    def fingerprint(self) -> str:
        blob = json.dumps(
            {
                "n_samples": self.n_samples,
                "kernel_width": self.kernel_width,
                "surrogate_l2": self.surrogate_l2,
                "top_k": self.top_k,
                "seed": self.seed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Explanation:
    doc_id: str
    tokens: tuple[str, ...]  # the preprocessed tokens the surrogate saw
    class_probabilities: tuple[float, ...]  # one per label, sums to 1
    contributions: dict[TopicLabel, tuple[tuple[str, float], ...]]
    config_fingerprint: str
    fingerprint: str  # content hash; the key judgments reference

    def __post_init__(self):
        if abs(sum(self.class_probabilities) - 1.0) > 1e-9:
            raise ValidationError("class probabilities must sum to 1")
        for ranked in self.contributions.values():
            mags = [abs(w) for _, w in ranked]
            if mags != sorted(mags, reverse=True):
                raise ValidationError("contributions must be sorted by |weight| descending")

    def predicted_label(self) -> TopicLabel:
        return LABELS[int(np.argmax(self.class_probabilities))]


class PipelineError(TopicbenchError):
    """The pipeline failed on a perturbed input; carries the offending mask."""

    def __init__(self, mask: np.ndarray, cause: Exception):
        super().__init__(f"pipeline failed on mask {mask.tolist()}: {cause}")
        self.mask = mask
        self.cause = cause


# ---------------------------------------------------------------------------
# Perturbation and proximity kernel
# ---------------------------------------------------------------------------


def perturb(distinct_tokens: Sequence[str], n_samples: int, seed: int) -> np.ndarray:
    """Binary masks over the distinct tokens, shape (n_samples, d). The
    first mask is all-ones (the unmodified document); the rest deactivate a
    uniformly drawn count of uniformly chosen tokens."""
    d = len(distinct_tokens)
    if d < 1:
        raise ValidationError("need at least one distinct token")
    rng = np.random.default_rng(seed)
    masks = np.ones((n_samples, d), dtype=np.int8)
    for i in range(1, n_samples):
        count = int(rng.integers(1, d + 1))
        off = rng.choice(d, size=count, replace=False)
        masks[i, off] = 0
    return masks


def kernel_weight(mask: np.ndarray, width: float) -> float:
    """exp(-D^2 / width^2) where D is the cosine distance between the mask
    and the all-ones vector. The all-zeros mask is assigned distance 1."""
    mask = np.asarray(mask)
    d = mask.size
    if d == 0:
        raise ValidationError("mask must be nonzero length")
    s = float(mask.sum())
    distance = 1.0 if s == 0 else 1.0 - math.sqrt(s / d)
    return math.exp(-(distance**2) / width**2)


# ---------------------------------------------------------------------------
# Weighted ridge surrogate
# ---------------------------------------------------------------------------


def fit_surrogate(
    masks: np.ndarray, pipeline_probs: np.ndarray, weights: np.ndarray, l2: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class weighted ridge regression of probability on token presence.

    Returns (coefficients, intercepts) with shapes (classes, d) and
    (classes,). The intercept is not regularized. Closed-form normal
    equations; deterministic."""
    masks = np.asarray(masks, dtype=np.float64)
    probs = np.asarray(pipeline_probs, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    n, d = masks.shape
    if n < d + 1:
        raise ValidationError(f"need at least d+1={d + 1} samples, got {n}")
    if np.any(weights <= 0):
        raise ValidationError("sample weights must be positive")
    Z = np.hstack([np.ones((n, 1)), masks])
    ZW = Z * weights[:, None]
    A = Z.T @ ZW
    ridge = np.eye(d + 1) * l2
    ridge[0, 0] = 0.0  # free intercept
    A += ridge
    B = ZW.T @ probs  # (d+1, classes)
    try:
        beta = np.linalg.solve(A, B)
    except np.linalg.LinAlgError as exc:
        raise ValidationError(f"surrogate system is singular: {exc}") from None
    return beta[1:].T, beta[0]


# ---------------------------------------------------------------------------
# explain
# ---------------------------------------------------------------------------


def _distinct_in_order(tokens: Sequence[str]) -> list[str]:
    seen = {}
    for t in tokens:
        if t not in seen:
            seen[t] = None
    return list(seen)


def masked_sequences(tokens: Sequence[str], distinct: Sequence[str], masks: np.ndarray):
    """Token sequences with every occurrence of each deactivated distinct
    token removed."""
    index = {t: i for i, t in enumerate(distinct)}
    positions = [index[t] for t in tokens]
    out = []
    for mask in masks:
        out.append([t for t, p in zip(tokens, positions) if mask[p]])
    return out


def explain(pipeline: Pipeline, document: Document, config: LimeConfig) -> Explanation:
    """Perturb the document, query the pipeline on every variant, fit the
    weighted surrogate, and report the top_k signed token contributions per
    class."""
    tokens = list(document.tokens)
    if not tokens:
        raise ValidationError(f"document {document.id!r} has no tokens")
    distinct = _distinct_in_order(tokens)
    d = len(distinct)
    masks = perturb(distinct, config.n_samples, config.seed)
    variants = masked_sequences(tokens, distinct, masks)
    try:
        probs = np.asarray(pipeline(variants), dtype=np.float64)
    except Exception as exc:
        # rerun one by one to name the offending mask
        for mask, variant in zip(masks, variants):
            try:
                pipeline([variant])
            except Exception as inner:
                raise PipelineError(mask, inner) from None
        raise PipelineError(masks[0], exc) from None
    if probs.shape != (config.n_samples, len(LABELS)):
        raise ValidationError(
            f"pipeline returned shape {probs.shape}, expected {(config.n_samples, len(LABELS))}"
        )
    width = config.kernel_width if config.kernel_width is not None else 0.75 * math.sqrt(d)
    weights = np.asarray([kernel_weight(m, width) for m in masks])
    coefs, _ = fit_surrogate(masks, probs, weights, config.surrogate_l2)

    contributions: dict[TopicLabel, tuple[tuple[str, float], ...]] = {}
    for c, label in enumerate(LABELS):
        ranked = sorted(zip(distinct, coefs[c]), key=lambda tw: (-abs(tw[1]), tw[0]))
        contributions[label] = tuple((t, float(w)) for t, w in ranked[: config.top_k])

    probs0 = tuple(float(p) for p in probs[0])
    config_fp = config.fingerprint()
    content = json.dumps(
        {
            "doc_id": document.id,
            "probs": probs0,
            "contributions": {l.value: list(v) for l, v in contributions.items()},
            "config": config_fp,
        },
        sort_keys=True,
    )
    return Explanation(
        doc_id=document.id,
        tokens=tuple(tokens),
        class_probabilities=probs0,
        contributions=contributions,
        config_fingerprint=config_fp,
        fingerprint=hashlib.sha256(content.encode()).hexdigest()[:24],
    )


# ---------------------------------------------------------------------------
# Record (de)serialization for the line-delimited export
# ---------------------------------------------------------------------------


def explanation_to_record(explanation: Explanation) -> dict:
    return {
        "id": explanation.fingerprint,
        "doc_id": explanation.doc_id,
        "tokens": list(explanation.tokens),
        "class_probabilities": {
            label.value: p for label, p in zip(LABELS, explanation.class_probabilities)
        },
        "contributions": {
            label.value: [[t, w] for t, w in ranked]
            for label, ranked in explanation.contributions.items()
        },
        "config_fingerprint": explanation.config_fingerprint,
    }


def explanation_from_record(record: dict) -> Explanation:
    return Explanation(
        doc_id=record["doc_id"],
        tokens=tuple(record.get("tokens", ())),
        class_probabilities=tuple(
            record["class_probabilities"][label.value] for label in LABELS
        ),
        contributions={
            TopicLabel(key): tuple((t, float(w)) for t, w in ranked)
            for key, ranked in record["contributions"].items()
        },
        config_fingerprint=record["config_fingerprint"],
        fingerprint=record["id"],
    )
