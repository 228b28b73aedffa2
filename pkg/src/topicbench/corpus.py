"""Corpus handling: ingestion, label adjudication, preprocessing, bigram
phrases, vocabulary, and stratified train/test splitting.

The corpus file format is UTF-8 JSON lines, one document per line, with
fields ``id``, ``title``, ``abstract`` and optional ``label_a`` /
``label_b`` (the two annotators' verdicts). All operations here are pure
functions over immutable inputs.
"""

from __future__ import annotations

import json
import math
import string
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError, ParseError, StratificationError, ValidationError


class TopicLabel(Enum):
    """The four topic classes. No other values are representable."""

    CHARACTERIZATION = "characterization"
    MODELING = "modeling"
    PROCESSING = "processing"
    SYNTHESIS = "synthesis"

    @classmethod
    def parse(cls, value: str) -> "TopicLabel":
        try:
            return cls(value)
        except ValueError:
            raise ValidationError(
                f"unknown label {value!r}; expected one of "
                f"{[l.value for l in cls]}"
            ) from None


LABELS = tuple(TopicLabel)  # canonical class order used everywhere


@dataclass(frozen=True)
class Document:
    """One abstract with its annotator labels and (optionally) its tokens."""

    id: str
    title: str
    abstract: str
    labels_a: Optional[TopicLabel] = None
    labels_b: Optional[TopicLabel] = None
    label: Optional[TopicLabel] = None  # consensus, set by adjudicate()
    tokens: tuple[str, ...] = ()

    def text(self) -> str:
        """Title and abstract joined; the unit preprocessing operates on."""
        return f"{self.title}\n{self.abstract}" if self.title else self.abstract


Corpus = tuple[Document, ...]


@dataclass(frozen=True)
class PreprocessConfig:
    lowercase: bool = True
    strip_punctuation: bool = True
    pos_filter: str = "lexicon"  # "off" or "lexicon"
    pos_lexicon_path: Optional[Path] = None
    min_token_length: int = 2

    def __post_init__(self):
        if self.pos_filter not in ("off", "lexicon"):
            raise ConfigError(f"pos_filter must be 'off' or 'lexicon', got {self.pos_filter!r}")


@dataclass(frozen=True)
class PhraseTable:
    """Scored adjacent token pairs worth merging into a single token."""

    entries: dict[tuple[str, str], float]
    min_count: int
    threshold: float


@dataclass(frozen=True)
class Vocabulary:
    """Contiguous token indexing in [0, V), descending-frequency order."""

    token_to_index: dict[str, int]
    frequencies: dict[str, int]

    def __len__(self) -> int:
        return len(self.token_to_index)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index

    @property
    def tokens(self) -> list[str]:
        """Tokens in index order."""
        out = [""] * len(self.token_to_index)
        for tok, idx in self.token_to_index.items():
            out[idx] = tok
        return out

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for tok in self.tokens:
            h.update(tok.encode("utf-8"))
            h.update(b"\x00")
        return h.hexdigest()


# ---------------------------------------------------------------------------
# Ingestion and adjudication
# ---------------------------------------------------------------------------

_FIELDS = ("id", "title", "abstract")


def ingest(path: str | Path) -> Corpus:
    """Load a JSON-lines corpus file, preserving order and checking id
    uniqueness. Raises ParseError with the offending line number."""
    path = Path(path)
    docs: list[Document] = []
    seen: dict[str, int] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from None
            if not isinstance(record, dict):
                raise ParseError("record is not an object", line=lineno)
            for f in _FIELDS:
                if f not in record or not isinstance(record[f], str):
                    raise ParseError(f"missing or non-string field {f!r}", line=lineno)
            doc_id = record["id"]
            if not doc_id:
                raise ParseError("empty id", line=lineno)
            if doc_id in seen:
                raise ValidationError(
                    f"duplicate id {doc_id!r} on line {lineno} (first seen on line {seen[doc_id]})"
                )
            seen[doc_id] = lineno
            docs.append(
                Document(
                    id=doc_id,
                    title=record["title"],
                    abstract=record["abstract"],
                    labels_a=TopicLabel.parse(record["label_a"]) if record.get("label_a") else None,
                    labels_b=TopicLabel.parse(record["label_b"]) if record.get("label_b") else None,
                )
            )
    return tuple(docs)


def adjudicate(corpus: Corpus) -> Corpus:
    """Keep only documents whose two annotators agree; record the consensus
    label. Every document must carry both annotations."""
    missing = [d.id for d in corpus if d.labels_a is None or d.labels_b is None]
    if missing:
        raise ValidationError(f"documents missing an annotation: {missing}")
    return tuple(
        replace(d, label=d.labels_a) for d in corpus if d.labels_a == d.labels_b
    )


# ---------------------------------------------------------------------------
# Preprocessing
# ---------------------------------------------------------------------------

_PUNCT_TABLE = str.maketrans({ch: " " for ch in string.punctuation})

_KEEP_TAGS = frozenset({"noun", "verb"})


def load_pos_lexicon(path: str | Path) -> dict[str, str]:
    """Read a word<TAB>tag lexicon. Tags are free-form; only 'noun' and
    'verb' survive the POS filter."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"POS lexicon file not found: {path}")
    lexicon: dict[str, str] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError("expected word<TAB>tag", line=lineno)
            lexicon[parts[0]] = parts[1]
    return lexicon


def preprocess(
    text: str,
    config: PreprocessConfig,
    lexicon: Optional[dict[str, str]] = None,
) -> list[str]:
    """Tokenize one text: lowercase, strip punctuation, keep nouns/verbs
    per the lexicon (unknown tokens are kept), drop short tokens.

    ``lexicon`` may be passed in to avoid re-reading the file per call.
    """
    if config.lowercase:
        text = text.lower()
    if config.strip_punctuation:
        text = text.translate(_PUNCT_TABLE)
    tokens = [t for t in text.split() if len(t) >= config.min_token_length]
    if config.pos_filter == "lexicon":
        if lexicon is None:
            if config.pos_lexicon_path is None:
                raise ConfigError("pos_filter='lexicon' requires pos_lexicon_path")
            lexicon = load_pos_lexicon(config.pos_lexicon_path)
        # tokens absent from the lexicon are kept: unknown scientific terms
        # must survive
        tokens = [t for t in tokens if lexicon.get(t, "noun") in _KEEP_TAGS]
    return tokens


def preprocess_corpus(corpus: Corpus, config: PreprocessConfig) -> Corpus:
    """Fill each document's token sequence from its title + abstract."""
    lexicon = None
    if config.pos_filter == "lexicon":
        if config.pos_lexicon_path is None:
            raise ConfigError("pos_filter='lexicon' requires pos_lexicon_path")
        lexicon = load_pos_lexicon(config.pos_lexicon_path)
    return tuple(
        replace(d, tokens=tuple(preprocess(d.text(), config, lexicon))) for d in corpus
    )


# ---------------------------------------------------------------------------
# Bigram phrases
# ---------------------------------------------------------------------------


def detect_bigrams(corpus: Corpus, min_count: int = 5, threshold: float = 10.0) -> PhraseTable:
    """Score adjacent token pairs and keep those above the threshold.

    score(a, b) = (count(ab) - min_count) * V / (count(a) * count(b))
    where V is the number of distinct tokens in the corpus. A pair is kept
    when count(ab) >= min_count and score >= threshold.
    """
    if min_count < 1:
        raise ValidationError(f"min_count must be >= 1, got {min_count}")
    if threshold <= 0:
        raise ValidationError(f"threshold must be > 0, got {threshold}")
    unigrams: Counter[str] = Counter()
    pairs: Counter[tuple[str, str]] = Counter()
    for doc in corpus:
        unigrams.update(doc.tokens)
        pairs.update(zip(doc.tokens, doc.tokens[1:]))
    v_total = len(unigrams)
    entries: dict[tuple[str, str], float] = {}
    for (a, b), n_ab in pairs.items():
        if n_ab < min_count:
            continue
        score = (n_ab - min_count) * v_total / (unigrams[a] * unigrams[b])
        if score >= threshold:
            entries[(a, b)] = score
    return PhraseTable(entries=entries, min_count=min_count, threshold=threshold)


def apply_phrases(tokens: Sequence[str], table: PhraseTable) -> list[str]:
    """Merge table pairs in one greedy left-to-right pass; merged tokens
    are joined with '_' and never re-merged."""
    out: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        if i + 1 < n and (tokens[i], tokens[i + 1]) in table.entries:
            out.append(f"{tokens[i]}_{tokens[i + 1]}")
            i += 2
        else:
            out.append(tokens[i])
            i += 1
    return out


def apply_phrases_corpus(corpus: Corpus, table: PhraseTable) -> Corpus:
    return tuple(replace(d, tokens=tuple(apply_phrases(d.tokens, table))) for d in corpus)


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------


def build_vocabulary(corpus: Corpus, min_freq: int = 1) -> Vocabulary:
    """Index tokens with corpus frequency >= min_freq, ordered by descending
    frequency with lexicographic tie-breaks."""
    counts: Counter[str] = Counter()
    for doc in corpus:
        counts.update(doc.tokens)
    kept = sorted(
        (t for t, c in counts.items() if c >= min_freq),
        key=lambda t: (-counts[t], t),
    )
    if not kept:
        raise ValidationError(f"vocabulary is empty at min_freq={min_freq}")
    return Vocabulary(
        token_to_index={t: i for i, t in enumerate(kept)},
        frequencies={t: counts[t] for t in kept},
    )


# ---------------------------------------------------------------------------
# Stratified split
# ---------------------------------------------------------------------------


def stratified_split(
    corpus: Corpus, train_fraction: float, seed: int
) -> tuple[Corpus, Corpus]:
    """Split into (train, test), preserving per-label proportions within one
    document. The test size is ceil(N * (1 - train_fraction)); per-label test
    counts are apportioned by largest remainder."""
    if not 0 < train_fraction < 1:
        raise ValidationError(f"train_fraction must be in (0, 1), got {train_fraction}")
    unlabeled = [d.id for d in corpus if d.label is None]
    if unlabeled:
        raise ValidationError(f"documents without a consensus label: {unlabeled}")

    by_label: dict[TopicLabel, list[int]] = {l: [] for l in LABELS}
    for i, d in enumerate(corpus):
        by_label[d.label].append(i)
    for label, idxs in by_label.items():
        if 0 < len(idxs) < 2:
            raise StratificationError(
                f"label {label.value!r} has {len(idxs)} document(s); need >= 2 to split"
            )

    n = len(corpus)
    n_test = math.ceil(n * (1.0 - train_fraction))
    # largest-remainder apportionment of n_test over labels
    quotas = {l: len(idxs) * n_test / n for l, idxs in by_label.items() if idxs}
    test_counts = {l: int(math.floor(q)) for l, q in quotas.items()}
    shortfall = n_test - sum(test_counts.values())
    for l in sorted(quotas, key=lambda l: (-(quotas[l] - test_counts[l]), l.value)):
        if shortfall <= 0:
            break
        test_counts[l] += 1
        shortfall -= 1

    rng = np.random.default_rng(seed)
    test_idx: set[int] = set()
    for label in LABELS:
        idxs = by_label[label]
        if not idxs:
            continue
        order = rng.permutation(len(idxs))
        take = test_counts.get(label, 0)
        test_idx.update(idxs[j] for j in order[:take])

    train = tuple(d for i, d in enumerate(corpus) if i not in test_idx)
    test = tuple(d for i, d in enumerate(corpus) if i in test_idx)
    return train, test


def label_counts(corpus: Iterable[Document]) -> dict[TopicLabel, int]:
    counts = Counter(d.label for d in corpus)
    return {l: counts.get(l, 0) for l in LABELS}
