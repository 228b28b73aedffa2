"""End-to-end experiment orchestration, the expert-review store, and the
agreement score.

A run executes: ingest -> adjudicate -> preprocess -> phrase -> split ->
embed (one of three interchangeable backends) -> grid search -> fit ->
cross-validated estimate -> test evaluation -> an explanation per test
document. Everything lands in a run directory as line-delimited /
tab-separated text plus model containers, so two runs with the same config
and seed produce byte-identical metric and explanation files.

By default embedding models are fitted on the training split only and test
documents are folded in afterwards; ``embed_before_split`` restores the
simpler embed-everything-then-split order.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_EVEN, Decimal, getcontext
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import corpus as corpus_mod
from . import ctxembed, forest, lda, lime, report, word2vec
from .corpus import LABELS, Corpus, Document, PreprocessConfig, TopicLabel, Vocabulary
from .embeddings import EmbeddingMatrix
from .errors import (
    ConflictError,
    ConfigError,
    NotFoundError,
    StageError,
    ValidationError,
)

BACKENDS = ("lda", "word2vec", "contextual")

DATA_DIR = Path(__file__).resolve().parent / "data"
BUNDLED_CORPUS = DATA_DIR / "substitute_corpus.jsonl"
BUNDLED_LEXICON = DATA_DIR / "pos_lexicon.tsv"


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    corpus_path: str = str(BUNDLED_CORPUS)
    pos_lexicon_path: Optional[str] = str(BUNDLED_LEXICON)
    backend: str = "lda"
    seed: int = 0
    train_fraction: float = 0.67
    cv_folds: int = 3
    vocab_min_freq: int = 2
    bigram_min_count: int = 5
    bigram_threshold: float = 10.0
    pos_filter: str = "lexicon"
    embed_before_split: bool = False
    explain_limit: Optional[int] = None  # None = every test document
    lda: lda.LdaConfig = field(default_factory=lda.LdaConfig)
    word2vec: word2vec.W2VConfig = field(default_factory=word2vec.W2VConfig)
    pooling: ctxembed.PoolingConfig = field(default_factory=ctxembed.PoolingConfig)
    provider: dict = field(default_factory=lambda: {"kind": "stub", "layers": 12, "dim": 768, "seed": 0})
    lime: lime.LimeConfig = field(default_factory=lime.LimeConfig)
    grid: tuple[forest.ForestParams, ...] = forest.DEFAULT_GRID

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")

    def to_json(self) -> str:
        obj = {
            "corpus_path": self.corpus_path,
            "pos_lexicon_path": self.pos_lexicon_path,
            "backend": self.backend,
            "seed": self.seed,
            "train_fraction": self.train_fraction,
            "cv_folds": self.cv_folds,
            "vocab_min_freq": self.vocab_min_freq,
            "bigram_min_count": self.bigram_min_count,
            "bigram_threshold": self.bigram_threshold,
            "pos_filter": self.pos_filter,
            "embed_before_split": self.embed_before_split,
            "explain_limit": self.explain_limit,
            "lda": vars(self.lda) | {},
            "word2vec": vars(self.word2vec) | {},
            "pooling": vars(self.pooling) | {},
            "provider": self.provider,
            "lime": vars(self.lime) | {},
            "grid": [
                {
                    "n_estimators": p.n_estimators,
                    "criterion": p.criterion,
                    "max_depth": p.max_depth,
                    "min_samples_leaf": p.min_samples_leaf,
                    "features_per_split": p.features_per_split,
                    "bootstrap": p.bootstrap,
                    "seed": p.seed,
                }
                for p in self.grid
            ],
        }
        return json.dumps(obj, sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        kwargs = dict(obj)
        if "lda" in kwargs:
            kwargs["lda"] = lda.LdaConfig(**kwargs["lda"])
        if "word2vec" in kwargs:
            kwargs["word2vec"] = word2vec.W2VConfig(**kwargs["word2vec"])
        if "pooling" in kwargs:
            kwargs["pooling"] = ctxembed.PoolingConfig(**kwargs["pooling"])
        if "lime" in kwargs:
            kwargs["lime"] = lime.LimeConfig(**kwargs["lime"])
        if "grid" in kwargs:
            kwargs["grid"] = tuple(forest.ForestParams(**p) for p in kwargs["grid"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def run_id(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:12]


def make_provider(spec: dict) -> ctxembed.EmbeddingProvider:
    kind = spec.get("kind", "stub")
    if kind == "stub":
        return ctxembed.HashEmbeddingProvider(
            layers=spec.get("layers", 12), dim=spec.get("dim", 768), seed=spec.get("seed", 0)
        )
    if kind == "file":
        return ctxembed.FileEmbeddingProvider(
            spec["directory"], layers=spec.get("layers", 12), dim=spec.get("dim", 768)
        )
    if kind == "http":
        return ctxembed.HttpEmbeddingProvider(
            spec["url"], layers=spec.get("layers", 12), dim=spec.get("dim", 768)
        )
    raise ConfigError(f"unknown provider kind {kind!r}")


# ---------------------------------------------------------------------------
# Embedding backends behind one interface
# ---------------------------------------------------------------------------


def _stable_seed(*parts) -> int:
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little") % (2**63)


class _Backend:
    """fit() on training documents, embed matrices for any documents, and a
    LIME pipeline (batch token sequences -> probability matrix) closed over
    a fitted forest."""

    name: str

    def fit(self, train: Corpus) -> None: ...

    def matrix(self, docs: Corpus) -> EmbeddingMatrix: ...

    def save(self, run_dir: Path) -> None: ...

    def lime_pipeline(self, doc: Document, model: forest.ForestModel) -> lime.Pipeline: ...


class _LdaBackend(_Backend):
    name = "lda"

    def __init__(self, config: ExperimentConfig, vocab: Vocabulary):
        self.config = config
        self.vocab = vocab
        self.model: Optional[lda.LdaModel] = None

    def fit(self, train):
        self.model = lda.fit_lda(train, self.vocab, self.config.lda)

    def matrix(self, docs):
        fitted_ids = dict(zip(self.model.doc_ids, range(len(self.model.doc_ids))))
        rows = []
        fold_in_lists = []
        fold_in_positions = []
        for i, d in enumerate(docs):
            if d.id in fitted_ids:
                rows.append(self.model.doc_topic[fitted_ids[d.id]])
            else:
                rows.append(None)
                ids = [self.vocab.token_to_index[t] for t in d.tokens if t in self.vocab]
                if not ids:
                    raise ValidationError(f"document {d.id!r} has no in-vocabulary tokens")
                fold_in_lists.append(ids)
                fold_in_positions.append(i)
        if fold_in_lists:
            inferred = lda.fold_in_batch(
                self.model, fold_in_lists, iterations=100, seed=self.config.seed
            )
            for pos, row in zip(fold_in_positions, inferred):
                rows[pos] = row
        return EmbeddingMatrix(
            values=np.vstack(rows), backend=self.name, doc_ids=tuple(d.id for d in docs)
        )

    def save(self, run_dir):
        lda.save_lda(self.model, run_dir / "model_lda.npz")

    def lime_pipeline(self, doc, model):
        vocab = self.vocab
        fold_seed = _stable_seed(self.config.seed, "lime", doc.id)

        def pipeline(variants):
            id_lists = [
                [vocab.token_to_index[t] for t in v if t in vocab] for v in variants
            ]
            emb = lda.fold_in_batch(self.model, id_lists, iterations=50, seed=fold_seed)
            return forest.predict_proba_matrix(model, emb)

        return pipeline


class _Word2VecBackend(_Backend):
    name = "word2vec"

    def __init__(self, config: ExperimentConfig, vocab: Vocabulary):
        self.config = config
        self.vocab = vocab
        self.model: Optional[word2vec.W2VModel] = None

    def fit(self, train):
        self.model = word2vec.fit_word2vec(train, self.vocab, self.config.word2vec)

    def matrix(self, docs):
        return word2vec.doc_embedding_matrix(self.model, docs)

    def save(self, run_dir):
        word2vec.save_word2vec(self.model, run_dir / "model_word2vec.npz")

    def lime_pipeline(self, doc, model):
        def pipeline(variants):
            emb = word2vec.mean_pool_batch(self.model, variants)
            return forest.predict_proba_matrix(model, emb)

        return pipeline


class _ContextualBackend(_Backend):
    name = "contextual"

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.provider = make_provider(config.provider)
        self.pooling = config.pooling

    def fit(self, train):
        pass  # the provider is pretrained; nothing to fit

    def matrix(self, docs):
        return ctxembed.ctx_doc_matrix(self.provider, docs, self.pooling)

    def save(self, run_dir):
        pass

    def lime_pipeline(self, doc, model):
        # Cache the document's pooled per-token vectors once; a perturbed
        # variant keeps all-or-none occurrences of each distinct token, so
        # its mean embedding is recoverable from per-token sums.
        fetched = ctxembed.fetch_token_embeddings(self.provider, doc.id, doc.tokens)
        per_token = ctxembed.pooled_token_vectors(fetched, self.pooling)
        sums: dict[str, np.ndarray] = {}
        counts: dict[str, int] = {}
        for token, row in zip(fetched.token_strings, per_token):
            sums[token] = sums.get(token, 0) + row
            counts[token] = counts.get(token, 0) + 1
        dim = per_token.shape[1]

        def pipeline(variants):
            emb = np.zeros((len(variants), dim))
            for i, variant in enumerate(variants):
                active = set(variant) & sums.keys()
                if active:
                    total = sum(counts[t] for t in active)
                    emb[i] = sum(sums[t] for t in active) / total
            return forest.predict_proba_matrix(model, emb)

        return pipeline


def _make_backend(config: ExperimentConfig, vocab: Vocabulary) -> _Backend:
    if config.backend == "lda":
        return _LdaBackend(config, vocab)
    if config.backend == "word2vec":
        return _Word2VecBackend(config, vocab)
    return _ContextualBackend(config)


# ---------------------------------------------------------------------------
# run_experiment
# ---------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    run_id: str
    backend: str
    seed: int
    n_train: int
    n_test: int
    best_params: forest.ForestParams
    cv_mean_f1: float
    evaluation: forest.EvalReport
    n_explanations: int
    fingerprint: str  # digest of metrics.tsv + explanations.jsonl


def _stage(name: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _corpus_hash(docs: Corpus) -> str:
    h = hashlib.sha256()
    for d in docs:
        h.update(d.id.encode())
        h.update(b"\x00")
        for t in d.tokens:
            h.update(t.encode())
            h.update(b"\x01")
    return h.hexdigest()[:16]


def run_experiment(config: ExperimentConfig, run_dir: str | Path) -> ExperimentReport:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    incomplete = run_dir / "INCOMPLETE"
    incomplete.write_text("run in progress\n")

    raw = _stage("ingest", corpus_mod.ingest, config.corpus_path)
    consensus = _stage("adjudicate", corpus_mod.adjudicate, raw)

    pre_config = PreprocessConfig(
        pos_filter=config.pos_filter,
        pos_lexicon_path=Path(config.pos_lexicon_path) if config.pos_lexicon_path else None,
    )
    docs = _stage("preprocess", corpus_mod.preprocess_corpus, consensus, pre_config)

    table = _stage(
        "phrase", corpus_mod.detect_bigrams, docs, config.bigram_min_count, config.bigram_threshold
    )
    docs = _stage("phrase", corpus_mod.apply_phrases_corpus, docs, table)

    train, test = _stage(
        "split", corpus_mod.stratified_split, docs, config.train_fraction, config.seed
    )

    vocab_docs = docs if config.embed_before_split else train
    vocab = _stage("vocabulary", corpus_mod.build_vocabulary, vocab_docs, config.vocab_min_freq)

    backend = _make_backend(config, vocab)

    def embed_stage():
        if config.embed_before_split:
            backend.fit(docs)
            full = backend.matrix(docs)
            index = {doc_id: i for i, doc_id in enumerate(full.doc_ids)}
            train_m = EmbeddingMatrix(
                values=full.values[[index[d.id] for d in train]],
                backend=full.backend,
                doc_ids=tuple(d.id for d in train),
            )
            test_m = EmbeddingMatrix(
                values=full.values[[index[d.id] for d in test]],
                backend=full.backend,
                doc_ids=tuple(d.id for d in test),
            )
        else:
            backend.fit(train)
            train_m = backend.matrix(train)
            test_m = backend.matrix(test)
        return train_m, test_m

    train_matrix, test_matrix = _stage("embed", embed_stage)

    y_train = [d.label for d in train]
    y_test = [d.label for d in test]

    best_params, scores = _stage(
        "grid_search",
        forest.grid_search,
        train_matrix.values,
        y_train,
        list(config.grid),
        config.cv_folds,
        config.seed,
    )
    best_index = list(config.grid).index(best_params)
    cv_mean_f1 = scores[best_index]

    fingerprint_src = f"{backend.name}:{_corpus_hash(train)}"
    model = _stage(
        "fit", forest.fit_forest, train_matrix.values, y_train, best_params, fingerprint_src
    )

    predictions = _stage("evaluate", forest.predict, model, test_matrix.values)
    evaluation = _stage("evaluate", forest.evaluate, y_test, predictions)

    def explain_stage():
        limit = config.explain_limit
        targets = test if limit is None else test[:limit]
        explanations = []
        for doc in targets:
            doc_config = replace(config.lime, seed=_stable_seed(config.lime.seed, doc.id))
            pipeline = backend.lime_pipeline(doc, model)
            explanations.append(lime.explain(pipeline, doc, doc_config))
        return explanations

    explanations = _stage("explain", explain_stage)

    def persist_stage():
        (run_dir / "config.json").write_text(config.to_json() + "\n", encoding="utf-8")
        report.write_metrics_tsv(evaluation, cv_mean_f1, run_dir / "metrics.tsv")
        report.write_cv_tsv(config.grid, scores, best_index, run_dir / "cv_results.tsv")
        with (run_dir / "explanations.jsonl").open("w", encoding="utf-8") as fh:
            for e in explanations:
                fh.write(json.dumps(lime.explanation_to_record(e), sort_keys=True) + "\n")
        split_info = {
            "train": [d.id for d in train],
            "test": [d.id for d in test],
            "corpus_hash": _corpus_hash(docs),
        }
        (run_dir / "split.json").write_text(
            json.dumps(split_info, sort_keys=True, indent=1) + "\n", encoding="utf-8"
        )
        forest.save_forest(model, run_dir / "model_forest.npz")
        backend.save(run_dir)
        report.render_metrics_figure(evaluation, backend.name, run_dir / "metrics.png")
        if explanations:
            report.render_explanation_figure(
                explanations[0], run_dir / "explanation_sample.png"
            )

    _stage("persist", persist_stage)

    digest = hashlib.sha256()
    digest.update((run_dir / "metrics.tsv").read_bytes())
    digest.update((run_dir / "explanations.jsonl").read_bytes())
    fingerprint = digest.hexdigest()[:16]

    summary = ExperimentReport(
        run_id=config.run_id(),
        backend=backend.name,
        seed=config.seed,
        n_train=len(train),
        n_test=len(test),
        best_params=best_params,
        cv_mean_f1=cv_mean_f1,
        evaluation=evaluation,
        n_explanations=len(explanations),
        fingerprint=fingerprint,
    )
    (run_dir / "report.json").write_text(
        json.dumps(
            {
                "run_id": summary.run_id,
                "backend": summary.backend,
                "seed": summary.seed,
                "n_train": summary.n_train,
                "n_test": summary.n_test,
                "cv_mean_f1": summary.cv_mean_f1,
                "accuracy": evaluation.accuracy,
                "precision": evaluation.precision,
                "recall": evaluation.recall,
                "f1": evaluation.f1,
                "n_explanations": summary.n_explanations,
                "fingerprint": summary.fingerprint,
            },
            sort_keys=True,
            indent=1,
        )
        + "\n",
        encoding="utf-8",
    )
    incomplete.unlink()
    return summary


# ---------------------------------------------------------------------------
# Judgments and the agreement score
# ---------------------------------------------------------------------------

VERDICTS = ("logical", "illogical")

# The four protocol steps, in order:
#   1. the explanation's significant terms were collected and considered
#   2. no term is too vague to tell a story with its neighbors
#   3. the terms do NOT relate better to another label
#   4. the story the terms tell matches the predicted label
STEP_NAMES = (
    "terms_collected",
    "no_vague_terms",
    "no_better_label",
    "story_matches",
)


@dataclass(frozen=True)
class JudgmentRecord:
    doc_id: str
    explanation_fingerprint: str
    reviewer: str
    step_answers: tuple[bool, bool, bool, bool]
    verdict: str
    timestamp: str = ""
    backend: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValidationError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")
        if len(self.step_answers) != 4:
            raise ValidationError("step_answers must have exactly 4 entries")
        if not self.reviewer:
            raise ValidationError("reviewer id must be nonempty")
        if self.verdict == "logical" and not (
            self.step_answers[1] and self.step_answers[2] and self.step_answers[3]
        ):
            raise ValidationError(
                "a logical verdict requires no vague terms, no better-fitting "
                "label, and a story matching the prediction"
            )


@dataclass(frozen=True)
class AgreementReport:
    c: int
    n_test: int
    score: str  # c/n_test rendered to 4 decimals from exact rationals
    n_judged: int
    score_judged: str  # c/n_judged, same rendering
    per_backend: dict[str, str]


def render_fraction(fraction: Fraction, places: int = 4) -> str:
    getcontext().prec = 50
    value = Decimal(fraction.numerator) / Decimal(fraction.denominator)
    return str(value.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_EVEN))


def agreement_score(judgments: Sequence[JudgmentRecord], n_test: int) -> AgreementReport:
    """c / n_test where c counts logical verdicts; exact rational arithmetic
    rendered to four decimals. Also reports the score over judged-so-far."""
    if n_test < 0:
        raise ValidationError("n_test must be >= 0")
    if len(judgments) > n_test:
        raise ValidationError(f"{len(judgments)} judgments exceed n_test={n_test}")
    seen: set[tuple[str, str]] = set()
    for j in judgments:
        key = (j.reviewer, j.explanation_fingerprint)
        if key in seen:
            raise ValidationError(
                f"duplicate judgment by {j.reviewer!r} on {j.explanation_fingerprint}"
            )
        seen.add(key)
    c = sum(1 for j in judgments if j.verdict == "logical")
    score = render_fraction(Fraction(c, n_test)) if n_test else "0.0000"
    n_judged = len(judgments)
    score_judged = render_fraction(Fraction(c, n_judged)) if n_judged else "0.0000"
    per_backend: dict[str, str] = {}
    backends = sorted({j.backend for j in judgments if j.backend})
    for b in backends:
        subset = [j for j in judgments if j.backend == b]
        bc = sum(1 for j in subset if j.verdict == "logical")
        per_backend[b] = render_fraction(Fraction(bc, len(subset)))
    return AgreementReport(
        c=c,
        n_test=n_test,
        score=score,
        n_judged=n_judged,
        score_judged=score_judged,
        per_backend=per_backend,
    )


# ---------------------------------------------------------------------------
# Run store (append-only judgments over persisted explanations)
# ---------------------------------------------------------------------------


class RunStore:
    """One run directory: explanations are read-only inputs, judgments are
    an append-only line-delimited log. Writes are serialized by a lock."""

    def __init__(self, run_dir: str | Path):
        self.run_dir = Path(run_dir)
        if not (self.run_dir / "report.json").exists():
            raise NotFoundError(f"{self.run_dir} is not a completed run directory")
        self.summary = json.loads((self.run_dir / "report.json").read_text(encoding="utf-8"))
        self._lock = threading.Lock()
        self._explanations: dict[str, lime.Explanation] = {}
        expl_path = self.run_dir / "explanations.jsonl"
        if expl_path.exists():
            with expl_path.open(encoding="utf-8") as fh:
                for line in fh:
                    e = lime.explanation_from_record(json.loads(line))
                    self._explanations[e.fingerprint] = e
        self._judgments: dict[str, JudgmentRecord] = {}
        self._load_judgments()

    @property
    def run_id(self) -> str:
        return self.summary["run_id"]

    @property
    def backend(self) -> str:
        return self.summary["backend"]

    @property
    def n_test(self) -> int:
        return self.summary["n_test"]

    def _judgments_path(self) -> Path:
        return self.run_dir / "judgments.jsonl"

    def _load_judgments(self):
        path = self._judgments_path()
        if not path.exists():
            return
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                obj = json.loads(line)
                record_id = obj.pop("record_id")
                obj["step_answers"] = tuple(obj["step_answers"])
                self._judgments[record_id] = JudgmentRecord(**obj)

    def explanations(self) -> list[lime.Explanation]:
        return list(self._explanations.values())

    def get_explanation(self, fingerprint: str) -> lime.Explanation:
        try:
            return self._explanations[fingerprint]
        except KeyError:
            raise NotFoundError(f"no explanation {fingerprint!r} in run {self.run_id}") from None

    def judgments(self) -> list[JudgmentRecord]:
        return list(self._judgments.values())

    def get_judgment(self, record_id: str) -> JudgmentRecord:
        try:
            return self._judgments[record_id]
        except KeyError:
            raise NotFoundError(f"no judgment {record_id!r}") from None

    def record_judgment(self, record: JudgmentRecord) -> str:
        """Validate, append to the log, and return the new record id."""
        with self._lock:
            if record.explanation_fingerprint not in self._explanations:
                raise NotFoundError(
                    f"no explanation {record.explanation_fingerprint!r} in run {self.run_id}"
                )
            expl = self._explanations[record.explanation_fingerprint]
            if record.doc_id and record.doc_id != expl.doc_id:
                raise ValidationError(
                    f"judgment doc_id {record.doc_id!r} does not match explanation "
                    f"document {expl.doc_id!r}"
                )
            for existing in self._judgments.values():
                if (
                    existing.reviewer == record.reviewer
                    and existing.explanation_fingerprint == record.explanation_fingerprint
                ):
                    raise ConflictError(
                        f"reviewer {record.reviewer!r} already judged "
                        f"{record.explanation_fingerprint}"
                    )
            if not record.timestamp:
                import datetime

                record = replace(
                    record,
                    timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
                )
            if not record.backend:
                record = replace(record, backend=self.backend)
            record_id = f"j-{len(self._judgments) + 1:05d}"
            obj = {
                "record_id": record_id,
                "doc_id": record.doc_id,
                "explanation_fingerprint": record.explanation_fingerprint,
                "reviewer": record.reviewer,
                "step_answers": list(record.step_answers),
                "verdict": record.verdict,
                "timestamp": record.timestamp,
                "backend": record.backend,
            }
            with self._judgments_path().open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(obj, sort_keys=True) + "\n")
            self._judgments[record_id] = record
            return record_id

    def agreement(self) -> AgreementReport:
        return agreement_score(self.judgments(), self.n_test)

    def metrics_records(self) -> list[dict]:
        rows = []
        path = self.run_dir / "metrics.tsv"
        lines = path.read_text(encoding="utf-8").strip().split("\n")
        for line in lines[1:]:
            scope, metric, value = line.split("\t")
            rows.append({"scope": scope, "metric": metric, "value": value})
        return rows


class WorkbenchStore:
    """All run directories under one root."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._runs: dict[str, RunStore] = {}
        self.refresh()

    def refresh(self):
        if not self.root.is_dir():
            return
        for child in sorted(self.root.iterdir()):
            if (child / "report.json").exists():
                store = RunStore(child)
                self._runs[store.run_id] = store

    def runs(self) -> list[RunStore]:
        return list(self._runs.values())

    def get_run(self, run_id: str) -> RunStore:
        try:
            return self._runs[run_id]
        except KeyError:
            raise NotFoundError(f"no run {run_id!r}") from None

    def find_explanation(self, fingerprint: str) -> tuple[RunStore, lime.Explanation]:
        for store in self._runs.values():
            if fingerprint in store._explanations:
                return store, store._explanations[fingerprint]
        raise NotFoundError(f"no explanation {fingerprint!r} in any run")
