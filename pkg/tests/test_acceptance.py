"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line. Tolerances are pinned here and nowhere else.

Run with: pytest tests/test_acceptance.py -v -s
"""

import time
from pathlib import Path

import numpy as np
import pytest

from topicbench import corpus as C
from topicbench import ctxembed as CE
from topicbench import forest as F
from topicbench import lda as LDA
from topicbench import lime as LM
from topicbench import word2vec as W2V
from topicbench import workbench as WB
from topicbench.lime import LimeConfig

from conftest import make_doc
from test_lime import make_plant, planted_linear_pipeline
from test_word2vec import (
    finite_difference_center_grad,
    finite_difference_context_grad,
    rel_err,
)


def report_line(name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE [{status}] {name}" + (f" -- {detail}" if detail else ""))
    assert ok, f"{name}: {detail}"


BENCH_GRID = (
    F.ForestParams(n_estimators=100, criterion="gini", max_depth=8, seed=0),
    F.ForestParams(n_estimators=100, criterion="gini", max_depth=None, seed=0),
)


@pytest.fixture(scope="module")
def fixture_258(consensus_corpus):
    """258 adjudicated, preprocessed, phrased documents."""
    table = C.detect_bigrams(consensus_corpus, min_count=5, threshold=10.0)
    return C.apply_phrases_corpus(consensus_corpus, table)


# ---------------------------------------------------------------------------
# 1. Agreement arithmetic (exact, tolerance 0 on the rendered value)
# ---------------------------------------------------------------------------


def test_agreement_arithmetic():
    cases = {67: "0.7791", 56: "0.6512", 51: "0.5930"}
    results = {}
    for c, expected in cases.items():
        judgments = [
            WB.JudgmentRecord(
                doc_id=f"d{i}",
                explanation_fingerprint=f"fp{i}",
                reviewer="expert",
                step_answers=(True, True, True, True) if i < c else (True, False, True, False),
                verdict="logical" if i < c else "illogical",
            )
            for i in range(86)
        ]
        results[c] = WB.agreement_score(judgments, 86).score
    ok = all(results[c] == expected for c, expected in cases.items())
    report_line("agreement-arithmetic", ok, f"rendered {results}")


# ---------------------------------------------------------------------------
# 2. Embedding shapes on the 258-document fixture (< 5 min total)
# ---------------------------------------------------------------------------


def test_embedding_shapes_258(fixture_258):
    started = time.monotonic()
    docs = fixture_258
    assert len(docs) == 258
    vocab = C.build_vocabulary(docs, min_freq=2)

    lda_model = LDA.fit_lda(docs, vocab, LDA.LdaConfig(K=100, seed=0))
    lda_matrix = LDA.doc_embeddings(lda_model)

    w2v_model = W2V.fit_word2vec(docs, vocab, W2V.W2VConfig(dim=200, seed=0))
    w2v_matrix = W2V.doc_embedding_matrix(w2v_model, docs)

    stub = CE.HashEmbeddingProvider(layers=12, dim=768, seed=0)
    ctx_matrix = CE.ctx_doc_matrix(stub, docs, CE.PoolingConfig(L=12))

    elapsed = time.monotonic() - started
    shapes = (lda_matrix.shape, w2v_matrix.shape, ctx_matrix.shape)
    ok = shapes == ((258, 100), (258, 200), (258, 768)) and elapsed < 300
    report_line("embedding-shapes-258", ok, f"shapes {shapes}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 3. Benchmark beat: all four metrics >= 0.375 per backend, 3 seeds (< 15 min)
# ---------------------------------------------------------------------------


def test_benchmark_beat(tmp_path):
    started = time.monotonic()
    failures = []
    for backend in ("lda", "word2vec", "contextual"):
        for seed in (0, 1, 2):
            config = WB.ExperimentConfig(
                backend=backend,
                seed=seed,
                grid=BENCH_GRID,
                explain_limit=0,
            )
            summary = WB.run_experiment(config, tmp_path / f"{backend}-{seed}")
            e = summary.evaluation
            worst = min(e.accuracy, e.precision, e.recall, e.f1)
            if worst < 0.375:
                failures.append(f"{backend}/seed{seed}: worst metric {worst:.3f}")
    elapsed = time.monotonic() - started
    ok = not failures and elapsed < 900
    report_line("benchmark-beat", ok, f"{elapsed:.0f}s" + ("; " + "; ".join(failures) if failures else ""))


# ---------------------------------------------------------------------------
# 4. LIME oracle: planted linear pipelines (< 1 min)
# ---------------------------------------------------------------------------


def test_lime_oracle_planted_linear():
    started = time.monotonic()
    rng = np.random.default_rng(2024)
    problems = []
    for plant in range(5):
        coef = make_plant(rng)
        tokens, pipeline = planted_linear_pipeline(coef)
        doc = make_doc(f"plant{plant}", tokens=tokens)
        expl = LM.explain(pipeline, doc, LimeConfig(n_samples=2000, top_k=5, seed=plant))
        for c, label in enumerate(C.LABELS):
            true_top5 = set(np.argsort(-np.abs(coef[c]))[:5])
            got = {int(t[3:]): w for t, w in expl.contributions[label]}
            overlap = len(true_top5 & got.keys())
            signs_ok = all(np.sign(w) == np.sign(coef[c, j]) for j, w in got.items())
            if overlap < 4 or not signs_ok:
                problems.append(f"plant {plant} class {label.value}: overlap {overlap}")
    elapsed = time.monotonic() - started
    ok = not problems and elapsed < 60
    report_line("lime-planted-linear", ok, f"{elapsed:.1f}s" + ("; " + "; ".join(problems) if problems else ""))


# ---------------------------------------------------------------------------
# 5. Gradient check: rel. error < 1e-4 over >= 100 random triples
# ---------------------------------------------------------------------------


def test_gradient_check():
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        dim = int(rng.integers(2, 16))
        n_out = int(rng.integers(2, 9))
        center = rng.normal(scale=0.8, size=dim)
        outs = rng.normal(scale=0.8, size=(n_out, dim))
        labels = np.zeros(n_out)
        labels[0] = 1.0
        g_center, g_ctx = W2V.sgns_gradients(center, outs, labels)
        worst = max(
            worst,
            float(rel_err(g_center, finite_difference_center_grad(center, outs, labels)).max()),
            float(rel_err(g_ctx, finite_difference_context_grad(center, outs, labels)).max()),
        )
    ok = worst < 1e-4
    report_line("sgns-gradient-check", ok, f"worst relative error {worst:.2e}")


# ---------------------------------------------------------------------------
# 6. LDA properties: simplex 1e-9, planted purity 1.0, bit-exact determinism
# ---------------------------------------------------------------------------


def test_lda_properties():
    rng = np.random.default_rng(0)
    vocab_a = [f"alpha{i}" for i in range(10)]
    vocab_b = [f"beta{i}" for i in range(10)]
    docs = []
    for i in range(40):
        pool = vocab_a if i % 2 == 0 else vocab_b
        docs.append(make_doc(f"d{i:03d}", tokens=[pool[int(j)] for j in rng.integers(0, 10, 30)]))
    corpus = tuple(docs)
    vocab = C.build_vocabulary(corpus, 1)
    config = LDA.LdaConfig(K=2, alpha=0.5, beta=0.01, iterations=300, burn_in=200, seed=3)
    model = LDA.fit_lda(corpus, vocab, config)

    simplex_err = max(
        float(np.abs(model.doc_topic.sum(axis=1) - 1).max()),
        float(np.abs(model.topic_word.sum(axis=1) - 1).max()),
    )
    simplex_ok = simplex_err < 1e-9 and model.doc_topic.min() >= 0

    top0 = frozenset(t for t, _ in LDA.top_words(model, 0, 10))
    top1 = frozenset(t for t, _ in LDA.top_words(model, 1, 10))
    purity_ok = {top0, top1} == {frozenset(vocab_a), frozenset(vocab_b)}

    again = LDA.fit_lda(corpus, vocab, config)
    determinism_ok = np.array_equal(model.doc_topic, again.doc_topic) and np.array_equal(
        model.topic_word, again.topic_word
    )
    ok = simplex_ok and purity_ok and determinism_ok
    report_line(
        "lda-properties",
        ok,
        f"simplex err {simplex_err:.1e}, purity {purity_ok}, determinism {determinism_ok}",
    )


# ---------------------------------------------------------------------------
# 7. Forest oracles: XOR, single-tree equivalence, 258-doc 3-fold
# ---------------------------------------------------------------------------


def test_forest_oracles(consensus_corpus):
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = [C.TopicLabel.MODELING, C.TopicLabel.SYNTHESIS, C.TopicLabel.SYNTHESIS, C.TopicLabel.MODELING]
    xor_model = F.fit_forest(
        X,
        y,
        F.ForestParams(n_estimators=1, max_depth=2, features_per_split="all", bootstrap=False, seed=0),
    )
    xor_ok = F.predict(xor_model, X) == y

    rng = np.random.default_rng(1)
    Xr = rng.normal(size=(40, 5))
    yr = [C.LABELS[int(i)] for i in rng.integers(0, 4, 40)]
    single = F.fit_forest(Xr, yr, F.ForestParams(n_estimators=1, bootstrap=False, seed=2))
    Q = rng.normal(size=(25, 5))
    equiv_ok = np.array_equal(
        F.predict_proba_matrix(single, Q), single.trees[0].predict_proba(Q)
    )

    labels = [d.label for d in consensus_corpus]
    folds = F.stratified_kfold(labels, 3, seed=0)
    sizes = [f.size for f in folds]
    per_class = np.array(
        [np.bincount([C.LABELS.index(labels[i]) for i in fold], minlength=4) for fold in folds]
    )
    folds_ok = sizes == [86, 86, 86] and (per_class.max(axis=0) - per_class.min(axis=0) <= 1).all()

    ok = xor_ok and equiv_ok and folds_ok
    report_line(
        "forest-oracles",
        ok,
        f"xor {xor_ok}, single-tree equivalence {equiv_ok}, folds {sizes} per-class spread "
        f"{ (per_class.max(axis=0) - per_class.min(axis=0)).tolist() }",
    )


# ---------------------------------------------------------------------------
# 8. End-to-end determinism: byte-identical artifacts (stub provider)
# ---------------------------------------------------------------------------


def test_end_to_end_determinism(tmp_path):
    config = WB.ExperimentConfig(
        backend="contextual",
        seed=13,
        grid=BENCH_GRID[:1],
        explain_limit=4,
        lime=LimeConfig(n_samples=128, seed=0),
    )
    WB.run_experiment(config, tmp_path / "first")
    WB.run_experiment(config, tmp_path / "second")
    same = {
        name: (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()
        for name in ("metrics.tsv", "explanations.jsonl")
    }
    ok = all(same.values())
    report_line("end-to-end-determinism", ok, str(same))


# ---------------------------------------------------------------------------
# Full-fixture run: 258 docs -> 86 test documents, 86 explanations
# ---------------------------------------------------------------------------


def test_full_fixture_run_counts(tmp_path):
    config = WB.ExperimentConfig(
        backend="word2vec",
        seed=0,
        grid=BENCH_GRID[:1],
        lime=LimeConfig(n_samples=128, seed=0),
    )
    summary = WB.run_experiment(config, tmp_path / "full-fixture")
    ok = summary.n_test == 86 and summary.n_explanations == 86
    report_line(
        "full-fixture-run", ok, f"n_test {summary.n_test}, explanations {summary.n_explanations}"
    )
