import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topicbench import ctxembed as CE
from topicbench.errors import ProtocolError, TransportError, ValidationError

from conftest import make_doc


def brute_force_sum_then_mean(values, L):
    """Triple-loop oracle for sum_last_L pooling + token mean."""
    layers, tokens, dim = values.shape
    out = [0.0] * dim
    for t in range(tokens):
        for d in range(dim):
            s = 0.0
            for l in range(layers - L, layers):
                s += values[l, t, d]
            out[d] += s
    return np.asarray([v / tokens for v in out])


@pytest.fixture()
def stub():
    return CE.HashEmbeddingProvider(layers=3, dim=8, seed=42)


# ---------------------------------------------------------------------------
# stub provider + fetch
# ---------------------------------------------------------------------------


def test_stub_deterministic(stub):
    a = CE.fetch_token_embeddings(stub, "d1", ["bond"])
    b = CE.fetch_token_embeddings(stub, "d1", ["bond"])
    assert np.array_equal(a.values, b.values)
    assert a.token_strings == ("bond",)
    assert a.values.shape == (3, 1, 8)


def test_stub_position_dependent(stub):
    two = CE.fetch_token_embeddings(stub, "d", ["bond", "bond"])
    assert not np.array_equal(two.values[:, 0, :], two.values[:, 1, :])


def test_stub_token_dependent(stub):
    pair = CE.fetch_token_embeddings(stub, "d", ["bond", "ring"])
    other = CE.fetch_token_embeddings(stub, "d", ["ring", "ring"])
    # same position, different token -> different block; same token+position
    # in a different call -> identical block
    assert not np.array_equal(pair.values[:, 0, :], other.values[:, 0, :])
    assert np.array_equal(pair.values[:, 1, :], other.values[:, 1, :])


def test_fetch_truncates_to_512_with_warning(stub, caplog):
    tokens = [f"t{i}" for i in range(600)]
    with caplog.at_level(logging.WARNING):
        emb = CE.fetch_token_embeddings(stub, "long-doc", tokens)
    assert emb.tokens == 512
    assert any("truncating" in rec.message for rec in caplog.records)
    assert emb.token_strings == tuple(tokens[:512])


class _LyingProvider:
    layers = 12
    dim = 768

    def embed(self, doc_id, tokens):
        return CE.LayerwiseTokenEmbeddings(
            values=np.zeros((12, len(tokens), 100)), token_strings=tuple(tokens)
        )


def test_fetch_dim_mismatch_is_protocol_error():
    with pytest.raises(ProtocolError):
        CE.fetch_token_embeddings(_LyingProvider(), "d", ["a"])


def test_stub_rejects_empty_token_list(stub):
    with pytest.raises(ValidationError):
        stub.embed("d", [])


# ---------------------------------------------------------------------------
# pool
# ---------------------------------------------------------------------------


def _emb(values, tokens=None):
    values = np.asarray(values, dtype=np.float64)
    tokens = tokens or tuple(f"t{i}" for i in range(values.shape[1]))
    return CE.LayerwiseTokenEmbeddings(values=values, token_strings=tokens)


def test_pool_single_layer_single_token_identity():
    emb = _emb([[[1.0, 2.0, 3.0]]])
    config = CE.PoolingConfig(layer_strategy="sum_last_L", L=1)
    assert np.array_equal(CE.pool(emb, config), [1.0, 2.0, 3.0])


def test_pool_two_layers_hand_sum():
    emb = _emb([[[1.0, 1.0]], [[2.0, 3.0]]])
    config = CE.PoolingConfig(layer_strategy="sum_last_L", L=2)
    assert np.array_equal(CE.pool(emb, config), [3.0, 4.0])


def test_pool_matches_triple_loop_oracle():
    rng = np.random.default_rng(0)
    values = rng.normal(size=(12, 5, 8))
    emb = _emb(values)
    config = CE.PoolingConfig(layer_strategy="sum_last_L", L=12)
    assert np.allclose(CE.pool(emb, config), brute_force_sum_then_mean(values, 12), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 6),
    st.integers(1, 5),
    st.integers(1, 4),
    st.integers(0, 2**31 - 1),
)
def test_pool_oracle_property(layers, tokens, dim, seed):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(layers, tokens, dim))
    L = int(rng.integers(1, layers + 1))
    config = CE.PoolingConfig(layer_strategy="sum_last_L", L=L)
    got = CE.pool(_emb(values), config)
    assert np.allclose(got, brute_force_sum_then_mean(values, L), atol=1e-12)


def test_pool_token_permutation_invariant():
    rng = np.random.default_rng(1)
    values = rng.normal(size=(4, 6, 5))
    config = CE.PoolingConfig(layer_strategy="sum_last_L", L=4)
    base = CE.pool(_emb(values), config)
    perm = rng.permutation(6)
    assert np.allclose(CE.pool(_emb(values[:, perm, :]), config), base, atol=1e-12)


def test_pool_concat_last_4_length():
    rng = np.random.default_rng(2)
    values = rng.normal(size=(6, 3, 5))
    config = CE.PoolingConfig(layer_strategy="concat_last_4")
    out = CE.pool(_emb(values), config)
    assert out.shape == (20,)
    # first dim-block is layer -4's token mean
    assert np.allclose(out[:5], values[2].mean(axis=0), atol=1e-12)


def test_pool_last_only():
    rng = np.random.default_rng(3)
    values = rng.normal(size=(5, 4, 3))
    config = CE.PoolingConfig(layer_strategy="last_only")
    assert np.allclose(CE.pool(_emb(values), config), values[-1].mean(axis=0), atol=1e-12)


def test_pool_L_exceeding_layers_is_error():
    emb = _emb(np.zeros((2, 1, 3)))
    with pytest.raises(ValidationError):
        CE.pool(emb, CE.PoolingConfig(layer_strategy="sum_last_L", L=3))


def test_pool_zero_tokens_is_error():
    emb = CE.LayerwiseTokenEmbeddings(values=np.zeros((2, 0, 3)), token_strings=())
    with pytest.raises(ValidationError):
        CE.pool(emb, CE.PoolingConfig(L=2))


# ---------------------------------------------------------------------------
# ctx_doc_matrix
# ---------------------------------------------------------------------------


def _small_corpus():
    return (
        make_doc("a", tokens=["bond", "ring"]),
        make_doc("b", tokens=["reaction"]),
        make_doc("c", tokens=["bond", "bond", "melt"]),
    )


def test_ctx_doc_matrix_shape_and_order(stub):
    config = CE.PoolingConfig(L=3)
    emb = CE.ctx_doc_matrix(stub, _small_corpus(), config)
    assert emb.shape == (3, 8)
    assert emb.backend == "contextual"
    assert emb.doc_ids == ("a", "b", "c")


def test_ctx_doc_matrix_single_token_equals_pool(stub):
    config = CE.PoolingConfig(L=3)
    emb = CE.ctx_doc_matrix(stub, (_small_corpus()[1],), config)
    direct = CE.pool(CE.fetch_token_embeddings(stub, "b", ["reaction"]), config)
    assert np.array_equal(emb.values[0], direct)


def test_ctx_doc_matrix_deterministic(stub):
    config = CE.PoolingConfig(L=3)
    m1 = CE.ctx_doc_matrix(stub, _small_corpus(), config)
    m2 = CE.ctx_doc_matrix(stub, _small_corpus(), config)
    assert np.array_equal(m1.values, m2.values)


def test_ctx_doc_matrix_concurrent_equals_sequential(stub):
    config = CE.PoolingConfig(L=3)
    seq = CE.ctx_doc_matrix(stub, _small_corpus(), config, max_in_flight=1)
    par = CE.ctx_doc_matrix(stub, _small_corpus(), config, max_in_flight=4)
    assert np.array_equal(seq.values, par.values)


def test_ctx_doc_matrix_collects_failures(stub):
    corpus = _small_corpus() + (make_doc("empty", tokens=[]),)
    with pytest.raises(TransportError, match="empty"):
        CE.ctx_doc_matrix(stub, corpus, CE.PoolingConfig(L=3))


# ---------------------------------------------------------------------------
# file binding
# ---------------------------------------------------------------------------


def test_file_binding_roundtrip(stub, tmp_path):
    corpus = _small_corpus()
    n = CE.export_provider_directory(stub, corpus, tmp_path / "records")
    assert n == 3
    file_provider = CE.FileEmbeddingProvider(tmp_path / "records", layers=3, dim=8)
    config = CE.PoolingConfig(L=3)
    from_stub = CE.ctx_doc_matrix(stub, corpus, config)
    from_files = CE.ctx_doc_matrix(file_provider, corpus, config)
    assert np.array_equal(from_stub.values, from_files.values)


def test_file_binding_missing_record_is_transport_error(stub, tmp_path):
    CE.export_provider_directory(stub, _small_corpus()[:1], tmp_path / "records")
    provider = CE.FileEmbeddingProvider(tmp_path / "records", layers=3, dim=8)
    with pytest.raises(TransportError, match="ghost"):
        provider.embed("ghost", ["x"])


def test_file_binding_missing_directory():
    with pytest.raises(TransportError):
        CE.FileEmbeddingProvider("/nonexistent/dir")


# ---------------------------------------------------------------------------
# http binding
# ---------------------------------------------------------------------------


def test_http_binding_roundtrip(stub):
    corpus = _small_corpus()
    config = CE.PoolingConfig(L=3)
    direct = CE.ctx_doc_matrix(stub, corpus, config)
    with CE.ProviderServer(stub) as server:
        client = CE.HttpEmbeddingProvider(server.url, layers=3, dim=8)
        over_http = CE.ctx_doc_matrix(client, corpus, config)
    assert np.allclose(over_http.values, direct.values, atol=1e-12)


def test_http_binding_error_payloads(stub):
    with CE.ProviderServer(stub) as server:
        client = CE.HttpEmbeddingProvider(server.url, layers=3, dim=8)
        with pytest.raises(ProtocolError, match="validation"):
            client.embed("empty", [])


def test_http_binding_unreachable_is_transport_error():
    client = CE.HttpEmbeddingProvider("http://127.0.0.1:1", layers=3, dim=8, timeout=0.5)
    with pytest.raises(TransportError):
        client.embed("d", ["x"])
