"""Contextual token embeddings from an external provider, pooled into
document vectors.

The transformer itself is never run here: a provider hands back layer-wise
token vectors and this module sums layers and averages tokens. Two provider
bindings exist, a directory of per-document records and an HTTP endpoint,
plus a deterministic hash-based stub whose output is a pure function of
(token string, layer index, position index) so every downstream test is
reproducible offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .corpus import Corpus
from .embeddings import EmbeddingMatrix
from .errors import ProtocolError, TransportError, ValidationError

logger = logging.getLogger(__name__)

MAX_TOKENS = 512
FILE_FORMAT_VERSION = 1


@dataclass
class LayerwiseTokenEmbeddings:
    values: np.ndarray  # (layers, tokens, dim)
    token_strings: tuple[str, ...]

    def __post_init__(self):
        if self.values.ndim != 3:
            raise ValidationError(f"expected a 3-D tensor, got {self.values.ndim}-D")
        if len(self.token_strings) != self.values.shape[1]:
            raise ValidationError(
                f"{len(self.token_strings)} token strings for {self.values.shape[1]} token vectors"
            )
        if not np.isfinite(self.values).all():
            raise ValidationError("token embeddings contain non-finite values")

    @property
    def layers(self) -> int:
        return self.values.shape[0]

    @property
    def tokens(self) -> int:
        return self.values.shape[1]

    @property
    def dim(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class PoolingConfig:
    layer_strategy: str = "sum_last_L"  # sum_last_L | concat_last_4 | last_only
    L: int = 12
    token_strategy: str = "mean"

    def __post_init__(self):
        if self.layer_strategy not in ("sum_last_L", "concat_last_4", "last_only"):
            raise ValidationError(f"unknown layer_strategy {self.layer_strategy!r}")
        if self.token_strategy != "mean":
            raise ValidationError(f"unknown token_strategy {self.token_strategy!r}")
        if self.L < 1:
            raise ValidationError(f"L must be >= 1, got {self.L}")


class EmbeddingProvider(Protocol):
    """Anything that maps (doc id, tokens) to layer-wise token vectors."""

    layers: int
    dim: int

    def embed(self, doc_id: str, tokens: Sequence[str]) -> LayerwiseTokenEmbeddings: ...


# ---------------------------------------------------------------------------
# Deterministic stub provider
# ---------------------------------------------------------------------------


class HashEmbeddingProvider:
    """Offline stand-in for a transformer service. Each (token, position)
    pair gets a fixed pseudo-random block of layer vectors derived from a
    seeded hash, so repeated calls are bit-identical."""

    def __init__(self, layers: int = 12, dim: int = 768, seed: int = 0):
        self.layers = layers
        self.dim = dim
        self.seed = seed

    def _block(self, token: str, position: int) -> np.ndarray:
        digest = hashlib.sha256(f"{self.seed}:{position}:{token}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        return rng.standard_normal((self.layers, self.dim))

    def embed(self, doc_id: str, tokens: Sequence[str]) -> LayerwiseTokenEmbeddings:
        if not tokens:
            raise ValidationError(f"document {doc_id!r} has no tokens to embed")
        values = np.empty((self.layers, len(tokens), self.dim))
        for t, token in enumerate(tokens):
            values[:, t, :] = self._block(token, t)
        return LayerwiseTokenEmbeddings(values=values, token_strings=tuple(tokens))


# ---------------------------------------------------------------------------
# Fetch and pool
# ---------------------------------------------------------------------------


def fetch_token_embeddings(
    provider: EmbeddingProvider, doc_id: str, tokens: Sequence[str]
) -> LayerwiseTokenEmbeddings:
    """Request one document's layer-wise vectors, truncating over-long
    inputs to MAX_TOKENS and validating the response against the provider's
    declared geometry."""
    tokens = list(tokens)
    if len(tokens) > MAX_TOKENS:
        logger.warning(
            "document %s has %d tokens; truncating to %d", doc_id, len(tokens), MAX_TOKENS
        )
        tokens = tokens[:MAX_TOKENS]
    result = provider.embed(doc_id, tokens)
    if result.layers != provider.layers or result.dim != provider.dim:
        raise ProtocolError(
            f"provider declared {provider.layers} layers x {provider.dim} dims "
            f"but returned {result.layers} x {result.dim}"
        )
    if result.tokens > MAX_TOKENS:
        raise ProtocolError(f"provider returned {result.tokens} tokens (> {MAX_TOKENS})")
    return result


def pooled_token_vectors(
    embeddings: LayerwiseTokenEmbeddings, config: PoolingConfig
) -> np.ndarray:
    """Per-token vectors after the layer strategy: (tokens, out_dim)."""
    if config.layer_strategy == "sum_last_L":
        if config.L > embeddings.layers:
            raise ValidationError(
                f"L={config.L} exceeds available layers ({embeddings.layers})"
            )
        return embeddings.values[-config.L :].sum(axis=0)
    if config.layer_strategy == "concat_last_4":
        if embeddings.layers < 4:
            raise ValidationError("concat_last_4 needs at least 4 layers")
        return np.concatenate(list(embeddings.values[-4:]), axis=1)
    return embeddings.values[-1]


def pool(embeddings: LayerwiseTokenEmbeddings, config: PoolingConfig) -> np.ndarray:
    """Document vector: layer strategy per token, then mean over tokens."""
    if embeddings.tokens == 0:
        raise ValidationError("cannot pool zero tokens")
    return pooled_token_vectors(embeddings, config).mean(axis=0)


def ctx_doc_matrix(
    provider: EmbeddingProvider,
    corpus: Corpus,
    config: PoolingConfig,
    max_in_flight: int = 1,
) -> EmbeddingMatrix:
    """Fetch and pool every document; rows follow corpus order regardless of
    fetch completion order. Per-document failures are collected and raised
    together; no partial matrix is returned."""
    if not corpus:
        raise ValidationError("corpus is empty")

    def fetch(doc):
        return pool(fetch_token_embeddings(provider, doc.id, doc.tokens), config)

    rows: list[np.ndarray | None] = [None] * len(corpus)
    failures: list[tuple[str, str]] = []
    if max_in_flight <= 1:
        for i, doc in enumerate(corpus):
            try:
                rows[i] = fetch(doc)
            except Exception as exc:  # collected, reported below
                failures.append((doc.id, str(exc)))
    else:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool_:
            futures = {i: pool_.submit(fetch, doc) for i, doc in enumerate(corpus)}
            for i, fut in futures.items():
                try:
                    rows[i] = fut.result()
                except Exception as exc:
                    failures.append((corpus[i].id, str(exc)))
    if failures:
        detail = "; ".join(f"{doc_id}: {msg}" for doc_id, msg in failures)
        raise TransportError(f"provider failed for {len(failures)} document(s): {detail}")
    return EmbeddingMatrix(
        values=np.vstack(rows), backend="contextual", doc_ids=tuple(d.id for d in corpus)
    )


# ---------------------------------------------------------------------------
# File binding: a directory of per-document records
# ---------------------------------------------------------------------------


def _record_path(directory: Path, doc_id: str) -> Path:
    safe = hashlib.sha256(doc_id.encode("utf-8")).hexdigest()[:16]
    return directory / f"{doc_id}.{safe}.npz"


def write_record(
    directory: str | Path, doc_id: str, embeddings: LayerwiseTokenEmbeddings
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "version": FILE_FORMAT_VERSION,
        "id": doc_id,
        "layers": embeddings.layers,
        "tokens": embeddings.tokens,
        "dim": embeddings.dim,
        "token_strings": list(embeddings.token_strings),
    }
    path = _record_path(directory, doc_id)
    np.savez(
        path,
        values=embeddings.values,
        meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
    )
    return path


def export_provider_directory(
    provider: EmbeddingProvider, corpus: Corpus, directory: str | Path
) -> int:
    """Materialize a provider's responses as the file binding."""
    count = 0
    for doc in corpus:
        emb = fetch_token_embeddings(provider, doc.id, doc.tokens)
        write_record(directory, doc.id, emb)
        count += 1
    return count


class FileEmbeddingProvider:
    """Serves pre-computed records from a directory keyed by document id.
    The stored token strings are authoritative (the provider's own
    tokenization), mirroring how a remote model may re-tokenize."""

    def __init__(self, directory: str | Path, layers: int = 12, dim: int = 768):
        self.directory = Path(directory)
        self.layers = layers
        self.dim = dim
        if not self.directory.is_dir():
            raise TransportError(f"record directory not found: {self.directory}")

    def embed(self, doc_id: str, tokens: Sequence[str]) -> LayerwiseTokenEmbeddings:
        path = _record_path(self.directory, doc_id)
        if not path.exists():
            raise TransportError(f"no record for document {doc_id!r} in {self.directory}")
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"]).decode())
            if meta.get("version") != FILE_FORMAT_VERSION:
                raise ProtocolError(
                    f"record version {meta.get('version')} != {FILE_FORMAT_VERSION}"
                )
            values = data["values"].copy()
        if list(values.shape) != [meta["layers"], meta["tokens"], meta["dim"]]:
            raise ProtocolError(f"record {doc_id!r} tensor shape disagrees with its header")
        return LayerwiseTokenEmbeddings(
            values=values, token_strings=tuple(meta["token_strings"])
        )


# ---------------------------------------------------------------------------
# HTTP binding
# ---------------------------------------------------------------------------


class HttpEmbeddingProvider:
    """Client for the POST /embed protocol."""

    def __init__(self, base_url: str, layers: int = 12, dim: int = 768, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.layers = layers
        self.dim = dim
        self.timeout = timeout

    def embed(self, doc_id: str, tokens: Sequence[str]) -> LayerwiseTokenEmbeddings:
        body = json.dumps({"id": doc_id, "tokens": list(tokens)}).encode("utf-8")
        request = urllib.request.Request(
            f"{self.base_url}/embed",
            data=body,
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                payload = json.loads(response.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            try:
                err = json.loads(exc.read().decode("utf-8"))
                raise ProtocolError(f"{err.get('code')}: {err.get('message')}") from None
            except (ValueError, KeyError):
                raise ProtocolError(f"HTTP {exc.code} from provider") from None
        except (urllib.error.URLError, OSError, TimeoutError) as exc:
            raise TransportError(f"provider unreachable: {exc}") from None
        try:
            values = np.asarray(payload["values"], dtype=np.float64)
            token_strings = tuple(payload["token_strings"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed provider response: {exc}") from None
        if values.ndim != 3 or values.shape[0] != payload.get("layers") or values.shape[2] != payload.get("dim"):
            raise ProtocolError("provider response tensor disagrees with its own header")
        return LayerwiseTokenEmbeddings(values=values, token_strings=token_strings)


class _ProviderHandler(BaseHTTPRequestHandler):
    provider: EmbeddingProvider = None  # set on the server class

    def log_message(self, *args):  # quiet test runs
        pass

    def _send(self, status: int, obj) -> None:
        body = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        if self.path != "/embed":
            self._send(404, {"code": "not_found", "message": f"unknown path {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
            doc_id = payload["id"]
            tokens = payload["tokens"]
        except (ValueError, KeyError) as exc:
            self._send(400, {"code": "bad_request", "message": str(exc)})
            return
        try:
            emb = self.server.provider.embed(doc_id, tokens)
        except ValidationError as exc:
            self._send(422, {"code": "validation", "message": str(exc)})
            return
        self._send(
            200,
            {
                "layers": emb.layers,
                "dim": emb.dim,
                "token_strings": list(emb.token_strings),
                "values": emb.values.tolist(),
            },
        )


class ProviderServer:
    """Serves any provider over the HTTP binding; use as a context manager."""

    def __init__(self, provider: EmbeddingProvider, host: str = "127.0.0.1", port: int = 0):
        self.httpd = ThreadingHTTPServer((host, port), _ProviderHandler)
        self.httpd.provider = provider
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()
        self.thread.join(timeout=5)
