from pathlib import Path

import pytest

from topicbench import corpus as C

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "topicbench" / "data"


@pytest.fixture(scope="session")
def corpus_path() -> Path:
    return DATA_DIR / "substitute_corpus.jsonl"


@pytest.fixture(scope="session")
def lexicon_path() -> Path:
    return DATA_DIR / "pos_lexicon.tsv"


@pytest.fixture(scope="session")
def raw_corpus(corpus_path) -> C.Corpus:
    return C.ingest(corpus_path)


@pytest.fixture(scope="session")
def consensus_corpus(raw_corpus, lexicon_path) -> C.Corpus:
    """Bundled corpus, adjudicated and preprocessed (no phrasing)."""
    config = C.PreprocessConfig(pos_lexicon_path=lexicon_path)
    return C.preprocess_corpus(C.adjudicate(raw_corpus), config)


@pytest.fixture(scope="session")
def phrased_corpus(consensus_corpus) -> C.Corpus:
    table = C.detect_bigrams(consensus_corpus, min_count=5, threshold=10.0)
    return C.apply_phrases_corpus(consensus_corpus, table)


def make_doc(doc_id: str, tokens=(), label=None, **kwargs) -> C.Document:
    """Shorthand for constructing documents directly in tests."""
    return C.Document(
        id=doc_id,
        title=kwargs.pop("title", ""),
        abstract=kwargs.pop("abstract", " ".join(tokens)),
        tokens=tuple(tokens),
        label=label,
        **kwargs,
    )
