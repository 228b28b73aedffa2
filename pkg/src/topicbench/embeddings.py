"""Shared document-embedding container."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class EmbeddingMatrix:
    """N x D dense matrix, one row per document, tagged with the backend
    that produced it. Row order always matches the source corpus order."""

    values: np.ndarray
    backend: str
    doc_ids: tuple[str, ...]

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValidationError(f"embedding matrix must be 2-D, got {self.values.ndim}-D")
        if self.values.shape[0] != len(self.doc_ids):
            raise ValidationError(
                f"{self.values.shape[0]} rows but {len(self.doc_ids)} document ids"
            )
        if not np.isfinite(self.values).all():
            raise ValidationError("embedding matrix contains non-finite values")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def row(self, doc_id: str) -> np.ndarray:
        return self.values[self.doc_ids.index(doc_id)]
