"""Pre-trained word vector loading (text format).

First line ``<count> <dim>``, then one ``word v1 ... v_d`` line per vector.
Rows for in-vocabulary words are copied into a full word-embedding table;
words the file does not cover keep a seeded uniform initialization.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .vocab import Vocabulary

logger = logging.getLogger(__name__)


class EmbeddingFormatError(ValueError):
    pass


@dataclass
class EmbeddingLoadReport:
    covered: int
    missing: int
    file_vectors: int

    @property
    def coverage(self) -> float:
        total = self.covered + self.missing
        return self.covered / total if total else 0.0


def init_embedding(rows: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform init in [-0.5/dim, 0.5/dim], the scheme used for embedding tables."""
    return rng.uniform(-0.5 / dim, 0.5 / dim, size=(rows, dim))


def load_word_vectors(
    stream: Iterable[str],
    vocab: Vocabulary,
    dim: int,
    seed: int = 0,
) -> tuple[np.ndarray, EmbeddingLoadReport]:
    """Build a |V_word| x dim table from a word-vector text stream.

    The declared dimensionality must match ``dim``. Duplicate word lines keep
    the last vector (with a warning). Returns the table and coverage stats.
    """
    lines = iter(stream)
    try:
        header = next(lines).split()
    except StopIteration:
        raise EmbeddingFormatError("empty stream: missing header line") from None
    if len(header) != 2:
        raise EmbeddingFormatError(f"bad header {header!r}, expected '<count> <dim>'")
    declared_count, declared_dim = int(header[0]), int(header[1])
    if declared_dim != dim:
        raise EmbeddingFormatError(f"file dimensionality {declared_dim} != requested {dim}")

    rng = np.random.default_rng(seed)
    table = init_embedding(vocab.n_words, dim, rng)
    seen: set[str] = set()
    file_vectors = 0
    for line_no, line in enumerate(lines, start=2):
        parts = line.rstrip("\n").split(" ")
        if len(parts) <= 1:
            continue
        if len(parts) != dim + 1:
            raise EmbeddingFormatError(f"line {line_no}: expected {dim} values, got {len(parts) - 1}")
        word = parts[0]
        file_vectors += 1
        wid = vocab.word_to_id.get(word)
        if wid is None:
            continue
        if word in seen:
            logger.warning("duplicate vector for %r on line %d; last wins", word, line_no)
        seen.add(word)
        table[wid] = np.array(parts[1:], dtype=np.float64)
    if file_vectors != declared_count:
        logger.warning("header declared %d vectors, file has %d", declared_count, file_vectors)

    covered = len(seen)
    report = EmbeddingLoadReport(covered=covered, missing=vocab.n_words - covered, file_vectors=file_vectors)
    logger.info("embedding coverage %d/%d words (%.1f%%)", covered, vocab.n_words, 100 * report.coverage)
    return table, report
