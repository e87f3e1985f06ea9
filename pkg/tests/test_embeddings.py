import numpy as np
import pytest

from framelm.embeddings import EmbeddingFormatError, load_word_vectors
from framelm.frames import make_frame
from framelm.vocab import build_vocabulary


@pytest.fixture
def vocab():
    frames = [
        make_frame("swam", [("Phelps", "A0")]),
        make_frame("swam", [("Torres", "A0")]),
        make_frame("ran", [("Phelps", "A0")]),
    ]
    return build_vocabulary(frames, min_count=1)


def lines(*rows):
    return [row + "\n" for row in rows]


def test_full_coverage(vocab):
    vecs = {w: [float(i + 1)] * 3 for i, w in enumerate(vocab.id_to_word)}
    stream = lines(f"{len(vecs)} 3", *(f"{w} {' '.join(map(str, v))}" for w, v in vecs.items()))
    table, report = load_word_vectors(stream, vocab, 3)
    assert report.coverage == 1.0
    for word, vec in vecs.items():
        assert np.array_equal(table[vocab.word_to_id[word]], vec)


def test_empty_file_random_init(vocab):
    table, report = load_word_vectors(lines("0 4"), vocab, 4, seed=5)
    assert report.coverage == 0.0
    assert table.shape == (vocab.n_words, 4)
    assert np.all(np.abs(table) <= 0.5 / 4)
    again, _ = load_word_vectors(lines("0 4"), vocab, 4, seed=5)
    assert np.array_equal(table, again)


def test_dimension_mismatch(vocab):
    with pytest.raises(EmbeddingFormatError):
        load_word_vectors(lines("1 3", "swam 0.1 0.2 0.3"), vocab, 50)
    with pytest.raises(EmbeddingFormatError):
        load_word_vectors(lines("1 2", "swam 0.1 0.2 0.3"), vocab, 2)
    with pytest.raises(EmbeddingFormatError):
        load_word_vectors([], vocab, 2)


def test_duplicate_word_last_wins(vocab, caplog):
    stream = lines("2 2", "swam 1.0 1.0", "swam 2.0 2.0")
    with caplog.at_level("WARNING"):
        table, report = load_word_vectors(stream, vocab, 2)
    assert np.array_equal(table[vocab.word_to_id["swam"]], [2.0, 2.0])
    assert report.covered == 1
    assert any("duplicate" in r.message for r in caplog.records)


def test_out_of_vocabulary_vectors_ignored(vocab):
    stream = lines("2 2", "swam 1.0 1.0", "unknownword 9.0 9.0")
    table, report = load_word_vectors(stream, vocab, 2)
    assert report.covered == 1
    assert report.file_vectors == 2
    assert not np.any(table == 9.0)
