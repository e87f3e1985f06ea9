from framelm.evaluation import load_gold
from framelm.frames import PRED_LABEL
from framelm.synthetic import (
    default_grammar,
    generate_documents,
    generate_frames,
    probe_pairs,
    write_dataset,
)


def test_grammar_shape():
    grammar = default_grammar()
    assert len(grammar.predicates) == 5
    assert len(grammar.nominals) == 5
    for pred, lexicon in grammar.predicates.items():
        assert set(lexicon) == {"A0", "A1", "AM-LOC"}
    # role lexicons are disjoint so consistency probes are unambiguous
    all_words = [w for lex in grammar.predicates.values() for ws in lex.values() for w in ws]
    assert len(all_words) == len(set(all_words))


def test_frames_follow_label_order():
    grammar = default_grammar()
    frames = generate_frames(grammar, 300, seed=3, noise_rate=0.0)
    order = {label: i for i, label in enumerate(grammar.label_order)}
    for frame in frames:
        assert frame.units[0].label == PRED_LABEL
        labels = [u.label for u in frame.arguments]
        assert labels == sorted(labels, key=order.__getitem__)
        for unit in frame.arguments:
            assert unit.word in grammar.predicates[frame.predicate.word][unit.label]
    assert len(frames) == 300


def test_frames_deterministic_per_seed():
    grammar = default_grammar()
    a = generate_frames(grammar, 50, seed=9)
    b = generate_frames(grammar, 50, seed=9)
    assert [f.units for f in a] == [f.units for f in b]
    c = generate_frames(grammar, 50, seed=10)
    assert [f.units for f in a] != [f.units for f in c]


def test_probe_pairs_are_grammar_consistent_vs_not():
    grammar = default_grammar()
    for pred, good, bad in probe_pairs(grammar, 100, seed=5):
        assert good.word == bad.word
        assert good.word in grammar.predicates[pred][good.label]
        assert good.word not in grammar.predicates[pred][bad.label]


def test_documents_queries_gold_align():
    grammar = default_grammar()
    docs, queries, gold = generate_documents(grammar, 20, seed=2)
    assert len(queries) == 20 and len(gold) == 20
    for query in queries:
        doc = docs[query.doc_id]
        token = doc.sentences[query.sent_idx].tokens[query.token_idx]
        assert token.word == query.nominal
        position = next(iter(next(iter(gold[query.key].fillers))))
        sent, tok = position
        filler_word = doc.sentences[sent].tokens[tok].word
        labels = grammar.labels_of(filler_word)
        assert query.label in labels


def test_write_dataset(tmp_path):
    paths = write_dataset(tmp_path / "synth", n_frames=40, n_docs=4, seed=0)
    for path in paths.values():
        assert path.exists() and path.stat().st_size > 0
    gold = load_gold(paths["gold"].read_text().splitlines())
    assert len(gold) == 4
