import numpy as np
import pytest

from framelm.frames import ArgumentUnit, PRED_LABEL, make_frame
from framelm.selpref import (
    SelPrefConfig,
    nominal_selectional_preference,
    nominal_selectional_preference_batch,
    score_triple_lines,
    selectional_preference,
    selectional_preference_batch,
    selectional_preference_exhaustive,
    top_k_next,
)
from framelm.verbmap import VerbMap
from framelm.verify import random_model, tiny_vocabulary
from framelm.vocab import build_vocabulary


class TableModel:
    """Test double with a hand-specified conditional distribution.

    The next-unit distribution depends only on the last unit of the prefix,
    which makes the double marginal sum easy to expand by hand.
    """

    def __init__(self, vocab, table):
        self.vocab = vocab
        self.mode = "joint"
        self.table = {k: np.array(v, dtype=np.float64) for k, v in table.items()}

    @property
    def n_out(self):
        return self.vocab.n_joint

    def next_argument_distribution(self, prefix):
        if len(prefix) == 0 or prefix[0].label != PRED_LABEL:
            raise ValueError("bad prefix")
        last = prefix[-1]
        return self.table[(last.word, last.label)].copy()


def three_unit_model():
    # inventory ids: 0 UNK, 1 EOS, 2 (a,A0), 3 (b,A1), 4 (p,PRED)
    frames = [make_frame("p", [("a", "A0"), ("b", "A1")])]
    vocab = build_vocabulary(frames, min_count=1)
    assert vocab.id_to_joint[2:] == [("a", "A0"), ("b", "A1"), ("p", "PRED")]
    table = {
        ("p", "PRED"): [0.0, 0.2, 0.5, 0.3, 0.0],
        ("a", "A0"): [0.0, 0.3, 0.1, 0.6, 0.0],
        ("b", "A1"): [0.0, 0.5, 0.25, 0.25, 0.0],
        # zero-probability branches may still be expanded at full width
        ("<UNK>", "<UNK>"): [0.2, 0.2, 0.2, 0.2, 0.2],
    }
    return TableModel(vocab, table)


def test_top_k_hand_ranked():
    model = three_unit_model()
    prefix = [ArgumentUnit("p", "PRED")]
    top2 = top_k_next(model, prefix, 2)
    assert [(u.word, u.label) for u, _ in top2] == [("a", "A0"), ("b", "A1")]
    assert [p for _, p in top2] == [0.5, 0.3]


def test_top_k_excludes_eos_and_clamps():
    model = three_unit_model()
    prefix = [ArgumentUnit("p", "PRED")]
    everything = top_k_next(model, prefix, 99)
    words = {u.word for u, _ in everything}
    assert "<EOS>" not in words
    assert len(everything) == model.n_out - 1
    assert sum(p for _, p in everything) == pytest.approx(1.0 - 0.2)


def test_top_k_tie_break_by_vocab_index():
    vocab = three_unit_model().vocab
    uniform = {key: [0.2] * 5 for key in [("p", "PRED"), ("a", "A0"), ("b", "A1")]}
    model = TableModel(vocab, uniform)
    top, = top_k_next(model, [ArgumentUnit("p", "PRED")], 1)
    assert top[0] == ArgumentUnit("<UNK>", "<UNK>")  # lowest non-EOS index is 0


def test_depth_one_is_single_step_conditional():
    model = three_unit_model()
    score = selectional_preference(model, "p", ("a", "A0"), SelPrefConfig(k=1, depth=1))
    assert score == pytest.approx(0.5, abs=1e-12)


def test_depth_two_hand_expanded_sum():
    model = three_unit_model()
    # depth 2, full width: score(t) = P(t|p) + sum_u P(t|p,u) P(u|p) over non-EOS u
    cfg = SelPrefConfig(k=4, depth=2)
    # target (a, A0): 0.5 + 0.5*0.1 + 0.3*0.25  (UNK branch has zero mass)
    assert selectional_preference(model, "p", ("a", "A0"), cfg) == pytest.approx(0.625, abs=1e-12)
    # target (b, A1): 0.3 + 0.5*0.6 + 0.3*0.25
    assert selectional_preference(model, "p", ("b", "A1"), cfg) == pytest.approx(0.675, abs=1e-12)
    # target EOS: 0.2 + 0.5*0.3 + 0.3*0.5
    assert selectional_preference(model, "p", ("<EOS>", "EOS"), cfg) == pytest.approx(0.5, abs=1e-12)


def test_pruned_k2_hand_expanded_sum():
    model = three_unit_model()
    # k=2 keeps (a,A0) and (b,A1) at the first expansion; UNK is dropped.
    cfg = SelPrefConfig(k=2, depth=2)
    assert selectional_preference(model, "p", ("a", "A0"), cfg) == pytest.approx(0.625, abs=1e-12)
    # k=1 keeps only (a,A0)
    cfg1 = SelPrefConfig(k=1, depth=2)
    assert selectional_preference(model, "p", ("b", "A1"), cfg1) == pytest.approx(0.3 + 0.5 * 0.6, abs=1e-12)


def test_unknown_predicate_or_target_scores_zero():
    model = three_unit_model()
    cfg = SelPrefConfig(k=1, depth=2)
    assert selectional_preference(model, "unknown", ("a", "A0"), cfg) == 0.0
    assert selectional_preference(model, "p", ("a", "A9"), cfg) == 0.0
    assert selectional_preference(model, "p", ("zzz", "A0"), cfg) == 0.0


@pytest.mark.parametrize("mode", ["joint", "separate"])
def test_pruned_full_width_matches_exhaustive(mode):
    vocab = tiny_vocabulary(n_preds=2, n_words=2)
    rng = np.random.default_rng(0)
    for seed in range(4):
        model = random_model(seed, mode, vocab, dim=6)
        depth = 1 + seed % 4
        target = vocab.id_to_joint[int(rng.integers(vocab.n_joint))]
        exact = selectional_preference_exhaustive(model, "p0", target, depth)
        pruned = selectional_preference(
            model, "p0", target, SelPrefConfig(k=model.n_out - 1, depth=depth)
        )
        assert pruned == pytest.approx(exact, abs=1e-10)


def test_pruned_never_exceeds_exhaustive_and_monotone():
    vocab = tiny_vocabulary(n_preds=2, n_words=2)
    model = random_model(5, "joint", vocab, dim=6)
    target = ("w0", "A1")
    exact = selectional_preference_exhaustive(model, "p1", target, 3)
    scores = [
        selectional_preference(model, "p1", target, SelPrefConfig(k=k, depth=3))
        for k in range(1, model.n_out)
    ]
    assert all(s <= exact + 1e-10 for s in scores)
    assert all(b >= a - 1e-12 for a, b in zip(scores, scores[1:]))
    by_depth = [
        selectional_preference(model, "p1", target, SelPrefConfig(k=2, depth=d))
        for d in range(1, 5)
    ]
    assert all(b >= a - 1e-12 for a, b in zip(by_depth, by_depth[1:]))


def test_depth_one_scores_sum_to_one():
    vocab = tiny_vocabulary()
    model = random_model(8, "separate", vocab)
    scores = selectional_preference_batch(
        model, "p0", list(vocab.id_to_joint), SelPrefConfig(k=3, depth=1)
    )
    assert abs(scores.sum() - 1.0) < 1e-8


def test_exhaustive_cost_guards():
    model = three_unit_model()
    with pytest.raises(ValueError):
        selectional_preference_exhaustive(model, "p", ("a", "A0"), 5)
    big_vocab = tiny_vocabulary(n_preds=5, n_words=5)
    big_model = random_model(0, "joint", big_vocab, dim=6)
    assert big_model.n_out > 16
    with pytest.raises(ValueError):
        selectional_preference_exhaustive(big_model, "p0", ("w0", "A0"), 2)


def test_batch_matches_single_scores():
    vocab = tiny_vocabulary()
    model = random_model(2, "joint", vocab)
    cfg = SelPrefConfig(k=2, depth=3)
    targets = [("w0", "A0"), ("w1", "A1"), ("nope", "A0")]
    batch = selectional_preference_batch(model, "p1", targets, cfg)
    singles = [selectional_preference(model, "p1", t, cfg) for t in targets]
    assert np.allclose(batch, singles, atol=1e-15)
    assert batch[2] == 0.0


def test_nominal_max_over_verb_forms():
    model = three_unit_model()
    cfg = SelPrefConfig(k=2, depth=1)
    verb_map = VerbMap(forms={"sale": frozenset({"p"})}, seen={"sale": frozenset({"p"})})
    single = nominal_selectional_preference(model, "sale", ("a", "A0"), verb_map, cfg)
    assert single == pytest.approx(0.5)
    # max over two forms, one unknown to the model
    verb_map2 = VerbMap(forms={"sale": frozenset({"p", "q"})}, seen={})
    assert nominal_selectional_preference(model, "sale", ("a", "A0"), verb_map2, cfg) == pytest.approx(0.5)
    # nominal absent from the lexicon
    assert nominal_selectional_preference(model, "ghost", ("a", "A0"), verb_map, cfg) == 0.0
    batch = nominal_selectional_preference_batch(model, "sale", [("a", "A0"), ("b", "A1")], verb_map, cfg)
    assert batch == pytest.approx([0.5, 0.3])


def test_score_triple_lines_conserves_lines(tmp_path):
    vocab = tiny_vocabulary(n_preds=2, n_words=2)
    model = random_model(3, "joint", vocab, dim=6)
    lines = ["p0\tw0\tA0", "p0\tw1\tA1", "p1\tw0\tA1", "p0\tmissing\tA0"]
    out = score_triple_lines(model, lines, SelPrefConfig(k=1, depth=2))
    assert len(out) == len(lines)
    assert out[0].startswith("p0\tw0\tA0\t0.")
    assert out[3].endswith("\t0.0000000000")
    with_oracle = score_triple_lines(model, lines, SelPrefConfig(k=model.n_out - 1, depth=2), oracle=True)
    for line in with_oracle:
        cols = line.split("\t")
        assert len(cols) == 5
        assert float(cols[3]) == pytest.approx(float(cols[4]), abs=1e-10)


def test_determinism():
    vocab = tiny_vocabulary()
    model = random_model(4, "joint", vocab)
    cfg = SelPrefConfig(k=2, depth=4)
    a = selectional_preference(model, "p0", ("w1", "A0"), cfg)
    b = selectional_preference(model, "p0", ("w1", "A0"), cfg)
    assert a == b


def test_config_validation():
    with pytest.raises(ValueError):
        SelPrefConfig(k=0)
    with pytest.raises(ValueError):
        SelPrefConfig(depth=0)
    with pytest.raises(ValueError):
        SelPrefConfig(depth=9)
