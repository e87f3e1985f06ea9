"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``. The synthetic-grammar
criterion trains a real model for 120 epochs, so the full suite takes a few
minutes; everything is seeded and deterministic.
"""
import math
import time

import numpy as np
import pytest

from framelm import nn
from framelm.evaluation import GoldPosition, dice, evaluate
from framelm.frames import ArgumentUnit, make_frame
from framelm.model import FrameModel, ModelConfig, load_model, save_model, train
from framelm.resolver import (
    FrameAnnotation,
    Document,
    ResolverConfig,
    ResolverQuery,
    Sentence,
    Token,
    resolve,
    resolve_all,
)
from framelm.selpref import SelPrefConfig, selectional_preference, selectional_preference_batch
from framelm.synthetic import (
    default_grammar,
    generate_documents,
    generate_frames,
    lexicon_lines,
    probe_pairs,
)
from framelm.verbmap import VerbMap, build_verb_map, parse_lexicon
from framelm.verify import gradient_suite, oracle_suite, random_model, tiny_vocabulary
from framelm.vocab import build_vocabulary

GRAD_BUDGET_S = 120.0
ORACLE_BUDGET_S = 60.0
SYNTHETIC_BUDGET_S = 600.0


def ok(criterion: str, detail: str) -> None:
    print(f"\nACCEPTANCE {criterion}: PASS - {detail}")


# ---------------------------------------------------------------- criterion 1
def test_criterion_1_gradient_fidelity():
    start = time.perf_counter()
    results = gradient_suite(seeds_per_mode=20, epsilon=1e-5)
    elapsed = time.perf_counter() - start
    for result in results:
        assert result.passed, result.line()
    assert elapsed < GRAD_BUDGET_S
    ok("1 gradient fidelity", "; ".join(r.detail for r in results) + f"; {elapsed:.1f}s")


# ------------------------------------------------------------ criteria 2 and 3
@pytest.fixture(scope="module")
def oracle_results():
    start = time.perf_counter()
    results = {r.name: r for r in oracle_suite(n_cases=100)}
    results["elapsed"] = time.perf_counter() - start
    return results


def test_criterion_2_marginalization_oracle(oracle_results):
    equality = oracle_results["oracle_equality"]
    bound = oracle_results["oracle_upper_bound"]
    assert equality.passed, equality.line()
    assert bound.passed, bound.line()
    assert oracle_results["elapsed"] < ORACLE_BUDGET_S
    ok("2 marginalization oracle", f"{equality.detail}; {bound.detail}; "
       f"{oracle_results['elapsed']:.1f}s")


def test_criterion_3_monotonicity(oracle_results):
    mono = oracle_results["monotonicity"]
    assert mono.passed, mono.line()
    ok("3 monotonicity", mono.detail)


# ---------------------------------------------------------------- criterion 4
def test_criterion_4_normalization():
    vocab = tiny_vocabulary()
    rng = np.random.default_rng(0)
    pairs = [(w, l) for w, l in vocab.id_to_joint if l not in ("EOS",)]
    worst = 0.0
    count = 0
    for seed in range(10):
        model = random_model(seed, "joint" if seed % 2 else "separate", vocab)
        for _ in range(100):
            prefix = [ArgumentUnit("p0", "PRED")]
            for _ in range(int(rng.integers(0, 4))):
                w, l = pairs[int(rng.integers(len(pairs)))]
                prefix.append(ArgumentUnit(w, l))
            dist = model.next_argument_distribution(prefix)
            worst = max(worst, abs(float(dist.sum()) - 1.0))
            count += 1
    assert count == 1000 and worst < 1e-9

    sum_errs = []
    for seed in range(5):
        model = random_model(100 + seed, "separate" if seed % 2 else "joint", vocab)
        scores = selectional_preference_batch(
            model, "p1", list(vocab.id_to_joint), SelPrefConfig(k=2, depth=1)
        )
        sum_errs.append(abs(float(scores.sum()) - 1.0))
    assert max(sum_errs) < 1e-8
    ok("4 normalization", f"max |sum-1| over 1000 prefixes {worst:.2e}; "
       f"depth-1 preference sums off by {max(sum_errs):.2e}")


# ---------------------------------------------------------------- criterion 5
def test_criterion_5_closed_forms():
    from framelm.resolver import recency_adjust

    assert recency_adjust(0.001, 1, 0.00005, 0.5) == 0.000975
    assert recency_adjust(0.001, 2, 0.00005, 0.5) == 0.0009625

    assert dice({(0, 7), (0, 8)}, {(0, 8), (0, 9)}) == 0.5

    gold = {
        "d|0|0|p|A1": GoldPosition("d|0|0|p|A1", (frozenset({(0, 7), (0, 8)}),)),
        "d|0|1|p|A1": GoldPosition("d|0|1|p|A1", (frozenset({(1, 1)}),)),
    }
    metrics = evaluate({"d|0|0|p|A1": [(0, 8), (0, 9)]}, gold)
    assert metrics.precision == 0.5
    assert metrics.recall == 0.25
    assert metrics.f1 == 1.0 / 3.0

    # first AdaDelta step at rho=0.95, eps=1e-6 with scalar gradient 1:
    # dx = -sqrt(1e-6)/sqrt(0.05 + 1e-6) = -0.00447209123...
    param = np.zeros(1)
    state = nn.AdaDeltaState.for_param(param, rho=0.95, eps=1e-6)
    nn.adadelta_update(param, np.ones(1), state)
    expected = -math.sqrt(1e-6) / math.sqrt(0.05 + 1e-6)
    assert abs(param[0] - expected) < 1e-7
    ok("5 closed forms", f"recency/dice/metrics exact; adadelta first step {param[0]:.10f}")


# ---------------------------------------------------------------- criterion 6
@pytest.fixture(scope="module")
def trained_synthetic():
    start = time.perf_counter()
    grammar = default_grammar()
    frames = generate_frames(grammar, 2000, seed=0)
    vocab = build_vocabulary(frames, min_count=1)
    model = FrameModel(ModelConfig(mode="separate", word_dim=8, label_dim=4, seed=0), vocab)
    report = train(model, frames, epochs=120, shuffle_seed=0)
    return {
        "grammar": grammar,
        "frames": frames,
        "model": model,
        "report": report,
        "train_seconds": time.perf_counter() - start,
    }


def test_criterion_6_synthetic_grammar_learning(trained_synthetic):
    start = time.perf_counter()
    grammar = trained_synthetic["grammar"]
    model = trained_synthetic["model"]
    report = trained_synthetic["report"]

    assert report.epochs == 120
    first, final = report.epoch_mean_nll[0], report.epoch_mean_nll[-1]
    assert final < 0.5 * first, f"final {final:.4f} vs first {first:.4f}"

    config = SelPrefConfig(k=1, depth=4)
    pairs = probe_pairs(grammar, 200, seed=7)
    wins = sum(
        selectional_preference(model, pred, good, config)
        > selectional_preference(model, pred, bad, config)
        for pred, good, bad in pairs
    )
    assert wins >= 180, f"only {wins}/200 probes ranked correctly"

    documents, queries, gold = generate_documents(grammar, 50, seed=1)
    verb_map = build_verb_map(parse_lexicon(lexicon_lines(grammar)), trained_synthetic["frames"])
    results = resolve_all(documents, queries, model, verb_map, ResolverConfig(selpref=config))
    predictions = {q.key: (p.positions if p else None) for q, p in results}
    metrics = evaluate(predictions, gold)
    assert metrics.f1 >= 0.8, f"end-to-end F1 {metrics.f1:.3f}"

    elapsed = trained_synthetic["train_seconds"] + (time.perf_counter() - start)
    assert elapsed < SYNTHETIC_BUDGET_S
    ok("6 synthetic grammar", f"NLL {first:.3f}->{final:.3f} (ratio {final / first:.3f}); "
       f"probes {wins}/200; F1 {metrics.f1:.3f}; {elapsed:.0f}s")


def test_trained_model_prefers_eos_after_complete_frames(trained_synthetic):
    # held-out frames: EOS probability after the full argument set must beat
    # the mid-frame EOS probability in at least 90% of cases
    model = trained_synthetic["model"]
    held_out = generate_frames(trained_synthetic["grammar"], 200, seed=99)
    eos = model.vocab.eos_joint_id
    hits = total = 0
    for frame in held_out:
        if not frame.arguments:
            continue
        complete = model.next_argument_distribution(frame.units[:-1])[eos]
        mid = model.next_argument_distribution(frame.units[:1])[eos]
        total += 1
        hits += complete > mid
    assert hits >= 0.9 * total
    ok("6b EOS placement", f"{hits}/{total} held-out frames")


# ---------------------------------------------------------------- criterion 7
def test_criterion_7_determinism_and_persistence(tmp_path):
    vocab = tiny_vocabulary()
    frames = [
        make_frame("p0", [("w0", "A0"), ("w1", "A1")]),
        make_frame("p1", [("w2", "A0")]),
        make_frame("p2", [("w1", "A0"), ("w0", "A1")]),
    ]

    def build(mode):
        model = random_model(13, mode, vocab)
        train(model, frames, epochs=10, shuffle_seed=5)
        return model

    worst_roundtrip = 0.0
    for mode in ("joint", "separate"):
        a, b = build(mode), build(mode)
        for name, arr in a.parameters().items():
            assert np.array_equal(arr, b.parameters()[name]), f"{mode}:{name}"

        path = tmp_path / f"{mode}.bin"
        save_model(a, path)
        loaded = load_model(path)
        for prefix_len in (1, 2, 3):
            prefix = [ArgumentUnit("p0", "PRED"), ArgumentUnit("w0", "A0"),
                      ArgumentUnit("w1", "A1")][:prefix_len]
            diff = np.max(np.abs(a.next_argument_distribution(prefix)
                                 - loaded.next_argument_distribution(prefix)))
            worst_roundtrip = max(worst_roundtrip, float(diff))
    assert worst_roundtrip < 1e-12
    ok("7 determinism & persistence",
       f"bit-identical reruns; round-trip distribution diff {worst_roundtrip:.2e}")


# ---------------------------------------------------------------- criterion 8
def losses_document():
    s0 = Sentence(
        [Token(w, w.lower(), p) for w, p in [
            ("The", "DT"), ("network", "NN"), ("expected", "VBD"), ("losses", "NN"),
            ("of", "IN"), ("$20", "CD"), ("million", "CD")]],
        [FrameAnnotation(3, "loss", {"A0": (1,), "A1": (5, 6)})],
    )
    s1 = Sentence([Token(w, w.lower(), p) for w, p in [
        ("Those", "DT"), ("losses", "NN"), ("may", "MD"), ("widen", "VB")]])
    return Document("wsj", [s0, s1])


def test_criterion_8_resolver_contract():
    document = losses_document()
    verb_map = VerbMap(forms={"loss": frozenset({"lose"})}, seen={})
    query = ResolverQuery("wsj", 1, 1, "loss", "A1")

    # deterministic fallback to the first instance's explicit A1
    prediction = resolve(document, query, None, verb_map, ResolverConfig(baseline_only=True))
    assert prediction is not None
    assert prediction.provenance == "fallback"
    assert prediction.positions == ((0, 5), (0, 6))

    # baseline-only mode never produces model predictions
    no_explicit = Document("wsj", [Sentence(document.sentences[0].tokens, []),
                                   document.sentences[1]])
    assert resolve(no_explicit, query, None, verb_map,
                   ResolverConfig(baseline_only=True)) is None

    # threshold boundaries with a stub scorer exercising the model path
    vocab = tiny_vocabulary()
    model = random_model(0, "joint", vocab)
    stub_doc = Document("wsj", [
        Sentence([Token("w0", "w0", "NN"), Token("w1", "w1", "NN")]),
        Sentence([Token("p0", "p0", "NN")]),
    ])
    stub_query = ResolverQuery("wsj", 1, 0, "nom", "A0")
    stub_map = VerbMap(forms={"nom": frozenset({"p0"})}, seen={})
    assert resolve(stub_doc, stub_query, model, stub_map,
                   ResolverConfig(threshold=math.inf)) is None
    always = resolve(stub_doc, stub_query, model, stub_map, ResolverConfig(threshold=0.0))
    assert always is not None and always.provenance == "model"
    ok("8 resolver contract", "fallback on the losses fixture; baseline-only clean; "
       "threshold boundaries hold")
