"""Self-verification suites: gradient fidelity and marginalization oracle.

Both suites run on small randomly initialized models over a deterministic
toy corpus, so they are fast enough to gate every build. The CLI ``verify``
command drives them; the test suite reuses them directly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .frames import ArgumentUnit, FrameSequence, make_frame
from .model import FrameModel, ModelConfig
from .selpref import (
    SelPrefConfig,
    selectional_preference,
    selectional_preference_exhaustive,
)
from .vocab import Vocabulary, build_vocabulary

GRAD_TOLERANCE = 1e-4
ORACLE_TOLERANCE = 1e-10
# Allowance for float re-association when comparing nested prefix-tree sums.
MONOTONE_SLACK = 1e-12


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}\t{self.name}\t{self.detail}"


def tiny_corpus(n_preds: int = 3, n_words: int = 3) -> list[FrameSequence]:
    """A deterministic micro-corpus; every pair occurs so nothing is UNK'd."""
    labels = ("A0", "A1")
    frames = []
    for p in range(n_preds):
        pred = f"p{p}"
        for w in range(n_words):
            for i, label in enumerate(labels):
                word = f"w{(w + i) % n_words}"
                frames.append(make_frame(pred, [(word, label)], source_id=f"tiny:{p}:{w}:{i}"))
            frames.append(
                make_frame(pred, [(f"w{w}", "A0"), (f"w{(w + 1) % n_words}", "A1")],
                           source_id=f"tiny:{p}:{w}:both")
            )
    return frames


def tiny_vocabulary(n_preds: int = 3, n_words: int = 3) -> Vocabulary:
    return build_vocabulary(tiny_corpus(n_preds, n_words), min_count=1)


def random_model(seed: int, mode: str, vocab: Vocabulary | None = None, dim: int = 8) -> FrameModel:
    if vocab is None:
        vocab = tiny_vocabulary()
    if mode == "joint":
        config = ModelConfig(mode="joint", joint_dim=dim, seed=seed)
    else:
        config = ModelConfig(mode="separate", word_dim=dim - dim // 3, label_dim=dim // 3, seed=seed)
    return FrameModel(config, vocab)


def random_frame(vocab: Vocabulary, rng: np.random.Generator, n_args: int = 3) -> FrameSequence:
    """A frame sampled from a vocabulary's own joint inventory."""
    preds = sorted({w for w, l in vocab.id_to_joint if l == "PRED"})
    pairs = sorted({(w, l) for w, l in vocab.id_to_joint if l not in ("PRED", "EOS", "<UNK>")})
    pred = preds[int(rng.integers(len(preds)))]
    args = [pairs[int(rng.integers(len(pairs)))] for _ in range(n_args)]
    return make_frame(pred, args, source_id="random")


def _corrupting(model: FrameModel) -> FrameModel:
    """Wrap the model so its analytic forget-gate recurrent gradient is wrong."""
    original = model.loss_and_gradients

    def corrupted(enc):
        loss, grads = original(enc)
        m = model.config.hidden
        grads["lstm_u"] = grads["lstm_u"].copy()
        grads["lstm_u"][:, 2 * m:3 * m] += 0.05
        return loss, grads

    model.loss_and_gradients = corrupted  # type: ignore[method-assign]
    return model


def gradient_suite(
    seeds_per_mode: int = 10,
    epsilon: float = 1e-5,
    corrupt: bool = False,
) -> list[SuiteResult]:
    """Analytic BPTT vs central finite differences on random small models."""
    vocab = tiny_vocabulary()
    results = []
    for mode in ("joint", "separate"):
        worst = 0.0
        for seed in range(seeds_per_mode):
            model = random_model(seed, mode, vocab)
            if corrupt:
                model = _corrupting(model)
            rng = np.random.default_rng(1000 + seed)
            frame = random_frame(vocab, rng, n_args=2 + seed % 3)
            err = nn.grad_check(model, model.encode(frame), epsilon=epsilon, seed=seed)
            worst = max(worst, err)
        results.append(
            SuiteResult(
                name=f"gradient_{mode}",
                passed=worst < GRAD_TOLERANCE,
                detail=f"max relative error {worst:.3e} over {seeds_per_mode} seeds (limit {GRAD_TOLERANCE:g})",
            )
        )
    return results


def oracle_suite(n_cases: int = 100, master_seed: int = 0) -> list[SuiteResult]:
    """Pruned tree vs exhaustive enumeration on random small models.

    Checks full-width equality, the pruned-never-exceeds bound, and
    monotonicity in both the branch width and the tree depth.
    """
    vocab = tiny_vocabulary(n_preds=2, n_words=2)
    rng = np.random.default_rng(master_seed)
    preds = sorted({w for w, l in vocab.id_to_joint if l == "PRED"})
    targets = [ArgumentUnit(w, l) for w, l in vocab.id_to_joint]

    max_equal_diff = 0.0
    bound_violations = 0
    monotone_violations = 0
    cases = 0
    model = None
    full_k = 0
    while cases < n_cases:
        if cases % 10 == 0:
            model = random_model(int(rng.integers(10_000)), "joint" if cases % 20 else "separate", vocab, dim=6)
            full_k = model.n_out - 1
        pred = preds[int(rng.integers(len(preds)))]
        target = targets[int(rng.integers(len(targets)))]
        depth = int(rng.integers(1, 5))

        exact = selectional_preference_exhaustive(model, pred, target, depth)
        pruned_full = selectional_preference(model, pred, target, SelPrefConfig(k=full_k, depth=depth))
        max_equal_diff = max(max_equal_diff, abs(pruned_full - exact))

        by_k = [
            selectional_preference(model, pred, target, SelPrefConfig(k=k, depth=depth))
            for k in range(1, full_k + 1)
        ]
        if any(score > exact + ORACLE_TOLERANCE for score in by_k):
            bound_violations += 1
        if any(b < a - MONOTONE_SLACK for a, b in zip(by_k, by_k[1:])):
            monotone_violations += 1
        by_depth = [
            selectional_preference(model, pred, target, SelPrefConfig(k=2, depth=d))
            for d in range(1, 5)
        ]
        if any(b < a - MONOTONE_SLACK for a, b in zip(by_depth, by_depth[1:])):
            monotone_violations += 1
        cases += 1

    return [
        SuiteResult(
            name="oracle_equality",
            passed=max_equal_diff <= ORACLE_TOLERANCE,
            detail=f"max |pruned(k=full) - exhaustive| = {max_equal_diff:.3e} over {cases} cases",
        ),
        SuiteResult(
            name="oracle_upper_bound",
            passed=bound_violations == 0,
            detail=f"{bound_violations} pruned-above-oracle violations",
        ),
        SuiteResult(
            name="monotonicity",
            passed=monotone_violations == 0,
            detail=f"{monotone_violations} k/depth monotonicity violations",
        ),
    ]


def run_all(seeds_per_mode: int = 10, n_cases: int = 100, corrupt: bool = False) -> list[SuiteResult]:
    return gradient_suite(seeds_per_mode=seeds_per_mode, corrupt=corrupt) + oracle_suite(n_cases=n_cases)
