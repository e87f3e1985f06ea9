"""Selectional-preference scores by pruned tree marginalization.

The score of a candidate (word, label) unit under a predicate is the mass of
all likely argument sequences that end in that unit: a prefix tree rooted at
the predicate is expanded breadth-first, keeping the k most probable
non-terminal continuations per node down to a fixed depth, and every node q
contributes P(target | q) * P(q). Accumulation happens in log space; scores
are re-exponentiated at the API boundary.

An exhaustive (unpruned) twin on small vocabularies serves as the
verification oracle for the pruned computation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .frames import PRED_LABEL, ArgumentUnit
from .verbmap import VerbMap

logger = logging.getLogger(__name__)

MAX_TREE_DEPTH = 8

# Cost guards for the exhaustive oracle (every non-EOS unit branches).
ORACLE_MAX_VOCAB = 16
ORACLE_MAX_DEPTH = 4


@dataclass(frozen=True)
class SelPrefConfig:
    """Tree shape: branch width k and maximum sequence length (tree depth).

    ``expand_eos`` lets the end-of-sequence unit compete for beam slots as a
    dead-end branch instead of being excluded from the candidate pool; it
    exists for sensitivity analysis and defaults to off.
    """

    k: int = 1
    depth: int = 4
    expand_eos: bool = False

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 1 <= self.depth <= MAX_TREE_DEPTH:
            raise ValueError(f"depth must be in [1, {MAX_TREE_DEPTH}]")


@dataclass(frozen=True)
class Prefix:
    """A partial argument sequence and its accumulated log probability."""

    units: tuple[ArgumentUnit, ...]
    log_prob: float = 0.0

    @property
    def depth(self) -> int:
        return len(self.units) - 1


def _sorted_unit_ids(dist: np.ndarray) -> np.ndarray:
    """Unit ids by descending probability; ties resolve to the lower id."""
    return np.argsort(-dist, kind="stable")


def top_k_next(model, prefix: Sequence[ArgumentUnit], k: int) -> list[tuple[ArgumentUnit, float]]:
    """The k most probable non-EOS continuations of a prefix."""
    dist = model.next_argument_distribution(prefix)
    eos_id = model.vocab.eos_joint_id
    pool = [int(i) for i in _sorted_unit_ids(dist) if i != eos_id]
    if k > len(pool):
        logger.warning("k=%d exceeds the %d non-EOS units; clamping", k, len(pool))
        k = len(pool)
    return [(ArgumentUnit(*model.vocab.id_to_joint[i]), float(dist[i])) for i in pool[:k]]


def _predicate_known(model, pred_word: str) -> bool:
    if model.mode == "joint":
        return model.vocab.exact_joint_id(pred_word, PRED_LABEL) is not None
    return pred_word in model.vocab.word_to_id


def _expand_tree(model, pred_word: str, config: SelPrefConfig) -> list[tuple[Prefix, np.ndarray]]:
    """All scored tree nodes: prefixes of 0..depth-1 arguments with their
    next-unit distributions."""
    vocab = model.vocab
    eos_id = vocab.eos_joint_id
    root = Prefix((ArgumentUnit(pred_word, PRED_LABEL),))
    nodes = [(root, model.next_argument_distribution(root.units))]
    frontier = nodes
    for _ in range(config.depth - 1):
        next_frontier = []
        for prefix, dist in frontier:
            order = _sorted_unit_ids(dist)
            if not config.expand_eos:
                order = order[order != eos_id]
            for uid in order[:min(config.k, len(order))]:
                uid = int(uid)
                if uid == eos_id:
                    continue  # dead-end branch: nothing can follow EOS
                with np.errstate(divide="ignore"):
                    child_log_prob = prefix.log_prob + float(np.log(dist[uid]))
                child = Prefix(prefix.units + (ArgumentUnit(*vocab.id_to_joint[uid]),), child_log_prob)
                next_frontier.append((child, model.next_argument_distribution(child.units)))
        frontier = next_frontier
        nodes.extend(frontier)
    return nodes


def _batch_scores(nodes: list[tuple[Prefix, np.ndarray]], target_ids: np.ndarray) -> np.ndarray:
    log_probs = np.array([p.log_prob for p, _ in nodes])
    with np.errstate(divide="ignore"):
        log_dists = np.log(np.stack([d[target_ids] for _, d in nodes]))
    return np.exp(np.logaddexp.reduce(log_dists + log_probs[:, None], axis=0))


def selectional_preference(
    model,
    pred_word: str,
    target: ArgumentUnit | tuple[str, str],
    config: SelPrefConfig = SelPrefConfig(),
) -> float:
    """P(target unit fills a role of the predicate), marginalized over the tree.

    Unknown predicates or target units score 0.
    """
    word, label = (target.word, target.label) if isinstance(target, ArgumentUnit) else target
    target_id = model.vocab.exact_joint_id(word, label)
    if target_id is None or not _predicate_known(model, pred_word):
        return 0.0
    nodes = _expand_tree(model, pred_word, config)
    return float(_batch_scores(nodes, np.array([target_id]))[0])


def selectional_preference_batch(
    model,
    pred_word: str,
    targets: Sequence[ArgumentUnit | tuple[str, str]],
    config: SelPrefConfig = SelPrefConfig(),
) -> np.ndarray:
    """Scores for many targets under one predicate, sharing one tree expansion."""
    pairs = [(t.word, t.label) if isinstance(t, ArgumentUnit) else t for t in targets]
    ids = [model.vocab.exact_joint_id(w, l) for w, l in pairs]
    scores = np.zeros(len(pairs))
    if not _predicate_known(model, pred_word):
        return scores
    known = [i for i, tid in enumerate(ids) if tid is not None]
    if not known:
        return scores
    nodes = _expand_tree(model, pred_word, config)
    scores[known] = _batch_scores(nodes, np.array([ids[i] for i in known]))
    return scores


def selectional_preference_exhaustive(model, pred_word: str, target, depth: int = 4) -> float:
    """Unpruned marginal: enumerate every non-EOS argument sequence.

    Verification oracle for selectional_preference; works in plain
    probability space with a fresh forward pass per enumerated prefix, and is
    guarded to small vocabularies and depths.
    """
    if model.n_out > ORACLE_MAX_VOCAB:
        raise ValueError(f"oracle requires an output inventory <= {ORACLE_MAX_VOCAB}")
    if not 1 <= depth <= ORACLE_MAX_DEPTH:
        raise ValueError(f"oracle depth must be in [1, {ORACLE_MAX_DEPTH}]")
    word, label = (target.word, target.label) if isinstance(target, ArgumentUnit) else target
    target_id = model.vocab.exact_joint_id(word, label)
    if target_id is None or not _predicate_known(model, pred_word):
        return 0.0
    vocab = model.vocab
    eos_id = vocab.eos_joint_id

    def visit(units: tuple[ArgumentUnit, ...], prob: float, levels_left: int) -> float:
        dist = model.next_argument_distribution(units)
        total = prob * float(dist[target_id])
        if levels_left > 1:
            for uid in range(model.n_out):
                if uid == eos_id:
                    continue
                child_prob = prob * float(dist[uid])
                total += visit(units + (ArgumentUnit(*vocab.id_to_joint[uid]),), child_prob, levels_left - 1)
        return total

    return visit((ArgumentUnit(pred_word, PRED_LABEL),), 1.0, depth)


def nominal_selectional_preference(
    model,
    nominal: str,
    target: ArgumentUnit | tuple[str, str],
    verb_map: VerbMap,
    config: SelPrefConfig = SelPrefConfig(),
) -> float:
    """Best selectional preference across the nominal's verbal forms."""
    forms = [v for v in sorted(verb_map.verbs(nominal)) if _predicate_known(model, v)]
    if not forms:
        return 0.0
    return max(selectional_preference(model, v, target, config) for v in forms)


def nominal_selectional_preference_batch(
    model,
    nominal: str,
    targets: Sequence[ArgumentUnit | tuple[str, str]],
    verb_map: VerbMap,
    config: SelPrefConfig = SelPrefConfig(),
) -> np.ndarray:
    """Per-target max over the nominal's verbal forms, one tree per form."""
    scores = np.zeros(len(targets))
    for verb in sorted(verb_map.verbs(nominal)):
        if _predicate_known(model, verb):
            scores = np.maximum(scores, selectional_preference_batch(model, verb, targets, config))
    return scores


def score_triple_lines(
    model,
    lines: Iterable[str],
    config: SelPrefConfig = SelPrefConfig(),
    oracle: bool = False,
) -> list[str]:
    """Batch interface: ``predicate<TAB>word<TAB>label`` lines in, the same
    lines with appended fixed-point scores out."""
    by_pred: dict[str, list[tuple[int, str, str]]] = {}
    records = []
    for line_no, raw in enumerate(lines):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"triple line {line_no + 1}: expected predicate<TAB>word<TAB>label")
        records.append(parts)
        by_pred.setdefault(parts[0], []).append((len(records) - 1, parts[1], parts[2]))

    scores = np.zeros(len(records))
    for pred, items in by_pred.items():
        got = selectional_preference_batch(model, pred, [(w, l) for _, w, l in items], config)
        for (idx, _, _), value in zip(items, got):
            scores[idx] = value

    out = []
    for i, (pred, word, label) in enumerate(records):
        line = f"{pred}\t{word}\t{label}\t{scores[i]:.10f}"
        if oracle:
            exact = selectional_preference_exhaustive(model, pred, (word, label), config.depth)
            line += f"\t{exact:.10f}"
        out.append(line)
    return out
