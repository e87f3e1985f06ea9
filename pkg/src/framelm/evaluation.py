"""Dice-based scoring of implicit-role predictions.

A prediction earns the best Dice overlap against any of the annotated
fillers for its query (one implicit role may have several gold constituents
across a coreference chain). Precision divides the summed scores by the
number of positions the system filled, recall by the number of positions
filled in the gold annotation.

Gold files are ``query_key<TAB>filler;filler;...`` lines with each filler a
comma list of ``sent:tok`` positions; an empty second field marks a
position the annotation leaves unfilled.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

from .resolver import format_positions, parse_positions

Position = tuple[int, int]


class GoldFormatError(ValueError):
    pass


def dice(predicted: frozenset[Position] | set[Position], true: frozenset[Position] | set[Position]) -> float:
    """2|A∩B| / (|A|+|B|); both sets must be non-empty."""
    if not predicted or not true:
        raise ValueError("dice requires non-empty token sets")
    return 2.0 * len(set(predicted) & set(true)) / (len(predicted) + len(true))


@dataclass(frozen=True)
class GoldPosition:
    """Gold annotation for one query: the acceptable filler constituents."""

    key: str
    fillers: tuple[frozenset[Position], ...]

    @property
    def filled(self) -> bool:
        return len(self.fillers) > 0


def score_prediction(predicted: frozenset[Position] | set[Position], gold: GoldPosition) -> float:
    """Best Dice overlap across the annotated fillers."""
    if not gold.filled:
        raise ValueError(f"gold position {gold.key} has no annotated fillers")
    return max(dice(predicted, f) for f in gold.fillers)


@dataclass
class Metrics:
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    summed_scores: float = 0.0
    n_predicted: int = 0
    n_gold_filled: int = 0
    no_predictions: bool = False
    per_predicate: dict[str, "Metrics"] = field(default_factory=dict)

    @classmethod
    def from_counts(cls, summed: float, n_predicted: int, n_gold_filled: int) -> "Metrics":
        precision = summed / n_predicted if n_predicted else 0.0
        recall = summed / n_gold_filled if n_gold_filled else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return cls(
            precision=precision,
            recall=recall,
            f1=f1,
            summed_scores=summed,
            n_predicted=n_predicted,
            n_gold_filled=n_gold_filled,
            no_predictions=n_predicted == 0,
        )


def _predicate_of(key: str) -> str:
    parts = key.split("|")
    return parts[3] if len(parts) >= 5 else key


def evaluate(
    predictions: Mapping[str, Sequence[Position] | None],
    gold: Mapping[str, GoldPosition],
) -> Metrics:
    """Aggregate Dice scores into precision/recall/F1, overall and per predicate.

    Unfilled predictions (None or absent keys) are excluded from the
    precision denominator; predictions on positions the gold leaves unfilled
    score zero but still count as filled by the system.
    """
    unknown = set(predictions) - set(gold)
    if unknown:
        raise GoldFormatError(f"predictions for unknown queries: {sorted(unknown)[:3]}")
    n_gold_filled = sum(1 for g in gold.values() if g.filled)
    if n_gold_filled == 0:
        raise GoldFormatError("gold contains no filled argument positions")

    groups: dict[str, list[float]] = {}
    group_gold: dict[str, int] = {}
    summed = 0.0
    n_predicted = 0
    for key, gold_pos in gold.items():
        predicate = _predicate_of(key)
        group_gold[predicate] = group_gold.get(predicate, 0) + (1 if gold_pos.filled else 0)
        predicted = predictions.get(key)
        if predicted is None:
            continue
        value = score_prediction(frozenset(predicted), gold_pos) if gold_pos.filled else 0.0
        summed += value
        n_predicted += 1
        groups.setdefault(predicate, []).append(value)

    metrics = Metrics.from_counts(summed, n_predicted, n_gold_filled)
    for predicate in sorted(group_gold):
        scores = groups.get(predicate, [])
        metrics.per_predicate[predicate] = Metrics.from_counts(
            sum(scores), len(scores), group_gold[predicate]
        )
    return metrics


def load_gold(stream: Iterable[str]) -> dict[str, GoldPosition]:
    gold: dict[str, GoldPosition] = {}
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise GoldFormatError(f"gold line {line_no}: expected key<TAB>fillers")
        key, cell = parts
        fillers = tuple(
            frozenset(parse_positions(f)) for f in cell.split(";") if f
        )
        if any(not f for f in fillers):
            raise GoldFormatError(f"gold line {line_no}: empty filler constituent")
        gold[key] = GoldPosition(key=key, fillers=fillers)
    return gold


def write_gold(gold: Mapping[str, GoldPosition], out: TextIO) -> None:
    for key, pos in gold.items():
        cell = ";".join(format_positions(sorted(f)) for f in pos.fillers)
        out.write(f"{key}\t{cell}\n")


def metrics_lines(metrics: Metrics) -> list[str]:
    """Machine-readable key-value lines, overall then per predicate."""
    lines = [
        f"overall.precision\t{metrics.precision:.4f}",
        f"overall.recall\t{metrics.recall:.4f}",
        f"overall.f1\t{metrics.f1:.4f}",
        f"overall.summed_scores\t{metrics.summed_scores:.4f}",
        f"overall.n_predicted\t{metrics.n_predicted}",
        f"overall.n_gold_filled\t{metrics.n_gold_filled}",
        f"overall.no_predictions\t{int(metrics.no_predictions)}",
    ]
    for name, sub in metrics.per_predicate.items():
        lines.append(
            f"predicate.{name}\tP={sub.precision:.4f}\tR={sub.recall:.4f}\tF1={sub.f1:.4f}"
            f"\tpredicted={sub.n_predicted}\tgold={sub.n_gold_filled}"
        )
    return lines


def metrics_table(metrics: Metrics) -> str:
    """Human-readable summary with one row per predicate."""
    rows = [("predicate", "P", "R", "F1", "pred", "gold")]
    rows.append(
        ("ALL", f"{metrics.precision:.4f}", f"{metrics.recall:.4f}", f"{metrics.f1:.4f}",
         str(metrics.n_predicted), str(metrics.n_gold_filled))
    )
    for name, sub in metrics.per_predicate.items():
        rows.append(
            (name, f"{sub.precision:.4f}", f"{sub.recall:.4f}", f"{sub.f1:.4f}",
             str(sub.n_predicted), str(sub.n_gold_filled))
        )
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    out = []
    for row in rows:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(out) + "\n"
