"""Semantic frame sequences and corpus ingestion.

A frame is an ordered sequence of (word, label) units: the predicate labeled
PRED at position 0, the argument heads in textual order, and a terminating
EOS unit. Two input formats are supported:

* frame-record lines: one frame per line,
  ``source_id<TAB>pred_word<TAB>word:LABEL:token_index ...`` (UTF-8);
* CoNLL-2009-style column files (14+ columns), converted to one frame per
  annotated predicate.

Arguments carry a single head token each; span-to-head extraction is the
annotator's job upstream of this module.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

logger = logging.getLogger(__name__)

PRED_LABEL = "PRED"
EOS_LABEL = "EOS"
EOS_WORD = "<EOS>"
UNK_WORD = "<UNK>"
UNK_LABEL = "<UNK>"

# Frames are short; capping the argument count keeps backprop through time cheap.
MAX_ARGUMENTS = 9
MAX_SENTENCE_TOKENS = 100


class FrameParseError(ValueError):
    """Malformed input line; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class ArgumentUnit:
    """One (word, label) unit of a frame sequence."""

    word: str
    label: str

    def __str__(self) -> str:
        return f"{self.word}:{self.label}"


EOS_UNIT = ArgumentUnit(EOS_WORD, EOS_LABEL)


@dataclass(frozen=True)
class FrameSequence:
    """A predicate, its argument heads in textual order, and a final EOS unit."""

    units: tuple[ArgumentUnit, ...]
    source_id: str = ""

    def __post_init__(self) -> None:
        if len(self.units) < 2:
            raise ValueError("frame needs at least a predicate and EOS")
        if self.units[0].label != PRED_LABEL:
            raise ValueError(f"first unit must be labeled {PRED_LABEL}")
        if self.units[-1] != EOS_UNIT:
            raise ValueError("last unit must be EOS")
        for unit in self.units[1:-1]:
            if unit.label in (PRED_LABEL, EOS_LABEL):
                raise ValueError(f"reserved label {unit.label} inside frame body")

    @property
    def predicate(self) -> ArgumentUnit:
        return self.units[0]

    @property
    def arguments(self) -> tuple[ArgumentUnit, ...]:
        return self.units[1:-1]

    def __len__(self) -> int:
        return len(self.units)


def make_frame(pred_word: str, args: Iterable[tuple[str, str]], source_id: str = "") -> FrameSequence:
    """Assemble a frame from a predicate word and (word, label) argument pairs."""
    units = [ArgumentUnit(pred_word, PRED_LABEL)]
    units.extend(ArgumentUnit(w, l) for w, l in args)
    units.append(EOS_UNIT)
    return FrameSequence(tuple(units), source_id)


def _truncate_args(args: list, source_id: str, max_arguments: int) -> list:
    if len(args) > max_arguments:
        logger.warning("frame %s has %d arguments, truncating to %d", source_id, len(args), max_arguments)
        return args[:max_arguments]
    return args


def parse_frame_records(stream: Iterable[str], max_arguments: int = MAX_ARGUMENTS) -> list[FrameSequence]:
    """Parse frame-record lines into frames.

    Each line is ``source_id<TAB>pred_word<TAB>trip trip ...`` where a trip is
    ``word:LABEL:token_index``. Argument trips are re-sorted by token index so
    frames always respect textual order. A frame with zero arguments (two
    fields) is retained as predicate+EOS.
    """
    frames = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) < 2:
            raise FrameParseError("expected at least source_id and pred_word", line_no)
        source_id, pred_word = fields[0], fields[1]
        if not pred_word:
            raise FrameParseError("empty predicate word", line_no)
        args = []
        for trip in " ".join(fields[2:]).split():
            parts = trip.rsplit(":", 2)
            if len(parts) != 3:
                raise FrameParseError(f"bad argument triple {trip!r}", line_no)
            word, label, idx_text = parts
            if not word or not label:
                raise FrameParseError(f"bad argument triple {trip!r}", line_no)
            try:
                idx = int(idx_text)
            except ValueError:
                raise FrameParseError(f"bad token index in {trip!r}", line_no) from None
            args.append((idx, word, label))
        args.sort(key=lambda a: a[0])
        args = _truncate_args(args, source_id, max_arguments)
        frames.append(make_frame(pred_word, [(w, l) for _, w, l in args], source_id))
    return frames


def write_frame_records(frames: Iterable[FrameSequence], out: TextIO) -> int:
    """Write frames as frame-record lines; argument token indices are positional."""
    count = 0
    for frame in frames:
        cells = [frame.source_id, frame.predicate.word]
        cells += [f"{u.word}:{u.label}:{i}" for i, u in enumerate(frame.arguments, start=1)]
        out.write("\t".join(cells) + "\n")
        count += 1
    return count


# CoNLL-2009 column layout (0-based): 0 ID, 1 FORM, 2 LEMMA, 3 PLEMMA, 4 POS,
# 5 PPOS, 6 FEAT, 7 PFEAT, 8 HEAD, 9 PHEAD, 10 DEPREL, 11 PDEPREL,
# 12 FILLPRED, 13 PRED, 14+ one APRED column per annotated predicate.
_CONLL_MIN_COLUMNS = 14


def iter_conll_sentences(stream: Iterable[str]) -> Iterator[tuple[int, list[list[str]]]]:
    """Yield (first line number, rows) per blank-line-separated sentence block."""
    rows: list[list[str]] = []
    start_line = 1
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            if rows:
                yield start_line, rows
                rows = []
            start_line = line_no + 1
            continue
        rows.append(line.split("\t"))
    if rows:
        yield start_line, rows


def _token_key(row: list[str]) -> str:
    """Lemma when the corpus provides one, else lowercased surface form."""
    for col in (2, 3):
        if row[col] and row[col] != "_":
            return row[col]
    return row[1].lower()


def parse_conll2009(
    stream: Iterable[str],
    source_prefix: str = "conll",
    max_arguments: int = MAX_ARGUMENTS,
    max_sentence_tokens: int | None = MAX_SENTENCE_TOKENS,
) -> list[FrameSequence]:
    """Convert CoNLL-2009-style columns to frames, one per annotated predicate.

    Sentences at or above ``max_sentence_tokens`` tokens are skipped (pass
    None to disable the filter). The j-th predicate row (FILLPRED = Y or a
    non-underscore PRED) owns the j-th APRED column; rows with a label there
    become its argument heads.
    """
    frames = []
    skipped = 0
    for sent_idx, (start_line, rows) in enumerate(iter_conll_sentences(stream)):
        for row in rows:
            if len(row) < _CONLL_MIN_COLUMNS:
                raise FrameParseError(
                    f"expected >= {_CONLL_MIN_COLUMNS} columns, got {len(row)}", start_line
                )
        if max_sentence_tokens is not None and len(rows) >= max_sentence_tokens:
            skipped += 1
            continue
        pred_rows = [
            i for i, row in enumerate(rows)
            if row[12] == "Y" or (row[13] and row[13] != "_")
        ]
        for pred_no, pred_i in enumerate(pred_rows):
            apred_col = _CONLL_MIN_COLUMNS + pred_no
            args = []
            for tok_i, row in enumerate(rows):
                if apred_col < len(row) and row[apred_col] and row[apred_col] != "_":
                    args.append((tok_i, _token_key(row), row[apred_col]))
            args = _truncate_args(args, f"{source_prefix}:s{sent_idx}", max_arguments)
            frames.append(
                make_frame(
                    _token_key(rows[pred_i]),
                    [(w, l) for _, w, l in args],
                    source_id=f"{source_prefix}:s{sent_idx}:p{pred_no}",
                )
            )
    if skipped:
        logger.info("skipped %d sentences with >= %s tokens", skipped, max_sentence_tokens)
    return frames


@dataclass
class IngestStats:
    """Counts reported by the ingest step."""

    frames: int = 0
    sentences_skipped: int = 0
    label_inventory: set = field(default_factory=set)

    @classmethod
    def collect(cls, frames: list[FrameSequence]) -> "IngestStats":
        stats = cls(frames=len(frames))
        for frame in frames:
            for unit in frame.arguments:
                stats.label_inventory.add(unit.label)
        return stats
