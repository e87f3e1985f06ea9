"""Vocabularies over words, labels, and joint word:label units.

The joint inventory doubles as the model output space for both architectures.
Words (and joint units) occurring fewer than ``min_count`` times collapse to
UNK; labels are never replaced. Joint fallback order at encode time:
exact pair, then (UNK, label) when that pair was produced during counting,
then the global UNK unit.
"""
from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from typing import Sequence, TextIO

from .frames import (
    EOS_LABEL,
    EOS_WORD,
    PRED_LABEL,
    UNK_LABEL,
    UNK_WORD,
    ArgumentUnit,
    FrameSequence,
)

VOCAB_MAGIC = "framelm-vocab"
VOCAB_VERSION = 1

UNK_JOINT = (UNK_WORD, UNK_LABEL)
EOS_JOINT = (EOS_WORD, EOS_LABEL)


class VocabularyError(ValueError):
    pass


@dataclass
class Vocabulary:
    """Bidirectional symbol/index maps for words, labels, and joint units."""

    word_to_id: dict[str, int]
    id_to_word: list[str]
    label_to_id: dict[str, int]
    id_to_label: list[str]
    joint_to_id: dict[tuple[str, str], int]
    id_to_joint: list[tuple[str, str]]
    word_counts: dict[str, int]
    joint_counts: dict[tuple[str, str], int]
    min_count: int = 2
    convention: str = "surface"

    @property
    def n_words(self) -> int:
        return len(self.id_to_word)

    @property
    def n_labels(self) -> int:
        return len(self.id_to_label)

    @property
    def n_joint(self) -> int:
        return len(self.id_to_joint)

    @property
    def unk_word_id(self) -> int:
        return self.word_to_id[UNK_WORD]

    @property
    def eos_word_id(self) -> int:
        return self.word_to_id[EOS_WORD]

    @property
    def unk_joint_id(self) -> int:
        return self.joint_to_id[UNK_JOINT]

    @property
    def eos_joint_id(self) -> int:
        return self.joint_to_id[EOS_JOINT]

    def word_id(self, word: str) -> int:
        return self.word_to_id.get(word, self.word_to_id[UNK_WORD])

    def label_id(self, label: str) -> int:
        """Label index; labels observed at build time are never collapsed, but
        an unseen label at encode time falls back to the reserved UNK entry."""
        return self.label_to_id.get(label, self.label_to_id[UNK_LABEL])

    def joint_id(self, word: str, label: str) -> int:
        """Joint id with UNK fallback: (word, label) -> (UNK, label) -> UNK."""
        jid = self.joint_to_id.get((word, label))
        if jid is not None:
            return jid
        jid = self.joint_to_id.get((UNK_WORD, label))
        if jid is not None:
            return jid
        return self.joint_to_id[UNK_JOINT]

    def exact_joint_id(self, word: str, label: str) -> int | None:
        """Joint id without UNK fallback; None when the pair is unknown."""
        return self.joint_to_id.get((word, label))

    def checksum(self) -> str:
        """SHA-256 over the canonical serialization; stable across save/load."""
        digest = hashlib.sha256()
        digest.update(f"{VOCAB_MAGIC} {VOCAB_VERSION} {self.min_count} {self.convention}\n".encode())
        for word in self.id_to_word:
            digest.update(f"w\t{word}\n".encode())
        for label in self.id_to_label:
            digest.update(f"l\t{label}\n".encode())
        for word, label in self.id_to_joint:
            digest.update(f"j\t{word}\t{label}\n".encode())
        return digest.hexdigest()

    def save(self, out: TextIO) -> None:
        out.write(f"{VOCAB_MAGIC} {VOCAB_VERSION}\n")
        out.write(f"convention {self.convention}\n")
        out.write(f"min_count {self.min_count}\n")
        out.write(f"words {self.n_words}\n")
        for i, word in enumerate(self.id_to_word):
            out.write(f"{i}\t{word}\t{self.word_counts.get(word, 0)}\n")
        out.write(f"labels {self.n_labels}\n")
        for i, label in enumerate(self.id_to_label):
            out.write(f"{i}\t{label}\n")
        out.write(f"joints {self.n_joint}\n")
        for i, (word, label) in enumerate(self.id_to_joint):
            out.write(f"{i}\t{word}\t{label}\t{self.joint_counts.get((word, label), 0)}\n")

    @classmethod
    def load(cls, stream: TextIO) -> "Vocabulary":
        lines = iter(stream.read().splitlines())

        def next_line() -> str:
            try:
                return next(lines)
            except StopIteration:
                raise VocabularyError("truncated vocabulary file") from None

        header = next_line().split()
        if len(header) != 2 or header[0] != VOCAB_MAGIC:
            raise VocabularyError("not a vocabulary file")
        if int(header[1]) != VOCAB_VERSION:
            raise VocabularyError(f"unsupported vocabulary version {header[1]}")
        convention = next_line().split(" ", 1)[1]
        min_count = int(next_line().split(" ", 1)[1])

        def read_section(name: str, n_fields: int) -> list[list[str]]:
            tag, count = next_line().split()
            if tag != name:
                raise VocabularyError(f"expected section {name}, got {tag}")
            rows = []
            for i in range(int(count)):
                parts = next_line().split("\t")
                if len(parts) != n_fields or int(parts[0]) != i:
                    raise VocabularyError(f"bad row {i} in section {name}")
                rows.append(parts)
            return rows

        word_rows = read_section("words", 3)
        label_rows = read_section("labels", 2)
        joint_rows = read_section("joints", 4)
        id_to_word = [r[1] for r in word_rows]
        id_to_label = [r[1] for r in label_rows]
        id_to_joint = [(r[1], r[2]) for r in joint_rows]
        return cls(
            word_to_id={w: i for i, w in enumerate(id_to_word)},
            id_to_word=id_to_word,
            label_to_id={l: i for i, l in enumerate(id_to_label)},
            id_to_label=id_to_label,
            joint_to_id={j: i for i, j in enumerate(id_to_joint)},
            id_to_joint=id_to_joint,
            word_counts={r[1]: int(r[2]) for r in word_rows},
            joint_counts={(r[1], r[2]): int(r[3]) for r in joint_rows},
            min_count=min_count,
            convention=convention,
        )


def build_vocabulary(
    frames: Sequence[FrameSequence],
    min_count: int = 2,
    convention: str = "surface",
) -> Vocabulary:
    """Count units over training frames and freeze the index maps.

    Reserved entries come first so their ids are stable: words UNK=0, EOS=1;
    labels PRED=0, EOS=1, UNK=2 (the UNK label exists only to host the global
    UNK joint unit; observed labels are never collapsed); joints UNK=0, EOS=1.
    """
    if not frames:
        raise VocabularyError("cannot build a vocabulary from zero frames")

    word_counts: Counter = Counter()
    joint_counts: Counter = Counter()
    label_set: set[str] = set()
    for frame in frames:
        for unit in frame.units[:-1]:
            word_counts[unit.word] += 1
            joint_counts[(unit.word, unit.label)] += 1
            label_set.add(unit.label)
        word_counts[EOS_WORD] += 1
        joint_counts[EOS_JOINT] += 1

    id_to_word = [UNK_WORD, EOS_WORD]
    for word in sorted(w for w, c in word_counts.items() if c >= min_count and w != EOS_WORD):
        id_to_word.append(word)

    id_to_label = [PRED_LABEL, EOS_LABEL, UNK_LABEL]
    id_to_label.extend(sorted(label_set - {PRED_LABEL, EOS_LABEL}))

    kept_words = set(id_to_word)
    kept_joints: set[tuple[str, str]] = set()
    unk_label_counts: Counter = Counter()
    for (word, label), count in joint_counts.items():
        if (word, label) == EOS_JOINT:
            continue
        if count >= min_count and word in kept_words:
            kept_joints.add((word, label))
        else:
            unk_label_counts[(UNK_WORD, label)] += count
    id_to_joint = [UNK_JOINT, EOS_JOINT]
    id_to_joint.extend(sorted(kept_joints))
    id_to_joint.extend(sorted(unk_label_counts))
    joint_counts.update(unk_label_counts)

    return Vocabulary(
        word_to_id={w: i for i, w in enumerate(id_to_word)},
        id_to_word=id_to_word,
        label_to_id={l: i for i, l in enumerate(id_to_label)},
        id_to_label=id_to_label,
        joint_to_id={j: i for i, j in enumerate(id_to_joint)},
        id_to_joint=id_to_joint,
        word_counts=dict(word_counts),
        joint_counts=dict(joint_counts),
        min_count=min_count,
        convention=convention,
    )


@dataclass(frozen=True)
class EncodedFrame:
    """Index streams for one frame, EOS included.

    ``joint`` is always present and provides the prediction targets
    (``joint[1:]``); ``words``/``labels`` are the parallel input streams used
    by the separate-embedding architecture.
    """

    joint: tuple[int, ...]
    words: tuple[int, ...] | None = None
    labels: tuple[int, ...] | None = None
    source_id: str = ""

    @property
    def n_steps(self) -> int:
        return len(self.joint) - 1

    @property
    def targets(self) -> tuple[int, ...]:
        return self.joint[1:]


def encode_frame(frame: FrameSequence, vocab: Vocabulary, mode: str) -> EncodedFrame:
    """Encode a frame as index streams; unknown words fall back to UNK."""
    joint = tuple(vocab.joint_id(u.word, u.label) for u in frame.units)
    if mode == "joint":
        return EncodedFrame(joint=joint, source_id=frame.source_id)
    if mode == "separate":
        words = tuple(vocab.word_id(u.word) for u in frame.units)
        labels = tuple(vocab.label_id(u.label) for u in frame.units)
        return EncodedFrame(joint=joint, words=words, labels=labels, source_id=frame.source_id)
    raise ValueError(f"unknown mode {mode!r}")


def decode_frame(enc: EncodedFrame, vocab: Vocabulary, mode: str) -> list[ArgumentUnit]:
    """Inverse of encode_frame up to UNK replacement of out-of-vocabulary words."""
    if mode == "joint":
        return [ArgumentUnit(*vocab.id_to_joint[i]) for i in enc.joint]
    if mode == "separate":
        assert enc.words is not None and enc.labels is not None
        return [
            ArgumentUnit(vocab.id_to_word[w], vocab.id_to_label[l])
            for w, l in zip(enc.words, enc.labels)
        ]
    raise ValueError(f"unknown mode {mode!r}")
