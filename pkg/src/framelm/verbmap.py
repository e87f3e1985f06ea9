"""Nominal-to-verbal predicate mapping.

A lexicon stream lists the verbal forms associated with each nominal lemma
(``nominal_lemma<TAB>verb1,verb2,...``). Forms are additionally flagged as
seen or unseen depending on whether they occur as a predicate in the
training frames; unseen forms are kept so fallback matching in discourse can
still use them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

from .frames import FrameSequence


@dataclass
class VerbMap:
    """Maps a nominal lemma to its verbal forms, with seen-in-training flags."""

    forms: dict[str, frozenset[str]] = field(default_factory=dict)
    seen: dict[str, frozenset[str]] = field(default_factory=dict)

    def verbs(self, nominal: str) -> frozenset[str]:
        """All verbal forms for the nominal; empty when it is not in the lexicon."""
        return self.forms.get(nominal, frozenset())

    def seen_verbs(self, nominal: str) -> frozenset[str]:
        return self.seen.get(nominal, frozenset())

    def all_unseen(self, nominal: str) -> bool:
        return nominal in self.forms and not self.seen.get(nominal)

    def save(self, out: TextIO) -> None:
        for nominal in sorted(self.forms):
            seen = self.seen.get(nominal, frozenset())
            cells = ",".join(
                f"{v}" + ("" if v in seen else "?") for v in sorted(self.forms[nominal])
            )
            out.write(f"{nominal}\t{cells}\n")

    @classmethod
    def load(cls, stream: Iterable[str]) -> "VerbMap":
        forms: dict[str, frozenset[str]] = {}
        seen: dict[str, frozenset[str]] = {}
        for line in stream:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            nominal, cell = line.split("\t")
            entries = [v for v in cell.split(",") if v]
            forms[nominal] = frozenset(v.rstrip("?") for v in entries)
            seen[nominal] = frozenset(v for v in entries if not v.endswith("?"))
        return cls(forms=forms, seen=seen)


def parse_lexicon(stream: Iterable[str]) -> dict[str, frozenset[str]]:
    """Parse ``nominal<TAB>verb1,verb2,...`` lines."""
    lexicon: dict[str, frozenset[str]] = {}
    for line_no, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"lexicon line {line_no}: expected 'nominal<TAB>verbs'")
        verbs = frozenset(v.strip() for v in parts[1].split(",") if v.strip())
        lexicon[parts[0]] = verbs
    return lexicon


def build_verb_map(
    lexicon: dict[str, frozenset[str]] | Iterable[str],
    frames: Sequence[FrameSequence] = (),
) -> VerbMap:
    """Attach seen-in-training flags to a lexicon.

    A form counts as seen when it occurs as the predicate word of at least
    one training frame.
    """
    if not isinstance(lexicon, dict):
        lexicon = parse_lexicon(lexicon)
    predicates = {frame.predicate.word for frame in frames}
    verb_map = VerbMap()
    for nominal, verbs in lexicon.items():
        verb_map.forms[nominal] = frozenset(verbs)
        verb_map.seen[nominal] = frozenset(v for v in verbs if v in predicates)
    return verb_map
