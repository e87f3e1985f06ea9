"""Implicit-role resolution over annotated discourse.

For a nominal predicate instance missing a role, the resolver first looks
for an explicit argument of that role on another instance of the predicate
(or one of its verbal forms) inside the context window and copies the
closest one. Failing that, it scores every candidate token in the window
with the nominal selectional preference for the missing role, discounts by
sentence recency, and selects the best candidate above a threshold.

Documents arrive as JSON lines, one sentence per line:

    {"doc_id": "d1",
     "tokens": [{"word": "This", "lemma": "this", "pos": "DT"}, ...],
     "frames": [{"pred_index": 2, "pred_lemma": "own", "args": {"A1": [1]}}]}

Queries are tab-separated ``doc_id sentence_idx token_idx nominal label``
lines; a query's key joins those five fields with ``|``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

from .selpref import SelPrefConfig, nominal_selectional_preference_batch
from .verbmap import VerbMap

UNFILLED = "UNFILLED"

_PRONOUN_TAGS = {"PRP", "PRP$", "WP", "WP$", "PRON"}


def is_nominal_pos(pos: str) -> bool:
    pos = pos.upper()
    return pos.startswith("N") or pos in _PRONOUN_TAGS or pos == "PROPN"


@dataclass(frozen=True)
class Token:
    word: str
    lemma: str = ""
    pos: str = ""

    def key(self, convention: str) -> str:
        """The form used for vocabulary lookups, per the training convention."""
        if convention == "lemma":
            return self.lemma if self.lemma else self.word.lower()
        return self.word


@dataclass
class FrameAnnotation:
    """One explicit frame: predicate position/lemma and labeled argument heads."""

    pred_index: int
    pred_lemma: str
    args: dict[str, tuple[int, ...]] = field(default_factory=dict)


@dataclass
class Sentence:
    tokens: list[Token]
    frames: list[FrameAnnotation] = field(default_factory=list)


@dataclass
class Document:
    doc_id: str
    sentences: list[Sentence] = field(default_factory=list)

    def token_offset(self, sent_idx: int) -> int:
        """Document-linear position of the sentence's first token."""
        return sum(len(s.tokens) for s in self.sentences[:sent_idx])


@dataclass(frozen=True)
class ResolverQuery:
    doc_id: str
    sent_idx: int
    token_idx: int
    nominal: str
    label: str

    @property
    def key(self) -> str:
        return "|".join(
            [self.doc_id, str(self.sent_idx), str(self.token_idx), self.nominal, self.label]
        )


@dataclass(frozen=True)
class ResolverConfig:
    """Selection threshold, recency discount, window size, and mode switches."""

    threshold: float = 0.0003
    recency_z: float = 0.00005
    recency_alpha: float = 0.5
    window_size: int = 3
    selpref: SelPrefConfig = SelPrefConfig()
    baseline_only: bool = False
    candidate_filter: str = "nominal_heads"  # or "all_tokens"
    threshold_on_raw: bool = False

    def __post_init__(self) -> None:
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if not 0 < self.recency_alpha < 1:
            raise ValueError("recency_alpha must be in (0, 1)")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if self.candidate_filter not in ("nominal_heads", "all_tokens"):
            raise ValueError(f"unknown candidate_filter {self.candidate_filter!r}")


@dataclass(frozen=True)
class FillerPrediction:
    """A predicted filler: token positions, scores, and which path produced it."""

    positions: tuple[tuple[int, int], ...]
    raw_score: float | None
    adjusted_score: float | None
    provenance: str  # "fallback" | "model"
    sentence_distance: int = 0


def recency_adjust(x: float, d: int, z: float, alpha: float) -> float:
    """Discount a score by sentence distance: x - z + z * alpha**d."""
    return x - z + z * alpha ** d


def context_window(document: Document, query: ResolverQuery, window_size: int) -> list[tuple[int, Sentence]]:
    """The query's sentence and up to window_size-1 preceding ones, in order."""
    if not 0 <= query.sent_idx < len(document.sentences):
        raise ValueError(f"query sentence {query.sent_idx} outside document {document.doc_id}")
    start = max(0, query.sent_idx - window_size + 1)
    return [(i, document.sentences[i]) for i in range(start, query.sent_idx + 1)]


def explicit_fallback(
    document: Document,
    query: ResolverQuery,
    verb_map: VerbMap,
    window_size: int = 3,
) -> FillerPrediction | None:
    """Copy the closest explicit argument of the missing role from another
    instance of the predicate (or its verbal forms) in the window."""
    names = {query.nominal} | set(verb_map.verbs(query.nominal))
    query_pos = document.token_offset(query.sent_idx) + query.token_idx
    best = None  # (abs distance, linear pred position, sent_idx, args)
    for sent_idx, sentence in context_window(document, query, window_size):
        offset = document.token_offset(sent_idx)
        for ann in sentence.frames:
            if ann.pred_lemma not in names or query.label not in ann.args:
                continue
            pred_pos = offset + ann.pred_index
            key = (abs(pred_pos - query_pos), pred_pos)
            if best is None or key < best[0]:
                best = (key, sent_idx, ann.args[query.label])
    if best is None:
        return None
    _, sent_idx, arg_tokens = best
    return FillerPrediction(
        positions=tuple((sent_idx, t) for t in arg_tokens),
        raw_score=None,
        adjusted_score=None,
        provenance="fallback",
        sentence_distance=query.sent_idx - sent_idx,
    )


def _candidates(
    document: Document,
    query: ResolverQuery,
    config: ResolverConfig,
    convention: str,
) -> list[tuple[int, int, str]]:
    """(sent_idx, token_idx, lookup key) for scoreable window tokens.

    Same-sentence repeats of a key collapse to the leftmost occurrence;
    occurrences in different sentences stay separate because their recency
    distances differ.
    """
    out = []
    seen: set[tuple[int, str]] = set()
    for sent_idx, sentence in context_window(document, query, config.window_size):
        for tok_idx, token in enumerate(sentence.tokens):
            if config.candidate_filter == "nominal_heads" and token.pos and not is_nominal_pos(token.pos):
                continue
            key = token.key(convention)
            if (sent_idx, key) in seen:
                continue
            seen.add((sent_idx, key))
            out.append((sent_idx, tok_idx, key))
    return out


def resolve(
    document: Document,
    query: ResolverQuery,
    model,
    verb_map: VerbMap,
    config: ResolverConfig = ResolverConfig(),
    score_cache: dict | None = None,
) -> FillerPrediction | None:
    """Fill one implicit role, or return None to leave it unfilled."""
    fallback = explicit_fallback(document, query, verb_map, config.window_size)
    if fallback is not None:
        return fallback
    if config.baseline_only:
        return None
    if model is None:
        raise ValueError("model required unless baseline_only is set")

    candidates = _candidates(document, query, config, model.vocab.convention)
    if not candidates:
        return None

    raw_scores = [None] * len(candidates)
    if score_cache is not None:
        to_score = []
        for i, (_, _, key) in enumerate(candidates):
            cached = score_cache.get((query.nominal, key, query.label))
            if cached is None:
                to_score.append(i)
            else:
                raw_scores[i] = cached
    else:
        to_score = list(range(len(candidates)))
    if to_score:
        batch = nominal_selectional_preference_batch(
            model,
            query.nominal,
            [(candidates[i][2], query.label) for i in to_score],
            verb_map,
            config.selpref,
        )
        for i, value in zip(to_score, batch):
            raw_scores[i] = float(value)
            if score_cache is not None:
                score_cache[(query.nominal, candidates[i][2], query.label)] = float(value)

    best = None  # ((adjusted, -distance, -token_idx), prediction fields)
    for (sent_idx, tok_idx, _), raw in zip(candidates, raw_scores):
        distance = query.sent_idx - sent_idx
        adjusted = recency_adjust(raw, distance, config.recency_z, config.recency_alpha)
        rank = (adjusted, -distance, -tok_idx)
        if best is None or rank > best[0]:
            best = (rank, (sent_idx, tok_idx, raw, adjusted, distance))
    sent_idx, tok_idx, raw, adjusted, distance = best[1]
    gate = raw if config.threshold_on_raw else adjusted
    if not gate > config.threshold:
        return None
    return FillerPrediction(
        positions=((sent_idx, tok_idx),),
        raw_score=raw,
        adjusted_score=adjusted,
        provenance="model",
        sentence_distance=distance,
    )


def resolve_all(
    documents: dict[str, Document],
    queries: Sequence[ResolverQuery],
    model,
    verb_map: VerbMap,
    config: ResolverConfig = ResolverConfig(),
) -> list[tuple[ResolverQuery, FillerPrediction | None]]:
    cache: dict = {}
    results = []
    for query in queries:
        document = documents.get(query.doc_id)
        if document is None:
            raise ValueError(f"query references unknown document {query.doc_id!r}")
        results.append((query, resolve(document, query, model, verb_map, config, score_cache=cache)))
    return results


def load_documents(stream: Iterable[str]) -> dict[str, Document]:
    """Parse sentence-per-line JSON records into documents, preserving order."""
    documents: dict[str, Document] = {}
    for line_no, raw in enumerate(stream, start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as err:
            raise ValueError(f"document line {line_no}: {err}") from None
        doc_id = record["doc_id"]
        tokens = [
            Token(word=t["word"], lemma=t.get("lemma", ""), pos=t.get("pos", ""))
            for t in record["tokens"]
        ]
        frames = []
        for ann in record.get("frames", []):
            args = {}
            for label, pos in ann.get("args", {}).items():
                args[label] = tuple(pos) if isinstance(pos, list) else (int(pos),)
            frames.append(FrameAnnotation(int(ann["pred_index"]), ann["pred_lemma"], args))
        documents.setdefault(doc_id, Document(doc_id)).sentences.append(Sentence(tokens, frames))
    for document in documents.values():
        for sentence in document.sentences:
            for ann in sentence.frames:
                positions = [ann.pred_index, *(t for ts in ann.args.values() for t in ts)]
                if any(not 0 <= p < len(sentence.tokens) for p in positions):
                    raise ValueError(f"annotation positions out of range in {document.doc_id}")
    return documents


def load_queries(stream: Iterable[str]) -> list[ResolverQuery]:
    queries = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise ValueError(f"query line {line_no}: expected 5 tab-separated fields")
        queries.append(ResolverQuery(parts[0], int(parts[1]), int(parts[2]), parts[3], parts[4]))
    return queries


def format_positions(positions: Sequence[tuple[int, int]]) -> str:
    return ",".join(f"{s}:{t}" for s, t in positions)


def parse_positions(text: str) -> tuple[tuple[int, int], ...]:
    out = []
    for cell in text.split(","):
        s, t = cell.split(":")
        out.append((int(s), int(t)))
    return tuple(out)


def write_predictions(
    results: Sequence[tuple[ResolverQuery, FillerPrediction | None]],
    out: TextIO,
) -> None:
    out.write("query_key\tdoc_id\tpositions\traw_score\tadjusted_score\tprovenance\n")
    for query, pred in results:
        if pred is None:
            out.write(f"{query.key}\t{query.doc_id}\t{UNFILLED}\t-\t-\t-\n")
            continue

        def fmt(score: float | None) -> str:
            if score is None:
                return "-"
            return f"{score:.10f}" if math.isfinite(score) else str(score)

        out.write(
            f"{query.key}\t{query.doc_id}\t{format_positions(pred.positions)}"
            f"\t{fmt(pred.raw_score)}\t{fmt(pred.adjusted_score)}\t{pred.provenance}\n"
        )


def read_predictions(stream: Iterable[str]) -> dict[str, tuple[tuple[int, int], ...] | None]:
    """Prediction file -> query key to positions (None when unfilled)."""
    out: dict[str, tuple[tuple[int, int], ...] | None] = {}
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("query_key\t"):
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise ValueError(f"prediction line {line_no}: expected 6 fields")
        out[parts[0]] = None if parts[2] == UNFILLED else parse_positions(parts[2])
    return out
