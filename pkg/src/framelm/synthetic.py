"""Synthetic label-ordered grammar for end-to-end checks and demos.

Five verbal predicates each own small disjoint lexicons per role; generated
frames order roles A0 < A1 < AM-LOC and carry a small rate of label noise so
grammar-violating word:label pairs exist in the output inventory with low
probability instead of being absent outright. Companion documents plant one
implicit argument each, resolvable either through an explicitly annotated
instance in the window (fallback) or through selectional preference alone.

Run ``python -m framelm.synthetic --out DIR`` to materialize the dataset
(frame records, lexicon, documents, queries, gold) for the CLI pipeline.
"""
from __future__ import annotations

import argparse
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .frames import ArgumentUnit, FrameSequence, make_frame
from .resolver import Document, ResolverQuery, load_documents
from .evaluation import GoldPosition

LABEL_ORDER = ("A0", "A1", "AM-LOC")
# A0/A1 are obligatory so the grammar's entropy stays low enough that a
# trained model can cut the first-epoch loss by well over half.
INCLUDE_PROBS = {"A0": 1.0, "A1": 1.0, "AM-LOC": 0.25}


@dataclass
class SyntheticGrammar:
    predicates: dict[str, dict[str, tuple[str, ...]]]
    nominals: dict[str, str]  # nominal lemma -> verbal predicate
    label_order: tuple[str, ...] = LABEL_ORDER
    include_probs: dict[str, float] = field(default_factory=lambda: dict(INCLUDE_PROBS))

    def labels_of(self, word: str) -> set[str]:
        out = set()
        for lexicon in self.predicates.values():
            for label, words in lexicon.items():
                if word in words:
                    out.add(label)
        return out


def default_grammar() -> SyntheticGrammar:
    predicates = {
        "eat": {
            "A0": ("cook", "child"),
            "A1": ("apple", "bread"),
            "AM-LOC": ("kitchen", "cafe"),
        },
        "drive": {
            "A0": ("driver", "courier"),
            "A1": ("truck", "tractor"),
            "AM-LOC": ("road", "highway"),
        },
        "sell": {
            "A0": ("vendor", "broker"),
            "A1": ("house", "carpet"),
            "AM-LOC": ("market", "auction"),
        },
        "read": {
            "A0": ("student", "teacher"),
            "A1": ("novel", "letter"),
            "AM-LOC": ("library", "porch"),
        },
        "build": {
            "A0": ("mason", "crew"),
            "A1": ("wall", "bridge"),
            "AM-LOC": ("site", "yard"),
        },
    }
    nominals = {
        "meal": "eat",
        "haul": "drive",
        "sale": "sell",
        "recital": "read",
        "construction": "build",
    }
    return SyntheticGrammar(predicates=predicates, nominals=nominals)


def generate_frames(
    grammar: SyntheticGrammar,
    n_frames: int,
    seed: int = 0,
    noise_rate: float = 0.02,
) -> list[FrameSequence]:
    """Sample frames from the grammar with occasional label corruption."""
    rng = np.random.default_rng(seed)
    preds = sorted(grammar.predicates)
    frames = []
    for i in range(n_frames):
        pred = preds[int(rng.integers(len(preds)))]
        lexicon = grammar.predicates[pred]
        args = []
        for label in grammar.label_order:
            if rng.random() >= grammar.include_probs[label]:
                continue
            word = lexicon[label][int(rng.integers(len(lexicon[label])))]
            out_label = label
            if rng.random() < noise_rate:
                others = [l for l in grammar.label_order if l != label]
                out_label = others[int(rng.integers(len(others)))]
            args.append((word, out_label))
        frames.append(make_frame(pred, args, source_id=f"synth:{i}"))
    return frames


def probe_pairs(
    grammar: SyntheticGrammar,
    n_pairs: int,
    seed: int = 0,
) -> list[tuple[str, ArgumentUnit, ArgumentUnit]]:
    """(predicate, consistent unit, inconsistent unit) comparison probes.

    The inconsistent unit reuses the same word under a label the grammar
    never assigns it for that predicate.
    """
    rng = np.random.default_rng(seed)
    preds = sorted(grammar.predicates)
    pairs = []
    for _ in range(n_pairs):
        pred = preds[int(rng.integers(len(preds)))]
        lexicon = grammar.predicates[pred]
        label = grammar.label_order[int(rng.integers(len(grammar.label_order)))]
        word = lexicon[label][int(rng.integers(len(lexicon[label])))]
        wrong = [l for l in grammar.label_order if l != label]
        wrong_label = wrong[int(rng.integers(len(wrong)))]
        pairs.append((pred, ArgumentUnit(word, label), ArgumentUnit(word, wrong_label)))
    return pairs


def lexicon_lines(grammar: SyntheticGrammar) -> list[str]:
    return [f"{nominal}\t{verb}" for nominal, verb in sorted(grammar.nominals.items())]


_FILLER_POS = {"the": "DT", "a": "DT", "was": "VBD", "near": "IN", "and": "CC",
               "waited": "VBD", "happened": "VBD", "today": "RB", "went": "VBD", "by": "IN"}


def _tok(word: str) -> dict:
    return {"word": word, "lemma": word, "pos": _FILLER_POS.get(word, "NN")}


def generate_document_lines(
    grammar: SyntheticGrammar,
    n_docs: int,
    seed: int = 0,
    fallback_fraction: float = 0.3,
) -> tuple[list[str], list[ResolverQuery], dict[str, GoldPosition]]:
    """JSONL sentence records, queries, and gold for planted implicit roles."""
    rng = np.random.default_rng(seed)
    nominals = sorted(grammar.nominals)
    lines = []
    queries = []
    gold: dict[str, GoldPosition] = {}
    for i in range(n_docs):
        doc_id = f"doc{i:03d}"
        nominal = nominals[i % len(nominals)]
        pred = grammar.nominals[nominal]
        lexicon = grammar.predicates[pred]
        label = "A1" if rng.random() < 0.6 else "A0"
        filler = lexicon[label][int(rng.integers(len(lexicon[label])))]
        other_label = "A0" if label == "A1" else "A1"
        distractors = rng.choice(lexicon[other_label], size=2, replace=False)

        if rng.random() < fallback_fraction:
            # An annotated instance of the verbal form carries the role explicitly.
            agent = lexicon["A0"][int(rng.integers(len(lexicon["A0"])))]
            tokens0 = [_tok("the"), _tok(agent), _tok(pred), _tok("the"), _tok(filler)]
            frames0 = [{
                "pred_index": 2,
                "pred_lemma": pred,
                "args": {"A0": [1], label: [4]} if label != "A0" else {label: [1]},
            }]
            filler_pos = (0, 4) if label != "A0" else (0, 1)
            sent0 = {"doc_id": doc_id, "tokens": tokens0, "frames": frames0}
        else:
            tokens0 = [_tok("the"), _tok(filler), _tok("was"), _tok("near"),
                       _tok("the"), _tok(str(distractors[0]))]
            filler_pos = (0, 1)
            sent0 = {"doc_id": doc_id, "tokens": tokens0, "frames": []}

        sent1 = {
            "doc_id": doc_id,
            "tokens": [_tok("the"), _tok(str(distractors[1])), _tok("waited")],
            "frames": [],
        }
        sent2 = {
            "doc_id": doc_id,
            "tokens": [_tok("the"), _tok(nominal), _tok("happened"), _tok("today")],
            "frames": [],
        }
        lines += [json.dumps(sent0), json.dumps(sent1), json.dumps(sent2)]
        query = ResolverQuery(doc_id, 2, 1, nominal, label)
        queries.append(query)
        gold[query.key] = GoldPosition(key=query.key, fillers=(frozenset({filler_pos}),))
    return lines, queries, gold


def generate_documents(
    grammar: SyntheticGrammar,
    n_docs: int,
    seed: int = 0,
    fallback_fraction: float = 0.3,
) -> tuple[dict[str, Document], list[ResolverQuery], dict[str, GoldPosition]]:
    lines, queries, gold = generate_document_lines(grammar, n_docs, seed, fallback_fraction)
    return load_documents(lines), queries, gold


def write_dataset(
    out_dir: str | Path,
    n_frames: int = 2000,
    n_docs: int = 50,
    seed: int = 0,
) -> dict[str, Path]:
    """Materialize the full synthetic dataset for the CLI pipeline."""
    from .frames import write_frame_records
    from .evaluation import write_gold

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grammar = default_grammar()
    paths = {
        "frames": out / "frames.tsv",
        "lexicon": out / "lexicon.tsv",
        "documents": out / "documents.jsonl",
        "queries": out / "queries.tsv",
        "gold": out / "gold.tsv",
        "triples": out / "triples.tsv",
    }
    with open(paths["frames"], "w", encoding="utf-8") as fh:
        write_frame_records(generate_frames(grammar, n_frames, seed=seed), fh)
    paths["lexicon"].write_text("\n".join(lexicon_lines(grammar)) + "\n", encoding="utf-8")
    triples = [
        f"{pred}\t{word}\t{label}"
        for pred, lexicon in sorted(grammar.predicates.items())
        for label, words in sorted(lexicon.items())
        for word in words
    ]
    paths["triples"].write_text("\n".join(triples) + "\n", encoding="utf-8")
    lines, queries, gold = generate_document_lines(grammar, n_docs, seed=seed + 1)
    paths["documents"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    paths["queries"].write_text(
        "".join(f"{q.doc_id}\t{q.sent_idx}\t{q.token_idx}\t{q.nominal}\t{q.label}\n" for q in queries),
        encoding="utf-8",
    )
    with open(paths["gold"], "w", encoding="utf-8") as fh:
        write_gold(gold, fh)
    return paths


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Generate the synthetic grammar dataset")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--frames", type=int, default=2000)
    parser.add_argument("--docs", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    paths = write_dataset(args.out, n_frames=args.frames, n_docs=args.docs, seed=args.seed)
    for name, path in paths.items():
        print(f"{name}\t{path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
