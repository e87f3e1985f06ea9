"""Command-line pipeline: ingest, train, selpref, resolve, evaluate, verify.

Every parameter has a committed default (the values used throughout the
package: k=1, depth=4, threshold 0.0003, recency z=0.00005 / alpha=0.5,
window 3, 120 epochs, 50/16 embedding widths); a JSON config file can
override defaults and explicit flags override both. Each command writes a
run manifest (effective config, seeds, input checksums) next to its primary
output, and report-producing commands render a figure beside the delimited
file.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .embeddings import load_word_vectors
from .evaluation import evaluate, load_gold, metrics_lines, metrics_table
from .frames import (
    iter_conll_sentences,
    parse_conll2009,
    parse_frame_records,
    write_frame_records,
)
from .model import FrameModel, ModelConfig, load_model, save_model, train
from .resolver import (
    ResolverConfig,
    load_documents,
    load_queries,
    read_predictions,
    resolve_all,
    write_predictions,
)
from .selpref import SelPrefConfig, score_triple_lines
from .verbmap import build_verb_map, parse_lexicon
from .vocab import Vocabulary, build_vocabulary

DEFAULTS = {
    "mode": "separate",
    "word_dim": 50,
    "label_dim": 16,
    "joint_dim": 64,
    "seed": 0,
    "shuffle_seed": 0,
    "epochs": 120,
    "min_count": 2,
    "k": 1,
    "depth": 4,
    "threshold": 0.0003,
    "recency_z": 0.00005,
    "recency_alpha": 0.5,
    "window_size": 3,
    "candidate_filter": "nominal_heads",
}


class CliError(RuntimeError):
    pass


def _load_config(path: str | None) -> dict:
    config = dict(DEFAULTS)
    if path:
        with open(path, encoding="utf-8") as fh:
            overrides = json.load(fh)
        unknown = set(overrides) - set(DEFAULTS)
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}")
        config.update(overrides)
    return config


def _value(args: argparse.Namespace, config: dict, name: str):
    """Flag > config file > committed default."""
    given = getattr(args, name, None)
    return config[name] if given is None else given


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(command: str, primary_output: Path, config: dict,
                    inputs: list[Path], outputs: list[Path]) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "config": {k: v for k, v in sorted(config.items())},
        "inputs": {str(p): _sha256(p) for p in inputs if p is not None},
        "outputs": [str(p) for p in outputs],
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    path = Path(str(primary_output) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    min_count = int(_value(args, config, "min_count"))
    in_path = Path(args.input)
    text = in_path.read_text(encoding="utf-8")
    if args.format == "frames":
        frames = parse_frame_records(text.splitlines(), max_arguments=args.max_args)
    else:
        limit = None if args.no_length_filter else args.max_sentence_tokens
        if limit is not None:
            skipped = sum(1 for _, rows in iter_conll_sentences(text.splitlines()) if len(rows) >= limit)
            print(f"sentences_skipped_by_length\t{skipped}")
        frames = parse_conll2009(
            text.splitlines(),
            source_prefix=in_path.stem,
            max_arguments=args.max_args,
            max_sentence_tokens=limit,
        )
    if not frames:
        raise CliError(f"no frames found in {in_path}")
    convention = "lemma" if args.format == "conll2009" else args.convention
    vocab = build_vocabulary(frames, min_count=min_count, convention=convention)

    out_frames = Path(args.out_frames)
    with open(out_frames, "w", encoding="utf-8") as fh:
        write_frame_records(frames, fh)
    out_vocab = Path(args.out_vocab)
    with open(out_vocab, "w", encoding="utf-8") as fh:
        vocab.save(fh)

    total_tokens = sum(vocab.word_counts.values())
    oov_tokens = sum(c for w, c in vocab.word_counts.items() if w not in vocab.word_to_id)
    print(f"frames\t{len(frames)}")
    print(f"words\t{vocab.n_words}\tlabels\t{vocab.n_labels}\tjoint_units\t{vocab.n_joint}")
    print(f"oov_token_rate\t{oov_tokens / total_tokens:.4f}")
    _write_manifest("ingest", out_frames, {"min_count": min_count, "format": args.format,
                                           "convention": convention},
                    [in_path], [out_frames, out_vocab])
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    mode = _value(args, config, "mode")
    with open(args.frames, encoding="utf-8") as fh:
        frames = parse_frame_records(fh)
    with open(args.vocab, encoding="utf-8") as fh:
        vocab = Vocabulary.load(fh)

    model_config = ModelConfig(
        mode=mode,
        word_dim=int(_value(args, config, "word_dim")),
        label_dim=int(_value(args, config, "label_dim")),
        joint_dim=int(_value(args, config, "joint_dim")),
        seed=int(_value(args, config, "seed")),
    )
    pretrained = None
    if args.embeddings:
        if mode != "separate":
            raise CliError("pre-trained embeddings require --mode separate")
        with open(args.embeddings, encoding="utf-8") as fh:
            pretrained, report = load_word_vectors(fh, vocab, model_config.word_dim,
                                                   seed=model_config.seed)
        print(f"embedding_coverage\t{report.coverage:.4f}")
    model = FrameModel(model_config, vocab, pretrained_word_embeddings=pretrained)
    model.freeze_word_embeddings = bool(args.freeze_embeddings)

    epochs = int(_value(args, config, "epochs"))
    shuffle_seed = int(_value(args, config, "shuffle_seed"))
    report = train(model, frames, epochs=epochs, shuffle_seed=shuffle_seed)

    out_model = Path(args.out_model)
    save_model(model, out_model)
    report_path = Path(args.report or str(out_model) + ".report.tsv")
    report_path.write_text(report.to_tsv(), encoding="utf-8")
    outputs = [out_model, report_path]
    if not args.no_figure:
        from .reports import plot_training_curve

        figure_path = Path(args.figure or str(out_model) + ".loss.png")
        plot_training_curve(report, figure_path)
        outputs.append(figure_path)
    if report.epoch_mean_nll:
        print(f"first_epoch_mean_nll\t{report.epoch_mean_nll[0]:.6f}")
        print(f"final_epoch_mean_nll\t{report.epoch_mean_nll[-1]:.6f}")
    print(f"epochs\t{report.epochs}\twall_time_s\t{report.wall_time_s:.1f}")
    effective = {
        "mode": mode, "word_dim": model_config.word_dim, "label_dim": model_config.label_dim,
        "joint_dim": model_config.joint_dim, "seed": model_config.seed,
        "shuffle_seed": shuffle_seed, "epochs": epochs,
        "freeze_embeddings": bool(args.freeze_embeddings),
    }
    inputs = [Path(args.frames), Path(args.vocab)] + ([Path(args.embeddings)] if args.embeddings else [])
    _write_manifest("train", out_model, effective, inputs, outputs)
    return 0


def cmd_selpref(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    model = load_model(args.model)
    selpref_config = SelPrefConfig(
        k=int(_value(args, config, "k")),
        depth=int(_value(args, config, "depth")),
        expand_eos=bool(args.expand_eos),
    )
    with open(args.triples, encoding="utf-8") as fh:
        scored = score_triple_lines(model, fh, selpref_config, oracle=args.oracle)
    out_path = Path(args.out)
    out_path.write_text("".join(line + "\n" for line in scored), encoding="utf-8")
    print(f"scored\t{len(scored)}")
    _write_manifest("selpref", out_path,
                    {"k": selpref_config.k, "depth": selpref_config.depth,
                     "expand_eos": selpref_config.expand_eos, "oracle": bool(args.oracle)},
                    [Path(args.model), Path(args.triples)], [out_path])
    return 0


def cmd_resolve(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if not args.baseline_only and not args.model:
        raise CliError("--model is required unless --baseline-only is set")
    model = load_model(args.model) if args.model else None

    with open(args.docs, encoding="utf-8") as fh:
        documents = load_documents(fh)
    with open(args.queries, encoding="utf-8") as fh:
        queries = load_queries(fh)
    with open(args.lexicon, encoding="utf-8") as fh:
        lexicon = parse_lexicon(fh)
    if args.frames:
        with open(args.frames, encoding="utf-8") as fh:
            verb_map = build_verb_map(lexicon, parse_frame_records(fh))
    else:
        verb_map = build_verb_map(lexicon)

    resolver_config = ResolverConfig(
        threshold=float(_value(args, config, "threshold")),
        recency_z=float(_value(args, config, "recency_z")),
        recency_alpha=float(_value(args, config, "recency_alpha")),
        window_size=int(_value(args, config, "window_size")),
        selpref=SelPrefConfig(k=int(_value(args, config, "k")),
                              depth=int(_value(args, config, "depth"))),
        baseline_only=bool(args.baseline_only),
        candidate_filter=str(_value(args, config, "candidate_filter")),
    )
    results = resolve_all(documents, queries, model, verb_map, resolver_config)
    out_path = Path(args.out)
    with open(out_path, "w", encoding="utf-8") as fh:
        write_predictions(results, fh)
    filled = sum(1 for _, p in results if p is not None)
    by_path = {"fallback": 0, "model": 0}
    for _, p in results:
        if p is not None:
            by_path[p.provenance] += 1
    print(f"queries\t{len(results)}\tfilled\t{filled}\tfallback\t{by_path['fallback']}\tmodel\t{by_path['model']}")
    effective = {
        "threshold": resolver_config.threshold, "recency_z": resolver_config.recency_z,
        "recency_alpha": resolver_config.recency_alpha, "window_size": resolver_config.window_size,
        "k": resolver_config.selpref.k, "depth": resolver_config.selpref.depth,
        "baseline_only": resolver_config.baseline_only,
        "candidate_filter": resolver_config.candidate_filter,
    }
    inputs = [Path(p) for p in [args.model, args.docs, args.queries, args.lexicon, args.frames] if p]
    _write_manifest("resolve", out_path, effective, inputs, [out_path])
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    with open(args.predictions, encoding="utf-8") as fh:
        predictions = read_predictions(fh)
    with open(args.gold, encoding="utf-8") as fh:
        gold = load_gold(fh)
    metrics = evaluate(predictions, gold)

    out_path = Path(args.out)
    out_path.write_text("".join(line + "\n" for line in metrics_lines(metrics)), encoding="utf-8")
    outputs = [out_path]
    if not args.no_figure:
        from .reports import plot_metrics

        figure_path = Path(args.figure or str(out_path) + ".png")
        plot_metrics(metrics, figure_path)
        outputs.append(figure_path)
    sys.stdout.write(metrics_table(metrics))
    _write_manifest("evaluate", out_path, {}, [Path(args.predictions), Path(args.gold)], outputs)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    from .verify import run_all

    results = run_all(
        seeds_per_mode=args.seeds,
        n_cases=args.cases,
        corrupt=args.inject_gradient_fault,
    )
    lines = [result.line() for result in results]
    for line in lines:
        print(line)
    if args.out:
        out_path = Path(args.out)
        out_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        _write_manifest("verify", out_path,
                        {"seeds": args.seeds, "cases": args.cases,
                         "inject_gradient_fault": bool(args.inject_gradient_fault)},
                        [], [out_path])
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framelm",
        description="Frame-sequence models, selectional preferences, and implicit-role resolution",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="corpus -> frame records + vocabulary")
    p.add_argument("--input", required=True, help="corpus file")
    p.add_argument("--format", choices=["frames", "conll2009"], default="frames")
    p.add_argument("--out-frames", required=True)
    p.add_argument("--out-vocab", required=True)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--min-count", type=int, dest="min_count", help="rare-word threshold (default 2)")
    p.add_argument("--convention", choices=["surface", "lemma"], default="surface",
                   help="word form convention recorded for frame-record input")
    p.add_argument("--max-args", type=int, default=9, help="truncate frames beyond this many arguments")
    p.add_argument("--max-sentence-tokens", type=int, default=100)
    p.add_argument("--no-length-filter", action="store_true",
                   help="keep sentences of 100+ tokens (column input)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="frame records + vocabulary -> model container")
    p.add_argument("--frames", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--mode", choices=["joint", "separate"], help="architecture (default separate)")
    p.add_argument("--epochs", type=int, help="training epochs (default 120)")
    p.add_argument("--seed", type=int, help="parameter init seed (default 0)")
    p.add_argument("--shuffle-seed", type=int, dest="shuffle_seed", help="epoch shuffling seed (default 0)")
    p.add_argument("--word-dim", type=int, dest="word_dim", help="word embedding width (default 50)")
    p.add_argument("--label-dim", type=int, dest="label_dim", help="label embedding width (default 16)")
    p.add_argument("--joint-dim", type=int, dest="joint_dim", help="joint embedding width (default 64)")
    p.add_argument("--embeddings", help="pre-trained word vectors (separate mode only)")
    p.add_argument("--freeze-embeddings", action="store_true",
                   help="do not fine-tune pre-trained word vectors")
    p.add_argument("--report", help="per-epoch loss TSV (default <model>.report.tsv)")
    p.add_argument("--figure", help="training curve PNG (default <model>.loss.png)")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("selpref", help="score predicate/word/label triples")
    p.add_argument("--model", required=True)
    p.add_argument("--triples", required=True, help="predicate<TAB>word<TAB>label lines")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--k", type=int, help="branch width (default 1)")
    p.add_argument("--depth", type=int, help="tree depth (default 4)")
    p.add_argument("--expand-eos", action="store_true",
                   help="let EOS compete for beam slots (sensitivity mode)")
    p.add_argument("--oracle", action="store_true",
                   help="append exhaustive scores (small models only)")
    p.set_defaults(func=cmd_selpref)

    p = sub.add_parser("resolve", help="fill implicit roles in documents")
    p.add_argument("--docs", required=True, help="JSONL sentence records")
    p.add_argument("--queries", required=True, help="query TSV")
    p.add_argument("--out", required=True, help="predictions TSV")
    p.add_argument("--lexicon", required=True, help="nominal->verbs lexicon TSV")
    p.add_argument("--model", help="model container (omit with --baseline-only)")
    p.add_argument("--frames", help="training frames, used to flag unseen verb forms")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--baseline-only", action="store_true",
                   help="use only the deterministic explicit-argument fallback")
    p.add_argument("--threshold", type=float, help="selection threshold s (default 0.0003)")
    p.add_argument("--recency-z", type=float, dest="recency_z", help="recency magnitude (default 0.00005)")
    p.add_argument("--recency-alpha", type=float, dest="recency_alpha", help="recency decay (default 0.5)")
    p.add_argument("--window-size", type=int, dest="window_size", help="context sentences (default 3)")
    p.add_argument("--candidate-filter", dest="candidate_filter",
                   choices=["nominal_heads", "all_tokens"])
    p.add_argument("--k", type=int, help="branch width (default 1)")
    p.add_argument("--depth", type=int, help="tree depth (default 4)")
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("evaluate", help="score predictions against gold fillers")
    p.add_argument("--predictions", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True, help="metrics key-value file")
    p.add_argument("--figure", help="metrics PNG (default <out>.png)")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("verify", help="gradient and marginalization self-checks")
    p.add_argument("--seeds", type=int, default=10, help="random seeds per architecture")
    p.add_argument("--cases", type=int, default=100, help="oracle comparison cases")
    p.add_argument("--out", help="also write the pass/fail report (plus manifest) here")
    p.add_argument("--inject-gradient-fault", action="store_true",
                   help="corrupt the analytic gradient to prove the check catches it")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as err:  # noqa: BLE001 - single reporting point for the CLI
        print(f"error\t{type(err).__name__}\t{err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
