"""Command-line surface: train models, infer vectors, tag and evaluate.

Every command takes its tunable settings from built-in defaults, overridden
by an optional JSON --config file, overridden by explicit flags. The fully
resolved configuration is logged to stderr and stored in output manifests,
and all randomness flows from the single --seed value. Output files are
written atomically; a failing command leaves no partial outputs.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

from .archive import ArchiveError
from .conllu import ConlluParseError, CorpusSplit, parse_conllu, serialize_conllu, subsample
from .embeddings import (
    EmbeddingParseError,
    OovLookupError,
    read_embeddings,
    write_embeddings,
)
from .evaluate import TaggedCorpusPair, mcnemar, pos_correctness, render_report
from .fileio import atomic_write_text
from .mimick import MimickModel, MimickTrainConfig, infer_oov, nearest_neighbors, train_mimick
from .nn import DimensionError
from .tagger import (
    TaggerModel,
    TaggerTrainConfig,
    VARIANTS,
    WordRepSpec,
    tag_corpus,
    train_tagger,
)

MIMICK_DEFAULTS = {
    "seed": 0,
    "epochs": 60,
    "lr": 0.01,
    "momentum": 0.9,
    "char_dim": 20,
    "hidden": 50,
    "dev_fraction": 0.01,
}

TAGGER_DEFAULTS = {
    "seed": 0,
    "epochs": 40,
    "lr": 0.01,
    "momentum": 0.9,
    "dropout": 0.5,
    "hidden": 128,
    "char_dim": 20,
    "char_hidden": 128,
    "variant": "no-char",
    "loss": "sum",
    "token_limit": None,
    "pos_only": False,
}


class CliError(ValueError):
    pass


def _resolve_config(args: argparse.Namespace, defaults: dict) -> dict:
    resolved = dict(defaults)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as handle:
            try:
                overrides = json.load(handle)
            except json.JSONDecodeError as err:
                raise CliError(f"config {args.config}: {err}") from None
        if not isinstance(overrides, dict):
            raise CliError(f"config {args.config}: expected a JSON object")
        unknown = sorted(set(overrides) - set(defaults))
        if unknown:
            raise CliError(f"config {args.config}: unknown keys {unknown}")
        resolved.update(overrides)
    for key in defaults:  # explicit flags win over the config file
        value = getattr(args, key, None)
        if value is not None and value is not False:
            resolved[key] = value
    print(
        "config: " + " ".join(f"{k}={resolved[k]}" for k in sorted(resolved)),
        file=sys.stderr,
    )
    return resolved


def _read_table(path: str):
    with open(path, encoding="utf-8") as handle:
        return read_embeddings(handle)


def _read_corpus(path: str):
    with open(path, encoding="utf-8") as handle:
        return parse_conllu(handle)


# ----------------------------------------------------------------------
# subcommands


def cmd_train_mimick(args) -> int:
    resolved = _resolve_config(args, MIMICK_DEFAULTS)
    table = _read_table(args.embeddings)
    cfg = MimickTrainConfig(
        char_dim=resolved["char_dim"],
        hidden=resolved["hidden"],
        epochs=resolved["epochs"],
        dev_fraction=resolved["dev_fraction"],
        lr=resolved["lr"],
        momentum=resolved["momentum"],
        seed=resolved["seed"],
    )
    model, trace = train_mimick(table, cfg)
    model.save(args.out, extra_meta={"config": resolved})
    rows = ["epoch\ttrain_loss\tdev_loss\n"]
    rows += [f"{e.epoch}\t{e.train_loss:.17g}\t{e.dev_loss:.17g}\n" for e in trace]
    atomic_write_text(args.trace or args.out + ".trace.tsv", "".join(rows))
    return 0


def cmd_infer(args) -> int:
    model = MimickModel.load(args.model)
    table = _read_table(args.embeddings)
    with open(args.words, encoding="utf-8") as handle:
        words = [line.strip() for line in handle if line.strip()]
    extension = infer_oov(model, table, words)
    sink = io.StringIO()
    write_embeddings(extension, sink)
    atomic_write_text(args.out, sink.getvalue())
    return 0


def cmd_nn(args) -> int:
    table = _read_table(args.embeddings)
    if args.word in table:
        query = table.vector(args.word)
    elif args.model:
        query = MimickModel.load(args.model).forward(args.word)
    else:
        raise CliError(f"{args.word!r} is out of vocabulary; pass --model to infer it")
    for word, similarity in nearest_neighbors(table, query, args.k):
        print(f"{word}\t{similarity:.6f}")
    return 0


def cmd_train_tagger(args) -> int:
    resolved = _resolve_config(args, TAGGER_DEFAULTS)
    table = _read_table(args.embeddings)
    train = _read_corpus(args.train)
    dev = _read_corpus(args.dev) if args.dev else []
    if resolved["token_limit"] is not None:
        train = subsample(train, int(resolved["token_limit"]), resolved["seed"])
    mimick = None
    if resolved["variant"] in ("mimick", "both"):
        if not args.mimick:
            raise CliError(f"variant {resolved['variant']!r} requires --mimick MODEL")
        mimick = MimickModel.load(args.mimick)
    rep = WordRepSpec(resolved["variant"], table, mimick)
    cfg = TaggerTrainConfig(
        loss_mode=resolved["loss"],
        epochs=resolved["epochs"],
        dropout=resolved["dropout"],
        lr=resolved["lr"],
        momentum=resolved["momentum"],
        seed=resolved["seed"],
        hidden=resolved["hidden"],
        char_dim=resolved["char_dim"],
        char_hidden=resolved["char_hidden"],
        pos_only=bool(resolved["pos_only"]),
    )
    model, trace = train_tagger(CorpusSplit(train, dev, []), rep, cfg)
    model.save(args.out, extra_meta={"config": resolved})
    rows = ["epoch\ttrain_loss\tdev_pos_accuracy\tdev_micro_f1\n"]
    rows += [
        f"{e.epoch}\t{e.train_loss:.17g}\t{e.dev_pos_accuracy:.17g}\t{e.dev_micro_f1:.17g}\n"
        for e in trace
    ]
    atomic_write_text(args.trace or args.out + ".trace.tsv", "".join(rows))
    return 0


def cmd_tag(args) -> int:
    model = TaggerModel.load(args.model)
    corpus = _read_corpus(args.input)
    atomic_write_text(args.out, serialize_conllu(tag_corpus(model, corpus)))
    return 0


def cmd_eval(args) -> int:
    gold = _read_corpus(args.gold)
    predicted = _read_corpus(args.pred)
    vocabulary = None
    if args.train:
        vocabulary = {t.form for s in _read_corpus(args.train) for t in s.tokens}
    pair = TaggedCorpusPair(gold, predicted, vocabulary)
    comparison = None
    if args.compare:
        other = TaggedCorpusPair(gold, _read_corpus(args.compare), vocabulary)
        comparison = mcnemar(pos_correctness(pair), pos_correctness(other))
    report = render_report(pair, comparison)
    if args.out:
        atomic_write_text(args.out, report)
    else:
        sys.stdout.write(report)
    return 0


# ----------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spellvec",
        description="Spelling-based embedding inference and morphosyntactic tagging.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-mimick", help="train a spelling-to-vector model")
    p.add_argument("embeddings", help="embedding table in text format")
    p.add_argument("out", help="output model archive")
    p.add_argument("--config", help="JSON file of setting overrides")
    p.add_argument("--trace", help="per-epoch loss file (default: OUT.trace.tsv)")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--char-dim", type=int, dest="char_dim")
    p.add_argument("--hidden", type=int)
    p.add_argument("--dev-fraction", type=float, dest="dev_fraction")
    p.set_defaults(run=cmd_train_mimick)

    p = sub.add_parser("infer", help="infer vectors for a word list")
    p.add_argument("model", help="mimick model archive")
    p.add_argument("embeddings", help="embedding table the model was trained on")
    p.add_argument("words", help="file with one word per line")
    p.add_argument("out", help="output embedding text file")
    p.set_defaults(run=cmd_infer)

    p = sub.add_parser("nn", help="nearest in-vocabulary words by cosine")
    p.add_argument("embeddings")
    p.add_argument("word")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--model", help="mimick archive used when WORD is out of vocabulary")
    p.set_defaults(run=cmd_nn)

    p = sub.add_parser("train-tagger", help="train the joint POS/attribute tagger")
    p.add_argument("--train", required=True, help="training corpus (CoNLL-U)")
    p.add_argument("--dev", help="development corpus for per-epoch metrics")
    p.add_argument("--embeddings", required=True, help="embedding table in text format")
    p.add_argument("--out", required=True, help="output model archive")
    p.add_argument("--mimick", help="mimick archive for the mimick/both variants")
    p.add_argument("--config", help="JSON file of setting overrides")
    p.add_argument("--trace", help="per-epoch metric file (default: OUT.trace.tsv)")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--loss", choices=("sum", "weighted"))
    p.add_argument("--token-limit", type=int, dest="token_limit")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--hidden", type=int)
    p.add_argument("--char-dim", type=int, dest="char_dim")
    p.add_argument("--char-hidden", type=int, dest="char_hidden")
    p.add_argument("--pos-only", action="store_true", dest="pos_only")
    p.set_defaults(run=cmd_train_tagger)

    p = sub.add_parser("tag", help="tag a corpus with a trained model")
    p.add_argument("model")
    p.add_argument("input", help="CoNLL-U file to tag")
    p.add_argument("out", help="tagged CoNLL-U output")
    p.set_defaults(run=cmd_tag)

    p = sub.add_parser("eval", help="score predictions against gold annotation")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--train", help="training corpus for OOV-restricted accuracy")
    p.add_argument("--compare", help="second prediction file for a McNemar test")
    p.add_argument("--out", help="report file (default: stdout)")
    p.set_defaults(run=cmd_eval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    invocation = {
        key: value
        for key, value in sorted(vars(args).items())
        if key != "run" and value is not None
    }
    print(
        "invocation: " + " ".join(f"{k}={v}" for k, v in invocation.items()),
        file=sys.stderr,
    )
    try:
        return args.run(args)
    except (
        CliError,
        ArchiveError,
        ConlluParseError,
        EmbeddingParseError,
        DimensionError,
        OovLookupError,
        ValueError,
        OSError,
    ) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def entry() -> None:
    raise SystemExit(main())
