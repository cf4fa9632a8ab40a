"""
Command line interface.

.. code-block:: text

    purekge ingest drkg.tsv splits/
    purekge train --config run.conf
    purekge eval --config run.conf --setting both
    purekge rank --config run.conf --k 100 --output transe_l2.tsv
    purekge consensus transe_l1.tsv transe_l2.tsv --trials trials.txt

All data goes to files or standard output, all diagnostics to standard
error. The exit status is 0 on success, 1 on errors and 2 on usage errors.
"""

import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Generator, List, Optional, Sequence, TextIO, Tuple

from purekge import checkpoint, graph
from purekge.compatibility import package_version
from purekge.config import RunConfig, load_config
from purekge.const import (
    DEFAULT_SEED,
    DEFAULT_SPLIT_RATIOS,
    ENTITY_TYPES_FILE,
    ERRORS_STRICT,
    ERRORS_WARN,
    FIELD_SEPARATOR,
    TEST_FILE,
    TRAIN_FILE,
    VALID_FILE,
)
from purekge.evaluator import Setting, SidePolicy, evaluate
from purekge.exc import (
    ConfigError,
    DivergenceError,
    EmptyInput,
    KgeError,
    VocabMismatch,
)
from purekge.model import ModelParams
from purekge.repurpose import (
    consensus,
    load_candidates,
    read_ranked_names,
    score_candidates,
    top_k,
    write_consensus,
    write_ranking,
)
from purekge.trainer import train
from purekge.util import read_name_list

LOG = logging.getLogger(__name__)


def parse_ratios(value: str) -> Tuple[float, float, float]:
    """
    Parse ``"0.9,0.05,0.05"`` style split ratios

    >>> parse_ratios("0.8, 0.1, 0.1")
    (0.8, 0.1, 0.1)
    """
    try:
        parts = tuple(float(item) for item in value.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid ratios: {value!r}") from exc
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected three comma separated ratios, got {value!r}"
        )
    return parts  # type: ignore


@contextmanager
def open_output(path: Optional[str]) -> Generator[TextIO, None, None]:
    """
    Open *path* for writing or fall back to standard output
    """
    if not path:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf8", newline="\n") as stream:
        yield stream


def _load_params(config: RunConfig, explicit: Optional[str]) -> ModelParams:
    if explicit:
        return checkpoint.load_checkpoint(explicit)
    path = checkpoint.checkpoint_path(config.checkpoint_dir, config.train.model)
    if not path.exists():
        raise ConfigError(f"No checkpoint at {path}. Run 'train' first.")
    return checkpoint.load_checkpoint(
        path, config.train.model, config.train.dim
    )


def _check_vocab(params: ModelParams, vocab: graph.Vocabulary) -> None:
    if (params.n_entities, params.n_relations) != (
        vocab.n_entities,
        vocab.n_relations,
    ):
        raise VocabMismatch(
            f"Checkpoint has {params.n_entities} entities and "
            f"{params.n_relations} relations, the vocabulary has "
            f"{vocab.n_entities} and {vocab.n_relations}"
        )


def cmd_ingest(args: argparse.Namespace) -> int:
    """
    Parse a triple file, split it and write the splits and dictionaries
    """
    source = Path(args.triples)
    with open(source, "rb") as infile:
        raw = graph.parse_triples(infile, str(source))
    vocab = graph.build_vocab(raw)
    encoded = graph.encode(raw, vocab)
    split = graph.split_triples(encoded, args.ratios, args.seed)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in (
        (TRAIN_FILE, split.train),
        (VALID_FILE, split.valid),
        (TEST_FILE, split.test),
    ):
        graph.write_triples(out_dir / name, graph.decode(part, vocab))
    graph.write_vocab(out_dir, vocab)
    types = graph.count_entity_types(vocab)
    with open(
        out_dir / ENTITY_TYPES_FILE, "w", encoding="utf8", newline="\n"
    ) as outfile:
        for tag, count in types.items():
            outfile.write(f"{tag}{FIELD_SEPARATOR}{count}\n")

    n_train, n_valid, n_test = split.sizes()
    print(f"entities={vocab.n_entities}")
    print(f"relations={vocab.n_relations}")
    print(f"triples={len(raw)}")
    print(f"unique={n_train + n_valid + n_test}")
    print(f"types={len(types)}")
    print(f"train={n_train}")
    print(f"valid={n_valid}")
    print(f"test={n_test}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    """
    Train the configured model and write checkpoints
    """
    config = load_config(args.config, {"seed": args.seed})
    (splits_dir,) = config.require("splits_dir")
    vocab = graph.read_vocab(splits_dir)
    triples = graph.read_triples(splits_dir / TRAIN_FILE, vocab)
    settings = config.train
    config.checkpoint_dir.mkdir(parents=True, exist_ok=True)
    target = checkpoint.checkpoint_path(config.checkpoint_dir, settings.model)

    init = None
    start_epoch = 1
    if args.resume and target.exists():
        init = checkpoint.load_checkpoint(target, settings.model, settings.dim)
        _check_vocab(init, vocab)
        done = int(checkpoint.read_metadata(target).get("epoch", "0"))
        start_epoch = done + 1
        LOG.info("Resuming %s after epoch %d", target, done)
    elif args.resume:
        LOG.warning("No checkpoint at %s, starting from scratch", target)

    def metadata(epoch: int, loss: float) -> Dict[str, object]:
        output: Dict[str, object] = dict(config.metadata())
        output["epoch"] = epoch
        output["loss"] = repr(loss)
        return output

    def on_epoch_end(epoch: int, params: ModelParams, loss: float) -> None:
        every = settings.checkpoint_every
        if every and epoch % every == 0:
            checkpoint.save_checkpoint(params, target, metadata(epoch, loss))

    try:
        params, report = train(
            triples,
            settings,
            n_entities=vocab.n_entities,
            n_relations=vocab.n_relations,
            init=init,
            start_epoch=start_epoch,
            on_epoch_end=on_epoch_end,
            progress=args.verbose,
        )
    except DivergenceError as exc:
        if exc.last_good is not None:
            checkpoint.save_checkpoint(
                exc.last_good,
                target,
                metadata(exc.epoch - 1, float("nan")),
            )
            LOG.error(
                "Saved the parameters of epoch %d to %s", exc.epoch - 1, target
            )
        elif target.exists():
            LOG.error("Keeping the last checkpoint at %s", target)
        raise

    last_epoch = start_epoch - 1 + report.epochs_run
    checkpoint.save_checkpoint(
        params, target, metadata(last_epoch, report.final_loss)
    )
    print(f"model={settings.model}")
    print(f"epochs={last_epoch}")
    print(f"final_loss={report.final_loss:.6f}")
    print(f"wall_time={report.wall_time:.2f}")
    print(f"checksum={report.checksum}")
    print(f"checkpoint={target}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    """
    Rank test triples and print MR, MRR and Hits@N
    """
    config = load_config(
        args.config, {"setting": args.setting, "side": args.side}
    )
    (splits_dir,) = config.require("splits_dir")
    vocab = graph.read_vocab(splits_dir)
    params = _load_params(config, args.checkpoint)
    _check_vocab(params, vocab)

    test_path = Path(args.test) if args.test else splits_dir / TEST_FILE
    test = graph.read_triples(test_path, vocab)
    if not test:
        raise EmptyInput(f"test set {test_path}")
    known = list(test)
    for name in (TRAIN_FILE, VALID_FILE, TEST_FILE):
        if (splits_dir / name).exists():
            known.extend(graph.read_triples(splits_dir / name, vocab))
    filter_index = graph.FilterIndex(known)

    if config.setting == "both":
        settings = [Setting.RAW, Setting.FILTERED]
    else:
        settings = [Setting(config.setting)]
    side_policy = SidePolicy.parse(config.side)
    blocks = []
    for setting in settings:
        report = evaluate(
            params,
            test,
            setting,
            side_policy,
            filter_index,
            progress=args.verbose,
        )
        blocks.append(report.as_text())
        if args.ranks_dir:
            ranks_dir = Path(args.ranks_dir)
            ranks_dir.mkdir(parents=True, exist_ok=True)
            with open(
                ranks_dir / f"ranks.{setting}.tsv",
                "w",
                encoding="utf8",
                newline="\n",
            ) as outfile:
                report.write_ranks(outfile)
    print(f"model={params.kind}")
    print("\n".join(blocks), end="")
    return 0


def cmd_rank(args: argparse.Namespace) -> int:
    """
    Score candidate drugs and write the top-K ranking
    """
    config = load_config(
        args.config,
        {"k": args.k, "reduction": args.reduction},
    )
    if args.lenient:
        config = config.reconfigure(lenient=True)
    splits_dir, drug_file, target_file, relation_file = config.require(
        "splits_dir", "drug_file", "target_file", "relation_file"
    )
    vocab = graph.read_vocab(splits_dir)
    params = _load_params(config, args.checkpoint)
    _check_vocab(params, vocab)
    candidates = load_candidates(
        drug_file,
        target_file,
        relation_file,
        vocab,
        errors=ERRORS_WARN if config.lenient else ERRORS_STRICT,
    )
    ranked = top_k(
        score_candidates(params, candidates, config.reduction), config.k
    )
    with open_output(args.output) as stream:
        write_ranking(stream, ranked, vocab)
    return 0


def _list_name(path: Path, taken: Sequence[str]) -> str:
    name = path.stem
    return str(path) if name in taken else name


def cmd_consensus(args: argparse.Namespace) -> int:
    """
    Intersect ranked drug lists of several models
    """
    lists: Dict[str, List[str]] = {}
    for item in args.lists:
        path = Path(item)
        lists[_list_name(path, list(lists))] = read_ranked_names(path)
    trials = None
    if args.trials:
        trials = read_name_list(args.trials)
        if not trials:
            raise EmptyInput(f"trial list {args.trials}")
    report = consensus(lists, trials)
    with open_output(args.output) as stream:
        write_consensus(stream, report, args.min_models)
    return 0


def build_parser() -> argparse.ArgumentParser:
    """
    Create the argument parser with all sub-commands
    """
    parser = argparse.ArgumentParser(
        prog="purekge",
        description="Knowledge graph embeddings for drug repurposing",
    )
    parser.add_argument(
        "--version", action="version", version=package_version("purekge")
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument(
        "-v", "--verbose", action="store_true", help="Log debug messages"
    )
    verbosity.add_argument(
        "-q", "--quiet", action="store_true", help="Only log warnings"
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    ingest = commands.add_parser("ingest", help="Split a triple file")
    ingest.add_argument("triples", help="TSV file with head/relation/tail")
    ingest.add_argument("out_dir", help="Directory for splits and dictionaries")
    ingest.add_argument(
        "--ratios",
        type=parse_ratios,
        default=DEFAULT_SPLIT_RATIOS,
        help="train,valid,test fractions (default: %(default)s)",
    )
    ingest.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ingest.set_defaults(func=cmd_ingest)

    train_cmd = commands.add_parser("train", help="Train a model")
    train_cmd.add_argument("--config", required=True)
    train_cmd.add_argument("--seed", type=int, help="Override the seed")
    train_cmd.add_argument(
        "--resume",
        action="store_true",
        help="Continue from the checkpoint of the configured model",
    )
    train_cmd.set_defaults(func=cmd_train)

    eval_cmd = commands.add_parser("eval", help="Evaluate link prediction")
    eval_cmd.add_argument("--config", required=True)
    eval_cmd.add_argument("--checkpoint", help="Checkpoint file to evaluate")
    eval_cmd.add_argument(
        "--test", help="Triples to rank (default: the test split)"
    )
    eval_cmd.add_argument("--setting", choices=["raw", "filtered", "both"])
    eval_cmd.add_argument("--side", choices=["head", "tail", "both"])
    eval_cmd.add_argument(
        "--ranks-dir", help="Write per-query ranks into this directory"
    )
    eval_cmd.set_defaults(func=cmd_eval)

    rank = commands.add_parser("rank", help="Rank candidate drugs")
    rank.add_argument("--config", required=True)
    rank.add_argument("--checkpoint", help="Checkpoint file to use")
    rank.add_argument("--k", type=int, help="Number of drugs to keep")
    rank.add_argument(
        "--lenient",
        action="store_true",
        help="Skip unknown names with a warning",
    )
    rank.add_argument("--reduction", choices=["max", "mean"])
    rank.add_argument("--output", help="Output file (default: stdout)")
    rank.set_defaults(func=cmd_rank)

    cons = commands.add_parser("consensus", help="Intersect ranked lists")
    cons.add_argument("lists", nargs="+", help="Ranked drug lists")
    cons.add_argument("--trials", help="Drugs known from clinical trials")
    cons.add_argument(
        "--min-models",
        type=int,
        help="Keep drugs listed by at least this many models "
        "(default: all of them)",
    )
    cons.add_argument("--output", help="Output file (default: stdout)")
    cons.set_defaults(func=cmd_consensus)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line interface and return the exit status
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return int(args.func(args))
    except (KgeError, OSError) as exc:
        LOG.debug("Command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1
