"""Command-line surface: compress, decompress, verify, train, bench, gen.

Reports go to stdout, diagnostics to stderr. Exit codes: 0 success,
1 usage error, 2 I/O or training-data error, 3 corrupt input,
4 backend failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .backend import BackendId
from .bench import rows_to_csv, run_bench
from .container import (DEFAULT_BLOCK_LINES, read_archive, verify_archive,
                        write_archive)
from .corpus import STYLES, CorpusSpec, write_corpus
from .errors import (BackendError, CorruptArchive, CorruptBlock, CorruptModel,
                     CorruptRecord, InsufficientTraining, InvalidVariant,
                     NotAnArchive, UnexpectedEof)
from .nlca import (DEFAULT_K, GaConfig, load_model, save_model,
                   train_model_report)
from .tokenizer import split_lines, tokenize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_CORRUPT = 3
EXIT_BACKEND = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _parse_variant(spec: str, have_model: bool) -> int | None:
    if spec == "auto":
        if not have_model:
            raise _UsageError("--variant auto requires --model")
        return None
    try:
        vid = int(spec)
    except ValueError:
        raise _UsageError(f"bad variant {spec!r}") from None
    if not 0 <= vid <= 7:
        raise _UsageError(f"variant must be 0..7 or auto, got {spec}")
    return vid


def _parse_backend(spec: str) -> BackendId:
    try:
        return BackendId.parse(spec)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


def cmd_compress(args) -> int:
    model = load_model(args.model) if args.model else None
    variant_spec = args.variant if args.variant is not None else (
        "auto" if model is not None else "7")
    variant_id = _parse_variant(variant_spec, model is not None)
    backend = _parse_backend(args.backend)
    if args.block_lines < 1:
        raise _UsageError("--block-lines must be positive")
    with open(args.input, "rb") as src, open(args.output, "wb") as dst:
        summary = write_archive(src, dst, variant_id=variant_id, model=model,
                                backend=backend, block_lines=args.block_lines,
                                embed_model=not args.no_embed)
    ratio = summary.out_bytes / summary.in_bytes if summary.in_bytes else float("inf")
    _log(f"compressed {args.input}: blocks={summary.blocks} "
         f"in={summary.in_bytes} out={summary.out_bytes} ratio={ratio:.4f}")
    return EXIT_OK


def cmd_decompress(args) -> int:
    with open(args.input, "rb") as src, open(args.output, "wb") as dst:
        summary = read_archive(src, dst)
    _log(f"decompressed {args.input}: blocks={summary.blocks} "
         f"in={summary.in_bytes} out={summary.out_bytes}")
    return EXIT_OK


def cmd_verify(args) -> int:
    with open(args.input, "rb") as src:
        report = verify_archive(src)
    if report.ok:
        print(f"ok blocks={report.blocks}")
        return EXIT_OK
    print(f"corrupt blocks={report.blocks} error={report.first_error}")
    return EXIT_CORRUPT


def _corpus_blocks(directory: str, block_lines: int):
    names = sorted(os.listdir(directory))
    blocks = []
    for name in names:
        path = os.path.join(directory, name)
        if not os.path.isfile(path):
            continue
        with open(path, "rb") as f:
            block = []
            for line, term in split_lines(f):
                block.append(tokenize(line, term))
                if len(block) == block_lines:
                    blocks.append(block)
                    block = []
            if block:
                blocks.append(block)
    return blocks


def cmd_train(args) -> int:
    blocks = _corpus_blocks(args.corpus, DEFAULT_BLOCK_LINES)
    if not blocks:
        raise InsufficientTraining(f"no training lines under {args.corpus!r}")
    ga = GaConfig(population_size=args.pop, generations=args.gens,
                  seed=args.seed)
    backend = _parse_backend(args.backend)
    model, _dct, history, reports = train_model_report(
        blocks, ga, args.k, backend)
    save_model(model, args.output)
    out = sys.stdout
    out.write("generation,best_fitness\n")
    for gen, fit in enumerate(history):
        out.write(f"{gen},{fit!r}\n")
    out.write("\nbasin,attractor,variant,blocks,r_q\n")
    for r in reports:
        out.write(f"{r.basin_index},{r.attractor_id},{r.variant_id},"
                  f"{r.blocks},{r.quality!r}\n")
    _log(f"trained model: blocks={len(blocks)} basins={len(reports)} "
         f"default_variant={model.default_variant_id} -> {args.output}")
    return EXIT_OK


def cmd_bench(args) -> int:
    for path in args.corpus:
        if not os.path.isfile(path):
            raise FileNotFoundError(f"corpus file not found: {path}")
    backends = [_parse_backend(s) for s in args.backends.split(",") if s]
    if not backends:
        raise _UsageError("--backends must name at least one backend")
    model = load_model(args.model) if args.model else None
    rows = run_bench(args.corpus, backends, model)
    csv_text = rows_to_csv(rows)
    if args.report:
        with open(args.report, "w") as f:
            f.write(csv_text)
        _log(f"bench report: {len(rows)} rows -> {args.report}")
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


def cmd_gen(args) -> int:
    spec = CorpusSpec(style=args.style, lines=args.lines, seed=args.seed)
    with open(args.output, "wb") as f:
        total = write_corpus(spec, f)
    _log(f"generated {args.style} corpus: lines={args.lines} "
         f"bytes={total} -> {args.output}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="flca", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress a log file into an archive")
    p.add_argument("--model", help="trained classifier model (.flcm)")
    p.add_argument("--variant", help="0..7 or auto (default: auto with "
                                     "--model, else 7)")
    p.add_argument("--backend", default="lz",
                   help="store | lz | ext:NAME (default lz)")
    p.add_argument("--block-lines", type=int, default=DEFAULT_BLOCK_LINES)
    p.add_argument("--no-embed", action="store_true",
                   help="do not embed the model in the archive")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="restore the original file")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("verify", help="check archive integrity")
    p.add_argument("input")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("train", help="train a classifier model on a corpus")
    p.add_argument("--corpus", required=True, help="directory of log files")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--pop", type=int, default=50)
    p.add_argument("--gens", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", default="lz")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="compare pipelines over corpora")
    p.add_argument("--corpus", nargs="+", required=True)
    p.add_argument("--backends", default="store,lz",
                   help="comma-separated backend list (default store,lz)")
    p.add_argument("--model", help="model enabling the auto pipelines")
    p.add_argument("--report", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("--style", choices=STYLES, required=True)
    p.add_argument("--lines", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        _log(f"usage error: {exc}")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return exc.code or EXIT_OK
    try:
        return args.func(args)
    except _UsageError as exc:
        _log(f"usage error: {exc}")
        return EXIT_USAGE
    except InvalidVariant as exc:
        _log(f"usage error: {exc}")
        return EXIT_USAGE
    except (NotAnArchive, CorruptBlock, UnexpectedEof, CorruptArchive,
            CorruptModel, CorruptRecord) as exc:
        _log(f"corrupt input: {exc}")
        return EXIT_CORRUPT
    except BackendError as exc:
        _log(f"backend error: {exc}")
        return EXIT_BACKEND
    except InsufficientTraining as exc:
        _log(f"training error: {exc}")
        return EXIT_IO
    except OSError as exc:
        _log(f"i/o error: {exc}")
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
