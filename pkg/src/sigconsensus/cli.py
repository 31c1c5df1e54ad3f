"""Command-line interface.

Exit status: 0 success (or GENUINE for ``verify``), 3 FORGE decision,
2 insufficient data (including an unknown writer), 1 any other error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .consensus import (
    DEFAULT_ALPHA,
    DEFAULT_E_CONSENSUS,
    DEFAULT_E_THRESHOLD,
    STRATEGIES,
    EnrollConfig,
    classify,
    enroll,
    score_probe,
)
from .core import Aggregation, InsufficientSamples, Label, SigConsensusError, SplitSpec, ThresholdModel
from .dataset_io import (
    Dataset,
    class_feature_stats,
    convert_feature_exports,
    first_writer,
    generate_synthetic,
    load_dataset,
    load_manifest,
    manifest_path_for,
    save_dataset,
)
from .evaluation import compare_strategies, sweep_alpha
from .reporting import Table, format_cell, per_writer_table, results_table, sweep_table

EXIT_OK, EXIT_ERROR, EXIT_INSUFFICIENT, EXIT_FORGE = 0, 1, 2, 3

log = logging.getLogger("sigconsensus")


def _precision(text: str):
    if text == "full":
        return "full"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("precision must be an integer or 'full'") from None
    if value < 0:
        raise argparse.ArgumentTypeError("precision must be >= 0")
    return value


def _split(text: str) -> SplitSpec:
    try:
        return SplitSpec.parse(text)
    except SigConsensusError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _strategy_list(text: str) -> list[str]:
    names = [s.strip().lower() for s in text.split(",") if s.strip()]
    bad = [n for n in names if n not in STRATEGIES]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown strategies {bad}; choose from {','.join(STRATEGIES)}")
    return names


def _add_config_flags(p: argparse.ArgumentParser, split_default: str = "14,5,5,20"):
    p.add_argument("--split", type=_split, default=_split(split_default),
                   help="gallery-a,gallery-b,genuine-probes[,forged-probes] (default %(default)s)")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--e-consensus", type=float, default=DEFAULT_E_CONSENSUS)
    p.add_argument("--e-threshold", type=float, default=DEFAULT_E_THRESHOLD)
    p.add_argument("--aggregation", choices=[a.value for a in Aggregation], default="mean")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", type=_precision, default=None,
                   help="decimals for numeric output, or 'full' for round-trip precision")


def _add_protocol_flags(p: argparse.ArgumentParser):
    p.add_argument("--dataset", required=True, help="manifest file or directory containing manifest.json")
    _add_config_flags(p)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--workers", type=int, default=1, help="writers evaluated in parallel")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--per-writer", help="also write a per-writer breakdown table to this path")
    p.add_argument("--macro", action="store_true", help="add macro-averaged rate columns")


def _config(args) -> EnrollConfig:
    return EnrollConfig(split=args.split, alpha=args.alpha, e_consensus=args.e_consensus,
                        e_threshold=args.e_threshold, aggregation=args.aggregation, seed=args.seed)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(args) -> Dataset:
    return load_dataset(manifest_path_for(args.dataset))


# ------------------------------------------------------------------ commands

def cmd_enroll(args) -> int:
    dataset = _load(args)
    samples = [s for s in dataset.writer(args.writer) if s.label is Label.GENUINE]
    if not samples and args.writer not in dataset.writer_ids:
        raise InsufficientSamples(args.writer, args.split.n_genuine_required, 0,
                                  what="genuine (writer not found in dataset)")
    config = _config(args)
    model, probes = enroll(samples, config, strategy=args.strategy)
    Path(args.output).write_text(json.dumps(model.to_dict()) + "\n")
    size = model.consensus.size if model.consensus is not None else 0
    print(f"writer={args.writer} strategy={model.strategy} "
          f"tau_c={format_cell(model.tau_c, 'score', args.precision)} consensus_size={size} "
          f"gallery_refs={model.gallery_refs.shape[0]} held_out={len(probes)}")
    return EXIT_OK


def _read_probe(args) -> np.ndarray:
    if args.probe is not None:
        text = args.probe
    else:
        text = Path(args.probe_file).read_text()
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        return np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError as exc:
        raise SigConsensusError(f"probe is not a list of numbers: {exc}") from None


def cmd_verify(args) -> int:
    model = ThresholdModel.from_dict(json.loads(Path(args.model).read_text()))
    probe = _read_probe(args)
    score = score_probe(probe, model)
    decision = classify(score, model.tau_c)
    print(f"score={format_cell(score, 'score', args.precision)} "
          f"tau_c={format_cell(model.tau_c, 'score', args.precision)} "
          f"decision={'GENUINE' if decision else 'FORGE'}")
    return EXIT_OK if decision else EXIT_FORGE


def _run_compare(args, strategies) -> int:
    dataset = _load(args)
    results = compare_strategies(dataset, args.split, _config(args), strategies,
                                 trials=args.trials, workers=args.workers)
    table = results_table(dataset.name, dataset.feature_model, results, macro=args.macro)
    _emit(table.to_text(args.precision), args.out)
    if args.per_writer:
        Path(args.per_writer).write_text(
            per_writer_table(dataset.name, dataset.feature_model, results).to_text(args.precision))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    return _run_compare(args, [args.strategy])


def cmd_compare(args) -> int:
    return _run_compare(args, args.strategies)


def cmd_sweep(args) -> int:
    dataset = _load(args)
    rows = sweep_alpha(dataset, args.split, _config(args), args.alphas, strategy=args.strategy,
                       trials=args.trials, workers=args.workers)
    table = sweep_table(dataset.name, dataset.feature_model, args.strategy, rows, macro=args.macro)
    _emit(table.to_text(args.precision), args.out)
    if args.per_writer:
        results = {f"{args.strategy}@{r.alpha!r}": r.result for r in rows}
        Path(args.per_writer).write_text(
            per_writer_table(dataset.name, dataset.feature_model, results).to_text(args.precision))
    return EXIT_OK


def cmd_synth(args) -> int:
    dataset = generate_synthetic(args.writers, args.genuine, args.forged, args.dim,
                                 args.spread, args.offset, args.seed, name=args.name)
    path = save_dataset(dataset, args.out, fmt=args.format)
    print(f"wrote {len(dataset)} samples from {len(dataset.writer_ids)} writers to {path}")
    return EXIT_OK


def cmd_stats(args) -> int:
    manifest_path = manifest_path_for(args.dataset)
    dataset = load_dataset(manifest_path)
    writer = args.writer or first_writer(load_manifest(manifest_path))
    samples = dataset.writer(writer)
    if not samples:
        raise InsufficientSamples(writer, 1, 0, what="(writer not found in dataset)")
    if args.first_only:
        firsts = {}
        for s in samples:
            firsts.setdefault(s.label, s)
        samples = list(firsts.values())
    stats = class_feature_stats(samples)
    g, f = Label.GENUINE, Label.FORGED
    table = Table(["Dataset", "Feature", "Writer", "Measure", "Genuine", "Forge", "Difference"], [
        [dataset.name, dataset.feature_model, writer, "Mean", stats.mean[g], stats.mean[f], stats.mean_difference],
        [dataset.name, dataset.feature_model, writer, "Standard Deviation", stats.std[g], stats.std[f],
         stats.std_difference],
    ])
    _emit(table.to_text(args.precision), args.out)
    return EXIT_OK


def cmd_convert(args) -> int:
    dataset = convert_feature_exports(args.source, args.name, args.feature_model)
    path = save_dataset(dataset, args.out, fmt=args.format)
    print(f"converted {len(dataset)} samples from {len(dataset.writer_ids)} writers to {path}")
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sigconsensus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enroll", help="fit one writer's threshold model and save it")
    p.add_argument("--dataset", required=True)
    p.add_argument("--writer", required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="consensus")
    p.add_argument("--output", "-o", required=True, help="model file to write")
    _add_config_flags(p, split_default="14,5,5")
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("verify", help="accept or reject one probe against a saved model")
    p.add_argument("--model", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--probe", help="feature values separated by commas or spaces")
    g.add_argument("--probe-file", help="file holding one feature row")
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; verification is not random")
    p.add_argument("--precision", type=_precision, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("evaluate", help="run the verification protocol for one strategy")
    _add_protocol_flags(p)
    p.add_argument("--strategy", choices=STRATEGIES, default="consensus")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="evaluate several threshold strategies on identical draws")
    _add_protocol_flags(p)
    p.add_argument("--strategies", type=_strategy_list, default=list(STRATEGIES),
                   help="comma-separated subset of " + ",".join(STRATEGIES))
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="evaluate over a list of alpha values")
    _add_protocol_flags(p)
    p.add_argument("--alphas", type=_float_list, required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="consensus")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="generate a synthetic feature dataset")
    p.add_argument("--writers", type=int, default=20)
    p.add_argument("--genuine", type=int, default=24)
    p.add_argument("--forged", type=int, default=20)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--spread", type=float, default=0.3)
    p.add_argument("--offset", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default="synthetic")
    p.add_argument("--format", choices=("text", "binary"), default="text")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stats", help="per-class feature mean/std for one writer")
    p.add_argument("--dataset", required=True)
    p.add_argument("--writer", help="default: first writer in the manifest")
    p.add_argument("--first-only", action="store_true",
                   help="use only the first genuine and first forged sample")
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; stats are not random")
    p.add_argument("--precision", type=_precision, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("convert", help="import per-writer feature exports (real_*/forg_* files)")
    p.add_argument("--source", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--feature-model", required=True)
    p.add_argument("--format", choices=("text", "binary"), default="text")
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; conversion is not random")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except InsufficientSamples as exc:
        print(f"error: insufficient samples: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (SigConsensusError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
