"""Command line entry point: one subcommand per stage plus ``pipeline``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .embed import DEFAULT_ITERATIONS, ec_batch
from .errors import MissingInputError, StancepolError
from .ingest import ParseStats, load_profiles, read_profiles, read_records, write_profiles
from .pipeline import (
    DEFAULT_SIZES,
    PipelineConfig,
    parse_float_list,
    parse_int_list,
    run_pipeline,
    write_ec_rows,
    write_rwc_rows,
    write_summary,
)
from .rwc import rwc_batch
from .simgraph import SampleSpec, build_graph, export_edges, sample_users
from .stance import (
    ClassifierConfig,
    LabelStore,
    PropagationConfig,
    classify_users,
    load_seed_labels,
    propagate_until_fixed,
    train_classifier,
)
from .synth import SynthConfig, generate
from .valence import (
    ElementKind,
    element_report,
    read_media_metadata,
    write_bin_aggregates,
    write_report,
    write_top_elements,
)

logger = logging.getLogger("stancepol")

_SIZES_DEFAULT = ",".join(str(s) for s in DEFAULT_SIZES)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--threads", type=int, default=1, help="cap on worker processes (default 1)")


def _labelled_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profiles", required=True, help="profile table from `ingest`")
    p.add_argument("--labels", required=True, help="label store CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stancepol", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse tweet JSONL into a profile table")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("propagate", help="seed labels + threshold label propagation")
    p.add_argument("--profiles", required=True)
    p.add_argument("--seeds", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--supp-min", type=int, default=15)
    p.add_argument("--opp-min", type=int, default=7)
    p.add_argument("--max-iterations", type=int, default=10)
    p.add_argument("--count-mode", choices=["distinct", "raw"], default="distinct")
    _common(p)

    p = sub.add_parser("classify", help="train on labelled users and label confident others")
    _labelled_inputs(p)
    p.add_argument("--out", required=True)
    p.add_argument("--min-accounts", type=int, default=20)
    p.add_argument("--confidence", type=float, default=0.9)
    p.add_argument("--holdout", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    _common(p)

    p = sub.add_parser("graph", help="export one sampled similarity graph as an edge list")
    _labelled_inputs(p)
    p.add_argument("--mode", choices=["R", "H"], default="R")
    p.add_argument("--size", type=int, required=True, help="users per class")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cutoff", type=float, default=0.0, help="drop edges with weight <= cutoff")
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("rwc", help="random walk controversy over repeated samples")
    _labelled_inputs(p)
    p.add_argument("--mode", choices=["R", "H"], default="R")
    p.add_argument("--sizes", default=_SIZES_DEFAULT)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--n-sample", type=int, default=None,
                   help="random start nodes per class (default: all non-top nodes)")
    p.add_argument("--variant", choices=["modified", "original"], default="modified")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    _common(p)

    p = sub.add_parser("ec", help="embedding controversy over repeated samples")
    _labelled_inputs(p)
    p.add_argument("--mode", choices=["R", "H"], default="R")
    p.add_argument("--reducer", choices=["fd", "import"], default="fd")
    p.add_argument("--layout-file", default=None)
    p.add_argument("--sizes", default=_SIZES_DEFAULT)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    _common(p)

    p = sub.add_parser("valence", help="valence-binned hashtags, accounts and domains")
    p.add_argument("inputs", nargs="+", help="tweet JSONL files")
    p.add_argument("--labels", required=True)
    p.add_argument("--min-frequency", type=int, default=100)
    p.add_argument("--per-user", action="store_true", help="count users instead of tweets")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--media", default=None, help="domain,bias,credibility CSV to join")
    p.add_argument("--out-dir", required=True)
    _common(p)

    p = sub.add_parser("synth", help="generate a synthetic two-community corpus")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--hashtag-eps", type=float, default=None)
    p.add_argument("--users", type=int, default=500, help="ordinary users per class")
    p.add_argument("--influencers", type=int, default=50)
    p.add_argument("--tweets", type=int, default=30, help="tweets per account")
    p.add_argument("--vocab", type=int, default=40)
    p.add_argument("--shared-vocab", type=int, default=40)
    p.add_argument("--zipf", type=float, default=0.0)
    p.add_argument("--concentration", type=float, default=None,
                   help="per-user mixing ~ Beta(c*eps, c*(1-eps))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="corpus JSONL")
    p.add_argument("--truth-out", default=None, help="ground-truth label CSV")
    p.add_argument("--seeds-out", default=None, help="seed label CSV")
    p.add_argument("--n-supp-seeds", type=int, default=29)
    p.add_argument("--n-opp-seeds", type=int, default=12)
    _common(p)

    p = sub.add_parser("pipeline", help="run every stage from a config file and/or flags")
    p.add_argument("--config", default=None, help="flat JSON key/value config")
    p.add_argument("--input", nargs="+", default=None)
    p.add_argument("--seeds", default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--supp-min", type=int, default=None)
    p.add_argument("--opp-min", type=int, default=None)
    p.add_argument("--min-accounts", type=int, default=None)
    p.add_argument("--confidence", type=float, default=None)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--sizes", default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--thresholds", default=None)
    p.add_argument("--modes", default=None, help="comma list of R,H")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--min-frequency", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--verbose", "-v", action="count", default=0)
    p.add_argument("--threads", type=int, default=None)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s | %(levelname)s | %(name)s | %(message)s")


def _require(path: str) -> str:
    if not Path(path).exists():
        raise MissingInputError(path)
    return path


def cmd_ingest(args) -> None:
    stats = ParseStats()
    profiles = load_profiles(args.inputs, workers=args.threads, stats=stats)
    write_profiles(profiles, args.out)
    print(f"{stats.n_parsed} records, {stats.n_errors} skipped, {len(profiles)} users -> {args.out}")


def cmd_propagate(args) -> None:
    profiles = read_profiles(args.profiles)
    seeds = load_seed_labels(args.seeds)
    cfg = PropagationConfig(args.supp_min, args.opp_min, args.max_iterations, args.count_mode)
    labels, sweeps = propagate_until_fixed(profiles, seeds, cfg)
    labels.to_csv(args.out)
    counts = labels.counts()
    print(f"{sweeps} sweeps; SUPP={counts['SUPP']} OPP={counts['OPP']} -> {args.out}")


def cmd_classify(args) -> None:
    profiles = read_profiles(args.profiles)
    labels = LabelStore.from_csv(args.labels)
    cfg = ClassifierConfig(
        min_distinct_retweeted_accounts=args.min_accounts,
        confidence_threshold=args.confidence,
        holdout_fraction=args.holdout,
        seed=args.seed,
    )
    model = train_classifier(profiles, labels, cfg)
    out = classify_users(model, profiles, labels, cfg)
    out.to_csv(args.out)
    counts = out.counts()
    acc = "n/a" if model.holdout_accuracy is None else f"{model.holdout_accuracy:.4f}"
    print(f"holdout accuracy {acc}; SUPP={counts['SUPP']} OPP={counts['OPP']} -> {args.out}")


def cmd_graph(args) -> None:
    profiles = read_profiles(args.profiles)
    labels = LabelStore.from_csv(args.labels)
    sample = sample_users(labels, SampleSpec(args.size, 1, args.seed), set(profiles))[0]
    graph = build_graph(profiles, sample, args.mode)
    n = export_edges(graph, args.out, args.cutoff)
    print(f"{len(graph)} nodes, {n} edges -> {args.out}")


def cmd_rwc(args) -> None:
    profiles = read_profiles(args.profiles)
    labels = LabelStore.from_csv(args.labels)
    reports = rwc_batch(
        profiles, labels, args.mode, parse_int_list(args.sizes), args.repeats, args.seed,
        args.top_k, args.n_sample, args.variant, args.threshold,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tagged = [("given", r) for r in reports]
    write_rwc_rows(tagged, out / "rwc_samples.csv")
    write_summary(tagged, out / "rwc_summary.csv")
    for r in reports:
        print(f"rwc {args.variant} {args.mode} size={r.n_per_class}: mean={r.mean:.4f} std={r.std:.4f}")


def cmd_ec(args) -> None:
    profiles = read_profiles(args.profiles)
    labels = LabelStore.from_csv(args.labels)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sink: list = []
    reports = ec_batch(
        profiles, labels, args.mode, parse_int_list(args.sizes), args.repeats, args.reducer,
        args.seed, args.iterations, args.layout_file, sink,
    )
    tagged = [("given", r) for r in reports]
    write_ec_rows(tagged, out / "ec_samples.csv")
    write_summary(tagged, out / "ec_summary.csv")
    for size, rep, layout in sink:
        layout.to_csv(out / f"layout_{args.mode}_{size}_{rep}.csv", with_labels=True)
    for r in reports:
        print(f"ec {args.reducer} {args.mode} size={r.n_per_class}: mean={r.mean:.4f} std={r.std:.4f}")


def cmd_valence(args) -> None:
    for path in args.inputs:
        _require(path)
    labels = LabelStore.from_csv(args.labels)
    media = read_media_metadata(args.media) if args.media else None
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for kind in ElementKind:
        rep = element_report(read_records(args.inputs), labels, kind, args.min_frequency, args.per_user)
        write_report(rep, out / f"valence_{kind.value}.csv", media if kind is ElementKind.DOMAIN else None)
        reports.append(rep)
        print(f"{kind.value}: {len(rep.entries)} elements above floor")
    write_bin_aggregates(reports, out / "valence_bins.csv")
    write_top_elements(reports, out / "valence_top.csv", args.top)


def cmd_synth(args) -> None:
    cfg = SynthConfig(
        n_users_per_class=args.users,
        n_influencers_per_class=args.influencers,
        tweets_per_user=args.tweets,
        eps=args.eps,
        hashtag_eps=args.hashtag_eps,
        vocab_per_class=args.vocab,
        shared_vocab=args.shared_vocab,
        zipf=args.zipf,
        mixing_concentration=args.concentration,
        seed=args.seed,
    )
    corpus = generate(cfg)
    corpus.write_jsonl(args.out)
    if args.truth_out:
        corpus.write_labels(args.truth_out)
    if args.seeds_out:
        corpus.write_seeds(args.seeds_out, args.n_supp_seeds, args.n_opp_seeds)
    print(f"{len(corpus.records)} records, {len(corpus.labels)} accounts -> {args.out}")


_PIPELINE_FLAGS = {
    "input": None, "seeds": None, "out_dir": None, "supp_min": None, "opp_min": None,
    "min_accounts": None, "confidence": None, "top_k": None, "repeats": None,
    "iterations": None, "min_frequency": None, "seed": None, "threads": None,
    "sizes": parse_int_list, "thresholds": parse_float_list,
    "modes": lambda s: [m.strip() for m in s.split(",") if m.strip()],
}


def pipeline_config(args) -> PipelineConfig:
    raw: dict = {}
    if args.config:
        _require(args.config)
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    cfg = PipelineConfig.from_dict(raw)
    for name, convert in _PIPELINE_FLAGS.items():
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, convert(value) if convert else value)
    return cfg


def cmd_pipeline(args) -> None:
    cfg = pipeline_config(args)
    manifest = run_pipeline(cfg)
    counts = manifest["labels"]["final_counts"]
    print(f"labels SUPP={counts['SUPP']} OPP={counts['OPP']}; artifacts in {cfg.out_dir}")


COMMANDS = {
    "ingest": cmd_ingest,
    "propagate": cmd_propagate,
    "classify": cmd_classify,
    "graph": cmd_graph,
    "rwc": cmd_rwc,
    "ec": cmd_ec,
    "valence": cmd_valence,
    "synth": cmd_synth,
    "pipeline": cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        COMMANDS[args.command](args)
    except StancepolError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
