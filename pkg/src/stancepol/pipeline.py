"""End-to-end run: ingest, label, measure, characterise, and record a manifest."""

from __future__ import annotations

import csv
import json
import logging
import platform
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .embed import DEFAULT_ITERATIONS, ec_batch
from .errors import MissingInputError
from .ingest import ParseStats, load_profiles, write_profiles
from .rwc import MetricReport, RwcResult, rwc_batch
from .simgraph import FeatureMode
from .stance import (
    ClassifierConfig,
    LabelStore,
    PropagationConfig,
    classify_users,
    load_seed_labels,
    propagate_until_fixed,
    train_classifier,
)
from .valence import (
    ElementKind,
    build_report,
    read_media_metadata,
    tally_profiles,
    write_bin_aggregates,
    write_report,
    write_top_elements,
)

logger = logging.getLogger(__name__)

DEFAULT_SIZES = (500, 1000, 2610, 5000)


@dataclass
class PipelineConfig:
    input: list[str] = field(default_factory=list)
    seeds: str | None = None
    out_dir: str = "out"
    supp_min: int = 15
    opp_min: int = 7
    max_iterations: int = 10
    count_mode: str = "distinct"
    min_accounts: int = 20
    confidence: float = 0.9
    holdout_fraction: float = 0.1
    top_k: int = 20
    n_sample: int | None = None
    sizes: list[int] = field(default_factory=lambda: list(DEFAULT_SIZES))
    repeats: int = 5
    modes: list[str] = field(default_factory=lambda: ["R", "H"])
    thresholds: list[float] = field(default_factory=list)
    reducer: str = "fd"
    layout_file: str | None = None
    iterations: int = DEFAULT_ITERATIONS
    label_sets: list[str] = field(default_factory=lambda: ["all"])
    min_frequency: int = 100
    per_user: bool = False
    media: str | None = None
    seed: int = 0
    threads: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        clean = {}
        for key, value in raw.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ValueError(f"unknown config key {key!r}")
            clean[name] = value
        cfg = cls(**clean)
        if isinstance(cfg.input, str):
            cfg.input = [cfg.input]
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise MissingInputError(str(path))
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def propagation(self) -> PropagationConfig:
        return PropagationConfig(self.supp_min, self.opp_min, self.max_iterations, self.count_mode)

    def classifier(self) -> ClassifierConfig:
        return ClassifierConfig(
            min_distinct_retweeted_accounts=self.min_accounts,
            confidence_threshold=self.confidence,
            holdout_fraction=self.holdout_fraction,
            seed=self.seed,
        )


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return "" if x is None else str(x)


RWC_COLUMNS = [
    "variant", "mode", "size", "repeat", "p_aa", "p_bb", "p_ab", "p_ba", "rwc",
    "threshold", "n_undecided", "label_set",
]
EC_COLUMNS = ["reducer", "mode", "size", "repeat", "d_a", "d_b", "d_ab", "ec", "label_set"]
SUMMARY_COLUMNS = ["measure", "variant", "mode", "size", "repeats", "mean", "std", "label_set"]


def write_rwc_rows(reports: Iterable[tuple[str, MetricReport]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RWC_COLUMNS)
        for label_set, rep in reports:
            for i, r in enumerate(rep.details):
                r: RwcResult
                writer.writerow([_fmt(v) for v in (
                    r.variant, r.mode.value, rep.n_per_class, i, r.p_aa, r.p_bb, r.p_ab, r.p_ba,
                    r.rwc, r.threshold, r.n_undecided, label_set,
                )])


def write_ec_rows(reports: Iterable[tuple[str, MetricReport]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EC_COLUMNS)
        for label_set, rep in reports:
            for i, r in enumerate(rep.details):
                writer.writerow([_fmt(v) for v in (
                    r.reducer, rep.mode.value, rep.n_per_class, i, r.d_a, r.d_b, r.d_ab, r.ec, label_set,
                )])


def write_summary(reports: Iterable[tuple[str, MetricReport]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for label_set, rep in reports:
            variant = rep.variant
            if rep.measure == "rwc" and rep.details and rep.details[0].threshold is not None:
                variant = f"original@{rep.details[0].threshold!r}"
            writer.writerow([_fmt(v) for v in (
                rep.measure, variant, rep.mode.value, rep.n_per_class, len(rep.values),
                rep.mean, rep.std, label_set,
            )])


def versions() -> dict[str, str]:
    import numba
    import scipy

    return {
        "stancepol": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def run_labeling(cfg: PipelineConfig, profiles) -> tuple[LabelStore, LabelStore, dict]:
    if cfg.seeds is None:
        raise MissingInputError("<seed label file not configured>")
    seeds = load_seed_labels(cfg.seeds)
    propagated, sweeps = propagate_until_fixed(profiles, seeds, cfg.propagation())
    ccfg = cfg.classifier()
    model = train_classifier(profiles, propagated, ccfg)
    final = classify_users(model, profiles, propagated, ccfg)
    info = {
        "seed_counts": {k.value: v for k, v in seeds.counts().items()},
        "propagation_sweeps": sweeps,
        "propagated_counts": {k.value: v for k, v in propagated.counts().items()},
        "final_counts": {k.value: v for k, v in final.counts().items()},
        "classifier_holdout_accuracy": model.holdout_accuracy,
    }
    return propagated, final, info


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage and write artifacts under ``cfg.out_dir``.

    Returns the manifest that is also written to ``manifest.json``.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not cfg.input:
        raise MissingInputError("<no input files configured>")
    for path in cfg.input:
        if not Path(path).exists():
            raise MissingInputError(path)

    stats = ParseStats()
    profiles = load_profiles(cfg.input, workers=cfg.threads, stats=stats)
    write_profiles(profiles, out / "profiles.jsonl")
    logger.info("ingested %d users from %d records", len(profiles), stats.n_parsed)

    propagated, final, label_info = run_labeling(cfg, profiles)
    propagated.to_csv(out / "labels_propagated.csv")
    final.to_csv(out / "labels.csv")
    label_stores = {"propagated": propagated, "all": final}

    rwc_reports, ec_reports = [], []
    layouts_dir = out / "layouts"
    for label_set in cfg.label_sets:
        labels = label_stores[label_set]
        for mode in cfg.modes:
            mode = FeatureMode(mode)
            for rep in rwc_batch(profiles, labels, mode, cfg.sizes, cfg.repeats, cfg.seed,
                                 cfg.top_k, cfg.n_sample):
                rwc_reports.append((label_set, rep))
            for t in cfg.thresholds:
                for rep in rwc_batch(profiles, labels, mode, cfg.sizes, cfg.repeats, cfg.seed,
                                     cfg.top_k, cfg.n_sample, "original", t):
                    rwc_reports.append((label_set, rep))
            sink: list = []
            for rep in ec_batch(profiles, labels, mode, cfg.sizes, cfg.repeats, cfg.reducer,
                                cfg.seed, cfg.iterations, cfg.layout_file, sink):
                ec_reports.append((label_set, rep))
            layouts_dir.mkdir(exist_ok=True)
            for size, rep_i, layout in sink:
                layout.to_csv(
                    layouts_dir / f"{label_set}_{mode.value}_{size}_{rep_i}.csv", with_labels=True
                )

    write_rwc_rows(rwc_reports, out / "rwc_samples.csv")
    write_ec_rows(ec_reports, out / "ec_samples.csv")
    write_summary(rwc_reports + ec_reports, out / "summary.csv")

    media = read_media_metadata(cfg.media) if cfg.media else None
    val_reports = []
    for kind in ElementKind:
        report = build_report(tally_profiles(profiles, final, kind, cfg.per_user), cfg.min_frequency)
        write_report(report, out / f"valence_{kind.value}.csv",
                     media if kind is ElementKind.DOMAIN else None)
        val_reports.append(report)
    write_bin_aggregates(val_reports, out / "valence_bins.csv")
    write_top_elements(val_reports, out / "valence_top.csv")

    manifest = {
        "config": asdict(cfg),
        "seed": cfg.seed,
        "versions": versions(),
        "parse": asdict(stats),
        "n_users": len(profiles),
        "labels": label_info,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def parse_int_list(text: str | Sequence[int]) -> list[int]:
    if isinstance(text, str):
        return [int(x) for x in text.split(",") if x.strip()]
    return [int(x) for x in text]


def parse_float_list(text: str | Sequence[float]) -> list[float]:
    if isinstance(text, str):
        return [float(x) for x in text.split(",") if x.strip()]
    return [float(x) for x in text]
