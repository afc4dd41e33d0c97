"""2D projection of similarity graphs and Embedding Controversy (EC)."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist

from ._fdkernel import displacement
from .errors import DegenerateError, FormatError, MissingInputError, MissingNodeError
from .ingest import UserProfile
from .rwc import MetricReport
from .simgraph import FeatureMode, SampleSpec, SimilarityGraph, build_graph, derive_seed, sample_users
from .stance import LabelStore, Stance

logger = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 500
INITIAL_TEMPERATURE = 0.1


@dataclass
class Layout:
    nodes: list[str]
    positions: np.ndarray  # (n, 2)
    labels: list[Stance]
    source: str = "fd"

    def to_csv(self, path: str | Path, with_labels: bool = False) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["handle", "x", "y"] + (["label"] if with_labels else []))
            for node, (x, y), lab in zip(self.nodes, self.positions, self.labels):
                row = [node, repr(float(x)), repr(float(y))]
                if with_labels:
                    row.append(lab.value)
                writer.writerow(row)


@dataclass
class EcResult:
    d_a: float
    d_b: float
    d_ab: float
    ec: float
    mode: FeatureMode | None
    reducer: str


def fd_layout(
    graph: SimilarityGraph, iterations: int = DEFAULT_ITERATIONS, seed: int = 0
) -> Layout:
    """Force-directed placement with a linearly cooling displacement cap.

    Nodes start uniformly in the unit square. Edge weights scale the
    attraction; every pair repels.
    """
    n = len(graph)
    if n == 0:
        raise ValueError("cannot lay out an empty graph")
    rng = np.random.default_rng(seed)
    pos = rng.random((n, 2))
    W = np.ascontiguousarray(graph.weights, dtype=np.float64)
    k = math.sqrt(1.0 / n)
    for it in range(iterations):
        temp = INITIAL_TEMPERATURE * (1.0 - it / iterations)
        disp = displacement(pos, W, k)
        length = np.sqrt((disp * disp).sum(axis=1))
        scale = np.minimum(length, temp) / np.maximum(length, 1e-300)
        pos += disp * scale[:, None]
    return Layout(list(graph.nodes), pos, list(graph.labels), f"fd(iterations={iterations},seed={seed})")


def import_layout(path: str | Path, graph: SimilarityGraph) -> Layout:
    """Positions from a ``handle,x,y`` CSV, e.g. an externally computed UMAP."""
    path = Path(path)
    if not path.exists():
        raise MissingInputError(str(path))
    coords: dict[str, tuple[float, float]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if lineno == 1 and row[0].strip().lower() == "handle":
                continue
            if len(row) < 3:
                raise FormatError(lineno, "expected handle,x,y")
            try:
                x, y = float(row[1]), float(row[2])
            except ValueError:
                raise FormatError(lineno, f"non-numeric coordinates {row[1:3]}") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise FormatError(lineno, "coordinates must be finite")
            coords[row[0].strip().lower()] = (x, y)
    missing = [u for u in graph.nodes if u not in coords]
    if missing:
        raise MissingNodeError(missing[0])
    pos = np.array([coords[u] for u in graph.nodes], dtype=float)
    return Layout(list(graph.nodes), pos, list(graph.labels), f"imported({path})")


def ec_score(
    layout: Layout, labels: Mapping[str, Stance] | LabelStore | None = None,
    mode: FeatureMode | None = None,
) -> EcResult:
    """EC = 1 - (d_A + d_B) / (2 d_AB) from mean within- and cross-class
    Euclidean distances. Labels default to those carried by the layout."""
    if labels is None:
        node_labels = layout.labels
    elif isinstance(labels, LabelStore):
        node_labels = [labels.stance(u) for u in layout.nodes]
    else:
        node_labels = [Stance(labels[u]) for u in layout.nodes]
    lab = np.array([x.value for x in node_labels])
    pa = layout.positions[lab == Stance.SUPP.value]
    pb = layout.positions[lab == Stance.OPP.value]
    if len(pa) < 2 or len(pb) < 2:
        raise ValueError("EC needs at least two nodes per class")
    d_a = float(pdist(pa).mean())
    d_b = float(pdist(pb).mean())
    d_ab = float(cdist(pa, pb).mean())
    if d_ab == 0:
        raise DegenerateError("all cross-class distances are zero")
    ec = 1.0 - (d_a + d_b) / (2.0 * d_ab)
    if ec < 0:
        logger.info("negative EC %.4f: classes are spread wider than they are apart", ec)
    return EcResult(d_a, d_b, d_ab, ec, mode, layout.source.split("(")[0])


def ec_batch(
    profiles: Mapping[str, UserProfile],
    labels: LabelStore,
    mode: FeatureMode | str,
    sizes: Sequence[int] = (500, 1000, 2610, 5000),
    repeats: int = 5,
    reducer: str = "fd",
    seed: int = 0,
    iterations: int = DEFAULT_ITERATIONS,
    layout_file: str | Path | None = None,
    layout_sink: list | None = None,
) -> list[MetricReport]:
    """EC per sample for each size; ``layout_sink`` collects the layouts."""
    mode = FeatureMode(mode)
    if reducer not in ("fd", "import"):
        raise ValueError(f"unknown reducer {reducer!r}")
    if reducer == "import" and layout_file is None:
        raise ValueError("reducer 'import' needs layout_file")
    reports = []
    eligible = set(profiles)
    for size in sizes:
        samples = sample_users(labels, SampleSpec(size, repeats, derive_seed(seed, size)), eligible)
        results = []
        for rep, sample in enumerate(samples):
            graph = build_graph(profiles, sample, mode)
            if reducer == "fd":
                layout = fd_layout(graph, iterations, derive_seed(seed, size, rep, 2))
            else:
                layout = import_layout(layout_file, graph)
            res = ec_score(layout, mode=mode)
            logger.info("ec %s mode=%s size=%d repeat=%d -> %.4f", reducer, mode, size, rep, res.ec)
            results.append(res)
            if layout_sink is not None:
                layout_sink.append((size, rep, layout))
            del graph
        reports.append(MetricReport("ec", mode, size, [r.ec for r in results], reducer, results))
    return reports
