"""Random Walk Controversy over similarity graphs.

The modified variant replaces hop counts with the best product of edge
similarities along a path, so no adjacency threshold is needed. The
original hop-count variant is kept for comparison.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .ingest import UserProfile
from .simgraph import (
    FeatureMode,
    SampleSpec,
    SimilarityGraph,
    build_graph,
    derive_seed,
    sample_users,
    top_connected,
)
from .stance import SIDES, LabelStore, Stance
from .errors import InsufficientUsersError

logger = logging.getLogger(__name__)

UNDECIDED_WARN_FRACTION = 0.10


class DegenerateRunWarning(UserWarning):
    pass


@dataclass
class RwcResult:
    p_aa: float
    p_bb: float
    p_ab: float
    p_ba: float
    rwc: float
    mode: FeatureMode
    n_per_class: int
    variant: str = "modified"
    threshold: float | None = None
    n_decided: tuple[int, int] = (0, 0)
    n_undecided: int = 0
    degenerate: bool = False


@dataclass
class MetricReport:
    measure: str
    mode: FeatureMode
    n_per_class: int
    values: list[float]
    variant: str = ""
    details: list = field(default_factory=list, repr=False)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        # population std: a single sample reports 0
        return float(np.std(self.values))


def max_product_scores(
    W: np.ndarray, sources: Sequence[int], stop_at: Sequence[int] | None = None
) -> np.ndarray:
    """Best path product from the source set to every node.

    Dijkstra in product form: weights lie in [0, 1], so extending a path
    never increases its score and nodes settle in non-increasing score
    order. Zero-weight edges are never usable. With ``stop_at`` the search
    returns as soon as any of those nodes is settled; scores of nodes not
    yet settled are then lower bounds.
    """
    n = W.shape[0]
    score = np.zeros(n)
    score[np.asarray(sources, dtype=np.int64)] = 1.0
    open_ = np.ones(n, dtype=bool)
    stop = np.zeros(n, dtype=bool)
    if stop_at is not None:
        stop[np.asarray(stop_at, dtype=np.int64)] = True
    masked = score.copy()
    for _ in range(n):
        u = int(np.argmax(masked))
        best = masked[u]
        if best <= 0.0:
            break
        open_[u] = False
        masked[u] = -1.0
        if stop[u]:
            break
        cand = best * W[u]
        better = open_ & (cand > score)
        score[better] = cand[better]
        masked[better] = cand[better]
    return score


def best_path_score(graph: SimilarityGraph | np.ndarray, source: int, targets: Sequence[int]) -> float:
    """Maximum over ``targets`` of the best path product from ``source``.

    Searches outward from ``source`` and stops at the first settled target,
    which by settle order carries the maximum.
    """
    W = graph.weights if isinstance(graph, SimilarityGraph) else np.asarray(graph)
    targets = list(targets)
    if source in targets:
        return 1.0
    score = max_product_scores(W, [source], stop_at=targets)
    return float(score[targets].max()) if targets else 0.0


def _rwc_from_reach(reach_a: np.ndarray, reach_b: np.ndarray) -> tuple[float, float, float, float]:
    """reach arrays hold +1 (reaches A), -1 (reaches B), 0 (undecided)."""
    da = reach_a[reach_a != 0]
    db = reach_b[reach_b != 0]
    p_aa = float(np.mean(da > 0)) if len(da) else 0.0
    p_ab = float(np.mean(da < 0)) if len(da) else 0.0
    p_bb = float(np.mean(db < 0)) if len(db) else 0.0
    p_ba = float(np.mean(db > 0)) if len(db) else 0.0
    return p_aa, p_bb, p_ab, p_ba


def _select(graph: SimilarityGraph, top_k: int, n_sample: int | None, seed: int):
    top_a, top_b = top_connected(graph, top_k)
    tops = set(top_a.tolist()) | set(top_b.tolist())
    rng = np.random.default_rng(seed)
    picked = []
    for side in SIDES:
        pool = np.array([i for i in graph.class_indices(side) if i not in tops], dtype=np.int64)
        if n_sample is None:
            picked.append(pool)
            continue
        if len(pool) < n_sample:
            raise InsufficientUsersError(side.value, len(pool), n_sample)
        picked.append(np.sort(rng.choice(pool, size=n_sample, replace=False)))
    return top_a, top_b, picked[0], picked[1]


def _finish(reach_a, reach_b, graph, variant, threshold, n_per_class) -> RwcResult:
    p_aa, p_bb, p_ab, p_ba = _rwc_from_reach(reach_a, reach_b)
    n_und = int(np.sum(reach_a == 0) + np.sum(reach_b == 0))
    total = len(reach_a) + len(reach_b)
    decided = (int(np.sum(reach_a != 0)), int(np.sum(reach_b != 0)))
    degenerate = min(decided) == 0
    if degenerate:
        rwc = 0.0
        warnings.warn(
            f"{variant} RWC: a class has no decided samples; reporting 0",
            DegenerateRunWarning,
            stacklevel=3,
        )
    else:
        rwc = p_aa * p_bb - p_ab * p_ba
        if total and n_und / total > UNDECIDED_WARN_FRACTION:
            warnings.warn(
                f"{variant} RWC: {n_und}/{total} sampled nodes undecided",
                DegenerateRunWarning,
                stacklevel=3,
            )
    return RwcResult(
        p_aa, p_bb, p_ab, p_ba, rwc, graph.mode, n_per_class, variant, threshold,
        decided, n_und, degenerate,
    )


def rwc_modified(
    graph: SimilarityGraph, top_k: int = 20, n_sample: int | None = None, seed: int = 0
) -> RwcResult:
    """Modified RWC.

    ``n_sample=None`` uses every non-top node of each class as a starting
    node; an integer draws that many per class with ``seed``.
    """
    top_a, top_b, samp_a, samp_b = _select(graph, top_k, n_sample, seed)
    # graphs are undirected, so one multi-source search per class
    # gives the best score from every node to that class's top set
    to_a = max_product_scores(graph.weights, top_a)
    to_b = max_product_scores(graph.weights, top_b)
    reach = np.sign(to_a - to_b)
    n_per_class = len(graph.class_indices(Stance.SUPP))
    return _finish(reach[samp_a], reach[samp_b], graph, "modified", None, n_per_class)


def hop_distances(adj: np.ndarray, sources: Sequence[int]) -> np.ndarray:
    """Unweighted BFS distance from the nearest source; ``inf`` if unreachable."""
    n = adj.shape[0]
    dist = np.full(n, np.inf)
    frontier = np.zeros(n, dtype=bool)
    frontier[np.asarray(sources, dtype=np.int64)] = True
    dist[frontier] = 0
    visited = frontier.copy()
    depth = 0
    while frontier.any():
        depth += 1
        nxt = adj[frontier].any(axis=0) & ~visited
        dist[nxt] = depth
        visited |= nxt
        frontier = nxt
    return dist


def rwc_original(
    graph: SimilarityGraph,
    threshold: float,
    top_k: int = 20,
    n_sample: int | None = None,
    seed: int = 0,
) -> RwcResult:
    """Hop-count RWC: an edge exists where similarity >= ``threshold``."""
    top_a, top_b, samp_a, samp_b = _select(graph, top_k, n_sample, seed)
    adj = graph.weights >= threshold
    np.fill_diagonal(adj, False)
    da = hop_distances(adj, top_a)
    db = hop_distances(adj, top_b)
    reach = np.zeros(len(graph))
    reach[da < db] = 1
    reach[db < da] = -1
    n_per_class = len(graph.class_indices(Stance.SUPP))
    return _finish(reach[samp_a], reach[samp_b], graph, "original", threshold, n_per_class)


def rwc_batch(
    profiles: Mapping[str, UserProfile],
    labels: LabelStore,
    mode: FeatureMode | str,
    sizes: Sequence[int] = (500, 1000, 2610, 5000),
    repeats: int = 5,
    seed: int = 0,
    top_k: int = 20,
    n_sample: int | None = None,
    variant: str = "modified",
    threshold: float | None = None,
) -> list[MetricReport]:
    mode = FeatureMode(mode)
    if variant == "original" and threshold is None:
        raise ValueError("the original variant needs a threshold")
    reports = []
    eligible = set(profiles)
    for size in sizes:
        samples = sample_users(labels, SampleSpec(size, repeats, derive_seed(seed, size)), eligible)
        results = []
        for rep, sample in enumerate(samples):
            graph = build_graph(profiles, sample, mode)
            node_seed = derive_seed(seed, size, rep, 1)
            if variant == "modified":
                res = rwc_modified(graph, top_k, n_sample, node_seed)
            else:
                res = rwc_original(graph, threshold, top_k, n_sample, node_seed)
            logger.info("rwc %s mode=%s size=%d repeat=%d -> %.4f", variant, mode, size, rep, res.rwc)
            results.append(res)
            del graph
        reports.append(
            MetricReport("rwc", mode, size, [r.rwc for r in results], variant, results)
        )
    return reports
