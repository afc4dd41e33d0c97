"""User similarity graphs over labelled user samples."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import GraphTooLargeError, InsufficientUsersError, MissingNodeError
from .ingest import UserProfile
from .stance import SIDES, LabelStore, Stance

MAX_DENSE_NODES = 10_240


class FeatureMode(str, Enum):
    H = "H"  # hashtags used
    R = "R"  # accounts retweeted

    def __str__(self) -> str:
        return self.value


def feature_vector(profile: UserProfile, mode: FeatureMode | str) -> Counter:
    mode = FeatureMode(mode)
    source = profile.hashtags if mode is FeatureMode.H else profile.retweeted_accounts
    return Counter({k: v for k, v in source.items() if v > 0})


def cosine(u: Mapping[str, float], v: Mapping[str, float]) -> float:
    if len(u) > len(v):
        u, v = v, u
    dot = sum(x * v[k] for k, x in u.items() if k in v)
    if dot == 0:
        return 0.0
    nu = math.sqrt(sum(x * x for x in u.values()))
    nv = math.sqrt(sum(x * x for x in v.values()))
    return min(1.0, max(0.0, dot / (nu * nv)))


@dataclass(frozen=True)
class SampleSpec:
    n_per_class: int
    n_repeats: int = 5
    seed: int = 0


@dataclass(frozen=True)
class UserSample:
    supp: tuple[str, ...]
    opp: tuple[str, ...]

    @property
    def nodes(self) -> list[str]:
        return list(self.supp) + list(self.opp)

    @property
    def labels(self) -> list[Stance]:
        return [Stance.SUPP] * len(self.supp) + [Stance.OPP] * len(self.opp)


def derive_seed(seed: int, *keys: int) -> int:
    """Stable child seed for (seed, keys...)."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def sample_users(
    labels: LabelStore, spec: SampleSpec, eligible: set[str] | None = None
) -> list[UserSample]:
    """Draw ``spec.n_repeats`` balanced samples without replacement.

    Repeat ``i`` depends only on (seed, i), not on how many repeats are drawn.
    """
    pools = []
    for side in SIDES:
        users = labels.users(side)
        if eligible is not None:
            users = [u for u in users if u in eligible]
        if spec.n_per_class > len(users):
            raise InsufficientUsersError(side.value, len(users), spec.n_per_class)
        pools.append(users)
    samples = []
    for rep in range(spec.n_repeats):
        rng = np.random.default_rng(derive_seed(spec.seed, rep))
        picked = []
        for pool in pools:
            idx = np.sort(rng.choice(len(pool), size=spec.n_per_class, replace=False))
            picked.append(tuple(pool[i] for i in idx))
        samples.append(UserSample(*picked))
    return samples


@dataclass
class SimilarityGraph:
    nodes: list[str]
    labels: list[Stance]
    weights: np.ndarray
    mode: FeatureMode

    def __len__(self) -> int:
        return len(self.nodes)

    def class_indices(self, side: Stance) -> np.ndarray:
        return np.array([i for i, lab in enumerate(self.labels) if lab is side], dtype=np.int64)

    def index(self, handle: str) -> int:
        return self.nodes.index(handle)

    def swap_labels(self) -> "SimilarityGraph":
        flip = {Stance.SUPP: Stance.OPP, Stance.OPP: Stance.SUPP}
        return SimilarityGraph(self.nodes, [flip[x] for x in self.labels], self.weights, self.mode)


def graph_from_weights(
    weights: np.ndarray, labels: Sequence[Stance], nodes: Sequence[str] | None = None,
    mode: FeatureMode = FeatureMode.R,
) -> SimilarityGraph:
    """Wrap a precomputed similarity matrix (mostly for fixtures)."""
    W = np.asarray(weights, dtype=float)
    if W.shape != (len(labels), len(labels)):
        raise ValueError("weights must be square and match labels")
    if nodes is None:
        nodes = [f"n{i:05d}" for i in range(len(labels))]
    return SimilarityGraph(list(nodes), [Stance(x) for x in labels], W, FeatureMode(mode))


def _feature_matrix(profiles, nodes, mode) -> sp.csr_matrix:
    vocab: dict[str, int] = {}
    indptr, indices, data = [0], [], []
    for user in nodes:
        prof = profiles.get(user)
        if prof is None:
            raise MissingNodeError(user)
        vec = feature_vector(prof, mode)
        norm = math.sqrt(sum(v * v for v in vec.values()))
        for key in sorted(vec):
            j = vocab.setdefault(key, len(vocab))
            indices.append(j)
            data.append(vec[key] / norm)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(nodes), max(len(vocab), 1)),
    )


def build_graph(
    profiles: Mapping[str, UserProfile],
    sample: UserSample,
    mode: FeatureMode | str,
    block_size: int = 512,
) -> SimilarityGraph:
    """Dense pairwise cosine similarity over the sample.

    Zero-feature users get similarity 0 to everyone, themselves included.
    """
    mode = FeatureMode(mode)
    nodes = sample.nodes
    n = len(nodes)
    if n > MAX_DENSE_NODES:
        raise GraphTooLargeError(
            f"{n} nodes exceeds the dense limit of {MAX_DENSE_NODES}; sample fewer users"
        )
    X = _feature_matrix(profiles, nodes, mode)
    XT = X.T.tocsr()
    W = np.empty((n, n))
    for i0 in range(0, n, block_size):
        i1 = min(n, i0 + block_size)
        # only the upper block-triangle is computed, then mirrored
        R = (X[i0:i1] @ XT[:, i0:]).toarray()
        b = i1 - i0
        R[:, :b] = np.triu(R[:, :b]) + np.triu(R[:, :b], 1).T
        W[i0:i1, i0:] = R
        W[i1:, i0:i1] = R[:, b:].T
    np.clip(W, 0.0, 1.0, out=W)
    has_features = np.diff(X.indptr) > 0
    W[np.diag_indices(n)] = has_features.astype(float)
    return SimilarityGraph(nodes, sample.labels, W, mode)


def weighted_degree(graph: SimilarityGraph) -> np.ndarray:
    W = graph.weights
    return W.sum(axis=1) - np.diag(W)


def top_connected(graph: SimilarityGraph, k: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the ``k`` highest weighted-degree nodes of each class.

    Ties are broken by handle. Degrees are rounded to 1e-10 first so that
    summation-order noise does not defeat the tie-break.
    """
    deg = np.round(weighted_degree(graph), 10)
    out = []
    for side in SIDES:
        idx = graph.class_indices(side)
        if len(idx) < k:
            raise InsufficientUsersError(side.value, len(idx), k)
        order = sorted(idx, key=lambda i: (-deg[i], graph.nodes[i]))
        out.append(np.array(order[:k], dtype=np.int64))
    return out[0], out[1]


def export_edges(graph: SimilarityGraph, path: str | Path, cutoff: float = 0.0) -> int:
    """Write the upper triangle as ``u,v,weight`` rows; keeps weights > cutoff."""
    W = graph.weights
    n_written = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "v", "weight"])
        for i in range(len(graph)):
            row = W[i, i + 1 :]
            for off in np.nonzero(row > cutoff)[0]:
                j = i + 1 + int(off)
                writer.writerow([graph.nodes[i], graph.nodes[j], repr(float(W[i, j]))])
                n_written += 1
    return n_written
