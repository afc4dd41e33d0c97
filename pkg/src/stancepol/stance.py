"""User stance labelling: seed labels, threshold label propagation, and a
confidence-gated classifier over retweeted-account features."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConflictError,
    FormatError,
    InsufficientDataError,
    MissingInputError,
    MissingSeedError,
)
from .ingest import UserProfile, normalize_handle

logger = logging.getLogger(__name__)


class Stance(str, Enum):
    SUPP = "SUPP"
    OPP = "OPP"
    NEUTRAL = "NEUTRAL"
    SPAM = "SPAM"
    UNLABELED = "UNLABELED"

    def __str__(self) -> str:
        return self.value


SIDES = (Stance.SUPP, Stance.OPP)


@dataclass(frozen=True)
class StanceLabel:
    value: Stance
    provenance: str = "seed"  # seed | propagated | classified
    iteration: int | None = None
    confidence: float | None = None

    def __post_init__(self):
        if self.value in (Stance.NEUTRAL, Stance.SPAM) and self.provenance != "seed":
            raise ValueError(f"{self.value} labels can only come from seeds")

    @property
    def detail(self) -> str:
        if self.provenance == "propagated":
            return str(self.iteration)
        if self.provenance == "classified":
            return f"{self.confidence:.6f}"
        return ""


class LabelStore:
    """Mapping of user handle to :class:`StanceLabel`.

    Users without an entry are UNLABELED.
    """

    def __init__(self, labels: Mapping[str, StanceLabel] | None = None):
        self._labels: dict[str, StanceLabel] = dict(labels or {})

    def __contains__(self, user: str) -> bool:
        return user in self._labels

    def __getitem__(self, user: str) -> StanceLabel:
        return self._labels[user]

    def __iter__(self) -> Iterator[str]:
        return iter(self._labels)

    def __len__(self) -> int:
        return len(self._labels)

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelStore) and self._labels == other._labels

    def items(self):
        return self._labels.items()

    def get(self, user: str) -> StanceLabel | None:
        return self._labels.get(user)

    def stance(self, user: str | None) -> Stance:
        lab = self._labels.get(user) if user is not None else None
        return lab.value if lab is not None else Stance.UNLABELED

    def users(self, stance: Stance) -> list[str]:
        return sorted(u for u, lab in self._labels.items() if lab.value is stance)

    def counts(self) -> dict[Stance, int]:
        out = {s: 0 for s in Stance if s is not Stance.UNLABELED}
        for lab in self._labels.values():
            out[lab.value] += 1
        return out

    def copy(self) -> "LabelStore":
        return LabelStore(self._labels)

    def set(self, user: str, label: StanceLabel) -> None:
        self._labels[user] = label

    def restrict(self, users: Iterable[str]) -> "LabelStore":
        keep = set(users)
        return LabelStore({u: lab for u, lab in self._labels.items() if u in keep})

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["handle", "label", "provenance", "detail"])
            for user in sorted(self._labels):
                lab = self._labels[user]
                writer.writerow([user, lab.value.value, lab.provenance, lab.detail])

    @classmethod
    def from_csv(cls, path: str | Path) -> "LabelStore":
        path = Path(path)
        if not path.exists():
            raise MissingInputError(str(path))
        store = cls()
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            for lineno, row in enumerate(reader, start=2):
                try:
                    value = Stance(row["label"])
                    prov = row.get("provenance") or "seed"
                    detail = row.get("detail") or ""
                    store.set(
                        row["handle"],
                        StanceLabel(
                            value,
                            prov,
                            iteration=int(detail) if prov == "propagated" else None,
                            confidence=float(detail) if prov == "classified" else None,
                        ),
                    )
                except (KeyError, ValueError) as exc:
                    raise FormatError(lineno, f"bad label row: {exc}") from None
        return store


_SEED_VALUES = {s.value: s for s in (Stance.SUPP, Stance.OPP, Stance.NEUTRAL, Stance.SPAM)}


def load_seed_labels(source: str | Path | io.TextIOBase) -> LabelStore:
    """Read ``handle,label`` rows. A leading ``handle,label`` header is allowed."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise MissingInputError(str(path))
        with open(path, encoding="utf-8", newline="") as fh:
            return _read_seeds(fh)
    return _read_seeds(source)


def _read_seeds(fh) -> LabelStore:
    store = LabelStore()
    for lineno, row in enumerate(csv.reader(fh), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise FormatError(lineno, f"expected 2 columns, got {len(row)}")
        handle, raw = normalize_handle(row[0]), row[1].strip().upper()
        if lineno == 1 and raw == "LABEL":
            continue
        if not handle:
            raise FormatError(lineno, "empty handle")
        if raw not in _SEED_VALUES:
            raise FormatError(lineno, f"unknown label {row[1]!r}")
        value = _SEED_VALUES[raw]
        prev = store.get(handle)
        if prev is not None and prev.value is not value:
            raise ConflictError(handle, prev.value.value, value.value)
        store.set(handle, StanceLabel(value, "seed"))
    return store


@dataclass(frozen=True)
class PropagationConfig:
    supp_min: int = 15
    opp_min: int = 7
    max_iterations: int = 10
    # "distinct" counts each retweeted tweet key once; "raw" counts events
    count_mode: str = "distinct"

    def __post_init__(self):
        if self.supp_min < 1 or self.opp_min < 1:
            raise ValueError("propagation thresholds must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.count_mode not in ("distinct", "raw"):
            raise ValueError(f"unknown count_mode {self.count_mode!r}")

    def minimum(self, side: Stance) -> int:
        return self.supp_min if side is Stance.SUPP else self.opp_min


def side_counts(
    profile: UserProfile,
    labels: LabelStore,
    side_keys: Mapping[Stance, set],
    count_mode: str = "distinct",
) -> dict[Stance, int]:
    """Retweet events of ``profile`` attributable to each side.

    An event counts for side S when its tweet key was retweeted by an
    S-labelled user or its original author is S-labelled.
    """
    counts = {Stance.SUPP: 0, Stance.OPP: 0}
    for key, n in profile.retweeted_keys.items():
        author_side = labels.stance(profile.key_authors.get(key))
        weight = n if count_mode == "raw" else 1
        for side in SIDES:
            if key in side_keys[side] or author_side is side:
                counts[side] += weight
    return counts


def _side_keys(profiles: Mapping[str, UserProfile], labels: LabelStore) -> dict[Stance, set]:
    keys: dict[Stance, set] = {Stance.SUPP: set(), Stance.OPP: set()}
    for user, lab in labels.items():
        if lab.value in keys and user in profiles:
            keys[lab.value].update(profiles[user].retweeted_keys)
    return keys


def _last_iteration(labels: LabelStore) -> int:
    its = [lab.iteration for _, lab in labels.items() if lab.provenance == "propagated"]
    return max(its, default=0)


def propagate_once(
    profiles: Mapping[str, UserProfile],
    labels: LabelStore,
    config: PropagationConfig = PropagationConfig(),
    iteration: int | None = None,
) -> tuple[LabelStore, int]:
    """One synchronous propagation sweep against a snapshot of ``labels``."""
    counts = labels.counts()
    if counts[Stance.SUPP] == 0 or counts[Stance.OPP] == 0:
        raise MissingSeedError("propagation needs at least one SUPP and one OPP label")
    if iteration is None:
        iteration = _last_iteration(labels) + 1

    side_keys = _side_keys(profiles, labels)
    out = labels.copy()
    n_new = 0
    for user in sorted(profiles):
        if user in labels:
            continue
        c = side_counts(profiles[user], labels, side_keys, config.count_mode)
        supp_ok = c[Stance.SUPP] >= config.supp_min and c[Stance.OPP] == 0
        opp_ok = c[Stance.OPP] >= config.opp_min and c[Stance.SUPP] == 0
        assert not (supp_ok and opp_ok)
        if supp_ok or opp_ok:
            side = Stance.SUPP if supp_ok else Stance.OPP
            out.set(user, StanceLabel(side, "propagated", iteration=iteration))
            n_new += 1
    return out, n_new


def propagate_until_fixed(
    profiles: Mapping[str, UserProfile],
    labels: LabelStore,
    config: PropagationConfig = PropagationConfig(),
) -> tuple[LabelStore, int]:
    """Repeat :func:`propagate_once` until nothing new is labelled.

    Returns the final store and the number of sweeps that labelled
    someone. The confirming sweep that finds nothing is not counted,
    except that an already converged store reports 1.
    """
    current = labels
    start = _last_iteration(labels)
    productive = 0
    for sweep in range(1, config.max_iterations + 1):
        current, n_new = propagate_once(profiles, current, config, iteration=start + sweep)
        logger.info("propagation sweep %d: %d new labels", sweep, n_new)
        if n_new == 0:
            break
        productive += 1
    return current, max(productive, 1)


@dataclass(frozen=True)
class ClassifierConfig:
    min_distinct_retweeted_accounts: int = 20
    confidence_threshold: float = 0.9
    holdout_fraction: float = 0.1
    learning_rate: float = 20.0
    epochs: int = 400
    l2: float = 1e-5
    min_class_users: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.confidence_threshold < 1:
            raise ValueError("confidence_threshold must lie in (0, 1)")
        if not 0 <= self.holdout_fraction < 1:
            raise ValueError("holdout_fraction must lie in [0, 1)")


@dataclass
class StanceModel:
    """Two-class softmax regression over retweeted-account frequencies."""

    vocabulary: dict[str, int]
    weights: np.ndarray  # (n_features, 2)
    bias: np.ndarray  # (2,)
    classes: tuple[Stance, Stance] = SIDES
    holdout_accuracy: float | None = None
    n_train: dict = field(default_factory=dict)

    def features(self, profiles: Iterable[UserProfile]) -> sp.csr_matrix:
        return account_features(profiles, self.vocabulary)

    def predict_proba(self, profiles: Iterable[UserProfile]) -> np.ndarray:
        return _softmax(self.features(profiles) @ self.weights + self.bias)


def account_features(profiles: Iterable[UserProfile], vocabulary: Mapping[str, int]) -> sp.csr_matrix:
    """Rows are users, columns accounts; entries are term frequencies
    (count over the user's total retweets, unknown accounts included)."""
    indptr, indices, data = [0], [], []
    for prof in profiles:
        total = sum(prof.retweeted_accounts.values())
        row = sorted(
            (vocabulary[a], n) for a, n in prof.retweeted_accounts.items() if a in vocabulary
        )
        for j, n in row:
            indices.append(j)
            data.append(n / total)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(indptr) - 1, len(vocabulary)),
    )


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _stratified_split(users_by_class, fraction, rng):
    train, hold = [], []
    for ci, users in enumerate(users_by_class):
        perm = rng.permutation(len(users))
        n_hold = int(math.ceil(fraction * len(users))) if fraction > 0 else 0
        hold += [(users[i], ci) for i in perm[:n_hold]]
        train += [(users[i], ci) for i in perm[n_hold:]]
    return train, hold


def train_classifier(
    profiles: Mapping[str, UserProfile],
    labels: LabelStore,
    config: ClassifierConfig = ClassifierConfig(),
) -> StanceModel:
    users_by_class = [
        [u for u in labels.users(side) if u in profiles and profiles[u].retweeted_accounts]
        for side in SIDES
    ]
    rng = np.random.default_rng(config.seed)
    train, hold = _stratified_split(users_by_class, config.holdout_fraction, rng)
    n_train = {side: sum(1 for _, c in train if c == i) for i, side in enumerate(SIDES)}
    for side, n in n_train.items():
        if n < config.min_class_users:
            raise InsufficientDataError(
                f"class {side} has {n} training users; need {config.min_class_users}"
            )

    vocab_names = sorted({a for u, _ in train for a in profiles[u].retweeted_accounts})
    vocabulary = {a: i for i, a in enumerate(vocab_names)}
    X = account_features((profiles[u] for u, _ in train), vocabulary)
    y = np.array([c for _, c in train])
    Y = np.eye(2)[y]
    n = X.shape[0]

    W = np.zeros((len(vocabulary), 2))
    b = np.zeros(2)
    for _ in range(config.epochs):
        P = _softmax(X @ W + b)
        G = (P - Y) / n
        W -= config.learning_rate * (X.T @ G + config.l2 * W)
        b -= config.learning_rate * G.sum(axis=0)

    model = StanceModel(vocabulary, W, b, n_train={str(k): v for k, v in n_train.items()})
    if hold:
        proba = model.predict_proba(profiles[u] for u, _ in hold)
        pred = proba.argmax(axis=1)
        model.holdout_accuracy = float(np.mean(pred == np.array([c for _, c in hold])))
        logger.info("classifier holdout accuracy %.4f on %d users", model.holdout_accuracy, len(hold))
    return model


def classify_users(
    model: StanceModel,
    profiles: Mapping[str, UserProfile],
    labels: LabelStore,
    config: ClassifierConfig = ClassifierConfig(),
) -> LabelStore:
    """Label active unlabelled users whose top class probability exceeds the gate."""
    candidates = [
        u
        for u in sorted(profiles)
        if u not in labels
        and len(profiles[u].retweeted_accounts) >= config.min_distinct_retweeted_accounts
    ]
    out = labels.copy()
    if not candidates:
        return out
    proba = model.predict_proba(profiles[u] for u in candidates)
    return apply_gate(out, candidates, proba, model.classes, config.confidence_threshold)


def apply_gate(
    store: LabelStore,
    users: list[str],
    proba: np.ndarray,
    classes=SIDES,
    threshold: float = 0.9,
) -> LabelStore:
    for user, row in zip(users, proba):
        best = int(np.argmax(row))
        if row[best] > threshold and user not in store:
            store.set(user, StanceLabel(classes[best], "classified", confidence=float(row[best])))
    return store
