"""Synthetic two-community tweet corpora with known ground truth.

Each community has influencers, who post originals and retweet each
other, and ordinary users, who only retweet influencers. A mixing
probability ``eps`` sends a retweet to the pooled influencer set of both
communities (and a hashtag or link to the shared vocabulary) instead of
the user's own community, so ``eps = 0`` gives two disconnected camps
and ``eps = 1`` makes the camps indistinguishable.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ingest import TweetRecord, UserProfile, serialize_record, text_key
from .stance import SIDES, LabelStore, Stance, StanceLabel


@dataclass(frozen=True)
class SynthConfig:
    n_users_per_class: int = 500
    n_influencers_per_class: int = 50
    tweets_per_user: int = 30
    eps: float = 0.1
    # mixing rate for hashtags and links; None reuses eps
    hashtag_eps: float | None = None
    vocab_per_class: int = 40
    shared_vocab: int = 40
    hashtags_per_tweet: int = 2
    domains_per_class: int = 10
    shared_domains: int = 10
    url_probability: float = 0.3
    influencer_original_fraction: float = 0.5
    # popularity of influencers ~ rank**-zipf; 0 is uniform
    zipf: float = 0.0
    # if set, each user's own mixing rate ~ Beta(c*eps, c*(1-eps))
    mixing_concentration: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")
        if self.hashtag_eps is not None and not 0.0 <= self.hashtag_eps <= 1.0:
            raise ValueError("hashtag_eps must lie in [0, 1]")
        counts = (
            self.n_users_per_class, self.n_influencers_per_class, self.tweets_per_user,
            self.vocab_per_class, self.shared_vocab, self.hashtags_per_tweet,
            self.domains_per_class, self.shared_domains,
        )
        if min(counts) < 1:
            raise ValueError("all synth counts must be >= 1")
        if not 0.0 <= self.url_probability <= 1.0:
            raise ValueError("url_probability must lie in [0, 1]")
        if not 0.0 < self.influencer_original_fraction <= 1.0:
            raise ValueError("influencer_original_fraction must lie in (0, 1]")


@dataclass
class SynthCorpus:
    config: SynthConfig
    records: list[TweetRecord]
    labels: LabelStore
    tally: dict[str, UserProfile]
    influencers: dict[Stance, list[str]] = field(default_factory=dict)
    users: dict[Stance, list[str]] = field(default_factory=dict)
    # per-account (retweet, hashtag) mixing rates
    mixing: dict[str, tuple[float, float]] = field(default_factory=dict)

    def cross_retweet_fraction(self, users_only: bool = True) -> float:
        cross = total = 0
        pool = set(u for side in SIDES for u in self.users[side]) if users_only else None
        for rec in self.records:
            if not rec.is_retweet or (pool is not None and rec.author not in pool):
                continue
            total += 1
            cross += self.labels.stance(rec.author) is not self.labels.stance(rec.retweeted_author)
        return cross / total if total else 0.0

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for rec in self.records:
                fh.write(serialize_record(rec) + "\n")

    def write_labels(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["handle", "label"])
            for user in sorted(self.labels):
                writer.writerow([user, self.labels[user].value.value])

    def write_seeds(self, path: str | Path, n_supp: int = 29, n_opp: int = 12) -> None:
        """Seed file naming the first influencers of each community."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["handle", "label"])
            for side, n in ((Stance.SUPP, n_supp), (Stance.OPP, n_opp)):
                for user in self.influencers[side][:n]:
                    writer.writerow([user, side.value])


def _weights(n: int, zipf: float) -> np.ndarray:
    w = np.arange(1, n + 1, dtype=float) ** -zipf
    return w / w.sum()


class _Generator:
    def __init__(self, config: SynthConfig):
        self.cfg = config
        self.rng = np.random.default_rng(config.seed)
        self.next_id = 1
        self.records: list[TweetRecord] = []
        self.tally: dict[str, UserProfile] = {}
        self.originals: dict[str, list[str]] = {}

        c = config
        self.influencers = {
            side: [f"{side.value.lower()}_inf_{i:04d}" for i in range(c.n_influencers_per_class)]
            for side in SIDES
        }
        self.users = {
            side: [f"{side.value.lower()}_user_{i:05d}" for i in range(c.n_users_per_class)]
            for side in SIDES
        }
        self.vocab = {side: [f"{side.value.lower()}tag{i}" for i in range(c.vocab_per_class)] for side in SIDES}
        self.shared_vocab = [f"sharedtag{i}" for i in range(c.shared_vocab)]
        self.domains = {side: [f"{side.value.lower()}-news{i}.com" for i in range(c.domains_per_class)] for side in SIDES}
        self.shared_domains = [f"shared-news{i}.com" for i in range(c.shared_domains)]

        w = _weights(c.n_influencers_per_class, c.zipf)
        self.own_cum = np.cumsum(w)
        self.pool = self.influencers[SIDES[0]] + self.influencers[SIDES[1]]
        self.pool_cum = np.cumsum(np.concatenate([w, w]))

    def _draw_rate(self, eps: float) -> float:
        c = self.cfg.mixing_concentration
        if c is None or eps in (0.0, 1.0):
            return eps
        return float(self.rng.beta(c * eps, c * (1 - eps)))

    def mixing_rate(self) -> tuple[float, float]:
        """(retweet mixing, hashtag mixing) for one account."""
        rt = self._draw_rate(self.cfg.eps)
        if self.cfg.hashtag_eps is None:
            return rt, rt
        return rt, self._draw_rate(self.cfg.hashtag_eps)

    def _profile(self, user: str) -> UserProfile:
        if user not in self.tally:
            self.tally[user] = UserProfile(user)
        return self.tally[user]

    def _elements(self, side: Stance, mix: float) -> tuple[tuple[str, ...], tuple[str, ...]]:
        tags = []
        for _ in range(self.cfg.hashtags_per_tweet):
            vocab = self.shared_vocab if self.rng.random() < mix else self.vocab[side]
            tags.append(vocab[self.rng.integers(len(vocab))])
        domains: tuple[str, ...] = ()
        if self.rng.random() < self.cfg.url_probability:
            pool = self.shared_domains if self.rng.random() < mix else self.domains[side]
            domains = (pool[self.rng.integers(len(pool))],)
        return tuple(dict.fromkeys(tags)), domains

    def _emit(self, rec: TweetRecord) -> None:
        self.records.append(rec)
        prof = self._profile(rec.author)
        prof.n_tweets += 1
        if rec.retweeted_author is not None:
            prof.retweeted_accounts[rec.retweeted_author] += 1
            prof.retweeted_keys[rec.tweet_key] += 1
            prof.key_authors[rec.tweet_key] = rec.retweeted_author
        for h in rec.hashtags:
            prof.hashtags[h] += 1
        for d in rec.domains:
            prof.domains[d] += 1

    def _new_id(self) -> str:
        tid = str(self.next_id)
        self.next_id += 1
        return tid

    def original(self, author: str, side: Stance, mix: tuple[float, float]) -> None:
        tid = self._new_id()
        tags, domains = self._elements(side, mix[1])
        text = f"original {tid} by {author} " + " ".join("#" + t for t in tags)
        self._emit(TweetRecord(tid, author, text_key(text), text, hashtags=tags, domains=domains))
        self.originals.setdefault(author, []).append(tid)

    def retweet(self, author: str, side: Stance, mix: tuple[float, float]) -> bool:
        if self.rng.random() < mix[0]:
            names, cum = self.pool, self.pool_cum
        else:
            names, cum = self.influencers[side], self.own_cum
        if names == [author]:
            return False
        while True:
            idx = int(np.searchsorted(cum, self.rng.random() * cum[-1], side="right"))
            target = names[min(idx, len(names) - 1)]
            if target != author:
                break
        pool = self.originals[target]
        orig_id = pool[int(self.rng.integers(len(pool)))]
        tid = self._new_id()
        tags, domains = self._elements(side, mix[1])
        text = f"RT @{target}: original {orig_id}"
        self._emit(
            TweetRecord(
                tid, author, orig_id, text,
                retweeted_author=target, retweeted_id=orig_id, hashtags=tags, domains=domains,
            )
        )
        return True

    def run(self) -> SynthCorpus:
        c = self.cfg
        mixing: dict[str, tuple[float, float]] = {}
        n_orig = max(1, round(c.tweets_per_user * c.influencer_original_fraction))
        for side in SIDES:
            for inf in self.influencers[side]:
                mixing[inf] = self.mixing_rate()
                for _ in range(n_orig):
                    self.original(inf, side, mixing[inf])
        for side in SIDES:
            for inf in self.influencers[side]:
                for _ in range(c.tweets_per_user - n_orig):
                    if not self.retweet(inf, side, mixing[inf]):
                        self.original(inf, side, mixing[inf])
        for side in SIDES:
            for user in self.users[side]:
                mixing[user] = self.mixing_rate()
                for _ in range(c.tweets_per_user):
                    self.retweet(user, side, mixing[user])

        labels = LabelStore()
        for side in SIDES:
            for user in self.influencers[side] + self.users[side]:
                labels.set(user, StanceLabel(side, "seed"))
        return SynthCorpus(
            c, self.records, labels, self.tally, self.influencers, self.users, mixing
        )


def generate(config: SynthConfig) -> SynthCorpus:
    return _Generator(config).run()


def count_events(corpus: SynthCorpus) -> Counter:
    """Retweet events per (author side, target side); test helper."""
    out: Counter = Counter()
    for rec in corpus.records:
        if rec.is_retweet:
            out[(corpus.labels.stance(rec.author), corpus.labels.stance(rec.retweeted_author))] += 1
    return out
