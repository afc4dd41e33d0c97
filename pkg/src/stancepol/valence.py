"""Valence scores for hashtags, retweeted accounts and cited domains.

Elements are scored by how exclusively each side uses them and bucketed
into five equal-width bins over [-1, 1].
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DomainError, MissingInputError
from .ingest import TweetRecord, UserProfile
from .stance import LabelStore, Stance


class ElementKind(str, Enum):
    HASHTAG = "hashtag"
    RETWEETED_ACCOUNT = "retweeted_account"
    DOMAIN = "domain"

    def __str__(self) -> str:
        return self.value


class Bin(str, Enum):
    STRONG_OPP = "StrongOPP"
    OPP = "OPP"
    NEUTRAL = "Neutral"
    SUPP = "SUPP"
    STRONG_SUPP = "StrongSUPP"

    def __str__(self) -> str:
        return self.value

    def mirror(self) -> "Bin":
        order = list(Bin)
        return order[len(order) - 1 - order.index(self)]


# lower edges; each bin is [edge, next_edge) and the top bin is closed at 1
_EDGES = ((-0.6, Bin.STRONG_OPP), (-0.2, Bin.OPP), (0.2, Bin.NEUTRAL), (0.6, Bin.SUPP))


def valence(tf_supp: float, total_supp: float, tf_opp: float, total_opp: float) -> float:
    if total_supp <= 0 or total_opp <= 0:
        raise DomainError("valence totals must be positive")
    if tf_supp < 0 or tf_opp < 0 or tf_supp + tf_opp <= 0:
        raise DomainError("valence needs non-negative term frequencies with a positive sum")
    s = tf_supp / total_supp
    o = tf_opp / total_opp
    return 2.0 * s / (s + o) - 1.0


def bucket(v: float) -> Bin:
    if not (-1.0 <= v <= 1.0):
        raise DomainError(f"valence {v!r} outside [-1, 1]")
    for edge, b in _EDGES:
        if v < edge:
            return b
    return Bin.STRONG_SUPP


@dataclass(frozen=True)
class ValenceEntry:
    element: str
    kind: ElementKind
    tf_supp: int
    tf_opp: int
    valence: float
    bin: Bin

    @property
    def total(self) -> int:
        return self.tf_supp + self.tf_opp


@dataclass
class SideTally:
    kind: ElementKind
    supp: Counter
    opp: Counter

    @property
    def total_supp(self) -> int:
        return sum(self.supp.values())

    @property
    def total_opp(self) -> int:
        return sum(self.opp.values())


def _record_elements(rec: TweetRecord, kind: ElementKind) -> tuple[str, ...]:
    if kind is ElementKind.HASHTAG:
        return rec.hashtags
    if kind is ElementKind.DOMAIN:
        return rec.domains
    if rec.is_retweet and not rec.is_self_retweet:
        return (rec.retweeted_author,)
    return ()


def _profile_counter(prof: UserProfile, kind: ElementKind) -> Counter:
    if kind is ElementKind.HASHTAG:
        return prof.hashtags
    if kind is ElementKind.DOMAIN:
        return prof.domains
    return prof.retweeted_accounts


def tally_records(
    records: Iterable[TweetRecord], labels: LabelStore, kind: ElementKind | str,
    per_user: bool = False,
) -> SideTally:
    """Count element occurrences in tweets by SUPP and OPP authors.

    Default counts tweets; ``per_user`` counts each user at most once per
    element. Tweets by anyone else are ignored.
    """
    kind = ElementKind(kind)
    tallies = {Stance.SUPP: Counter(), Stance.OPP: Counter()}
    seen: set = set()
    for rec in records:
        side = labels.stance(rec.author)
        if side not in tallies:
            continue
        for el in _record_elements(rec, kind):
            if per_user:
                if (rec.author, el) in seen:
                    continue
                seen.add((rec.author, el))
            tallies[side][el] += 1
    return SideTally(kind, tallies[Stance.SUPP], tallies[Stance.OPP])


def tally_profiles(
    profiles: Mapping[str, UserProfile], labels: LabelStore, kind: ElementKind | str,
    per_user: bool = False,
) -> SideTally:
    """Same counts as :func:`tally_records`, read off aggregated profiles
    (elements are deduplicated within a tweet, so profile counts are tweet
    counts)."""
    kind = ElementKind(kind)
    tallies = {Stance.SUPP: Counter(), Stance.OPP: Counter()}
    for user, prof in profiles.items():
        side = labels.stance(user)
        if side not in tallies:
            continue
        counts = _profile_counter(prof, kind)
        if per_user:
            tallies[side].update({el: 1 for el, n in counts.items() if n > 0})
        else:
            tallies[side].update(counts)
    return SideTally(kind, tallies[Stance.SUPP], tallies[Stance.OPP])


@dataclass
class ValenceReport:
    kind: ElementKind
    entries: list[ValenceEntry]
    total_supp: int
    total_opp: int
    min_frequency: int

    def bin_aggregates(self) -> dict[Bin, tuple[int, int]]:
        """(distinct elements, total usage) per bin."""
        out = {b: (0, 0) for b in Bin}
        for e in self.entries:
            n, usage = out[e.bin]
            out[e.bin] = (n + 1, usage + e.total)
        return out

    def top(self, b: Bin, k: int = 10) -> list[str]:
        return top_elements(self.entries, b, k)


def _sort_key(e: ValenceEntry):
    return (list(Bin).index(e.bin), -e.total, e.element)


def build_report(tally: SideTally, min_frequency: int = 100) -> ValenceReport:
    """Score every element whose combined count reaches ``min_frequency``.

    Normalising totals include all elements, filtered or not.
    """
    tot_s, tot_o = tally.total_supp, tally.total_opp
    entries = []
    if tot_s > 0 and tot_o > 0:
        for el in set(tally.supp) | set(tally.opp):
            s, o = tally.supp.get(el, 0), tally.opp.get(el, 0)
            if s + o < min_frequency or s + o == 0:
                continue
            v = valence(s, tot_s, o, tot_o)
            entries.append(ValenceEntry(el, tally.kind, s, o, v, bucket(v)))
    entries.sort(key=_sort_key)
    return ValenceReport(tally.kind, entries, tot_s, tot_o, min_frequency)


def element_report(
    records: Iterable[TweetRecord],
    labels: LabelStore,
    kind: ElementKind | str,
    min_frequency: int = 100,
    per_user: bool = False,
) -> ValenceReport:
    return build_report(tally_records(records, labels, kind, per_user), min_frequency)


def top_elements(entries: Iterable[ValenceEntry], b: Bin, k: int = 10) -> list[str]:
    chosen = sorted((e for e in entries if e.bin is b), key=lambda e: (-e.total, e.element))
    return [e.element for e in chosen[:k]]


def read_media_metadata(path: str | Path) -> dict[str, tuple[str, str]]:
    """``domain,bias,credibility`` rows, passed through to reports untouched."""
    path = Path(path)
    if not path.exists():
        raise MissingInputError(str(path))
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            out[row["domain"].strip().lower()] = (row.get("bias", ""), row.get("credibility", ""))
    return out


def write_report(
    report: ValenceReport, path: str | Path, media: Mapping[str, tuple[str, str]] | None = None
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = ["element", "kind", "tf_supp", "tf_opp", "valence", "bin"]
        if media is not None:
            header += ["bias", "credibility"]
        writer.writerow(header)
        for e in report.entries:
            row = [e.element, e.kind.value, e.tf_supp, e.tf_opp, f"{e.valence:.6f}", e.bin.value]
            if media is not None:
                row += list(media.get(e.element, ("", "")))
            writer.writerow(row)


def write_bin_aggregates(reports: Iterable[ValenceReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "bin", "n_elements", "total_usage"])
        for rep in reports:
            for b, (n, usage) in rep.bin_aggregates().items():
                writer.writerow([rep.kind.value, b.value, n, usage])


def write_top_elements(reports: Iterable[ValenceReport], path: str | Path, k: int = 10) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "bin", "rank", "element"])
        for rep in reports:
            for b in reversed(list(Bin)):
                for rank, el in enumerate(rep.top(b, k), start=1):
                    writer.writerow([rep.kind.value, b.value, rank, el])

