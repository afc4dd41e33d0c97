"""Parse line-delimited tweet JSON and aggregate it into per-user profiles."""

from __future__ import annotations

import hashlib
import ipaddress
import json
import logging
import re
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping
from urllib.parse import urlsplit

from .errors import MissingInputError, ParseError

logger = logging.getLogger(__name__)

_URL_RE = re.compile(r"https?://\S+|www\.\S+", re.IGNORECASE)
_WS_RE = re.compile(r"\s+")

# second-level labels under two-letter country codes (bbc.co.uk, abc.net.au)
_SECOND_LEVEL = frozenset({"co", "com", "org", "net", "gov", "ac", "edu"})
_TWITTER_HOSTS = frozenset({"twitter.com", "x.com"})


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    author: str
    tweet_key: str
    text: str = ""
    retweeted_author: str | None = None
    retweeted_id: str | None = None
    hashtags: tuple[str, ...] = ()
    domains: tuple[str, ...] = ()

    @property
    def is_retweet(self) -> bool:
        return self.retweeted_author is not None

    @property
    def is_self_retweet(self) -> bool:
        return self.retweeted_author is not None and self.retweeted_author == self.author


@dataclass
class UserProfile:
    """Per-user feature tallies.

    ``key_authors`` maps each retweeted tweet key to the account that wrote
    it, which label propagation needs to attribute a retweet to a side.
    """

    user: str
    n_tweets: int = 0
    retweeted_accounts: Counter = field(default_factory=Counter)
    retweeted_keys: Counter = field(default_factory=Counter)
    hashtags: Counter = field(default_factory=Counter)
    domains: Counter = field(default_factory=Counter)
    key_authors: dict = field(default_factory=dict)

    def add(self, rec: TweetRecord) -> None:
        self.n_tweets += 1
        if rec.is_retweet and not rec.is_self_retweet:
            self.retweeted_accounts[rec.retweeted_author] += 1
            self.retweeted_keys[rec.tweet_key] += 1
            self._set_key_author(rec.tweet_key, rec.retweeted_author)
        self.hashtags.update(rec.hashtags)
        self.domains.update(rec.domains)

    def merge(self, other: "UserProfile") -> None:
        self.n_tweets += other.n_tweets
        self.retweeted_accounts.update(other.retweeted_accounts)
        self.retweeted_keys.update(other.retweeted_keys)
        self.hashtags.update(other.hashtags)
        self.domains.update(other.domains)
        for key, author in other.key_authors.items():
            self._set_key_author(key, author)

    def _set_key_author(self, key: str, author: str) -> None:
        # smallest handle wins on (malformed) conflicts so merges commute
        prev = self.key_authors.get(key)
        if prev is None or author < prev:
            self.key_authors[key] = author

    def to_json(self) -> str:
        return json.dumps(
            {
                "user": self.user,
                "n_tweets": self.n_tweets,
                "retweeted_accounts": dict(sorted(self.retweeted_accounts.items())),
                "retweeted_keys": dict(sorted(self.retweeted_keys.items())),
                "hashtags": dict(sorted(self.hashtags.items())),
                "domains": dict(sorted(self.domains.items())),
                "key_authors": dict(sorted(self.key_authors.items())),
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "UserProfile":
        d = json.loads(line)
        return cls(
            user=d["user"],
            n_tweets=int(d["n_tweets"]),
            retweeted_accounts=Counter(d.get("retweeted_accounts", {})),
            retweeted_keys=Counter(d.get("retweeted_keys", {})),
            hashtags=Counter(d.get("hashtags", {})),
            domains=Counter(d.get("domains", {})),
            key_authors=dict(d.get("key_authors", {})),
        )


def normalize_handle(handle: str) -> str:
    return handle.strip().lstrip("@").lower()


def normalize_text(text: str) -> str:
    text = _URL_RE.sub(" ", text.lower())
    return _WS_RE.sub(" ", text).strip()


def text_key(text: str) -> str:
    digest = hashlib.blake2b(normalize_text(text).encode("utf-8"), digest_size=12)
    return "txt:" + digest.hexdigest()


def registrable_domain(url: str) -> str | None:
    """Reduce a URL to the domain it cites.

    Subdomains are dropped (``edition.cnn.com`` -> ``cnn.com``); shortener
    hosts such as ``hill.cm`` are already two labels and pass through.
    Links to twitter.com keep the first path segment (``twitter.com/gop``)
    so that cited accounts stay distinct sources.
    """
    if not url:
        return None
    if "://" not in url:
        url = "http://" + url
    try:
        parts = urlsplit(url)
        host = parts.hostname
    except ValueError:
        return None
    if not host:
        return None
    host = host.lower().rstrip(".")
    if host.startswith("www."):
        host = host[4:]
    try:
        ipaddress.ip_address(host)
        return host
    except ValueError:
        pass
    labels = host.split(".")
    if len(labels) > 2:
        keep = 3 if labels[-2] in _SECOND_LEVEL and len(labels[-1]) == 2 else 2
        host = ".".join(labels[-keep:])
    if host in _TWITTER_HOSTS:
        segment = parts.path.strip("/").split("/", 1)[0].lower()
        if segment:
            return f"twitter.com/{segment}"
        return "twitter.com"
    return host


def _dedupe(items: Iterable[str]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(i for i in items if i))


def _id_of(obj: Mapping) -> str | None:
    value = obj.get("id_str", obj.get("id"))
    if value is None or value == "":
        return None
    return str(value)


def parse_tweet_line(line: str, lineno: int | None = None) -> TweetRecord:
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError("malformed-json", lineno, str(exc)) from None
    if not isinstance(obj, dict):
        raise ParseError("malformed-json", lineno, "not a JSON object")

    tweet_id = _id_of(obj)
    user = obj.get("user")
    handle = user.get("screen_name") if isinstance(user, dict) else None
    text = obj.get("text", obj.get("full_text"))
    if tweet_id is None:
        raise ParseError("missing-required-field", lineno, "id")
    if not isinstance(handle, str) or not normalize_handle(handle):
        raise ParseError("missing-required-field", lineno, "user.screen_name")
    if not isinstance(text, str):
        raise ParseError("missing-required-field", lineno, "text")

    retweeted_author = retweeted_id = None
    rs = obj.get("retweeted_status")
    if isinstance(rs, dict):
        rs_user = rs.get("user")
        rs_handle = rs_user.get("screen_name") if isinstance(rs_user, dict) else None
        retweeted_id = _id_of(rs)
        if retweeted_id is None or not isinstance(rs_handle, str):
            raise ParseError("missing-required-field", lineno, "retweeted_status")
        retweeted_author = normalize_handle(rs_handle)

    entities = obj.get("entities") or {}
    hashtags = _dedupe(
        h.get("text", "").lstrip("#").lower()
        for h in entities.get("hashtags") or ()
        if isinstance(h, dict)
    )
    domains = _dedupe(
        registrable_domain(u.get("expanded_url") or u.get("url") or "")
        for u in entities.get("urls") or ()
        if isinstance(u, dict)
    )

    return TweetRecord(
        tweet_id=tweet_id,
        author=normalize_handle(handle),
        tweet_key=retweeted_id if retweeted_id is not None else text_key(text),
        text=text,
        retweeted_author=retweeted_author,
        retweeted_id=retweeted_id,
        hashtags=hashtags,
        domains=domains,
    )


def serialize_record(rec: TweetRecord) -> str:
    """Inverse of :func:`parse_tweet_line` for the supported field subset."""
    obj: dict = {"id": rec.tweet_id, "user": {"screen_name": rec.author}, "text": rec.text}
    if rec.retweeted_author is not None:
        obj["retweeted_status"] = {
            "id": rec.retweeted_id if rec.retweeted_id is not None else rec.tweet_key,
            "user": {"screen_name": rec.retweeted_author},
        }
    obj["entities"] = {
        "hashtags": [{"text": h} for h in rec.hashtags],
        "urls": [{"expanded_url": f"https://{d}/"} for d in rec.domains],
    }
    return json.dumps(obj, ensure_ascii=False)


@dataclass
class ParseStats:
    n_lines: int = 0
    n_parsed: int = 0
    n_errors: int = 0

    def merge(self, other: "ParseStats") -> None:
        self.n_lines += other.n_lines
        self.n_parsed += other.n_parsed
        self.n_errors += other.n_errors


def iter_records(
    lines: Iterable[str], stats: ParseStats | None = None, start: int = 1
) -> Iterator[TweetRecord]:
    """Parse lines, skipping blanks and counting (not raising on) bad ones."""
    if stats is None:
        stats = ParseStats()
    for lineno, line in enumerate(lines, start=start):
        if not line.strip():
            continue
        stats.n_lines += 1
        try:
            rec = parse_tweet_line(line, lineno)
        except ParseError as exc:
            stats.n_errors += 1
            logger.debug("skipping %s", exc)
            continue
        stats.n_parsed += 1
        yield rec


def read_records(paths: Iterable[str | Path], stats: ParseStats | None = None) -> Iterator[TweetRecord]:
    if stats is None:
        stats = ParseStats()
    for path in paths:
        path = Path(path)
        if not path.exists():
            raise MissingInputError(str(path))
        with open(path, encoding="utf-8", errors="replace") as fh:
            yield from iter_records(fh, stats)
    if stats.n_errors:
        logger.warning("skipped %d unparseable lines of %d", stats.n_errors, stats.n_lines)


def build_profiles(records: Iterable[TweetRecord]) -> dict[str, UserProfile]:
    profiles: dict[str, UserProfile] = {}
    for rec in records:
        prof = profiles.get(rec.author)
        if prof is None:
            prof = profiles[rec.author] = UserProfile(rec.author)
        prof.add(rec)
    return profiles


def merge_profiles(tables: Iterable[Mapping[str, UserProfile]]) -> dict[str, UserProfile]:
    merged: dict[str, UserProfile] = {}
    for table in tables:
        for user, prof in table.items():
            if user in merged:
                merged[user].merge(prof)
            else:
                merged[user] = UserProfile(user)
                merged[user].merge(prof)
    return merged


def _profile_chunk(args: tuple[list[str], int]) -> tuple[dict[str, UserProfile], ParseStats]:
    lines, start = args
    stats = ParseStats()
    return build_profiles(iter_records(lines, stats, start=start)), stats


def _chunked_lines(paths, chunk_size):
    for path in paths:
        path = Path(path)
        if not path.exists():
            raise MissingInputError(str(path))
        with open(path, encoding="utf-8", errors="replace") as fh:
            chunk, start = [], 1
            for lineno, line in enumerate(fh, start=1):
                chunk.append(line)
                if len(chunk) >= chunk_size:
                    yield chunk, start
                    chunk, start = [], lineno + 1
            if chunk:
                yield chunk, start


def load_profiles(
    paths: Iterable[str | Path],
    workers: int = 1,
    chunk_size: int = 50_000,
    stats: ParseStats | None = None,
) -> dict[str, UserProfile]:
    """Read JSONL tweet files into a profile table.

    With ``workers > 1`` line chunks are parsed in worker processes and the
    partial tables merged; the result is identical to the serial path.
    """
    if stats is None:
        stats = ParseStats()
    paths = list(paths)
    if workers <= 1:
        return build_profiles(read_records(paths, stats))
    tables = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for table, part in pool.map(_profile_chunk, _chunked_lines(paths, chunk_size)):
            tables.append(table)
            stats.merge(part)
    if stats.n_errors:
        logger.warning("skipped %d unparseable lines of %d", stats.n_errors, stats.n_lines)
    return merge_profiles(tables)


def write_profiles(profiles: Mapping[str, UserProfile], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for user in sorted(profiles):
            fh.write(profiles[user].to_json() + "\n")


def read_profiles(path: str | Path) -> dict[str, UserProfile]:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(str(path))
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                prof = UserProfile.from_json(line)
                out[prof.user] = prof
    return out
