import json

import numpy as np
import pytest

from stancepol.ingest import UserProfile
from stancepol.simgraph import graph_from_weights
from stancepol.stance import Stance


def tweet(tid, author, text="x", rt=None, hashtags=(), urls=()):
    obj = {"id": str(tid), "user": {"screen_name": author}, "text": text}
    if rt is not None:
        rt_author, rt_id = rt
        obj["retweeted_status"] = {"id": str(rt_id), "user": {"screen_name": rt_author}}
    obj["entities"] = {
        "hashtags": [{"text": h} for h in hashtags],
        "urls": [{"expanded_url": u} for u in urls],
    }
    return json.dumps(obj)


def profile_with_keys(user, keys_to_authors, repeat=1):
    """Profile whose retweets hit each key (``key -> original author``)."""
    p = UserProfile(user)
    for key, author in keys_to_authors.items():
        p.retweeted_keys[key] += repeat
        p.retweeted_accounts[author] += repeat
        p.key_authors[key] = author
        p.n_tweets += repeat
    return p


def two_cliques(n_per_class, intra=0.5):
    n = 2 * n_per_class
    W = np.zeros((n, n))
    W[:n_per_class, :n_per_class] = intra
    W[n_per_class:, n_per_class:] = intra
    np.fill_diagonal(W, 1.0)
    labels = [Stance.SUPP] * n_per_class + [Stance.OPP] * n_per_class
    return graph_from_weights(W, labels)


@pytest.fixture
def cliques():
    return two_cliques(30)


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
