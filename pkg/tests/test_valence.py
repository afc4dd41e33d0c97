import csv

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stancepol.errors import DomainError
from stancepol.ingest import TweetRecord
from stancepol.stance import LabelStore, Stance, StanceLabel
from stancepol.synth import SynthConfig, generate
from stancepol.valence import (
    Bin,
    ElementKind,
    build_report,
    bucket,
    element_report,
    read_media_metadata,
    tally_profiles,
    tally_records,
    top_elements,
    valence,
    write_bin_aggregates,
    write_report,
    write_top_elements,
)

from oracles import bucket_direct, valence_direct


def test_valence_examples():
    assert valence(5, 100, 0, 100) == 1.0
    assert valence(0, 100, 5, 100) == -1.0
    assert valence(10, 200, 5, 100) == 0.0
    assert valence(30, 100, 10, 100) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("args", [(0, 100, 0, 100), (1, 0, 1, 10), (1, 10, 1, 0), (-1, 10, 2, 10)])
def test_valence_domain_errors(args):
    with pytest.raises(DomainError):
        valence(*args)


@pytest.mark.parametrize(
    "v,expected",
    [(-1.0, Bin.STRONG_OPP), (-0.7, Bin.STRONG_OPP), (-0.6, Bin.OPP), (-0.2, Bin.NEUTRAL),
     (0.0, Bin.NEUTRAL), (0.2, Bin.SUPP), (0.6, Bin.STRONG_SUPP), (1.0, Bin.STRONG_SUPP)],
)
def test_bucket_edges(v, expected):
    assert bucket(v) is expected


def test_bucket_out_of_range():
    with pytest.raises(DomainError):
        bucket(1.0000001)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 10**7), st.integers(0, 10**6), st.integers(1, 10**7))
def test_valence_properties(tf_s, tot_s, tf_o, tot_o):
    if tf_s + tf_o == 0:
        return
    v = valence(tf_s, tot_s, tf_o, tot_o)
    assert -1.0 <= v <= 1.0
    assert v == pytest.approx(-valence(tf_o, tot_o, tf_s, tot_s), abs=1e-12)
    assert abs(v - valence_direct(tf_s, tot_s, tf_o, tot_o)) <= 1e-12
    assert bucket(v).value == bucket_direct(v)
    assert bucket(-v) is bucket(v).mirror() or abs(abs(v) - 0.2) < 1e-12 or abs(abs(v) - 0.6) < 1e-12


def _labels():
    return LabelStore({"s1": StanceLabel(Stance.SUPP), "s2": StanceLabel(Stance.SUPP),
                       "o1": StanceLabel(Stance.OPP), "n": StanceLabel(Stance.NEUTRAL)})


def _rec(i, author, tags=(), rt=None, domains=()):
    return TweetRecord(str(i), author, str(i), "", rt, None if rt is None else f"r{i}", tuple(tags), tuple(domains))


def test_single_sided_element():
    recs = [_rec(i, "s1", ["x"]) for i in range(150)] + [_rec(1000 + i, "o1", ["y"]) for i in range(120)]
    rep = element_report(recs, _labels(), "hashtag")
    by = {e.element: e for e in rep.entries}
    assert (by["x"].valence, by["x"].bin) == (1.0, Bin.STRONG_SUPP)
    assert (by["y"].valence, by["y"].bin) == (-1.0, Bin.STRONG_OPP)


def test_frequency_floor_and_totals():
    recs = ([_rec(i, "s1", ["rare"]) for i in range(99)]
            + [_rec(200 + i, "s2", ["common"]) for i in range(100)]
            + [_rec(400 + i, "o1", ["other"]) for i in range(100)])
    rep = element_report(recs, _labels(), "hashtag")
    assert [e.element for e in rep.entries] == ["other", "common"]
    # totals still include the filtered element
    assert rep.total_supp == 199 and rep.total_opp == 100


def test_unlabelled_and_neutral_authors_ignored():
    recs = [_rec(1, "n", ["x"]), _rec(2, "zz", ["x"]), _rec(3, "s1", ["x"]), _rec(4, "o1", ["x"])]
    t = tally_records(recs, _labels(), "hashtag")
    assert t.supp == {"x": 1} and t.opp == {"x": 1}


def test_retweeted_account_and_domain_kinds():
    recs = [_rec(1, "s1", rt="cnn", domains=["cnn.com"]), _rec(2, "s1", rt="s1"), _rec(3, "o1", domains=["fox.com"])]
    assert tally_records(recs, _labels(), "retweeted_account").supp == {"cnn": 1}
    assert tally_records(recs, _labels(), ElementKind.DOMAIN).opp == {"fox.com": 1}


def test_per_user_counting():
    recs = [_rec(i, "s1", ["x"]) for i in range(5)] + [_rec(10, "s2", ["x"])]
    assert tally_records(recs, _labels(), "hashtag", per_user=True).supp == {"x": 2}


@pytest.mark.parametrize("per_user", [False, True])
def test_profile_and_record_tallies_agree(per_user):
    c = generate(SynthConfig(n_users_per_class=40, n_influencers_per_class=8, eps=0.3, seed=2))
    for kind in ElementKind:
        a = tally_records(c.records, c.labels, kind, per_user)
        b = tally_profiles(c.tally, c.labels, kind, per_user)
        assert (a.supp, a.opp) == (b.supp, b.opp)


def test_community_exclusive_elements_land_in_strong_bins():
    c = generate(SynthConfig(n_users_per_class=200, n_influencers_per_class=20, eps=0.2, seed=1))
    for kind in ElementKind:
        rep = build_report(tally_profiles(c.tally, c.labels, kind), min_frequency=1)
        for e in rep.entries:
            if e.element.startswith("supp"):
                assert e.bin is Bin.STRONG_SUPP, e
            elif e.element.startswith("opp"):
                assert e.bin is Bin.STRONG_OPP, e


def test_top_lists():
    recs = []
    i = 0
    for tag, n in [("b", 120), ("a", 120), ("c", 300)]:
        for _ in range(n):
            recs.append(_rec(i, "s1", [tag]))
            i += 1
    recs += [_rec(10_000 + j, "o1", ["z"]) for j in range(100)]
    rep = element_report(recs, _labels(), "hashtag")
    assert top_elements(rep.entries, Bin.STRONG_SUPP, 10) == ["c", "a", "b"]
    assert rep.top(Bin.NEUTRAL) == []
    assert rep.top(Bin.STRONG_SUPP, 2) == ["c", "a"]
    assert rep.bin_aggregates()[Bin.STRONG_SUPP] == (3, 540)


def test_report_writers(tmp_path):
    c = generate(SynthConfig(n_users_per_class=60, n_influencers_per_class=10, eps=0.3, seed=2))
    reports = [build_report(tally_profiles(c.tally, c.labels, k), 10) for k in ElementKind]
    (tmp_path / "media.csv").write_text("domain,bias,credibility\nsupp-news1.com,right,low\n")
    media = read_media_metadata(tmp_path / "media.csv")
    write_report(reports[2], tmp_path / "d.csv", media)
    rows = {r["element"]: r for r in csv.DictReader(open(tmp_path / "d.csv"))}
    assert rows["supp-news1.com"]["bias"] == "right"
    write_bin_aggregates(reports, tmp_path / "bins.csv")
    assert len(list(csv.reader(open(tmp_path / "bins.csv")))) == 1 + 15
    write_top_elements(reports, tmp_path / "top.csv", k=10)
    top_rows = list(csv.DictReader(open(tmp_path / "top.csv")))
    lists = {(r["kind"], r["bin"]) for r in top_rows}
    assert len(lists) <= 15
    assert all(int(r["rank"]) <= 10 for r in top_rows)
