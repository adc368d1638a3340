from __future__ import annotations

import csv
import random

import pytest

from traceforge.features import (
    ATTRIBUTE_NAMES,
    ATTRIBUTE_SETS,
    AttributeComputer,
    CandidateConfig,
    CandidatePair,
    Label,
    MISSING,
    UNKNOWN_USER,
    build_matrix,
    candidate_pairs,
    is_candidate,
    overlap,
    write_feature_csv,
)
from traceforge.model import Commit, FilePath, Issue, IssueKind, LinkOrigin, ProjectStore, TraceLink
from traceforge.textsim import build_index_from_texts, sim

HOUR = 3600


def _commit(hash_char: str, committed_h: float, paths=(), committer=None, message="m"):
    return Commit(
        hash=hash_char * 40,
        message=message,
        committed=int(committed_h * HOUR),
        committer=committer,
        files=frozenset(FilePath(p) for p in paths),
    )


def _issue(key, created_h, resolved_h, kind=IssueKind.BUG, assignee=None,
           summary="s", description="d"):
    return Issue(key, kind, summary, description,
                 created=int(created_h * HOUR), resolved=int(resolved_h * HOUR),
                 assignee=assignee)


# -- candidacy -----------------------------------------------------------------

def test_candidate_requires_causality():
    c = _commit("a", 1.0)
    i = _issue("P-1", 2.0, 5.0)
    assert is_candidate(c, i) is False


def test_candidate_inside_active_window():
    c = _commit("a", 3.0)
    i = _issue("P-1", 2.0, 5.0)
    assert is_candidate(c, i) is True


def test_candidate_epsilon_boundaries():
    i = _issue("P-1", 0.0, 10.0)
    assert is_candidate(_commit("a", 10.0 + 29.0), i) is True
    assert is_candidate(_commit("b", 10.0 + 31.0), i) is False


def test_candidate_generation_equals_brute_force(timeline_store):
    store, _ = timeline_store
    cfg = CandidateConfig()
    fast = {(p.commit_hash, p.issue_key) for p in candidate_pairs(store, cfg)}
    eps = cfg.epsilon_candidate_hours * HOUR
    brute = {
        (c.hash, i.key)
        for c in store.commits.values()
        for i in store.issues.values()
        if i.created <= c.committed <= i.resolved + eps
    }
    assert fast == brute


def test_candidate_labels_from_linked_pairs(timeline_store):
    store, ids = timeline_store
    linked = store.linked_pairs({LinkOrigin.EXPLICIT_TAG})
    pairs = candidate_pairs(store, linked_pairs=linked)
    by_pair = {p.pair: p.label for p in pairs}
    assert by_pair[(ids["C1"], ids["I1"])] is Label.LINKED
    assert by_pair[(ids["C6"], ids["I3"])] is Label.NON_LINKED


# -- overlap -------------------------------------------------------------------

def test_overlap_examples(timeline_store):
    store, ids = timeline_store
    c = store.commits
    assert overlap(c[ids["C1"]], c[ids["C2"]]) == pytest.approx(0.5)
    assert overlap(c[ids["C3"]], c[ids["C4"]]) == 0.0


def test_overlap_identical_sets():
    a = _commit("a", 0, paths=["x/y.java", "x/z.java"])
    b = _commit("b", 1, paths=["x/y.java", "x/z.java"])
    assert overlap(a, b) == 1.0


def test_overlap_empty_side_is_zero():
    a = _commit("a", 0, paths=[])
    b = _commit("b", 1, paths=["x/y.java"])
    assert overlap(a, b) == 0.0


def test_overlap_symmetry_and_range_random():
    rng = random.Random(99)
    pool = [f"p{i}.java" for i in range(8)]
    for _ in range(200):
        a = _commit("a", 0, paths=rng.sample(pool, rng.randint(0, 6)))
        b = _commit("b", 1, paths=rng.sample(pool, rng.randint(0, 6)))
        v = overlap(a, b)
        assert 0.0 <= v <= 1.0
        assert overlap(b, a) == pytest.approx(v)


# -- attribute groups on the timeline fixture ------------------------------------

@pytest.fixture
def computer(timeline_store):
    store, ids = timeline_store
    return AttributeComputer(store), store, ids


def test_temporal_attrs_mid_window(computer):
    comp, store, ids = computer
    vec = comp.compute(CandidatePair(ids["C6"], ids["I3"]))
    assert vec.a4 == pytest.approx(1.0)
    assert vec.a5 == pytest.approx(2.0)
    assert vec.a6 == 1
    assert vec.a7 == 1


def test_neighbor_attrs_previous_commit(computer):
    comp, store, ids = computer
    vec = comp.compute(CandidatePair(ids["C2"], ids["I1"]))
    assert vec.a8 == pytest.approx(1.0)
    assert vec.a9 == pytest.approx(0.5)
    assert vec.a10 == 1
    assert vec.a11 is MISSING and vec.a12 is MISSING and vec.a13 is MISSING


def test_neighbor_attrs_subsequent_commit(computer):
    comp, store, ids = computer
    vec = comp.compute(CandidatePair(ids["C7"], ids["B1"]))
    assert vec.a11 == pytest.approx(2.0)
    assert vec.a12 == pytest.approx(2 / 3)
    assert vec.a13 == 2
    assert vec.a8 is MISSING and vec.a9 is MISSING and vec.a10 is MISSING


def test_workload_attrs(computer):
    comp, store, ids = computer
    vec = comp.compute(CandidatePair(ids["C7"], ids["B1"]))
    assert vec.a14 == 3
    assert vec.a15 == 1  # only B1 itself is assigned to user 2 at that instant
    assert vec.a16 == 0


def test_a7_closeness_boundary():
    issue = _issue("P-1", 0.0, 10.0, assignee=1)
    store_at = lambda h: ProjectStore(
        "P", issues=[issue], commits=[_commit("a", h, committer=1)]
    )
    near = AttributeComputer(store_at(10.0 + 59.0)).compute(
        CandidatePair("a" * 40, "P-1"))
    assert near.a5 == pytest.approx(-59.0)
    assert near.a7 == 1  # |a5| just inside the 60h closeness band
    far = AttributeComputer(store_at(10.0 + 61.0)).compute(
        CandidatePair("a" * 40, "P-1"))
    assert far.a7 == 0


def test_issue_with_no_links_all_neighbors_missing(computer):
    comp, store, ids = computer
    vec = comp.compute(CandidatePair(ids["C6"], ids["I3"]))
    assert (vec.a8, vec.a9, vec.a10) == (MISSING, MISSING, MISSING)
    assert (vec.a11, vec.a12, vec.a13) == (MISSING, MISSING, MISSING)


def test_stakeholder_attrs_same_and_different(computer):
    comp, store, ids = computer
    same = comp.compute(CandidatePair(ids["C6"], ids["I3"]))
    assert (same.a1, same.a2, same.a3) == (1, 1, 1)
    different = comp.compute(CandidatePair(ids["C7"], ids["I3"]))
    assert different.a3 == 0


def test_missing_assignee_uses_reserved_user():
    issue = _issue("P-1", 0.0, 5.0, assignee=None)
    commit = _commit("a", 1.0, committer=4)
    store = ProjectStore("P", issues=[issue], commits=[commit])
    vec = AttributeComputer(store).compute(CandidatePair(commit.hash, issue.key))
    assert vec.a2 == UNKNOWN_USER
    assert vec.a3 == 0


def test_a16_counts_earlier_links_only():
    issue = _issue("P-1", 0.0, 50.0, assignee=1)
    commits = [_commit(ch, t, committer=1) for ch, t in (("a", 1), ("b", 2), ("c", 3))]
    links = [
        TraceLink(commits[0].hash, "P-1", LinkOrigin.EXPLICIT_TAG),
        TraceLink(commits[2].hash, "P-1", LinkOrigin.EXPLICIT_TAG),
    ]
    store = ProjectStore("P", issues=[issue], commits=commits, links=links)
    vec = AttributeComputer(store).compute(CandidatePair(commits[1].hash, "P-1"))
    assert vec.a16 == 1  # only the link strictly before commit b


# -- similarity attributes ----------------------------------------------------------

def test_similarity_identical_message_and_issue():
    issue = _issue("P-1", 0.0, 5.0, summary="cache invalidation",
                   description="rebuild the cache index")
    commit = _commit("a", 1.0, message="cache invalidation rebuild the cache index")
    store = ProjectStore("P", issues=[issue], commits=[commit])
    index = build_index_from_texts([issue.text, commit.message])
    vec = AttributeComputer(store, index=index).compute(
        CandidatePair(commit.hash, issue.key)
    )
    assert vec.a17 == pytest.approx(1.0, abs=1e-9)


def test_a18_zero_without_files():
    issue = _issue("P-1", 0.0, 5.0)
    commit = _commit("a", 1.0, paths=[])
    store = ProjectStore("P", issues=[issue], commits=[commit])
    index = build_index_from_texts([issue.text, commit.message])
    vec = AttributeComputer(store, index=index).compute(
        CandidatePair(commit.hash, issue.key)
    )
    assert vec.a18 == 0.0


def test_a18_takes_maximum_over_files():
    issue = _issue("P-1", 0.0, 5.0, summary="parser overflow",
                   description="the parser overflows on long tokens")
    files = frozenset({
        FilePath("src/main/a/One.java", "ref1"),
        FilePath("src/main/a/Two.java", "ref2"),
    })
    commit = Commit("a" * 40, "fix", 1 * HOUR, files=files)
    snapshots = {
        "ref1": "class One { int unrelated; }",
        "ref2": "class Two { void parser(long tokens) { overflow(); } }",
    }
    store = ProjectStore("P", issues=[issue], commits=[commit], snapshots=snapshots)
    index = build_index_from_texts([issue.text, commit.message, *snapshots.values()])
    vec = AttributeComputer(store, index=index).compute(
        CandidatePair(commit.hash, issue.key)
    )
    sims = [sim(text, issue.text, index) for text in snapshots.values()]
    assert vec.a18 == pytest.approx(max(sims))
    assert vec.a18 > 0


def test_unreadable_snapshot_counts_warning():
    issue = _issue("P-1", 0.0, 5.0)
    commit = Commit("a" * 40, "fix", 1 * HOUR,
                    files=frozenset({FilePath("src/main/A.java", "gone")}))
    store = ProjectStore("P", issues=[issue], commits=[commit])
    index = build_index_from_texts([issue.text])
    comp = AttributeComputer(store, index=index)
    vec = comp.compute(CandidatePair(commit.hash, issue.key))
    assert vec.a18 == 0.0
    assert comp.unreadable_snapshots == 1


# -- ranges and sets ------------------------------------------------------------------

def test_attribute_ranges_on_candidates(timeline_store):
    store, _ = timeline_store
    cfg = CandidateConfig()
    comp = AttributeComputer(store)
    for pair in candidate_pairs(store, cfg):
        vec = comp.compute(pair)
        assert vec.a4 >= 0
        assert vec.a5 >= -cfg.epsilon_candidate_hours
        if vec.a6 == 1:
            assert vec.a4 >= 0 and vec.a5 >= 0
        assert vec.a3 in (0, 1)
        for value in (vec.a9, vec.a12, vec.a17, vec.a18):
            if value is not MISSING:
                assert 0.0 <= value <= 1.0


def test_attribute_sets():
    assert ATTRIBUTE_SETS["similarity"] == ("a6", "a17", "a18")
    assert ATTRIBUTE_SETS["process"] == ATTRIBUTE_NAMES[:16]
    assert ATTRIBUTE_SETS["all"] == ATTRIBUTE_NAMES
    assert set(ATTRIBUTE_SETS["similarity"]) <= set(ATTRIBUTE_SETS["all"])


def test_feature_csv_export(tmp_path, timeline_store):
    store, ids = timeline_store
    comp = AttributeComputer(store)
    pairs = [CandidatePair(ids["C7"], ids["B1"], Label.NON_LINKED)]
    rows = build_matrix(comp, pairs)
    out = tmp_path / "features.csv"
    write_feature_csv(out, pairs, rows)
    with out.open() as fh:
        reader = list(csv.reader(fh))
    assert reader[0] == ["hash", "key", *ATTRIBUTE_NAMES, "label"]
    row = dict(zip(reader[0], reader[1]))
    assert row["a8"] == ""  # MISSING serializes as an empty cell
    assert row["a14"] == "3"
    assert row["label"] == "NonLinked"
