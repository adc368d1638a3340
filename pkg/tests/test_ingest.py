from __future__ import annotations

import pytest

from traceforge.ingest import (
    FileFilterConfig,
    IdentityIndex,
    Person,
    RawCommitRecord,
    RawIssueRecord,
    build_store,
    extract_explicit_links,
    filter_paths,
    format_commit_export,
    import_commits,
    import_issues,
    parse_commit_export,
    parse_issue_export,
    parse_timestamp,
    unify_identities,
)
from traceforge.model import IntegrityError, IssueKind


def _issue_record(**overrides) -> RawIssueRecord:
    base = dict(
        key="GROOVY-5223",
        raw_type="improvement",
        status="Closed",
        resolution="Fixed",
        summary="Bytecode optimizations: make use of LDC for class literals",
        description="Class literals are currently loaded using generated methods.",
        created="2011-12-30T09:59:00Z",
        resolved="2012-01-03T02:29:00Z",
        assignee_name="Jane D",
        assignee_login="jd@example.org",
    )
    base.update(overrides)
    return RawIssueRecord(**base)


def _commit_record(**overrides) -> RawCommitRecord:
    base = dict(
        hash="b1bb2abfde414950238ff4d895bf5e182793500a",
        author_name="Jane D",
        author_email="jd@example.org",
        committer_name="Jane D",
        committer_email="jd@example.org",
        committed="2012-02-01T10:00:00Z",
        message="GROVY-5082: remove synthetic interface loading helper class",
        changed_paths=("src/main/org/codehaus/groovy/classgen/AsmClassGenerator.java",),
    )
    base.update(overrides)
    return RawCommitRecord(**base)


# -- timestamps ---------------------------------------------------------------

def test_parse_timestamp_utc_and_offset():
    assert parse_timestamp("1970-01-01T00:00:00Z") == 0
    assert parse_timestamp("1970-01-01T01:00:00+01:00") == 0
    assert parse_timestamp("1970-01-01T00:00:05") == 5  # naive treated as UTC


# -- issue import --------------------------------------------------------------

def test_type_mapping_enhancement_becomes_improvement():
    issues, report = import_issues(
        [_issue_record(raw_type="enhancement", status="Closed", resolution="Done")]
    )
    assert [i.kind for i in issues] == [IssueKind.IMPROVEMENT]
    assert report.kept == 1


def test_type_mapping_bug():
    issues, _ = import_issues([_issue_record(raw_type="Bug")])
    assert issues[0].kind is IssueKind.BUG


def test_unmapped_type_dropped():
    issues, report = import_issues([_issue_record(raw_type="task")])
    assert issues == []
    assert report.dropped["type"] == 1


def test_unfinished_status_dropped():
    issues, report = import_issues([_issue_record(raw_type="bug", status="Open")])
    assert issues == []
    assert report.dropped["status"] == 1


def test_unaccepted_resolution_dropped():
    _, report = import_issues([_issue_record(resolution="Won't Fix")])
    assert report.dropped["resolution"] == 1


def test_missing_lifecycle_dropped():
    _, report = import_issues([_issue_record(resolved=None)])
    assert report.dropped["missing-lifecycle"] == 1


# -- file filtering --------------------------------------------------------------

def test_filter_keeps_main_drops_test():
    cfg = FileFilterConfig()
    kept = filter_paths(
        ["src/main/A.java", "src/test/java/ATest.java"], cfg
    )
    assert kept == ["src/main/A.java"]


def test_filter_drops_docs_and_build_descriptors():
    cfg = FileFilterConfig()
    assert filter_paths(["README.md"], cfg) == []
    assert filter_paths(["src/main/notes.txt", "src/main/pom.xml"], cfg) == []


def test_filter_keeps_sibling_sources():
    cfg = FileFilterConfig()
    kept = filter_paths(["src/main/a/B.java", "src/main/a/C.java"], cfg)
    assert kept == ["src/main/a/B.java", "src/main/a/C.java"]


def test_filter_monotone_in_include_globs():
    wide = FileFilterConfig(include_globs=("src/main/**", "lib/**"))
    narrow = FileFilterConfig(include_globs=("src/main/**",))
    paths = ["src/main/A.java", "lib/B.java", "docs/C.java"]
    assert set(filter_paths(paths, narrow)) <= set(filter_paths(paths, wide))


def test_import_commits_keeps_empty_file_sets():
    commits, _ = import_commits([_commit_record(changed_paths=("README.md",))])
    assert len(commits) == 1
    assert commits[0].files == frozenset()


def test_import_commits_duplicate_hash_errors():
    records = [_commit_record(), _commit_record()]
    with pytest.raises(IntegrityError, match="b1bb2abf"):
        import_commits(records)


# -- commit export format ----------------------------------------------------------

def test_commit_export_round_trip():
    records = [
        _commit_record(),
        _commit_record(
            hash="c" * 40,
            message="multi\nline message\nwith GROOVY-1 inside",
            changed_paths=("src/main/A.java", "src/main/B.java"),
        ),
    ]
    assert parse_commit_export(format_commit_export(records)) == records


def test_commit_export_bit_layout():
    text = format_commit_export([_commit_record(changed_paths=("a/b.java", "c/d.java"))])
    head, _, tail = text.partition("\x02")
    assert head.split("\n")[0] == "b1bb2abfde414950238ff4d895bf5e182793500a"
    assert tail == "a/b.java\x00c/d.java"


def test_issue_export_parsing():
    records = parse_issue_export(
        '[{"key": "A-1", "raw_type": "bug", "status": "Resolved", '
        '"resolution": "Fixed", "summary": "s", "description": "d", '
        '"created": "2020-01-01T00:00:00Z", "resolved": "2020-01-02T00:00:00Z"}]'
    )
    assert records[0].key == "A-1"
    assert records[0].assignee_name == ""


# -- explicit link extraction --------------------------------------------------------

def test_extract_links_misspelled_key_yields_nothing():
    issues, _ = import_issues([
        _issue_record(key="GROOVY-5082", raw_type="bug"),
        _issue_record(key="GROOVY-3252", raw_type="improvement"),
    ])
    commits, _ = import_commits([_commit_record()])
    links = extract_explicit_links(commits, issues)
    assert links == set()


def test_extract_links_matching_and_multiples():
    issues, _ = import_issues([
        _issue_record(key="GROOVY-5082", raw_type="bug"),
        _issue_record(key="GROOVY-3252", raw_type="improvement"),
    ])
    commits, _ = import_commits([
        _commit_record(hash="a" * 40, message="GROOVY-3252: use LDC"),
        _commit_record(hash="b" * 40,
                       message="merge GROOVY-3252 and GROOVY-5082 fixes"),
        _commit_record(hash="c" * 40, message="fix typo"),
        _commit_record(hash="d" * 40, message="GROOVY-9999: unknown issue"),
    ])
    links = extract_explicit_links(commits, issues)
    pairs = {(l.commit_hash, l.issue_key) for l in links}
    assert pairs == {
        ("a" * 40, "GROOVY-3252"),
        ("b" * 40, "GROOVY-3252"),
        ("b" * 40, "GROOVY-5082"),
    }


def test_extract_links_idempotent(timeline_store):
    store, _ = timeline_store
    commits = list(store.commits.values())
    issues = list(store.issues.values())
    once = extract_explicit_links(commits, issues)
    twice = extract_explicit_links(commits, issues)
    assert once == twice


# -- identity unification ----------------------------------------------------------

def test_same_login_across_systems_merges():
    identities = unify_identities(
        [Person("Jane D", "jd@x.org")], [Person("jane d", "jd@x.org")]
    )
    assert len(identities) == 1
    assert identities[0].sources == {"IssueTracker", "VersionControl"}


def test_distinct_people_stay_distinct():
    identities = unify_identities(
        [Person("Alice", "alice@x.org")], [Person("Bob", "bob@x.org")]
    )
    assert len(identities) == 2
    assert [d.user_id for d in identities] == [0, 1]


def test_name_rule_fires_only_across_systems():
    # same name, different logins, both inside the tracker: two people
    within = unify_identities(
        [Person("J. Doe", "jdoe"), Person("J. Doe", "jdoe9")], []
    )
    assert len(within) == 2
    # same name across tracker and version control: one person
    across = unify_identities(
        [Person("J. Doe", "jdoe")], [Person("J. Doe", "jdoe2")]
    )
    assert len(across) == 1
    assert across[0].logins == {"jdoe", "jdoe2"}


def test_diacritics_and_case_fold_in_names():
    identities = unify_identities(
        [Person("René Müller", "rm")], [Person("rene  muller", "rene@x.org")]
    )
    assert len(identities) == 1


def test_identities_partition_everyone():
    issue_people = [Person(f"P{i}", f"p{i}@x.org") for i in range(5)]
    commit_people = [Person(f"P{i}", f"p{i}@x.org") for i in range(3, 8)]
    identities = unify_identities(issue_people, commit_people)
    index = IdentityIndex(identities)
    resolved = [index.resolve(p.name, p.login) for p in issue_people + commit_people]
    assert all(uid is not None for uid in resolved)
    assert sorted({d.user_id for d in identities}) == list(range(len(identities)))
    # logins disjoint across identities
    seen: set[str] = set()
    for ident in identities:
        assert not (ident.logins & seen)
        seen |= ident.logins


# -- full ingest ---------------------------------------------------------------------

def test_build_store_links_and_identities():
    issues = [
        _issue_record(key="GROOVY-5082", raw_type="bug",
                      assignee_name="Jane D", assignee_login="jd@example.org"),
        _issue_record(key="GROOVY-3252", raw_type="improvement",
                      assignee_name="Tom B", assignee_login="tb@example.org"),
    ]
    commits = [
        _commit_record(hash="a" * 40, message="GROOVY-3252: use LDC"),
        _commit_record(hash="b" * 40, message="no tag here"),
    ]
    store, report = build_store("GROOVY", issues, commits)
    assert report["explicit_links"] == 1
    assert store.is_linked("a" * 40, "GROOVY-3252")
    # committer resolves to the same unified identity as the Jira assignee
    jane = store.issues["GROOVY-5082"].assignee
    assert store.commits["a" * 40].committer == jane
