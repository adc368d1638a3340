from __future__ import annotations

import pytest

from traceforge.model import (
    Commit,
    DeveloperIdentity,
    FilePath,
    Issue,
    IssueKind,
    LinkOrigin,
    ProjectStore,
    TraceLink,
)

HOUR = 3600


def _hash(n: int) -> str:
    return f"{n:x}" * 40


def _files(*names: str) -> frozenset[FilePath]:
    return frozenset(FilePath(path=f"src/main/app/{n}.java") for n in names)


@pytest.fixture
def timeline_store() -> tuple[ProjectStore, dict]:
    """A small project laid out on an hourly timeline.

    Six issues (four improvements, two bugs), nine commits, six files, and
    four explicit links. Chosen so the interesting relations (overlaps,
    nearest linked commits, open-issue counts) have short hand-checkable
    values; aliases I1..I4, B1, B2, C1..C9 map to the real ids.
    """
    issues = {
        "I1": Issue("TL-1", IssueKind.IMPROVEMENT, "load options", "parse the options list",
                    created=0 * HOUR, resolved=3 * HOUR, assignee=1),
        "I2": Issue("TL-2", IssueKind.IMPROVEMENT, "faster index", "speed up index build",
                    created=3 * HOUR, resolved=5 * HOUR, assignee=2),
        "I3": Issue("TL-3", IssueKind.IMPROVEMENT, "cache results", "cache lookup results",
                    created=7 * HOUR, resolved=10 * HOUR, assignee=1),
        "I4": Issue("TL-4", IssueKind.IMPROVEMENT, "config reload", "reload configuration",
                    created=6 * HOUR, resolved=11 * HOUR, assignee=3),
        "B1": Issue("TL-5", IssueKind.BUG, "crash on save", "saving crashes the editor",
                    created=5 * HOUR, resolved=9 * HOUR, assignee=2),
        "B2": Issue("TL-6", IssueKind.BUG, "broken paging", "pagination skips rows",
                    created=11 * HOUR, resolved=12 * HOUR, assignee=1),
    }
    commits = {
        "C1": Commit(_hash(1), "add option loading", 1 * HOUR, committer=1,
                     files=_files("F1")),
        "C2": Commit(_hash(2), "polish option parsing", 2 * HOUR, committer=1,
                     files=_files("F1", "F2")),
        "C3": Commit(_hash(3), "tweak index layout", 3 * HOUR, committer=2,
                     files=_files("F2")),
        "C4": Commit(_hash(4), "unrelated cleanup", 4 * HOUR, committer=3,
                     files=_files("F3")),
        "C5": Commit(_hash(5), "index speedup", 5 * HOUR, committer=2,
                     files=_files("F2")),
        "C6": Commit(_hash(6), "introduce result cache", 8 * HOUR, committer=1,
                     files=_files("F2")),
        "C7": Commit(_hash(7), "guard save path", 9 * HOUR, committer=2,
                     files=_files("F4", "F5", "F6")),
        "C8": Commit(_hash(8), "apply config reload", 10 * HOUR, committer=3,
                     files=_files("F6")),
        "C9": Commit(_hash(9), "fix save crash", 11 * HOUR, committer=2,
                     files=_files("F4", "F5")),
    }
    links = [
        TraceLink(commits["C1"].hash, issues["I1"].key, LinkOrigin.EXPLICIT_TAG),
        TraceLink(commits["C5"].hash, issues["I2"].key, LinkOrigin.EXPLICIT_TAG),
        TraceLink(commits["C8"].hash, issues["I4"].key, LinkOrigin.EXPLICIT_TAG),
        TraceLink(commits["C9"].hash, issues["B1"].key, LinkOrigin.EXPLICIT_TAG),
    ]
    identities = [
        DeveloperIdentity(user_id=i, names=frozenset({f"Dev {i}"}),
                          logins=frozenset({f"dev{i}@example.org"}),
                          sources=frozenset({"IssueTracker", "VersionControl"}))
        for i in (1, 2, 3)
    ]
    store = ProjectStore(
        project_key="TL",
        issues=issues.values(),
        commits=commits.values(),
        links=links,
        identities=identities,
    )
    names = {alias: issue.key for alias, issue in issues.items()}
    names.update({alias: commit.hash for alias, commit in commits.items()})
    return store, names
