"""Candidate commit-issue pairs and their 18-attribute characterization.

Attributes a1-a16 are process-related (stakeholder identity, temporal
position, nearest linked commits, concurrent workload); a17/a18 measure
textual similarity under the n-gram vector space model. Time differences
are fractional hours. MISSING is an explicit None, never a sentinel number,
so downstream classifiers can treat absence as absence.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

from .model import (
    Commit,
    Issue,
    IssueKind,
    LinkOrigin,
    ProjectStore,
)
from .textsim import CorpusIndex, cosine

HOUR = 3600.0

# Reserved categorical value standing in for an absent committer/assignee.
UNKNOWN_USER = -1

MISSING = None


class Label(str, Enum):
    LINKED = "Linked"
    NON_LINKED = "NonLinked"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class CandidateConfig:
    """The two temporal tolerances, kept under separate names.

    epsilon_candidate bounds how long after issue resolution a commit may
    still be considered a candidate; epsilon_close is the much wider band
    used by the closeness flag a7.
    """

    epsilon_candidate_hours: float = 30.0
    epsilon_close_hours: float = 60.0

    def __post_init__(self) -> None:
        if self.epsilon_candidate_hours <= 0 or self.epsilon_close_hours <= 0:
            raise ValueError("epsilon values must be positive")


@dataclass(frozen=True)
class CandidatePair:
    commit_hash: str
    issue_key: str
    label: Label = Label.UNKNOWN

    @property
    def pair(self) -> tuple[str, str]:
        return (self.commit_hash, self.issue_key)


def is_candidate(commit: Commit, issue: Issue, cfg: CandidateConfig = CandidateConfig()) -> bool:
    """Causality plus a bounded tail after resolution."""
    eps = cfg.epsilon_candidate_hours * HOUR
    return issue.created <= commit.committed <= issue.resolved + eps


def overlap(commit_a: Commit, commit_b: Commit) -> float:
    """Shared-file ratio of two commits, 0 when either file set is empty."""
    paths_a, paths_b = commit_a.paths, commit_b.paths
    if not paths_a or not paths_b:
        return 0.0
    return len(paths_a & paths_b) / max(len(paths_a), len(paths_b))


def candidate_pairs(
    store: ProjectStore,
    cfg: CandidateConfig = CandidateConfig(),
    commits: Optional[Iterable[Commit]] = None,
    issues: Optional[Iterable[Issue]] = None,
    kind: Optional[IssueKind] = None,
    linked_pairs: Optional[set[tuple[str, str]]] = None,
) -> list[CandidatePair]:
    """All (commit, issue) pairs satisfying is_candidate, sorted by ids.

    When ``linked_pairs`` is given, pairs get Linked/NonLinked labels from
    it; otherwise they are Unknown.
    """
    commit_list = sorted(
        store.commits.values() if commits is None else commits, key=lambda c: c.hash
    )
    issue_list = sorted(
        store.issues.values() if issues is None else issues, key=lambda i: i.key
    )
    if kind is not None:
        issue_list = [i for i in issue_list if i.kind is kind]
    eps = cfg.epsilon_candidate_hours * HOUR

    # sweep over issues sorted by creation; stop once creation passes the
    # commit timestamp (equivalent to brute-force cross-product filtering)
    by_created = sorted(issue_list, key=lambda i: (i.created, i.key))
    out: list[CandidatePair] = []
    for commit in commit_list:
        t = commit.committed
        for issue in by_created:
            if issue.created > t:
                break
            if t <= issue.resolved + eps:
                label = Label.UNKNOWN
                if linked_pairs is not None:
                    label = (
                        Label.LINKED
                        if (commit.hash, issue.key) in linked_pairs
                        else Label.NON_LINKED
                    )
                out.append(CandidatePair(commit.hash, issue.key, label))
    out.sort(key=lambda p: (p.commit_hash, p.issue_key))
    return out


# -- attribute schema ---------------------------------------------------------

NUMERIC = "numeric"
CATEGORICAL = "categorical"

ATTRIBUTES: tuple[tuple[str, str], ...] = (
    ("a1", CATEGORICAL),   # committer user id
    ("a2", CATEGORICAL),   # issue assignee user id
    ("a3", CATEGORICAL),   # committer == assignee flag
    ("a4", NUMERIC),       # hours from issue creation to commit
    ("a5", NUMERIC),       # hours from commit to issue resolution
    ("a6", CATEGORICAL),   # committed inside the active development window
    ("a7", CATEGORICAL),   # |a5| below the closeness tolerance
    ("a8", NUMERIC),       # hours since closest previous linked commit
    ("a9", NUMERIC),       # file overlap with closest previous linked commit
    ("a10", CATEGORICAL),  # committer of closest previous linked commit
    ("a11", NUMERIC),      # hours until closest subsequent linked commit
    ("a12", NUMERIC),      # file overlap with closest subsequent linked commit
    ("a13", CATEGORICAL),  # committer of closest subsequent linked commit
    ("a14", NUMERIC),      # issues open at commit time
    ("a15", NUMERIC),      # of those, issues assigned to this issue's assignee
    ("a16", NUMERIC),      # existing links to the issue before this commit
    ("a17", NUMERIC),      # similarity of commit message and issue text
    ("a18", NUMERIC),      # best similarity of a committed file and issue text
)

ATTRIBUTE_KINDS = dict(ATTRIBUTES)
ATTRIBUTE_NAMES = tuple(name for name, _ in ATTRIBUTES)

ATTRIBUTE_SETS: dict[str, tuple[str, ...]] = {
    "process": ATTRIBUTE_NAMES[:16],
    "similarity": ("a6", "a17", "a18"),
    "all": ATTRIBUTE_NAMES,
}


def schema_for(attr_names: Sequence[str]) -> list[tuple[str, str]]:
    unknown = [n for n in attr_names if n not in ATTRIBUTE_KINDS]
    if unknown:
        raise KeyError(f"unknown attributes: {unknown}")
    return [(n, ATTRIBUTE_KINDS[n]) for n in attr_names]


@dataclass(frozen=True)
class AttributeVector:
    a1: int
    a2: int
    a3: int
    a4: float
    a5: float
    a6: int
    a7: int
    a8: Optional[float]
    a9: Optional[float]
    a10: Optional[int]
    a11: Optional[float]
    a12: Optional[float]
    a13: Optional[int]
    a14: int
    a15: int
    a16: int
    a17: float
    a18: float

    def values(self, attr_names: Sequence[str] = ATTRIBUTE_NAMES) -> list:
        return [getattr(self, name) for name in attr_names]


class AttributeComputer:
    """Computes attribute vectors against an immutable store + index.

    ``link_origins`` selects which links count as existing for the
    neighbor/link-count attributes (training on historical data uses the
    explicit tags only).
    """

    def __init__(
        self,
        store: ProjectStore,
        cfg: CandidateConfig = CandidateConfig(),
        index: Optional[CorpusIndex] = None,
        link_origins: Iterable[LinkOrigin] = (LinkOrigin.EXPLICIT_TAG,),
    ) -> None:
        self.store = store
        self.cfg = cfg
        self.index = index
        self.unreadable_snapshots = 0

        self._linked_commits: dict[str, list[Commit]] = {}
        for link in store.links_with_origins(link_origins):
            self._linked_commits.setdefault(link.issue_key, [])
            commit = store.commits[link.commit_hash]
            if commit not in self._linked_commits[link.issue_key]:
                self._linked_commits[link.issue_key].append(commit)
        for commits in self._linked_commits.values():
            commits.sort(key=lambda c: (c.committed, c.hash))

        self._issues_by_created = sorted(
            store.issues.values(), key=lambda i: (i.created, i.key)
        )
        self._open_issue_cache: dict[str, list[Issue]] = {}
        self._doc_vectors: dict[str, dict[str, float]] = {}

    # -- attribute groups --------------------------------------------------

    def stakeholder_attrs(self, commit: Commit, issue: Issue) -> tuple[int, int, int]:
        a1 = commit.committer if commit.committer is not None else UNKNOWN_USER
        a2 = issue.assignee if issue.assignee is not None else UNKNOWN_USER
        a3 = int(
            commit.committer is not None
            and issue.assignee is not None
            and commit.committer == issue.assignee
        )
        return a1, a2, a3

    def temporal_attrs(self, commit: Commit, issue: Issue) -> tuple[float, float, int, int]:
        a4 = (commit.committed - issue.created) / HOUR
        a5 = (issue.resolved - commit.committed) / HOUR
        a6 = int(issue.created <= commit.committed <= issue.resolved)
        a7 = int(abs(a5) < self.cfg.epsilon_close_hours)
        return a4, a5, a6, a7

    def neighbor_attrs(self, commit: Commit, issue: Issue):
        linked = self._linked_commits.get(issue.key, [])
        previous = [c for c in linked if c.committed < commit.committed]
        following = [c for c in linked if c.committed > commit.committed]
        if previous:
            prev = previous[-1]
            a8 = (commit.committed - prev.committed) / HOUR
            a9 = overlap(prev, commit)
            a10 = prev.committer if prev.committer is not None else UNKNOWN_USER
        else:
            a8 = a9 = a10 = MISSING
        if following:
            nxt = following[0]
            a11 = (nxt.committed - commit.committed) / HOUR
            a12 = overlap(nxt, commit)
            a13 = nxt.committer if nxt.committer is not None else UNKNOWN_USER
        else:
            a11 = a12 = a13 = MISSING
        return a8, a9, a10, a11, a12, a13

    def workload_attrs(self, commit: Commit, issue: Issue) -> tuple[int, int, int]:
        open_issues = self._open_issues_at(commit)
        a14 = len(open_issues)
        a15 = sum(1 for other in open_issues if other.assignee == issue.assignee)
        linked = self._linked_commits.get(issue.key, [])
        a16 = sum(1 for c in linked if c.committed < commit.committed)
        return a14, a15, a16

    def similarity_attrs(self, commit: Commit, issue: Issue) -> tuple[float, float]:
        if self.index is None:
            return 0.0, 0.0
        issue_vec = self._vector("issue:" + issue.key, issue.text)
        message_vec = self._vector("commit:" + commit.hash, commit.message)
        a17 = cosine(message_vec, issue_vec)
        a18 = 0.0
        for f in sorted(commit.files, key=lambda f: f.path):
            text = self.store.resolve_snapshot(f.content_ref)
            if text is None:
                if f.content_ref is not None:
                    self.unreadable_snapshots += 1
                continue
            a18 = max(a18, cosine(self._vector("snap:" + f.content_ref, text), issue_vec))
        return a17, a18

    def compute(self, pair: CandidatePair) -> AttributeVector:
        commit = self.store.require_commit(pair.commit_hash)
        issue = self.store.require_issue(pair.issue_key)
        a1, a2, a3 = self.stakeholder_attrs(commit, issue)
        a4, a5, a6, a7 = self.temporal_attrs(commit, issue)
        a8, a9, a10, a11, a12, a13 = self.neighbor_attrs(commit, issue)
        a14, a15, a16 = self.workload_attrs(commit, issue)
        a17, a18 = self.similarity_attrs(commit, issue)
        return AttributeVector(
            a1, a2, a3, a4, a5, a6, a7, a8, a9, a10, a11, a12, a13, a14, a15, a16, a17, a18
        )

    # -- helpers -----------------------------------------------------------

    def _open_issues_at(self, commit: Commit) -> list[Issue]:
        cached = self._open_issue_cache.get(commit.hash)
        if cached is None:
            t = commit.committed
            cached = [i for i in self._issues_by_created if i.created <= t <= i.resolved]
            self._open_issue_cache[commit.hash] = cached
        return cached

    def _vector(self, cache_key: str, text: str) -> dict[str, float]:
        vec = self._doc_vectors.get(cache_key)
        if vec is None:
            vec = self.index.vectorize_text(text)
            self._doc_vectors[cache_key] = vec
        return vec


def build_matrix(
    computer: AttributeComputer,
    pairs: Sequence[CandidatePair],
    attr_names: Sequence[str] = ATTRIBUTE_NAMES,
) -> list[list]:
    """Attribute rows aligned with ``pairs``."""
    return [computer.compute(p).values(attr_names) for p in pairs]


def write_feature_csv(path, pairs: Sequence[CandidatePair], rows: Sequence[Sequence]) -> None:
    """Feature matrix export; MISSING values serialize as empty cells."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["hash", "key", *ATTRIBUTE_NAMES, "label"])
        for pair, row in zip(pairs, rows):
            cells = ["" if v is None else v for v in row]
            writer.writerow([pair.commit_hash, pair.issue_key, *cells, pair.label.value])


def corpus_texts(
    store: ProjectStore,
    issues: Optional[Iterable[Issue]] = None,
    commits: Optional[Iterable[Commit]] = None,
) -> list[str]:
    """The idf corpus: issue texts, commit messages, distinct file snapshots."""
    issue_list = sorted(
        store.issues.values() if issues is None else issues, key=lambda i: i.key
    )
    commit_list = sorted(
        store.commits.values() if commits is None else commits, key=lambda c: c.hash
    )
    texts = [i.text for i in issue_list]
    texts += [c.message for c in commit_list]
    seen_refs: set[str] = set()
    for commit in commit_list:
        for f in sorted(commit.files, key=lambda f: f.path):
            if f.content_ref and f.content_ref not in seen_refs:
                seen_refs.add(f.content_ref)
                text = store.resolve_snapshot(f.content_ref)
                if text is not None:
                    texts.append(text)
    return texts
