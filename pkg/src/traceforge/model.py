"""Artifact model: issues, commits, source files, trace links, developer
identities, and the per-project archive store.

Timestamps are UTC epoch seconds throughout. Raw values are stored as
ingested; clock skew between the issue tracker and the version control
system is never corrected here (tolerances live in the feature thresholds).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

SCHEMA_VERSION = 1

ISSUE_KEY_RE = re.compile(r"^[A-Z][A-Z0-9]*-[0-9]+$")
COMMIT_HASH_RE = re.compile(r"^[0-9a-fA-F]{4,64}$")


class TraceForgeError(Exception):
    """Base class for all data and usage errors raised by this package."""


class UnknownArtifactError(TraceForgeError, LookupError):
    """A commit hash or issue key was not found in the store."""


class IntegrityError(TraceForgeError):
    """An archive or store violates referential integrity."""


class SchemaVersionError(TraceForgeError):
    """An archive was written with an unsupported schema version."""


class IssueKind(Enum):
    BUG = "Bug"
    IMPROVEMENT = "Improvement"


class LinkOrigin(Enum):
    EXPLICIT_TAG = "ExplicitTag"
    CLASSIFIER = "Classifier"
    HUMAN_ACCEPTED = "HumanAccepted"
    HUMAN_REJECTED = "HumanRejected"


# Origins that count as an actual link; a human rejection records the verdict
# but never links the pair.
LINKING_ORIGINS = frozenset(
    {LinkOrigin.EXPLICIT_TAG, LinkOrigin.CLASSIFIER, LinkOrigin.HUMAN_ACCEPTED}
)


@dataclass(frozen=True)
class Issue:
    """A resolved bug or improvement with its temporal lifecycle."""

    key: str
    kind: IssueKind
    summary: str
    description: str
    created: int
    resolved: int
    assignee: Optional[int] = None
    status: str = "Resolved"
    resolution: str = "Fixed"

    def __post_init__(self) -> None:
        if not ISSUE_KEY_RE.match(self.key):
            raise IntegrityError(f"malformed issue key: {self.key!r}")
        if self.created < 0 or self.resolved < 0:
            raise IntegrityError(f"{self.key}: negative timestamp")
        if self.created > self.resolved:
            raise IntegrityError(
                f"{self.key}: created ({self.created}) after resolved ({self.resolved})"
            )

    @property
    def text(self) -> str:
        return f"{self.summary}\n{self.description}"


@dataclass(frozen=True)
class FilePath:
    """A repository-relative path plus an opaque handle to the file content
    as stored by the enclosing commit (None when no snapshot was captured)."""

    path: str
    content_ref: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.path:
            raise IntegrityError("empty file path")
        if "\\" in self.path:
            raise IntegrityError(f"file path must use '/' separators: {self.path!r}")


@dataclass(frozen=True)
class Commit:
    """An atomic change set: message, timestamp, committer, modified files."""

    hash: str
    message: str
    committed: int
    committer: Optional[int] = None
    files: frozenset[FilePath] = frozenset()

    def __post_init__(self) -> None:
        if not COMMIT_HASH_RE.match(self.hash):
            raise IntegrityError(f"malformed commit hash: {self.hash!r}")
        if self.committed < 0:
            raise IntegrityError(f"{self.hash}: negative timestamp")
        paths = [f.path for f in self.files]
        if len(paths) != len(set(paths)):
            raise IntegrityError(f"{self.hash}: duplicate paths in file set")

    @property
    def paths(self) -> frozenset[str]:
        return frozenset(f.path for f in self.files)


@dataclass(frozen=True)
class TraceLink:
    """A commit-to-issue association with its origin and optional score."""

    commit_hash: str
    issue_key: str
    origin: LinkOrigin
    score: Optional[float] = None
    decided_by: Optional[str] = None
    decided_at: Optional[int] = None

    def __post_init__(self) -> None:
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise IntegrityError(
                f"link {self.commit_hash}->{self.issue_key}: score {self.score} not in [0,1]"
            )

    @property
    def pair(self) -> tuple[str, str]:
        return (self.commit_hash, self.issue_key)


@dataclass(frozen=True)
class DeveloperIdentity:
    """One unified developer across the issue tracker and version control."""

    user_id: int
    names: frozenset[str] = frozenset()
    logins: frozenset[str] = frozenset()
    sources: frozenset[str] = frozenset()


class ProjectStore:
    """All artifacts of one project plus their relations.

    Readers treat a loaded store as immutable; mutations (new links from
    classifier runs or human verdicts) go through :meth:`add_link` and are
    expected to be serialized by a single writer.
    """

    def __init__(
        self,
        project_key: str,
        issues: Iterable[Issue] = (),
        commits: Iterable[Commit] = (),
        links: Iterable[TraceLink] = (),
        identities: Iterable[DeveloperIdentity] = (),
        snapshots: Optional[dict[str, str]] = None,
    ) -> None:
        self.project_key = project_key
        self.issues: dict[str, Issue] = {}
        self.commits: dict[str, Commit] = {}
        self.identities: list[DeveloperIdentity] = list(identities)
        self.snapshots: dict[str, str] = dict(snapshots or {})
        self._links: dict[tuple[str, str, LinkOrigin], TraceLink] = {}
        self._pair_origins: dict[tuple[str, str], set[LinkOrigin]] = {}
        for issue in issues:
            self.add_issue(issue)
        for commit in commits:
            self.add_commit(commit)
        for link in links:
            self.add_link(link)

    # -- construction -----------------------------------------------------

    def add_issue(self, issue: Issue) -> None:
        if issue.key in self.issues:
            raise IntegrityError(f"duplicate issue key: {issue.key}")
        self.issues[issue.key] = issue

    def add_commit(self, commit: Commit) -> None:
        if commit.hash in self.commits:
            raise IntegrityError(f"duplicate commit hash: {commit.hash}")
        self.commits[commit.hash] = commit

    def add_link(self, link: TraceLink) -> None:
        missing = []
        if link.commit_hash not in self.commits:
            missing.append(f"commit {link.commit_hash}")
        if link.issue_key not in self.issues:
            missing.append(f"issue {link.issue_key}")
        if missing:
            raise IntegrityError(
                f"link {link.commit_hash}->{link.issue_key} references missing "
                + " and ".join(missing)
            )
        ident = (link.commit_hash, link.issue_key, link.origin)
        if ident in self._links:
            raise IntegrityError(
                f"duplicate link {link.commit_hash}->{link.issue_key} "
                f"with origin {link.origin.value}"
            )
        self._links[ident] = link
        self._pair_origins.setdefault(link.pair, set()).add(link.origin)

    # -- queries ----------------------------------------------------------

    @property
    def links(self) -> list[TraceLink]:
        return sorted(
            self._links.values(),
            key=lambda l: (l.commit_hash, l.issue_key, l.origin.value),
        )

    def require_commit(self, commit_hash: str) -> Commit:
        try:
            return self.commits[commit_hash]
        except KeyError:
            raise UnknownArtifactError(f"unknown commit hash: {commit_hash}") from None

    def require_issue(self, issue_key: str) -> Issue:
        try:
            return self.issues[issue_key]
        except KeyError:
            raise UnknownArtifactError(f"unknown issue key: {issue_key}") from None

    def is_linked(self, commit_hash: str, issue_key: str) -> bool:
        """True iff an ExplicitTag, Classifier, or HumanAccepted link exists."""
        self.require_commit(commit_hash)
        self.require_issue(issue_key)
        origins = self._pair_origins.get((commit_hash, issue_key), set())
        return bool(origins & LINKING_ORIGINS)

    def mod(self, commit_hash: str) -> frozenset[FilePath]:
        """The commit's filtered source file set (possibly empty)."""
        return self.require_commit(commit_hash).files

    def links_with_origins(self, origins: Iterable[LinkOrigin]) -> list[TraceLink]:
        wanted = set(origins)
        return [l for l in self.links if l.origin in wanted]

    def linked_pairs(self, origins: Iterable[LinkOrigin] = LINKING_ORIGINS) -> set[tuple[str, str]]:
        wanted = set(origins)
        return {pair for pair, origin_set in self._pair_origins.items() if origin_set & wanted}

    def has_link(self, commit_hash: str, issue_key: str, origin: LinkOrigin) -> bool:
        return (commit_hash, issue_key, origin) in self._links

    def issues_of_kind(self, kind: IssueKind) -> list[Issue]:
        return sorted(
            (i for i in self.issues.values() if i.kind is kind), key=lambda i: i.key
        )

    def resolve_snapshot(self, ref: Optional[str]) -> Optional[str]:
        if ref is None:
            return None
        return self.snapshots.get(ref)

    # -- equality (round-trip law) -----------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProjectStore):
            return NotImplemented
        return (
            self.project_key == other.project_key
            and self.issues == other.issues
            and self.commits == other.commits
            and self._links == other._links
            and sorted(self.identities, key=lambda d: d.user_id)
            == sorted(other.identities, key=lambda d: d.user_id)
            and self.snapshots == other.snapshots
        )

    def __repr__(self) -> str:
        return (
            f"ProjectStore({self.project_key!r}, issues={len(self.issues)}, "
            f"commits={len(self.commits)}, links={len(self._links)})"
        )


# -- archive persistence ----------------------------------------------------
#
# One directory per project: line-delimited JSON for the bulk record types
# (diff-able, streamable), plus meta.json carrying the schema version.

ISSUES_FILE = "issues.jsonl"
COMMITS_FILE = "commits.jsonl"
LINKS_FILE = "links.jsonl"
IDENTITIES_FILE = "identities.json"
SNAPSHOTS_FILE = "snapshots.jsonl"
META_FILE = "meta.json"


def _issue_to_json(issue: Issue) -> dict:
    return {
        "key": issue.key,
        "kind": issue.kind.value,
        "summary": issue.summary,
        "description": issue.description,
        "created": issue.created,
        "resolved": issue.resolved,
        "assignee": issue.assignee,
        "status": issue.status,
        "resolution": issue.resolution,
    }


def _issue_from_json(obj: dict) -> Issue:
    return Issue(
        key=obj["key"],
        kind=IssueKind(obj["kind"]),
        summary=obj["summary"],
        description=obj["description"],
        created=obj["created"],
        resolved=obj["resolved"],
        assignee=obj.get("assignee"),
        status=obj.get("status", "Resolved"),
        resolution=obj.get("resolution", "Fixed"),
    )


def _commit_to_json(commit: Commit) -> dict:
    return {
        "hash": commit.hash,
        "message": commit.message,
        "committed": commit.committed,
        "committer": commit.committer,
        "files": [
            {"path": f.path, "content_ref": f.content_ref}
            for f in sorted(commit.files, key=lambda f: f.path)
        ],
    }


def _commit_from_json(obj: dict) -> Commit:
    return Commit(
        hash=obj["hash"],
        message=obj["message"],
        committed=obj["committed"],
        committer=obj.get("committer"),
        files=frozenset(
            FilePath(path=f["path"], content_ref=f.get("content_ref"))
            for f in obj.get("files", [])
        ),
    )


def _link_to_json(link: TraceLink) -> dict:
    return {
        "commit_hash": link.commit_hash,
        "issue_key": link.issue_key,
        "origin": link.origin.value,
        "score": link.score,
        "decided_by": link.decided_by,
        "decided_at": link.decided_at,
    }


def _link_from_json(obj: dict) -> TraceLink:
    return TraceLink(
        commit_hash=obj["commit_hash"],
        issue_key=obj["issue_key"],
        origin=LinkOrigin(obj["origin"]),
        score=obj.get("score"),
        decided_by=obj.get("decided_by"),
        decided_at=obj.get("decided_at"),
    )


def _identity_to_json(ident: DeveloperIdentity) -> dict:
    return {
        "user_id": ident.user_id,
        "names": sorted(ident.names),
        "logins": sorted(ident.logins),
        "sources": sorted(ident.sources),
    }


def _identity_from_json(obj: dict) -> DeveloperIdentity:
    return DeveloperIdentity(
        user_id=obj["user_id"],
        names=frozenset(obj.get("names", [])),
        logins=frozenset(obj.get("logins", [])),
        sources=frozenset(obj.get("sources", [])),
    )


def _write_jsonl(path: Path, records: Iterable[dict]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    out = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def save_project(store: ProjectStore, path: str | Path) -> Path:
    """Write the store as an archive directory; returns the directory path."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / META_FILE).write_text(
        json.dumps(
            {"schema_version": SCHEMA_VERSION, "project_key": store.project_key},
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    _write_jsonl(
        root / ISSUES_FILE,
        (_issue_to_json(i) for i in sorted(store.issues.values(), key=lambda i: i.key)),
    )
    _write_jsonl(
        root / COMMITS_FILE,
        (_commit_to_json(c) for c in sorted(store.commits.values(), key=lambda c: c.hash)),
    )
    _write_jsonl(root / LINKS_FILE, (_link_to_json(l) for l in store.links))
    (root / IDENTITIES_FILE).write_text(
        json.dumps(
            [_identity_to_json(d) for d in sorted(store.identities, key=lambda d: d.user_id)],
            ensure_ascii=False,
            sort_keys=True,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    if store.snapshots:
        _write_jsonl(
            root / SNAPSHOTS_FILE,
            ({"ref": ref, "text": text} for ref, text in sorted(store.snapshots.items())),
        )
    return root


def load_project(path: str | Path) -> ProjectStore:
    """Load an archive directory, checking schema version and integrity."""
    root = Path(path)
    meta_path = root / META_FILE
    if not meta_path.exists():
        raise IntegrityError(f"not a project archive (missing {META_FILE}): {root}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    version = meta.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"archive schema version {version!r} unsupported (expected {SCHEMA_VERSION})"
        )

    store = ProjectStore(project_key=meta.get("project_key", "UNKNOWN"))
    for obj in _read_jsonl(root / ISSUES_FILE):
        store.add_issue(_issue_from_json(obj))
    for obj in _read_jsonl(root / COMMITS_FILE):
        store.add_commit(_commit_from_json(obj))
    for obj in _read_jsonl(root / SNAPSHOTS_FILE):
        store.snapshots[obj["ref"]] = obj["text"]
    store.identities = [
        _identity_from_json(obj)
        for obj in json.loads((root / IDENTITIES_FILE).read_text(encoding="utf-8"))
    ] if (root / IDENTITIES_FILE).exists() else []

    bad: list[str] = []
    for obj in _read_jsonl(root / LINKS_FILE):
        link = _link_from_json(obj)
        if link.commit_hash not in store.commits:
            bad.append(f"commit {link.commit_hash}")
        if link.issue_key not in store.issues:
            bad.append(f"issue {link.issue_key}")
        if not bad:
            store.add_link(link)
    if bad:
        raise IntegrityError(
            "archive links reference missing artifacts: " + ", ".join(sorted(set(bad)))
        )
    return store


def append_link(store: ProjectStore, root: str | Path, link: TraceLink) -> None:
    """Add a link to the in-memory store and append it to the archive.

    Append-only on links.jsonl so concurrent readers of the directory never
    observe a torn rewrite. Callers serialize writes (single-writer contract).
    """
    store.add_link(link)
    with (Path(root) / LINKS_FILE).open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(_link_to_json(link), ensure_ascii=False, sort_keys=True))
        fh.write("\n")
