"""Parsing of issue-tracker and version-control exports into a ProjectStore.

Inputs are intermediate text exports rather than live systems, which keeps
ingest testable offline:

* Issue export: a JSON array of raw issue records (see RawIssueRecord).
* Commit export: records separated by ``\\x01``; within a record the fields
  ``hash``, ``committer_name``, ``committer_email``, ``author_name``,
  ``author_email``, ``iso_date`` each end with a newline, the free-form
  message ends with ``\\x02``, and the changed paths follow separated by
  ``\\x00``.

ISO-8601 timestamps are normalized to UTC epoch seconds; values without an
explicit offset are taken as UTC.
"""

from __future__ import annotations

import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fnmatch import fnmatchcase
from typing import Iterable, NamedTuple, Optional, Sequence

from .model import (
    Commit,
    DeveloperIdentity,
    FilePath,
    IntegrityError,
    Issue,
    IssueKind,
    LinkOrigin,
    ProjectStore,
    TraceForgeError,
    TraceLink,
)

RECORD_SEP = "\x01"
MESSAGE_END = "\x02"
PATH_SEP = "\x00"

SOURCE_TRACKER = "IssueTracker"
SOURCE_VCS = "VersionControl"

# Jira type/state mapping: only finished bugs and improvements survive.
TYPE_MAP = {"bug": IssueKind.BUG, "improvement": IssueKind.IMPROVEMENT, "enhancement": IssueKind.IMPROVEMENT}
ACCEPTED_STATUS = {"resolved", "closed"}
ACCEPTED_RESOLUTION = {"fixed", "done"}


class ExportFormatError(TraceForgeError):
    """An export file does not follow the documented format."""


@dataclass(frozen=True)
class RawIssueRecord:
    key: str
    raw_type: str
    status: str
    resolution: str
    summary: str
    description: str
    created: Optional[str]
    resolved: Optional[str]
    assignee_name: str = ""
    assignee_login: str = ""


@dataclass(frozen=True)
class RawCommitRecord:
    hash: str
    author_name: str
    author_email: str
    committer_name: str
    committer_email: str
    committed: str
    message: str
    changed_paths: tuple[str, ...] = ()


@dataclass(frozen=True)
class FileFilterConfig:
    """Which changed paths count as source code for the model."""

    include_globs: tuple[str, ...] = ("src/main/**",)
    exclude_globs: tuple[str, ...] = ("src/test/java/**",)
    excluded_extensions: tuple[str, ...] = ("md", "txt", "xml", "html", "properties")
    excluded_names: tuple[str, ...] = ("pom.xml",)

    def keeps(self, path: str) -> bool:
        path = path.lstrip("./") if path.startswith("./") else path
        name = path.rsplit("/", 1)[-1]
        if name.lower() in self.excluded_names:
            return False
        ext = name.rsplit(".", 1)[-1].lower() if "." in name else ""
        if ext in self.excluded_extensions:
            return False
        if any(fnmatchcase(path, pat) for pat in self.exclude_globs):
            return False
        return any(fnmatchcase(path, pat) for pat in self.include_globs)


def filter_paths(paths: Iterable[str], cfg: FileFilterConfig) -> list[str]:
    return sorted({p for p in paths if p and cfg.keeps(p)})


def parse_timestamp(value: str) -> int:
    """ISO-8601 string -> UTC epoch seconds (naive values are taken as UTC)."""
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise ExportFormatError(f"unparseable timestamp: {value!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


# -- export parsing ----------------------------------------------------------

def parse_issue_export(text: str) -> list[RawIssueRecord]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ExportFormatError(f"issue export is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ExportFormatError("issue export must be a JSON array")
    records = []
    for obj in data:
        records.append(
            RawIssueRecord(
                key=str(obj.get("key", "")),
                raw_type=str(obj.get("raw_type", "")),
                status=str(obj.get("status", "")),
                resolution=str(obj.get("resolution", "")),
                summary=str(obj.get("summary", "")),
                description=str(obj.get("description", "")),
                created=obj.get("created"),
                resolved=obj.get("resolved"),
                assignee_name=str(obj.get("assignee_name", "") or ""),
                assignee_login=str(obj.get("assignee_login", "") or ""),
            )
        )
    return records


def parse_commit_export(text: str) -> list[RawCommitRecord]:
    records = []
    for chunk in text.split(RECORD_SEP):
        if not chunk.strip():
            continue
        head, sep, tail = chunk.partition(MESSAGE_END)
        if not sep:
            raise ExportFormatError("commit record missing message terminator")
        parts = head.split("\n", 6)
        if len(parts) < 7:
            raise ExportFormatError(
                f"commit record has {len(parts)} header fields, expected 7"
            )
        commit_hash, c_name, c_email, a_name, a_email, iso_date, message = parts
        paths = tuple(p for p in tail.split(PATH_SEP) if p.strip())
        records.append(
            RawCommitRecord(
                hash=commit_hash.strip(),
                committer_name=c_name.strip(),
                committer_email=c_email.strip(),
                author_name=a_name.strip(),
                author_email=a_email.strip(),
                committed=iso_date.strip(),
                message=message,
                changed_paths=paths,
            )
        )
    return records


def format_commit_export(records: Iterable[RawCommitRecord]) -> str:
    """Inverse of parse_commit_export; used by tests and the synth exporter."""
    chunks = []
    for r in records:
        head = "\n".join(
            [r.hash, r.committer_name, r.committer_email, r.author_name, r.author_email, r.committed, r.message]
        )
        chunks.append(head + MESSAGE_END + PATH_SEP.join(r.changed_paths))
    return RECORD_SEP.join(chunks)


# -- developer identity unification ------------------------------------------

class Person(NamedTuple):
    name: str
    login: str


def normalize_login(login: str) -> str:
    return login.strip().lower()


def normalize_name(name: str) -> str:
    decomposed = unicodedata.normalize("NFKD", name)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return " ".join(stripped.lower().split())


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller root so user ids follow first-seen order
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


class IdentityIndex:
    """Lookup from (source, name, login) to the unified user id."""

    def __init__(self, identities: Sequence[DeveloperIdentity]) -> None:
        self.identities = list(identities)
        self._by_login: dict[str, int] = {}
        self._by_name: dict[str, int] = {}
        for ident in identities:
            for login in ident.logins:
                self._by_login.setdefault(normalize_login(login), ident.user_id)
            for name in ident.names:
                self._by_name.setdefault(normalize_name(name), ident.user_id)

    def resolve(self, name: str = "", login: str = "") -> Optional[int]:
        if login and normalize_login(login) in self._by_login:
            return self._by_login[normalize_login(login)]
        if name and normalize_name(name) in self._by_name:
            return self._by_name[normalize_name(name)]
        return None


def unify_identities(
    issue_people: Sequence[Person], commit_people: Sequence[Person]
) -> list[DeveloperIdentity]:
    """Merge developer records from both systems into unified identities.

    Within one system people merge only on equal normalized login. Across
    systems they merge on equal login, or failing that on equal normalized
    full name. Every person ends up in exactly one identity; user ids are
    dense and assigned in first-seen order.
    """
    tagged: list[tuple[str, Person]] = [(SOURCE_TRACKER, p) for p in issue_people]
    tagged += [(SOURCE_VCS, p) for p in commit_people]
    uf = _UnionFind(len(tagged))

    by_system_login: dict[tuple[str, str], int] = {}
    by_login: dict[str, int] = {}
    for i, (source, person) in enumerate(tagged):
        login = normalize_login(person.login)
        if not login:
            continue
        key = (source, login)
        if key in by_system_login:
            uf.union(by_system_login[key], i)
        else:
            by_system_login[key] = i
        if login in by_login:
            uf.union(by_login[login], i)
        else:
            by_login[login] = i

    # Cross-system name rule: a name merges groups only when it occurs in
    # both systems (never two same-named strangers within one system); once
    # bridged, every person carrying the name joins the same group.
    names_seen: dict[str, dict[str, int]] = {}
    for i, (source, person) in enumerate(tagged):
        name = normalize_name(person.name)
        if not name:
            continue
        names_seen.setdefault(name, {}).setdefault(source, i)
    bridged_anchor = {
        name: min(per.values()) for name, per in names_seen.items() if len(per) == 2
    }
    for i, (_source, person) in enumerate(tagged):
        anchor = bridged_anchor.get(normalize_name(person.name))
        if anchor is not None:
            uf.union(anchor, i)

    roots: dict[int, int] = {}
    members: dict[int, list[tuple[str, Person]]] = {}
    for i, entry in enumerate(tagged):
        root = uf.find(i)
        if root not in roots:
            roots[root] = len(roots)
        members.setdefault(root, []).append(entry)

    identities = []
    for root, uid in sorted(roots.items(), key=lambda kv: kv[1]):
        names = frozenset(p.name.strip() for _, p in members[root] if p.name.strip())
        logins = frozenset(p.login.strip() for _, p in members[root] if p.login.strip())
        sources = frozenset(source for source, _ in members[root])
        identities.append(
            DeveloperIdentity(user_id=uid, names=names, logins=logins, sources=sources)
        )
    return identities


# -- imports ------------------------------------------------------------------

@dataclass
class ImportReport:
    kept: int = 0
    dropped: Counter = field(default_factory=Counter)


def import_issues(
    records: Sequence[RawIssueRecord],
    identity_index: Optional[IdentityIndex] = None,
) -> tuple[list[Issue], ImportReport]:
    """Keep finished bugs/improvements; everything else is dropped and counted."""
    issues: list[Issue] = []
    report = ImportReport()
    seen = set()
    for rec in records:
        kind = TYPE_MAP.get(rec.raw_type.strip().lower())
        if kind is None:
            report.dropped["type"] += 1
            continue
        if rec.status.strip().lower() not in ACCEPTED_STATUS:
            report.dropped["status"] += 1
            continue
        if rec.resolution.strip().lower() not in ACCEPTED_RESOLUTION:
            report.dropped["resolution"] += 1
            continue
        if not rec.created or not rec.resolved:
            report.dropped["missing-lifecycle"] += 1
            continue
        try:
            created = parse_timestamp(rec.created)
            resolved = parse_timestamp(rec.resolved)
        except ExportFormatError:
            report.dropped["bad-timestamp"] += 1
            continue
        if created > resolved:
            report.dropped["lifecycle-order"] += 1
            continue
        key = rec.key.strip()
        if not key or key in seen:
            report.dropped["bad-key"] += 1
            continue
        assignee = None
        if identity_index is not None:
            assignee = identity_index.resolve(rec.assignee_name, rec.assignee_login)
        try:
            issue = Issue(
                key=key,
                kind=kind,
                summary=rec.summary,
                description=rec.description,
                created=created,
                resolved=resolved,
                assignee=assignee,
                status=rec.status.strip(),
                resolution=rec.resolution.strip(),
            )
        except IntegrityError:
            report.dropped["bad-key"] += 1
            continue
        seen.add(key)
        issues.append(issue)
        report.kept += 1
    issues.sort(key=lambda i: i.key)
    return issues, report


def import_commits(
    records: Sequence[RawCommitRecord],
    file_filter: FileFilterConfig = FileFilterConfig(),
    identity_index: Optional[IdentityIndex] = None,
    use_author: bool = False,
) -> tuple[list[Commit], ImportReport]:
    """Build commits with filtered file sets; empty file sets are retained.

    The committer populates the commit identity by default; pass
    ``use_author=True`` to key stakeholder features on the author instead.
    """
    commits: list[Commit] = []
    report = ImportReport()
    seen: set[str] = set()
    for rec in records:
        if rec.hash in seen:
            raise IntegrityError(f"duplicate commit hash in export: {rec.hash}")
        seen.add(rec.hash)
        try:
            committed = parse_timestamp(rec.committed)
        except ExportFormatError:
            report.dropped["bad-timestamp"] += 1
            continue
        name, email = (
            (rec.author_name, rec.author_email)
            if use_author
            else (rec.committer_name, rec.committer_email)
        )
        committer = identity_index.resolve(name, email) if identity_index else None
        paths = filter_paths(rec.changed_paths, file_filter)
        try:
            commit = Commit(
                hash=rec.hash,
                message=rec.message,
                committed=committed,
                committer=committer,
                files=frozenset(FilePath(path=p) for p in paths),
            )
        except IntegrityError:
            report.dropped["bad-hash"] += 1
            continue
        commits.append(commit)
        report.kept += 1
    commits.sort(key=lambda c: c.hash)
    return commits, report


def extract_explicit_links(
    commits: Iterable[Commit], issues: Iterable[Issue]
) -> set[TraceLink]:
    """Links from issue keys written verbatim in commit messages.

    A key must match the case-sensitive pattern ``<PROJECTKEY>-<number>`` on a
    word boundary and must exist among the imported issues; misspelled keys
    yield nothing. Deterministic and idempotent.
    """
    keys = {i.key for i in issues}
    prefixes = sorted({k.split("-", 1)[0] for k in keys})
    if not prefixes:
        return set()
    pattern = re.compile(
        r"\b(?:" + "|".join(re.escape(p) for p in prefixes) + r")-[0-9]+\b"
    )
    links: set[TraceLink] = set()
    for commit in commits:
        for match in pattern.findall(commit.message):
            if match in keys:
                links.add(
                    TraceLink(
                        commit_hash=commit.hash,
                        issue_key=match,
                        origin=LinkOrigin.EXPLICIT_TAG,
                    )
                )
    return links


def people_from_records(
    issue_records: Sequence[RawIssueRecord], commit_records: Sequence[RawCommitRecord]
) -> tuple[list[Person], list[Person]]:
    """Distinct people per system in first-seen order.

    Both the committer and the author of each commit enter unification, so
    either can later be resolved to a user id.
    """
    issue_people: list[Person] = []
    seen: set[Person] = set()
    for rec in issue_records:
        p = Person(rec.assignee_name.strip(), rec.assignee_login.strip())
        if (p.name or p.login) and p not in seen:
            seen.add(p)
            issue_people.append(p)
    commit_people: list[Person] = []
    seen = set()
    for rec in commit_records:
        for p in (
            Person(rec.committer_name.strip(), rec.committer_email.strip()),
            Person(rec.author_name.strip(), rec.author_email.strip()),
        ):
            if (p.name or p.login) and p not in seen:
                seen.add(p)
                commit_people.append(p)
    return issue_people, commit_people


def build_store(
    project_key: str,
    issue_records: Sequence[RawIssueRecord],
    commit_records: Sequence[RawCommitRecord],
    file_filter: FileFilterConfig = FileFilterConfig(),
    use_author: bool = False,
    snapshots: Optional[dict[str, str]] = None,
) -> tuple[ProjectStore, dict]:
    """Full ingest: identities, issues, commits, explicit links."""
    issue_people, commit_people = people_from_records(issue_records, commit_records)
    identities = unify_identities(issue_people, commit_people)
    index = IdentityIndex(identities)
    issues, issue_report = import_issues(issue_records, index)
    commits, commit_report = import_commits(
        commit_records, file_filter, index, use_author=use_author
    )
    links = extract_explicit_links(commits, issues)
    store = ProjectStore(
        project_key=project_key,
        issues=issues,
        commits=commits,
        links=sorted(links, key=lambda l: (l.commit_hash, l.issue_key)),
        identities=identities,
        snapshots=snapshots,
    )
    report = {
        "issues_kept": issue_report.kept,
        "issues_dropped": dict(issue_report.dropped),
        "commits_kept": commit_report.kept,
        "commits_dropped": dict(commit_report.dropped),
        "explicit_links": len(links),
        "identities": len(identities),
    }
    return store, report
