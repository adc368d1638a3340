"""Deterministic generator of desk-scale projects with known ground truth.

Every commit belongs to exactly one issue. Signal strength controls how
strongly the commit betrays its issue: committer equals assignee, the
message shares the issue's topic words, and the committed files carry the
issue vocabulary. A fraction of the true links is withheld from explicit
tagging; those withheld pairs are the planted "missing links" a classifier
should recover. Identical seeds produce identical stores.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .ingest import extract_explicit_links
from .model import (
    Commit,
    DeveloperIdentity,
    FilePath,
    Issue,
    IssueKind,
    ProjectStore,
)
from .rng import Xorshift64Star

HOUR = 3600

_CONSONANTS = "bcdfghklmnprstvz"
_VOWELS = "aeiou"

_FILLER = (
    "update handling logic so the build stays stable and clean",
    "minor cleanup of related code paths after review comments",
    "adjust behavior to match expected output for all inputs",
    "refactor internals and keep the public surface unchanged",
    "ensure consistent state when the operation is retried",
)

_SUMMARY_TEMPLATES = (
    "{0} {1} fails when {2} is enabled",
    "improve {0} {1} handling for {2} {3}",
    "{0} {2} produces wrong {1} output",
    "add support for {3} in {0} {1}",
    "unexpected {1} state after {2} {3} change",
)


@dataclass(frozen=True)
class SynthParams:
    n_issues: int = 200
    n_commits: int = 400
    tag_omission_rate: float = 0.3
    signal_strength: float = 1.0
    n_developers: int = 8
    project_key: str = "SYN"

    def __post_init__(self) -> None:
        if self.n_issues < 1 or self.n_commits < 1 or self.n_developers < 1:
            raise ValueError("counts must be positive")
        if not 0.0 <= self.tag_omission_rate <= 1.0:
            raise ValueError("tag_omission_rate must be in [0, 1]")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ValueError("signal_strength must be in [0, 1]")


@dataclass
class SynthResult:
    store: ProjectStore
    true_links: set[tuple[str, str]]
    withheld: set[tuple[str, str]] = field(default_factory=set)

    def write_ground_truth(self, directory: str | Path) -> Path:
        path = Path(directory) / "ground_truth.jsonl"
        with path.open("w", encoding="utf-8") as fh:
            for commit_hash, issue_key in sorted(self.true_links):
                fh.write(
                    json.dumps(
                        {
                            "commit_hash": commit_hash,
                            "issue_key": issue_key,
                            "withheld": (commit_hash, issue_key) in self.withheld,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
        return path


def load_ground_truth(path: str | Path) -> tuple[set[tuple[str, str]], set[tuple[str, str]]]:
    true_links: set[tuple[str, str]] = set()
    withheld: set[tuple[str, str]] = set()
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            pair = (obj["commit_hash"], obj["issue_key"])
            true_links.add(pair)
            if obj.get("withheld"):
                withheld.add(pair)
    return true_links, withheld


def _word(rng: Xorshift64Star) -> str:
    return "".join(
        _CONSONANTS[rng.randrange(len(_CONSONANTS))] + _VOWELS[rng.randrange(len(_VOWELS))]
        for _ in range(3)
    )


def synth_project(seed: int, params: SynthParams = SynthParams()) -> SynthResult:
    rng = Xorshift64Star(seed)
    start = 1_500_000_000

    identities = [
        DeveloperIdentity(
            user_id=d,
            names=frozenset({f"Dev {d}"}),
            logins=frozenset({f"dev{d}@example.org"}),
            sources=frozenset({"IssueTracker", "VersionControl"}),
        )
        for d in range(params.n_developers)
    ]

    issues: list[Issue] = []
    topics: list[list[str]] = []
    file_sets: list[list[str]] = []
    for i in range(params.n_issues):
        words = [_word(rng) for _ in range(4)]
        created = start + i * 6 * HOUR + rng.randrange(2 * HOUR)
        duration = 24 * HOUR + rng.randrange(96 * HOUR)
        assignee = rng.randrange(params.n_developers)
        kind = IssueKind.BUG if rng.random() < 0.5 else IssueKind.IMPROVEMENT
        summary = _SUMMARY_TEMPLATES[rng.randrange(len(_SUMMARY_TEMPLATES))].format(*words)
        description = " ".join(
            [
                f"The {words[0]} {words[1]} component misbehaves around {words[2]}.",
                _FILLER[rng.randrange(len(_FILLER))],
                f"Expected {words[3]} {words[1]} behavior, observed {words[2]} errors.",
            ]
        )
        issues.append(
            Issue(
                key=f"{params.project_key}-{i + 1}",
                kind=kind,
                summary=summary,
                description=description,
                created=created,
                resolved=created + duration,
                assignee=assignee,
            )
        )
        topics.append(words)
        paths = [
            f"src/main/{words[0]}/{words[1].capitalize()}{words[2].capitalize()}.java",
            f"src/main/{words[0]}/{words[3].capitalize()}Support.java",
        ]
        if rng.random() < 0.3:
            paths.append("src/main/core/Registry.java")
        file_sets.append(paths)

    # at least one commit per issue, the surplus spread at random
    issue_of_commit = list(range(params.n_issues))
    for _ in range(params.n_commits - len(issue_of_commit)):
        issue_of_commit.append(rng.randrange(params.n_issues))
    issue_of_commit = issue_of_commit[: params.n_commits]
    rng.shuffle(issue_of_commit)

    commits: list[Commit] = []
    snapshots: dict[str, str] = {}
    true_links: set[tuple[str, str]] = set()
    withheld: set[tuple[str, str]] = set()
    signal = params.signal_strength
    for c, issue_idx in enumerate(issue_of_commit):
        issue = issues[issue_idx]
        words = topics[issue_idx]
        committed = issue.created + rng.randrange(max(issue.resolved - issue.created, 1))
        committer = (
            issue.assignee
            if rng.random() < signal
            else rng.randrange(params.n_developers)
        )
        body_words = [w for w in words if rng.random() < 0.35 + 0.65 * signal]
        if not body_words:
            body_words = [words[rng.randrange(len(words))]]
        message_body = (
            f"fix {' '.join(body_words)} "
            + _FILLER[rng.randrange(len(_FILLER))]
        )
        tagged = rng.random() >= params.tag_omission_rate
        message = f"{issue.key}: {message_body}" if tagged else message_body

        commit_hash = f"{c:08x}" + rng.hex_digits(32)
        chosen_paths = [p for p in file_sets[issue_idx] if rng.random() < 0.7]
        if not chosen_paths:
            chosen_paths = [file_sets[issue_idx][0]]
        files = []
        for path in chosen_paths:
            ref = f"{commit_hash}:{path}"
            class_words = " ".join(words)
            snapshots[ref] = (
                f"package {words[0]}; class {path.rsplit('/', 1)[-1][:-5]} "
                f"{{ {class_words} {class_words} handle {words[1]} {words[2]} }}"
            )
            files.append(FilePath(path=path, content_ref=ref))
        commits.append(
            Commit(
                hash=commit_hash,
                message=message,
                committed=committed,
                committer=committer,
                files=frozenset(files),
            )
        )
        true_links.add((commit_hash, issue.key))
        if not tagged:
            withheld.add((commit_hash, issue.key))

    links = extract_explicit_links(commits, issues)
    store = ProjectStore(
        project_key=params.project_key,
        issues=issues,
        commits=commits,
        links=sorted(links, key=lambda l: (l.commit_hash, l.issue_key)),
        identities=identities,
        snapshots=snapshots,
    )
    return SynthResult(store=store, true_links=true_links, withheld=withheld)
