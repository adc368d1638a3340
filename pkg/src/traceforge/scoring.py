"""Shared scoring front end over a project archive.

Loads the per-profile model bundles and corpus indexes once and ranks a
commit's candidate issues; used by the recommend/augment commands and by
the HTTP service. Candidates of each issue kind are scored by the bundle
trained for that profile.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Optional

from .features import (
    AttributeComputer,
    CandidateConfig,
    build_matrix,
    candidate_pairs,
)
from .learn import RepetitionBundle, load_bundle
from .model import LINKING_ORIGINS, Commit, IssueKind, ProjectStore
from .textsim import CorpusIndex

PROFILE_DIRS = {IssueKind.BUG: "bug", IssueKind.IMPROVEMENT: "improvement"}


def bundle_path(root: Path, profile: str, attr_set: str, classifier: str) -> Path:
    return root / "models" / profile / attr_set / f"{classifier}.model"


class ProjectScorer:
    def __init__(
        self,
        store: ProjectStore,
        root: str | Path,
        cfg: CandidateConfig = CandidateConfig(),
        attr_set: str = "all",
        classifier: str = "random-forest",
        profiles: Optional[Iterable[IssueKind]] = None,
    ) -> None:
        self.store = store
        self.root = Path(root)
        self.cfg = cfg
        self.bundles: dict[IssueKind, RepetitionBundle] = {}
        self.computers: dict[IssueKind, AttributeComputer] = {}
        wanted = set(PROFILE_DIRS if profiles is None else profiles)
        for kind, profile in PROFILE_DIRS.items():
            if kind not in wanted:
                continue
            path = bundle_path(self.root, profile, attr_set, classifier)
            index_file = self.root / "index" / profile / "corpus.json"
            if not path.exists() or not index_file.exists():
                continue
            self.bundles[kind] = load_bundle(path)
            index = CorpusIndex.load(self.root / "index" / profile)
            self.computers[kind] = AttributeComputer(
                store, cfg, index, link_origins=LINKING_ORIGINS
            )

    @property
    def available(self) -> bool:
        return bool(self.bundles)

    def rank_candidates(
        self, commit: Commit, k: Optional[int] = None
    ) -> list[tuple[str, float]]:
        """Candidate issues ranked by mean bundle score, ties by issue key."""
        results: list[tuple[str, float]] = []
        for kind, bundle in self.bundles.items():
            computer = self.computers[kind]
            pairs = candidate_pairs(self.store, self.cfg, commits=[commit], kind=kind)
            rows = build_matrix(computer, pairs, bundle.attr_names)
            results.extend(
                (pair.issue_key, bundle.score(row)) for pair, row in zip(pairs, rows)
            )
        results.sort(key=lambda t: (-t[1], t[0]))
        return results if k is None else results[:k]
