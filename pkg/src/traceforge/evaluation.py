"""Temporal train/test splits, the two evaluation scenarios, statistics,
and blind review batch construction.

Splits are temporal, never cross-validated: the cut point is the resolution
time of the improvement that closes the first 80% of improvements by
creation date, and it is shared by both profiles. Metrics are averaged over
the sub-sampling repetitions; ranking ties break by ascending issue key so
reports are bit-identical across runs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Iterable, NamedTuple, Optional, Sequence

from .features import (
    AttributeComputer,
    CandidateConfig,
    CandidatePair,
    Label,
    build_matrix,
    candidate_pairs,
)
from .learn import RepetitionBundle
from .model import IssueKind, LinkOrigin, ProjectStore, TraceForgeError
from .rng import Xorshift64Star


@dataclass
class ProfileSplit:
    """Candidate pairs of one profile, cut at t_split into train and test."""

    profile: IssueKind
    t_split: int
    train: list[CandidatePair]
    test: list[CandidatePair]


def improvement_split_time(store: ProjectStore, fraction: float = 0.8) -> int:
    improvements = sorted(
        store.issues_of_kind(IssueKind.IMPROVEMENT), key=lambda i: (i.created, i.key)
    )
    if len(improvements) < 5:
        raise TraceForgeError(
            f"need at least 5 improvements for a temporal split, got {len(improvements)}"
        )
    index = math.ceil(fraction * len(improvements)) - 1
    return improvements[index].resolved


def split_profiles(
    store: ProjectStore,
    profile: IssueKind,
    cfg: CandidateConfig = CandidateConfig(),
    truth_origins: Iterable[LinkOrigin] = (LinkOrigin.EXPLICIT_TAG,),
) -> ProfileSplit:
    """Temporal 80/20 split; labels come from the given link origins."""
    t_split = improvement_split_time(store)
    linked = store.linked_pairs(truth_origins)
    profile_issues = store.issues_of_kind(profile)

    train_commits = [c for c in store.commits.values() if c.committed <= t_split]
    test_commits = [c for c in store.commits.values() if c.committed > t_split]
    train_issues = [i for i in profile_issues if i.resolved <= t_split]
    test_issues = [i for i in profile_issues if i.created > t_split]

    train = candidate_pairs(store, cfg, train_commits, train_issues, linked_pairs=linked)
    test = candidate_pairs(store, cfg, test_commits, test_issues, linked_pairs=linked)
    return ProfileSplit(profile=profile, t_split=t_split, train=train, test=test)


def fbeta(precision: float, recall: float, beta: float) -> float:
    """Weighted harmonic mean of precision and recall; 0 on empty denominator."""
    b2 = beta * beta
    denominator = b2 * precision + recall
    if denominator == 0.0:
        return 0.0
    return (1.0 + b2) * precision * recall / denominator


@dataclass
class MetricsReport:
    scenario: str
    precision: float
    recall: float
    f_half: float
    f_two: float
    per_repetition: list[dict] = field(default_factory=list)
    precision_undefined: bool = False
    retrieved: int = 0
    relevant: int = 0
    hits: int = 0

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "precision": round(self.precision, 6),
            "recall": round(self.recall, 6),
            "f0.5": round(self.f_half, 6),
            "f2": round(self.f_two, 6),
            "precision_undefined": self.precision_undefined,
            "retrieved": self.retrieved,
            "relevant": self.relevant,
            "hits": self.hits,
            "per_repetition": self.per_repetition,
        }


def _truth_pairs(
    split: ProfileSplit, truth: Optional[set[tuple[str, str]]]
) -> set[tuple[str, str]]:
    test_pairs = {p.pair for p in split.test}
    if truth is None:
        return {p.pair for p in split.test if p.label is Label.LINKED}
    return truth & test_pairs


def _score_matrix(
    bundle: RepetitionBundle,
    computer: AttributeComputer,
    pairs: Sequence[CandidatePair],
) -> list[list[float]]:
    """Per-model scores for every pair; models vary, attribute rows do not."""
    rows = build_matrix(computer, pairs, bundle.attr_names)
    return [[model.predict_score(row) for row in rows] for model in bundle.models]


def _precision_recall(
    predicted: set[tuple[str, str]], truth: set[tuple[str, str]]
) -> tuple[float, float, bool]:
    hits = len(predicted & truth)
    undefined = not predicted
    precision = 1.0 if undefined else hits / len(predicted)
    recall = hits / len(truth) if truth else 0.0
    return precision, recall, undefined


def evaluate_scenario1(
    bundle: RepetitionBundle,
    split: ProfileSplit,
    computer: AttributeComputer,
    k: int = 3,
    truth: Optional[set[tuple[str, str]]] = None,
) -> MetricsReport:
    """Top-k recommendation quality for test commits that have a true link."""
    if not split.test:
        raise TraceForgeError("scenario 1 needs a non-empty test set")
    truth_set = _truth_pairs(split, truth)
    if not truth_set:
        raise TraceForgeError("scenario 1 needs at least one true link in the test set")

    considered: dict[str, list[int]] = {}
    for idx, pair in enumerate(split.test):
        considered.setdefault(pair.commit_hash, []).append(idx)
    truth_commits = {c for c, _ in truth_set}
    considered = {c: idxs for c, idxs in considered.items() if c in truth_commits}

    model_scores = _score_matrix(bundle, computer, split.test)
    per_repetition = []
    for scores in model_scores:
        retrieved: set[tuple[str, str]] = set()
        for commit_hash, idxs in considered.items():
            ranked = sorted(
                idxs, key=lambda i: (-scores[i], split.test[i].issue_key)
            )[:k]
            retrieved.update(split.test[i].pair for i in ranked)
        hits = len(retrieved & truth_set)
        precision = hits / len(retrieved) if retrieved else 1.0
        recall = hits / len(truth_set)
        per_repetition.append(
            {
                "precision": precision,
                "recall": recall,
                "f2": fbeta(precision, recall, 2.0),
                "f0.5": fbeta(precision, recall, 0.5),
                "retrieved": len(retrieved),
                "hits": hits,
            }
        )

    n = len(per_repetition)
    precision = sum(r["precision"] for r in per_repetition) / n
    recall = sum(r["recall"] for r in per_repetition) / n
    return MetricsReport(
        scenario="recommend",
        precision=precision,
        recall=recall,
        f_half=sum(r["f0.5"] for r in per_repetition) / n,
        f_two=sum(r["f2"] for r in per_repetition) / n,
        per_repetition=per_repetition,
        retrieved=round(sum(r["retrieved"] for r in per_repetition) / n),
        relevant=len(truth_set),
        hits=round(sum(r["hits"] for r in per_repetition) / n),
    )


def evaluate_scenario2(
    bundle: RepetitionBundle,
    split: ProfileSplit,
    computer: AttributeComputer,
    threshold: float = 0.95,
    truth: Optional[set[tuple[str, str]]] = None,
) -> MetricsReport:
    """Automated augmentation quality: pairs whose mean score clears the bar."""
    if not split.test:
        raise TraceForgeError("scenario 2 needs a non-empty test set")
    truth_set = _truth_pairs(split, truth)

    model_scores = _score_matrix(bundle, computer, split.test)
    n_models = len(model_scores)
    mean_scores = [
        sum(model_scores[m][i] for m in range(n_models)) / n_models
        for i in range(len(split.test))
    ]

    per_repetition = []
    for scores in model_scores:
        predicted = {
            split.test[i].pair for i, s in enumerate(scores) if s > threshold
        }
        precision, recall, undefined = _precision_recall(predicted, truth_set)
        per_repetition.append(
            {
                "precision": precision,
                "recall": recall,
                "f0.5": fbeta(precision, recall, 0.5),
                "f2": fbeta(precision, recall, 2.0),
                "predicted": len(predicted),
                "precision_undefined": undefined,
            }
        )

    predicted = {
        split.test[i].pair for i, s in enumerate(mean_scores) if s > threshold
    }
    precision, recall, undefined = _precision_recall(predicted, truth_set)
    return MetricsReport(
        scenario="augment",
        precision=precision,
        recall=recall,
        f_half=fbeta(precision, recall, 0.5),
        f_two=fbeta(precision, recall, 2.0),
        per_repetition=per_repetition,
        precision_undefined=undefined,
        retrieved=len(predicted),
        relevant=len(truth_set),
        hits=len(predicted & truth_set),
    )


# -- statistics ----------------------------------------------------------------

def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        midrank = (i + j) / 2.0 + 1.0
        for pos in range(i, j + 1):
            ranks[order[pos]] = midrank
        i = j + 1
    return ranks


def _u_statistic(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    pooled = list(sample_a) + list(sample_b)
    ranks = _midranks(pooled)
    rank_sum_a = sum(ranks[: len(sample_a)])
    return rank_sum_a - len(sample_a) * (len(sample_a) + 1) / 2.0


def mann_whitney_u(
    sample_a: Sequence[float], sample_b: Sequence[float], exact_limit: int = 8
) -> tuple[float, float]:
    """Rank-sum U of sample_a and the two-sided p value.

    Exact p by full enumeration of group assignments when both samples have
    at most ``exact_limit`` observations; otherwise the normal approximation
    with tie correction and continuity correction.
    """
    if not sample_a or not sample_b:
        raise TraceForgeError("Mann-Whitney U needs two non-empty samples")
    n1, n2 = len(sample_a), len(sample_b)
    u_obs = _u_statistic(sample_a, sample_b)

    if n1 <= exact_limit and n2 <= exact_limit:
        pooled = list(sample_a) + list(sample_b)
        ranks = _midranks(pooled)
        total = 0
        at_most = 0
        at_least = 0
        offset = n1 * (n1 + 1) / 2.0
        for combo in itertools.combinations(range(n1 + n2), n1):
            u = sum(ranks[i] for i in combo) - offset
            total += 1
            if u <= u_obs + 1e-9:
                at_most += 1
            if u >= u_obs - 1e-9:
                at_least += 1
        p = min(1.0, 2.0 * min(at_most, at_least) / total)
        return u_obs, p

    pooled = list(sample_a) + list(sample_b)
    n = n1 + n2
    tie_counts: dict[float, int] = {}
    for v in pooled:
        tie_counts[v] = tie_counts.get(v, 0) + 1
    tie_term = sum(t**3 - t for t in tie_counts.values())
    mean = n1 * n2 / 2.0
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0:
        return u_obs, 1.0
    z = (abs(u_obs - mean) - 0.5) / math.sqrt(variance)
    p = min(1.0, 2.0 * (1.0 - NormalDist().cdf(max(z, 0.0))))
    return u_obs, p


class KappaResult(NamedTuple):
    value: float
    degenerate: bool


def fleiss_kappa(ratings: Sequence[Sequence[int]]) -> KappaResult:
    """Chance-corrected agreement for items x categories count matrices.

    Degenerate case (every rating in one category) reports 1.0 with a flag
    because observed agreement is total while expected agreement is too.
    """
    if len(ratings) < 2:
        raise TraceForgeError("Fleiss kappa needs at least two items")
    raters = sum(ratings[0])
    if raters < 2:
        raise TraceForgeError("Fleiss kappa needs at least two raters per item")
    for row in ratings:
        if sum(row) != raters:
            raise TraceForgeError("Fleiss kappa needs an equal rater count per item")

    n_items = len(ratings)
    n_categories = len(ratings[0])
    p_item = [
        (sum(c * c for c in row) - raters) / (raters * (raters - 1)) for row in ratings
    ]
    p_bar = sum(p_item) / n_items
    category_share = [
        sum(row[j] for row in ratings) / (n_items * raters) for j in range(n_categories)
    ]
    p_expected = sum(s * s for s in category_share)
    if abs(1.0 - p_expected) < 1e-12:
        return KappaResult(1.0, True)
    return KappaResult((p_bar - p_expected) / (1.0 - p_expected), False)


# -- augmentation statistics and review batches ----------------------------------

@dataclass
class AugmentationStats:
    mean_links: float
    commit_count: int
    counts: dict[str, int]

    def to_json(self) -> dict:
        return {
            "mean_links_per_unlinked_commit": round(self.mean_links, 6),
            "unlinked_commits": self.commit_count,
        }


def unlinked_commits(store: ProjectStore) -> list[str]:
    linked_hashes = {pair[0] for pair in store.linked_pairs({LinkOrigin.EXPLICIT_TAG})}
    return sorted(h for h in store.commits if h not in linked_hashes)


def augmentation_stats(
    bundle: RepetitionBundle,
    store: ProjectStore,
    computer: AttributeComputer,
    cfg: CandidateConfig = CandidateConfig(),
    kind: Optional[IssueKind] = None,
    cutoff: float = 0.5,
) -> AugmentationStats:
    """Mean number of issues classified as links per commit without any tag."""
    hashes = unlinked_commits(store)
    if not hashes:
        raise TraceForgeError("no commits without explicit links")
    counts: dict[str, int] = {}
    for commit_hash in hashes:
        commit = store.commits[commit_hash]
        pairs = candidate_pairs(store, cfg, commits=[commit], kind=kind)
        rows = build_matrix(computer, pairs, bundle.attr_names)
        counts[commit_hash] = sum(1 for row in rows if bundle.score(row) >= cutoff)
    mean = sum(counts.values()) / len(counts)
    return AugmentationStats(mean_links=mean, commit_count=len(counts), counts=counts)


@dataclass(frozen=True)
class ReviewEntry:
    commit_hash: str
    issue_key: str
    group: str  # "A": top-ranked suggestion, "B": non-suggested candidate


@dataclass
class ReviewBatch:
    batch_id: str
    seed: int
    entries: list[ReviewEntry]

    def to_json(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "seed": self.seed,
            "entries": [
                {"commit_hash": e.commit_hash, "issue_key": e.issue_key, "group": e.group}
                for e in self.entries
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ReviewBatch":
        return cls(
            batch_id=obj["batch_id"],
            seed=obj["seed"],
            entries=[
                ReviewEntry(e["commit_hash"], e["issue_key"], e["group"])
                for e in obj["entries"]
            ],
        )


def build_review_batch(
    bundle: RepetitionBundle,
    store: ProjectStore,
    computer: AttributeComputer,
    seed: int,
    cfg: CandidateConfig = CandidateConfig(),
    size: int = 20,
    group_a_share: float = 0.7,
) -> ReviewBatch:
    """Blind review sample: untagged commits paired with a suggested issue
    (group A) or a deliberately non-suggested one (group B).

    Group labels are stored for later scoring but are never shown to raters;
    the presentation order is shuffled by the seeded generator.
    """
    rng = Xorshift64Star(seed)
    ranked_by_commit: dict[str, list[tuple[float, str]]] = {}
    for commit_hash in unlinked_commits(store):
        commit = store.commits[commit_hash]
        pairs = candidate_pairs(store, cfg, commits=[commit])
        if not pairs:
            continue
        rows = build_matrix(computer, pairs, bundle.attr_names)
        scored = sorted(
            ((bundle.score(row), p.issue_key) for row, p in zip(rows, pairs)),
            key=lambda t: (-t[0], t[1]),
        )
        ranked_by_commit[commit_hash] = scored

    eligible = sorted(ranked_by_commit)
    if len(eligible) < size:
        raise TraceForgeError(
            f"need {size} unlinked commits with candidates, only {len(eligible)} available"
        )
    sampled = rng.sample(eligible, size)

    n_a = round(size * group_a_share)
    # group B needs a non-top candidate; put multi-candidate commits last
    sampled.sort(key=lambda h: (len(ranked_by_commit[h]) > 1, h))
    if sum(1 for h in sampled if len(ranked_by_commit[h]) > 1) < size - n_a:
        raise TraceForgeError("not enough commits with two candidates for group B")
    group_a = sampled[: n_a]
    group_b = sampled[n_a:]

    entries = []
    for commit_hash in group_a:
        top_key = ranked_by_commit[commit_hash][0][1]
        entries.append(ReviewEntry(commit_hash, top_key, "A"))
    for commit_hash in group_b:
        bottom_key = ranked_by_commit[commit_hash][-1][1]
        entries.append(ReviewEntry(commit_hash, bottom_key, "B"))
    rng.shuffle(entries)
    return ReviewBatch(batch_id=f"rb-{seed}", seed=seed, entries=entries)


# -- report rendering -------------------------------------------------------------

def format_metrics_table(rows: Sequence[dict], columns: Sequence[str]) -> str:
    """Aligned plain-text table; rows are dicts keyed by column name."""
    def cell(value) -> str:
        if isinstance(value, float):
            return f"{value:.2f}"
        return str(value)

    rendered = [[cell(row.get(col, "")) for col in columns] for row in rows]
    widths = [
        max(len(col), *(len(r[i]) for r in rendered)) if rendered else len(col)
        for i, col in enumerate(columns)
    ]
    lines = ["  ".join(col.ljust(w) for col, w in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in rendered:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines)
