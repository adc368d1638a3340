"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error. Every number the
evaluation protocol fixes (k, score threshold, the two epsilon tolerances,
repetition count, forest size) is a flag defaulting to that value. The
default RNG seed can be overridden with the TRACE_FORGE_SEED environment
variable; an explicit --seed flag wins over both.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import evaluation, features, ingest, learn, model, synth, textsim
from .features import ATTRIBUTE_SETS, AttributeComputer, CandidateConfig
from .model import IssueKind, LinkOrigin, TraceForgeError, TraceLink
from .scoring import ProjectScorer, bundle_path

DEFAULT_SEED = 1
PROFILES = {"bug": IssueKind.BUG, "improvement": IssueKind.IMPROVEMENT}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _default_seed() -> int:
    env = os.environ.get("TRACE_FORGE_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise TraceForgeError(f"TRACE_FORGE_SEED must be an integer, got {env!r}")
    return DEFAULT_SEED


def _candidate_config(args) -> CandidateConfig:
    return CandidateConfig(
        epsilon_candidate_hours=args.epsilon_candidate,
        epsilon_close_hours=args.epsilon_close,
    )


def _add_epsilons(parser) -> None:
    parser.add_argument("--epsilon-candidate", type=float, default=30.0,
                        help="hours a commit may trail issue resolution (default 30)")
    parser.add_argument("--epsilon-close", type=float, default=60.0,
                        help="closeness tolerance in hours for the a7 flag (default 60)")


def _add_model_flags(parser, extra_sets: tuple[str, ...] = (), default_set: str = "all") -> None:
    parser.add_argument("--set", default=default_set, dest="attr_set",
                        choices=["all", "process", "similarity", "auto", *extra_sets])
    parser.add_argument("--classifier", default="random-forest",
                        choices=["random-forest", "decision-tree", "naive-bayes"])
    parser.add_argument("--repetitions", type=int, default=10)
    parser.add_argument("--trees", type=int, default=100)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes for repetition training")
    _add_epsilons(parser)


def _seed_of(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _classifier_params(args, seed: int) -> learn.ClassifierParams:
    return learn.ClassifierParams(
        kind=args.classifier,
        forest=learn.ForestParams(trees=args.trees),
        rng_seed=seed,
    )


def _emit(args, payload: dict) -> None:
    if getattr(args, "format", "json") == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        for key, value in payload.items():
            print(f"{key}: {value}")


# -- per-profile training machinery -------------------------------------------

def _profile_list(value: str) -> list[IssueKind]:
    if value == "both":
        return [IssueKind.BUG, IssueKind.IMPROVEMENT]
    return [PROFILES[value]]


def _training_corpus_index(store, issues, commits) -> textsim.CorpusIndex:
    return textsim.build_index_from_texts(
        features.corpus_texts(store, issues=issues, commits=commits)
    )


def _resolve_attr_names(attr_set, schema_rows=None) -> list[str]:
    if attr_set == "auto":
        schema, rows, labels = schema_rows
        from .selection import select_attributes
        return select_attributes(schema, rows, labels)
    return list(ATTRIBUTE_SETS[attr_set])


def _train_profile_bundle(store, kind, args, seed, truth_origins):
    """Train a production bundle on the full store for one profile."""
    cfg = _candidate_config(args)
    profile_issues = store.issues_of_kind(kind)
    index = _training_corpus_index(store, profile_issues, store.commits.values())
    computer = AttributeComputer(store, cfg, index, link_origins=truth_origins)
    linked = store.linked_pairs(truth_origins)
    pairs = features.candidate_pairs(store, cfg, kind=kind, linked_pairs=linked)
    if not pairs:
        raise TraceForgeError(f"no candidate pairs for profile {kind.value}")
    all_names = list(ATTRIBUTE_SETS["all"])
    all_rows = features.build_matrix(computer, pairs, all_names)
    labels = [p.label.value for p in pairs]
    names = _resolve_attr_names(
        args.attr_set, (features.schema_for(all_names), all_rows, labels)
    )
    keep = [all_names.index(n) for n in names]
    rows = [[row[i] for i in keep] for row in all_rows]
    dataset = learn.Dataset(schema=features.schema_for(names), rows=rows, labels=labels)
    params = _classifier_params(args, seed)
    bundle = learn.train_repetitions(params, dataset, base_seed=seed,
                                     repetitions=args.repetitions, jobs=args.jobs)
    bundle.metadata.update(
        {"profile": kind.value, "attribute_set": args.attr_set, "seed": seed}
    )
    if getattr(args, "export_features", None):
        path = Path(args.export_features)
        path.parent.mkdir(parents=True, exist_ok=True)
        out = path if args.profile != "both" else path.with_name(
            f"{path.stem}-{kind.value.lower()}{path.suffix}"
        )
        features.write_feature_csv(out, pairs, all_rows)
    return bundle, index


def _scorer(root: Path, store, args) -> ProjectScorer:
    scorer = ProjectScorer(
        store, root, _candidate_config(args),
        attr_set=args.attr_set, classifier=args.classifier,
        profiles=_profile_list(getattr(args, "profile", "both")),
    )
    if not scorer.available:
        raise TraceForgeError("no trained model found; run `traceforge train` first")
    return scorer


# -- subcommands ----------------------------------------------------------------

def cmd_ingest(args) -> int:
    git_text = Path(args.git).read_text(encoding="utf-8")
    issue_text = Path(args.issues).read_text(encoding="utf-8")
    commit_records = ingest.parse_commit_export(git_text)
    issue_records = ingest.parse_issue_export(issue_text)
    snapshots = None
    if args.snapshots:
        snapshots = {}
        with open(args.snapshots, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    snapshots[f"{obj['hash']}:{obj['path']}"] = obj["text"]
    project_key = args.project_key
    if not project_key:
        prefixes = [r.key.split("-", 1)[0] for r in issue_records if "-" in r.key]
        if not prefixes:
            raise TraceForgeError("cannot derive a project key; pass --project-key")
        project_key = max(set(prefixes), key=prefixes.count)
    file_filter = ingest.FileFilterConfig(
        include_globs=tuple(args.include_glob or ["src/main/**"]),
        exclude_globs=tuple(args.exclude_glob or ["src/test/java/**"]),
    )
    store, report = ingest.build_store(
        project_key, issue_records, commit_records, file_filter,
        use_author=args.use_author, snapshots=snapshots,
    )
    if snapshots:
        # drop refs onto the matching commit files
        rebuilt = []
        for commit in store.commits.values():
            files = frozenset(
                model.FilePath(f.path, f"{commit.hash}:{f.path}")
                if f"{commit.hash}:{f.path}" in snapshots else f
                for f in commit.files
            )
            rebuilt.append(model.Commit(commit.hash, commit.message, commit.committed,
                                        commit.committer, files))
        store = model.ProjectStore(
            project_key=store.project_key,
            issues=store.issues.values(),
            commits=rebuilt,
            links=store.links,
            identities=store.identities,
            snapshots=snapshots,
        )
    model.save_project(store, args.out)
    report["archive"] = str(args.out)
    report["project_key"] = project_key
    _emit(args, report)
    return 0


def cmd_stats(args) -> int:
    store = model.load_project(args.project)
    links_by_origin = {}
    for link in store.links:
        links_by_origin[link.origin.value] = links_by_origin.get(link.origin.value, 0) + 1
    explicit_linked = {p[0] for p in store.linked_pairs({LinkOrigin.EXPLICIT_TAG})}
    payload = {
        "project_key": store.project_key,
        "issues": len(store.issues),
        "issues_bug": len(store.issues_of_kind(IssueKind.BUG)),
        "issues_improvement": len(store.issues_of_kind(IssueKind.IMPROVEMENT)),
        "commits": len(store.commits),
        "commits_with_explicit_link": len(explicit_linked),
        "commits_without_explicit_link": len(store.commits) - len(explicit_linked),
        "links_by_origin": links_by_origin,
        "identities": len(store.identities),
    }
    _emit(args, payload)
    return 0


def cmd_train(args) -> int:
    root = Path(args.project)
    store = model.load_project(root)
    seed = _seed_of(args)
    truth_origins = {LinkOrigin.EXPLICIT_TAG}
    if args.include_human:
        truth_origins.add(LinkOrigin.HUMAN_ACCEPTED)
    summary = {}
    for kind in _profile_list(args.profile):
        bundle, index = _train_profile_bundle(store, kind, args, seed, truth_origins)
        profile = kind.value.lower()
        path = bundle_path(root, profile, args.attr_set, args.classifier)
        learn.save_bundle(bundle, path)
        index.save(root / "index" / profile)
        summary[profile] = {
            "model": str(path),
            "attributes": bundle.attr_names,
            "instances": bundle.metadata.get("instances"),
            "classes": bundle.metadata.get("classes"),
        }
    _emit(args, summary)
    return 0


def cmd_evaluate(args) -> int:
    store = model.load_project(args.project)
    seed = _seed_of(args)
    cfg = _candidate_config(args)
    truth = None
    withheld = None
    if args.ground_truth:
        truth, withheld = synth.load_ground_truth(args.ground_truth)
    attr_sets = (
        ["similarity", "process", "auto", "all"]
        if args.attr_set == "every"
        else [args.attr_set]
    )
    rows = []
    reports = {}
    for kind in _profile_list(args.profile):
        split = evaluation.split_profiles(store, kind, cfg)
        train_commits = [c for c in store.commits.values() if c.committed <= split.t_split]
        train_issues = [
            i for i in store.issues_of_kind(kind) if i.resolved <= split.t_split
        ]
        index = _training_corpus_index(store, train_issues, train_commits)
        computer = AttributeComputer(store, cfg, index)
        all_names = list(ATTRIBUTE_SETS["all"])
        train_rows = features.build_matrix(computer, split.train, all_names)
        train_labels = [p.label.value for p in split.train]
        for attr_set in attr_sets:
            names = _resolve_attr_names(
                attr_set,
                (features.schema_for(all_names), train_rows, train_labels),
            )
            keep = [all_names.index(n) for n in names]
            dataset = learn.Dataset(
                schema=features.schema_for(names),
                rows=[[r[i] for i in keep] for r in train_rows],
                labels=train_labels,
            )
            bundle = learn.train_repetitions(
                _classifier_params(args, seed), dataset, base_seed=seed,
                repetitions=args.repetitions, jobs=args.jobs,
            )
            profile = kind.value
            key = f"{profile}/{attr_set}"
            entry = {}
            if args.scenario in ("1", "both"):
                r1 = evaluation.evaluate_scenario1(bundle, split, computer, k=args.k,
                                                   truth=truth)
                entry["scenario1"] = r1.to_json()
                rows.append({"profile": profile, "set": attr_set, "scenario": "1",
                             "P": r1.precision, "R": r1.recall, "F2": r1.f_two,
                             "F0.5": r1.f_half})
            if args.scenario in ("2", "both"):
                r2 = evaluation.evaluate_scenario2(bundle, split, computer,
                                                   threshold=args.threshold, truth=truth)
                entry["scenario2"] = r2.to_json()
                rows.append({"profile": profile, "set": attr_set, "scenario": "2",
                             "P": r2.precision, "R": r2.recall, "F2": r2.f_two,
                             "F0.5": r2.f_half})
            reports[key] = entry
    if args.format == "table":
        print(evaluation.format_metrics_table(
            rows, ["profile", "set", "scenario", "P", "R", "F2", "F0.5"]
        ))
    else:
        print(json.dumps(reports, sort_keys=True, indent=2))
    return 0


def cmd_recommend(args) -> int:
    root = Path(args.project)
    store = model.load_project(root)
    commit = store.require_commit(args.commit)
    top = _scorer(root, store, args).rank_candidates(commit, k=args.k)
    payload = {
        "commit_hash": commit.hash,
        "recommendations": [
            {"issue_key": key, "score": round(score, 6)} for key, score in top
        ],
    }
    if args.format == "table":
        for key, score in top:
            print(f"{key}\t{score:.4f}")
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))
    return 0


def cmd_augment(args) -> int:
    root = Path(args.project)
    store = model.load_project(root)
    scorer = _scorer(root, store, args)
    proposals = []
    for commit_hash in evaluation.unlinked_commits(store):
        commit = store.commits[commit_hash]
        for issue_key, score in scorer.rank_candidates(commit):
            if score > args.threshold and not store.is_linked(commit_hash, issue_key):
                proposals.append((commit_hash, issue_key, score))
    written = 0
    if not args.dry_run:
        now = int(time.time())
        for commit_hash, issue_key, score in proposals:
            link = TraceLink(
                commit_hash=commit_hash,
                issue_key=issue_key,
                origin=LinkOrigin.CLASSIFIER,
                score=round(score, 6),
                decided_at=now,
            )
            if not store.has_link(commit_hash, issue_key, LinkOrigin.CLASSIFIER):
                model.append_link(store, root, link)
                written += 1
    payload = {
        "threshold": args.threshold,
        "proposed": [
            {"commit_hash": c, "issue_key": i, "score": round(s, 6)}
            for c, i, s in proposals
        ],
        "written": written,
        "dry_run": args.dry_run,
    }
    _emit(args, payload)
    return 0


def cmd_review_batch(args) -> int:
    root = Path(args.project)
    store = model.load_project(root)
    scorer = _scorer(root, store, args)
    kind = _profile_list(args.profile)[0]
    bundle = scorer.bundles.get(kind) or next(iter(scorer.bundles.values()))
    computer = scorer.computers.get(kind) or next(iter(scorer.computers.values()))
    seed = _seed_of(args)
    batch = evaluation.build_review_batch(
        bundle, store, computer, seed, _candidate_config(args), size=args.size
    )
    out_dir = root / "batches"
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{batch.batch_id}.json"
    path.write_text(json.dumps(batch.to_json(), sort_keys=True, indent=2),
                    encoding="utf-8")
    # stdout omits group assignments: raters must stay blind
    print(json.dumps({
        "batch_id": batch.batch_id,
        "file": str(path),
        "entries": [
            {"commit_hash": e.commit_hash, "issue_key": e.issue_key}
            for e in batch.entries
        ],
    }, sort_keys=True, indent=2))
    return 0


def cmd_synth(args) -> int:
    seed = _seed_of(args)
    params = synth.SynthParams(
        n_issues=args.n_issues,
        n_commits=args.n_commits,
        tag_omission_rate=args.tag_omission_rate,
        signal_strength=args.signal_strength,
        n_developers=args.n_developers,
        project_key=args.project_key,
    )
    result = synth.synth_project(seed, params)
    out = Path(args.out)
    model.save_project(result.store, out)
    result.write_ground_truth(out)
    _emit(args, {
        "archive": str(out),
        "issues": len(result.store.issues),
        "commits": len(result.store.commits),
        "explicit_links": len(result.store.links),
        "true_links": len(result.true_links),
        "withheld": len(result.withheld),
        "seed": seed,
    })
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.project, default_k=args.k)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="traceforge",
                     description="recover missing commit-issue trace links")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse exports into a project archive")
    p.add_argument("--git", required=True, help="commit export file")
    p.add_argument("--issues", required=True, help="issue export JSON file")
    p.add_argument("--snapshots", help="optional JSONL of file snapshots")
    p.add_argument("--out", required=True, help="archive directory to write")
    p.add_argument("--project-key", default=None)
    p.add_argument("--use-author", action="store_true",
                   help="key commit identity on the author instead of the committer")
    p.add_argument("--include-glob", action="append", default=None,
                   help="source path glob to keep (default src/main/**)")
    p.add_argument("--exclude-glob", action="append", default=None,
                   help="path glob to drop (default src/test/java/**)")
    p.add_argument("--format", default="json", choices=["json", "table"])
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="print archive statistics")
    p.add_argument("--project", required=True)
    p.add_argument("--format", default="json", choices=["json", "table"])
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train and persist per-profile models")
    p.add_argument("--project", required=True)
    p.add_argument("--profile", default="both", choices=["bug", "improvement", "both"])
    p.add_argument("--include-human", action="store_true",
                   help="treat human-accepted links as Linked labels")
    p.add_argument("--export-features", default=None, metavar="CSV",
                   help="also write the training feature matrix as CSV")
    _add_model_flags(p)
    p.add_argument("--format", default="json", choices=["json", "table"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="run the temporal-split evaluation")
    p.add_argument("--project", required=True)
    p.add_argument("--profile", default="both", choices=["bug", "improvement", "both"])
    p.add_argument("--scenario", default="both", choices=["1", "2", "both"])
    p.add_argument("-k", type=int, default=3)
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--ground-truth", default=None,
                   help="ground-truth JSONL (from synth) to evaluate against")
    _add_model_flags(p, extra_sets=("every",), default_set="every")
    p.add_argument("--format", default="table", choices=["json", "table"])
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("recommend", help="rank candidate issues for one commit")
    p.add_argument("--project", required=True)
    p.add_argument("--commit", required=True)
    p.add_argument("-k", type=int, default=3)
    p.add_argument("--profile", default="both", choices=["bug", "improvement", "both"])
    _add_model_flags(p)
    p.add_argument("--format", default="json", choices=["json", "table"])
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("augment", help="add classifier links above a score threshold")
    p.add_argument("--project", required=True)
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--profile", default="both", choices=["bug", "improvement", "both"])
    p.add_argument("--dry-run", action="store_true")
    _add_model_flags(p)
    p.add_argument("--format", default="json", choices=["json", "table"])
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("review-batch", help="build a blind review batch")
    p.add_argument("--project", required=True)
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--profile", default="bug", choices=["bug", "improvement"])
    _add_model_flags(p)
    p.set_defaults(func=cmd_review_batch)

    p = sub.add_parser("synth", help="generate a synthetic project archive")
    p.add_argument("--out", required=True)
    p.add_argument("--n-issues", type=int, default=200)
    p.add_argument("--n-commits", type=int, default=400)
    p.add_argument("--tag-omission-rate", type=float, default=0.3)
    p.add_argument("--signal-strength", type=float, default=1.0)
    p.add_argument("--n-developers", type=int, default=8)
    p.add_argument("--project-key", default="SYN")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", default="json", choices=["json", "table"])
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="run the review HTTP API")
    p.add_argument("--project", required=True)
    p.add_argument("--port", type=int, default=7180)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("-k", type=int, default=3)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except TraceForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
