"""HTTP/JSON API for the review UI: recommendations, blind review batches,
human verdicts, and agreement statistics.

The service never mutates issues or commits. Links are append-only with a
verdict history, and all writes funnel through one lock (single-writer
contract). Review batch responses never carry the group label or any
classifier score: blinding is enforced here, not in the client.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .evaluation import ReviewBatch, fleiss_kappa
from .features import CandidateConfig, is_candidate
from .model import (
    LinkOrigin,
    ProjectStore,
    TraceLink,
    UnknownArtifactError,
    append_link,
    load_project,
)
from .scoring import ProjectScorer

VERDICTS_FILE = "verdicts.jsonl"


class VerdictIn(BaseModel):
    commit_hash: str
    issue_key: str
    decision: str = Field(pattern="^(accept|reject)$")
    rater_id: str
    timestamp: Optional[int] = None


class ProjectState:
    """Mutable service-side state for one project archive."""

    def __init__(self, root: str | Path, cfg: CandidateConfig = CandidateConfig()):
        self.root = Path(root)
        self.cfg = cfg
        self.store: ProjectStore = load_project(self.root)
        self.scorer = ProjectScorer(self.store, self.root, cfg)
        self.write_lock = threading.Lock()
        self.verdicts: dict[tuple[str, str, str], dict] = {}
        self._load_verdicts()

    def _load_verdicts(self) -> None:
        path = self.root / VERDICTS_FILE
        if not path.exists():
            return
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    key = (obj["rater_id"], obj["commit_hash"], obj["issue_key"])
                    self.verdicts[key] = obj

    def batch_file(self, batch_id: str) -> Optional[ReviewBatch]:
        path = self.root / "batches" / f"{batch_id}.json"
        if not path.exists():
            return None
        return ReviewBatch.from_json(json.loads(path.read_text(encoding="utf-8")))

    def is_servable_pair(self, commit_hash: str, issue_key: str) -> bool:
        """A pair can take verdicts if it is a temporal candidate or part of
        a prepared review batch."""
        commit = self.store.commits.get(commit_hash)
        issue = self.store.issues.get(issue_key)
        if commit is None or issue is None:
            return False
        if is_candidate(commit, issue, self.cfg):
            return True
        batches_dir = self.root / "batches"
        if batches_dir.is_dir():
            for path in sorted(batches_dir.glob("*.json")):
                batch = ReviewBatch.from_json(json.loads(path.read_text(encoding="utf-8")))
                if any(
                    e.commit_hash == commit_hash and e.issue_key == issue_key
                    for e in batch.entries
                ):
                    return True
        return False

    def record_verdict(self, v: VerdictIn) -> TraceLink:
        key = (v.rater_id, v.commit_hash, v.issue_key)
        with self.write_lock:
            if key in self.verdicts:
                raise HTTPException(
                    status_code=409,
                    detail=f"rater {v.rater_id} already judged this pair",
                )
            decided_at = v.timestamp if v.timestamp is not None else int(time.time())
            origin = (
                LinkOrigin.HUMAN_ACCEPTED
                if v.decision == "accept"
                else LinkOrigin.HUMAN_REJECTED
            )
            record = {
                "commit_hash": v.commit_hash,
                "issue_key": v.issue_key,
                "decision": v.decision,
                "rater_id": v.rater_id,
                "decided_at": decided_at,
            }
            with (self.root / VERDICTS_FILE).open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
            self.verdicts[key] = record
            link = TraceLink(
                commit_hash=v.commit_hash,
                issue_key=v.issue_key,
                origin=origin,
                decided_by=v.rater_id,
                decided_at=decided_at,
            )
            if not self.store.has_link(v.commit_hash, v.issue_key, origin):
                append_link(self.store, self.root, link)
            return link


def create_app(
    project_dir: str | Path,
    default_k: int = 3,
    cfg: CandidateConfig = CandidateConfig(),
) -> FastAPI:
    state = ProjectState(project_dir, cfg)
    app = FastAPI(title="traceforge review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.project = state

    def _check_project(key: str) -> None:
        if key != state.store.project_key:
            raise HTTPException(status_code=404, detail=f"unknown project: {key}")

    @app.get("/api/projects/{key}/commits/{commit_hash}/recommendations")
    def recommendations(key: str, commit_hash: str, k: int = Query(default=None, ge=0)):
        _check_project(key)
        try:
            commit = state.store.require_commit(commit_hash)
        except UnknownArtifactError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        if not state.scorer.available:
            raise HTTPException(status_code=409, detail="no trained model available")
        limit = default_k if k is None else k
        ranked = state.scorer.rank_candidates(commit, k=limit)
        return {
            "commit_hash": commit_hash,
            "commit_message": commit.message,
            "changed_paths": sorted(commit.paths),
            "recommendations": [
                {
                    "issue_key": issue_key,
                    "score": round(score, 6),
                    "summary": state.store.issues[issue_key].summary,
                    "description": state.store.issues[issue_key].description,
                }
                for issue_key, score in ranked
            ],
        }

    @app.get("/api/projects/{key}/review-batches/{batch_id}")
    def review_batch(key: str, batch_id: str):
        _check_project(key)
        batch = state.batch_file(batch_id)
        if batch is None:
            raise HTTPException(status_code=404, detail=f"unknown batch: {batch_id}")
        entries = []
        for e in batch.entries:
            commit = state.store.commits[e.commit_hash]
            issue = state.store.issues[e.issue_key]
            # deliberately no group label and no score: raters stay blind
            entries.append(
                {
                    "commit_hash": e.commit_hash,
                    "commit_message": commit.message,
                    "changed_paths": sorted(commit.paths),
                    "issue_key": e.issue_key,
                    "issue_summary": issue.summary,
                    "issue_description": issue.description,
                }
            )
        return {"batch_id": batch.batch_id, "entries": entries}

    @app.post("/api/projects/{key}/verdicts", status_code=201)
    def post_verdict(key: str, verdict: VerdictIn):
        _check_project(key)
        if (
            verdict.commit_hash not in state.store.commits
            or verdict.issue_key not in state.store.issues
        ):
            raise HTTPException(status_code=404, detail="unknown commit or issue")
        if not state.is_servable_pair(verdict.commit_hash, verdict.issue_key):
            raise HTTPException(
                status_code=404,
                detail="pair is neither a candidate nor part of a review batch",
            )
        link = state.record_verdict(verdict)
        return {
            "commit_hash": link.commit_hash,
            "issue_key": link.issue_key,
            "origin": link.origin.value,
            "decided_by": link.decided_by,
            "decided_at": link.decided_at,
        }

    @app.get("/api/projects/{key}/stats")
    def stats(key: str):
        _check_project(key)
        links_by_origin: dict[str, int] = {}
        for link in state.store.links:
            links_by_origin[link.origin.value] = links_by_origin.get(link.origin.value, 0) + 1
        return {
            "project_key": state.store.project_key,
            "issues": len(state.store.issues),
            "commits": len(state.store.commits),
            "links_by_origin": links_by_origin,
            "verdicts": len(state.verdicts),
        }

    @app.get("/api/projects/{key}/kappa")
    def kappa(key: str, batch: str = Query(...)):
        _check_project(key)
        review = state.batch_file(batch)
        if review is None:
            raise HTTPException(status_code=404, detail=f"unknown batch: {batch}")
        pairs = [(e.commit_hash, e.issue_key) for e in review.entries]
        by_rater: dict[str, dict[tuple[str, str], str]] = {}
        for (rater, commit_hash, issue_key), record in state.verdicts.items():
            if (commit_hash, issue_key) in set(pairs):
                by_rater.setdefault(rater, {})[(commit_hash, issue_key)] = record["decision"]
        complete = sorted(r for r, seen in by_rater.items() if len(seen) == len(pairs))
        if len(complete) < 2:
            return {"batch_id": batch, "kappa": None, "raters": len(complete),
                    "reason": "need at least two raters with complete batches"}
        matrix = []
        for pair in pairs:
            accepts = sum(1 for r in complete if by_rater[r][pair] == "accept")
            matrix.append([accepts, len(complete) - accepts])
        result = fleiss_kappa(matrix)
        return {
            "batch_id": batch,
            "kappa": round(result.value, 6),
            "raters": len(complete),
            "degenerate": result.degenerate,
        }

    return app
