import type { BatchEntry, RecommendationResponse } from './api.js';

// View state for the two workflows. Batch entries come from the server
// already blinded, so this state can never hold a group label or a score
// for them.

export interface RecommendState {
  commitHash: string;
  k: number;
  data: RecommendationResponse | null;
  accepted: Set<string>; // issue keys already linked from this view
  error: string | null;
}

export interface BatchState {
  batchId: string;
  entries: BatchEntry[];
  position: number; // 0-based index of the pair on screen
  submitted: number; // verdicts posted in this session
  notice: string | null;
  done: boolean;
}

export function newRecommendState(commitHash: string, k = 3): RecommendState {
  return { commitHash, k, data: null, accepted: new Set(), error: null };
}

export function newBatchState(batchId: string): BatchState {
  return { batchId, entries: [], position: 0, submitted: 0, notice: null, done: false };
}

export function raterId(storage: Storage): string {
  const existing = storage.getItem('traceforge-rater');
  if (existing) return existing;
  const fresh = `rater-${Math.random().toString(36).slice(2, 10)}`;
  storage.setItem('traceforge-rater', fresh);
  return fresh;
}
