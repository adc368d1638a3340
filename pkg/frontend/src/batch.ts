import { ApiClient, ApiError } from './api.js';
import { BatchState } from './state.js';

// Blind batch review: one commit-issue pair per screen with link / no-link
// buttons and a progress counter. The server never sends group labels or
// scores, so nothing here can leak them. After the last pair the view asks
// the agreement endpoint and shows kappa once two raters have finished.

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export async function loadBatch(client: ApiClient, state: BatchState): Promise<void> {
  const batch = await client.getBatch(state.batchId);
  state.entries = batch.entries;
  state.position = 0;
  state.done = batch.entries.length === 0;
}

async function submitVerdict(
  client: ApiClient,
  state: BatchState,
  rater: string,
  decision: 'accept' | 'reject',
): Promise<void> {
  const entry = state.entries[state.position];
  try {
    await client.postVerdict({
      commit_hash: entry.commit_hash,
      issue_key: entry.issue_key,
      decision,
      rater_id: rater,
    });
    state.submitted += 1;
    state.notice = null;
  } catch (error) {
    if (error instanceof ApiError && error.status === 409) {
      state.notice = 'Already recorded for this pair; moving on.';
    } else {
      state.notice = error instanceof ApiError ? error.detail : 'network failure';
      return; // stay on the pair so the rater can retry
    }
  }
  state.position += 1;
  if (state.position >= state.entries.length) {
    state.done = true;
  }
}

async function renderCompletion(
  container: HTMLElement,
  client: ApiClient,
  state: BatchState,
): Promise<void> {
  container.replaceChildren();
  container.appendChild(el('h2', undefined, 'Batch complete'));
  container.appendChild(
    el('p', 'submitted', `Verdicts submitted this session: ${state.submitted}`),
  );
  try {
    const kappa = await client.getKappa(state.batchId);
    if (kappa.kappa === null) {
      container.appendChild(
        el('p', 'kappa pending', kappa.reason ?? 'Waiting for a second rater.'),
      );
    } else {
      container.appendChild(
        el('p', 'kappa', `Inter-rater agreement κ = ${kappa.kappa} (${kappa.raters} raters)`),
      );
    }
  } catch (error) {
    container.appendChild(el('p', 'kappa error', 'Agreement not available.'));
  }
}

export function renderBatch(
  container: HTMLElement,
  client: ApiClient,
  state: BatchState,
  rater: string,
): void {
  if (state.done) {
    void renderCompletion(container, client, state);
    return;
  }
  container.replaceChildren();

  const entry = state.entries[state.position];
  container.appendChild(
    el('p', 'progress', `Pair ${state.position + 1} of ${state.entries.length}`),
  );
  if (state.notice) {
    container.appendChild(el('div', 'banner notice', state.notice));
  }

  const commit = el('section', 'commit');
  commit.appendChild(el('h3', undefined, `Commit ${entry.commit_hash.slice(0, 12)}`));
  commit.appendChild(el('pre', 'message', entry.commit_message));
  const files = el('ul', 'files');
  for (const path of entry.changed_paths) files.appendChild(el('li', undefined, path));
  commit.appendChild(files);
  container.appendChild(commit);

  const issue = el('section', 'issue');
  issue.appendChild(el('h3', undefined, entry.issue_key));
  issue.appendChild(el('p', 'summary', entry.issue_summary));
  issue.appendChild(el('p', 'description', entry.issue_description));
  container.appendChild(issue);

  const actions = el('div', 'actions');
  const link = el('button', 'link', 'Link');
  const noLink = el('button', 'no-link', 'No link');
  link.addEventListener('click', async () => {
    await submitVerdict(client, state, rater, 'accept');
    renderBatch(container, client, state, rater);
  });
  noLink.addEventListener('click', async () => {
    await submitVerdict(client, state, rater, 'reject');
    renderBatch(container, client, state, rater);
  });
  actions.appendChild(link);
  actions.appendChild(noLink);
  container.appendChild(actions);
}
