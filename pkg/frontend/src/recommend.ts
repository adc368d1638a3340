import { ApiClient, ApiError } from './api.js';
import { RecommendState } from './state.js';

// Commit-time tag picking: show the commit, fetch up to k ranked issues,
// accept one with a single click. A network failure keeps the current
// state and offers a retry; the k slider only changes the request
// parameter.

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

export async function loadRecommendations(
  client: ApiClient,
  state: RecommendState,
): Promise<void> {
  try {
    state.data = await client.getRecommendations(state.commitHash, state.k);
    state.error = null;
  } catch (error) {
    if (error instanceof ApiError) {
      state.error = error.detail;
    } else {
      state.error = 'network failure';
    }
  }
}

export function renderRecommendations(
  container: HTMLElement,
  client: ApiClient,
  state: RecommendState,
  rater: string,
): void {
  container.replaceChildren();

  if (state.error !== null) {
    const banner = el('div', 'banner error', `Could not load recommendations: ${state.error}`);
    const retry = el('button', 'retry', 'Retry');
    retry.addEventListener('click', async () => {
      await loadRecommendations(client, state);
      renderRecommendations(container, client, state, rater);
    });
    banner.appendChild(retry);
    container.appendChild(banner);
    return;
  }
  if (state.data === null) {
    container.appendChild(el('p', 'loading', 'Loading…'));
    return;
  }

  const commit = el('section', 'commit');
  commit.appendChild(el('h2', undefined, `Commit ${state.data.commit_hash.slice(0, 12)}`));
  commit.appendChild(el('pre', 'message', state.data.commit_message));
  const files = el('ul', 'files');
  for (const path of state.data.changed_paths) {
    files.appendChild(el('li', undefined, path));
  }
  commit.appendChild(files);
  container.appendChild(commit);

  const controls = el('div', 'controls');
  const label = el('label', undefined, `Suggestions: ${state.k} `);
  const slider = el('input') as HTMLInputElement;
  slider.type = 'range';
  slider.min = '1';
  slider.max = '3';
  slider.value = String(state.k);
  slider.addEventListener('change', async () => {
    state.k = Number(slider.value);
    await loadRecommendations(client, state);
    renderRecommendations(container, client, state, rater);
  });
  label.appendChild(slider);
  controls.appendChild(label);
  container.appendChild(controls);

  const recommendations = state.data.recommendations;
  if (recommendations.length === 0) {
    container.appendChild(el('p', 'empty', 'No candidate issues for this commit.'));
    return;
  }

  const list = el('ol', 'recommendations');
  recommendations.forEach((rec) => {
    const item = el('li', state.accepted.has(rec.issue_key) ? 'linked' : 'candidate');
    item.dataset.issueKey = rec.issue_key;
    item.appendChild(el('strong', undefined, rec.issue_key));
    item.appendChild(el('span', 'summary', ` ${rec.summary}`));

    const details = el('details');
    details.appendChild(el('summary', undefined, 'description'));
    details.appendChild(el('p', 'description', rec.description));
    item.appendChild(details);

    if (state.accepted.has(rec.issue_key)) {
      item.appendChild(el('span', 'status', 'linked'));
    } else {
      const accept = el('button', 'accept', 'Accept');
      accept.addEventListener('click', async () => {
        try {
          await client.postVerdict({
            commit_hash: state.commitHash,
            issue_key: rec.issue_key,
            decision: 'accept',
            rater_id: rater,
          });
          state.accepted.add(rec.issue_key);
        } catch (error) {
          if (error instanceof ApiError && error.status === 409) {
            state.accepted.add(rec.issue_key); // already judged earlier
          } else {
            state.error = error instanceof ApiError ? error.detail : 'network failure';
          }
        }
        renderRecommendations(container, client, state, rater);
      });
      item.appendChild(accept);
    }
    list.appendChild(item);
  });
  container.appendChild(list);
}
