import { ApiClient } from './api.js';
import { loadBatch, renderBatch } from './batch.js';
import { loadRecommendations, renderRecommendations } from './recommend.js';
import { newBatchState, newRecommendState, raterId } from './state.js';

// Hash-routed single page app:
//   #/recommend/<commit-hash>   commit-time tag picking
//   #/batch/<batch-id>          blind batch review
// Configuration is a single API base URL (plus the project key), persisted
// in localStorage after the first visit.

declare global {
  interface Window {
    API_BASE_URL?: string;
    PROJECT_KEY?: string;
  }
}

function config(): { baseUrl: string; projectKey: string } {
  const baseUrl =
    window.API_BASE_URL ??
    localStorage.getItem('traceforge-api') ??
    'http://127.0.0.1:7180';
  const projectKey =
    window.PROJECT_KEY ?? localStorage.getItem('traceforge-project') ?? 'SYN';
  localStorage.setItem('traceforge-api', baseUrl);
  localStorage.setItem('traceforge-project', projectKey);
  return { baseUrl, projectKey };
}

function renderHome(container: HTMLElement, client: ApiClient): void {
  container.replaceChildren();
  const heading = document.createElement('h2');
  heading.textContent = 'traceforge review';
  container.appendChild(heading);

  const help = document.createElement('p');
  help.textContent =
    'Open #/recommend/<commit-hash> to tag a commit, or #/batch/<batch-id> to review a batch.';
  container.appendChild(help);

  const stats = document.createElement('pre');
  stats.className = 'stats';
  container.appendChild(stats);
  client
    .getStats()
    .then((s) => {
      stats.textContent = JSON.stringify(s, null, 2);
    })
    .catch(() => {
      stats.textContent = 'Service unreachable.';
    });
}

export async function route(root: HTMLElement): Promise<void> {
  const { baseUrl, projectKey } = config();
  const client = new ApiClient(baseUrl, projectKey);
  const rater = raterId(localStorage);

  const hash = window.location.hash;
  const recommendMatch = hash.match(/^#\/recommend\/([0-9a-fA-F]+)/);
  const batchMatch = hash.match(/^#\/batch\/([A-Za-z0-9_-]+)/);

  if (recommendMatch) {
    const state = newRecommendState(recommendMatch[1]);
    renderRecommendations(root, client, state, rater);
    await loadRecommendations(client, state);
    renderRecommendations(root, client, state, rater);
    return;
  }
  if (batchMatch) {
    const state = newBatchState(batchMatch[1]);
    try {
      await loadBatch(client, state);
      renderBatch(root, client, state, rater);
    } catch {
      root.replaceChildren();
      const message = document.createElement('p');
      message.className = 'banner error';
      message.textContent = `Batch ${batchMatch[1]} not found.`;
      root.appendChild(message);
    }
    return;
  }
  renderHome(root, client);
}

export function start(): void {
  const root = document.getElementById('app');
  if (!root) return;
  void route(root);
  window.addEventListener('hashchange', () => void route(root));
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  start();
}
