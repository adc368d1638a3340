import { beforeEach, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { loadRecommendations, renderRecommendations } from '../src/recommend.js';
import { newRecommendState } from '../src/state.js';
import { FakeService, FakeRecommendation } from './fake_service.js';

const COMMIT = 'c'.repeat(40);

function recommendations(): FakeRecommendation[] {
  return [
    { issue_key: 'SYN-11', score: 0.97, summary: 'first', description: 'desc one' },
    { issue_key: 'SYN-12', score: 0.41, summary: 'second', description: 'desc two' },
    { issue_key: 'SYN-13', score: 0.22, summary: 'third', description: 'desc three' },
    { issue_key: 'SYN-14', score: 0.05, summary: 'fourth', description: 'desc four' },
  ];
}

async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
  await new Promise((resolve) => setTimeout(resolve, 0));
}

describe('recommendation view', () => {
  let service: FakeService;
  let client: ApiClient;
  let root: HTMLElement;

  beforeEach(() => {
    service = new FakeService();
    service.addCommit(COMMIT, recommendations());
    client = new ApiClient('http://fake', 'SYN', service.fetch);
    root = document.createElement('div');
    document.body.replaceChildren(root);
  });

  it('renders at most three ranked issues with commit context', async () => {
    const state = newRecommendState(COMMIT, 3);
    await loadRecommendations(client, state);
    renderRecommendations(root, client, state, 'rater-x');

    const items = [...root.querySelectorAll('ol.recommendations li')];
    expect(items).toHaveLength(3);
    expect(items.map((li) => (li as HTMLElement).dataset.issueKey)).toEqual([
      'SYN-11', 'SYN-12', 'SYN-13',
    ]);
    expect(root.querySelector('pre.message')?.textContent).toContain('message for');
    expect(root.querySelectorAll('ul.files li')).toHaveLength(1);
  });

  it('accept posts a verdict and the stats endpoint shows the link', async () => {
    const state = newRecommendState(COMMIT, 3);
    await loadRecommendations(client, state);
    renderRecommendations(root, client, state, 'rater-x');

    (root.querySelector('li.candidate button.accept') as HTMLButtonElement).click();
    await flush();

    expect(state.accepted.has('SYN-11')).toBe(true);
    const first = root.querySelector('ol.recommendations li') as HTMLElement;
    expect(first.className).toBe('linked');
    const stats = await client.getStats();
    expect(stats.links_by_origin.HumanAccepted).toBe(1);
    const posts = service.requests.filter((r) => r.method === 'POST');
    expect(posts).toHaveLength(1);
  });

  it('shows the empty state when there are no candidates', async () => {
    service.addCommit('d'.repeat(40), []);
    const state = newRecommendState('d'.repeat(40), 3);
    await loadRecommendations(client, state);
    renderRecommendations(root, client, state, 'rater-x');
    expect(root.querySelector('p.empty')?.textContent).toContain('No candidate issues');
  });

  it('k slider changes only the request parameter', async () => {
    const state = newRecommendState(COMMIT, 3);
    await loadRecommendations(client, state);
    renderRecommendations(root, client, state, 'rater-x');

    const slider = root.querySelector('input[type=range]') as HTMLInputElement;
    slider.value = '1';
    slider.dispatchEvent(new Event('change'));
    await flush();

    expect(state.k).toBe(1);
    expect(service.requests.at(-1)?.url).toContain('k=1');
    expect([...root.querySelectorAll('ol.recommendations li')]).toHaveLength(1);
  });

  it('network failure shows a retry banner and keeps state', async () => {
    const state = newRecommendState(COMMIT, 2);
    service.failNextRequests = 1;
    await loadRecommendations(client, state);
    renderRecommendations(root, client, state, 'rater-x');

    expect(root.querySelector('.banner.error')?.textContent).toContain('network failure');
    expect(state.commitHash).toBe(COMMIT);
    expect(state.k).toBe(2);

    (root.querySelector('button.retry') as HTMLButtonElement).click();
    await flush();
    expect([...root.querySelectorAll('ol.recommendations li')]).toHaveLength(2);
    expect(state.error).toBeNull();
  });
});
