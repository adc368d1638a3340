import { beforeEach, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { loadBatch, renderBatch } from '../src/batch.js';
import { newBatchState } from '../src/state.js';
import { FakeService, seededBatch } from './fake_service.js';

const BATCH = 'rb-7';

async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
  await new Promise((resolve) => setTimeout(resolve, 0));
}

describe('blind batch review', () => {
  let service: FakeService;
  let client: ApiClient;
  let root: HTMLElement;

  beforeEach(() => {
    service = new FakeService();
    service.addBatch(BATCH, seededBatch(20));
    client = new ApiClient('http://fake', 'SYN', service.fetch);
    root = document.createElement('div');
    document.body.replaceChildren(root);
  });

  it('walks all 20 pairs and posts exactly 20 verdicts', async () => {
    const state = newBatchState(BATCH);
    await loadBatch(client, state);
    renderBatch(root, client, state, 'walker');

    expect(root.querySelector('p.progress')?.textContent).toBe('Pair 1 of 20');
    for (let i = 0; i < 20; i += 1) {
      const selector = i % 3 === 0 ? 'button.no-link' : 'button.link';
      (root.querySelector(selector) as HTMLButtonElement).click();
      await flush();
    }
    expect(state.done).toBe(true);
    expect(state.submitted).toBe(20);
    const posts = service.requests.filter((r) => r.method === 'POST');
    expect(posts).toHaveLength(20);
    expect(root.textContent).toContain('Batch complete');
  });

  it('rendered state and DOM never contain group labels or scores', async () => {
    const state = newBatchState(BATCH);
    await loadBatch(client, state);
    renderBatch(root, client, state, 'blind');

    const stateJson = JSON.stringify(state);
    expect(stateJson).not.toContain('"group"');
    expect(stateJson).not.toContain('"score"');
    expect(root.innerHTML).not.toContain('group');
    expect(root.innerHTML).not.toMatch(/score/i);
    // walk a few pairs; the invariant must hold on every screen
    for (let i = 0; i < 5; i += 1) {
      (root.querySelector('button.link') as HTMLButtonElement).click();
      await flush();
      expect(root.innerHTML).not.toContain('group');
      expect(JSON.stringify(state)).not.toContain('"group"');
    }
  });

  it('keeps the server order of entries for a batch id', async () => {
    const first = newBatchState(BATCH);
    await loadBatch(client, first);
    const second = newBatchState(BATCH);
    await loadBatch(client, second);
    expect(first.entries).toEqual(second.entries);
  });

  it('surfaces duplicate submissions inline and moves on', async () => {
    const entries = seededBatch(20);
    service.recordVerdict('dupe', entries[0].commit_hash, entries[0].issue_key, 'accept');
    const state = newBatchState(BATCH);
    await loadBatch(client, state);
    renderBatch(root, client, state, 'dupe');

    (root.querySelector('button.link') as HTMLButtonElement).click();
    await flush();
    expect(root.querySelector('.banner.notice')?.textContent).toContain('Already recorded');
    expect(root.querySelector('p.progress')?.textContent).toBe('Pair 2 of 20');
    expect(state.submitted).toBe(0); // the duplicate never counted
  });

  it('stays on the pair after a network failure so no verdict is lost', async () => {
    const state = newBatchState(BATCH);
    await loadBatch(client, state);
    renderBatch(root, client, state, 'flaky');

    service.failNextRequests = 1;
    (root.querySelector('button.link') as HTMLButtonElement).click();
    await flush();
    expect(root.querySelector('p.progress')?.textContent).toBe('Pair 1 of 20');
    expect(root.querySelector('.banner.notice')?.textContent).toContain('network failure');

    (root.querySelector('button.link') as HTMLButtonElement).click();
    await flush();
    expect(root.querySelector('p.progress')?.textContent).toBe('Pair 2 of 20');
    expect(state.submitted).toBe(1);
  });

  it('two raters in full agreement display kappa = 1', async () => {
    // a second rater has already accepted every pair
    for (const entry of seededBatch(20)) {
      service.recordVerdict('other', entry.commit_hash, entry.issue_key, 'accept');
    }
    const state = newBatchState(BATCH);
    await loadBatch(client, state);
    renderBatch(root, client, state, 'me');
    for (let i = 0; i < 20; i += 1) {
      (root.querySelector('button.link') as HTMLButtonElement).click();
      await flush();
    }
    await flush();
    const kappaText = root.querySelector('p.kappa')?.textContent ?? '';
    expect(kappaText).toContain('κ = 1');
    expect(kappaText).toContain('2 raters');
  });

  it('asks for a second rater when agreement is not yet computable', async () => {
    const state = newBatchState(BATCH);
    await loadBatch(client, state);
    renderBatch(root, client, state, 'solo');
    for (let i = 0; i < 20; i += 1) {
      (root.querySelector('button.link') as HTMLButtonElement).click();
      await flush();
    }
    await flush();
    expect(root.querySelector('p.kappa.pending, p.pending, .kappa')?.textContent)
      .toContain('two raters');
  });
});
