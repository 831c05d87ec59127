// The end-to-end loop against the real service (spawned as a subprocess):
// onboarding -> questionnaire -> adaptive feed -> feedback changes the next
// fetch -> drift shows up on the dashboard. DOM driven headlessly.

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { setOverrideHour } from '../src/api';
import * as api from '../src/api';
import { setBaseUrl } from '../src/config';
import { loadState } from '../src/state';
import { FeedView } from '../src/views/feed';
import { renderDashboard } from '../src/views/dashboard';
import { renderOnboarding } from '../src/views/onboarding';
import { renderQuestionnaire } from '../src/views/questionnaire';
import { nextEvent, sleep, startFixtureService, type ServiceHandle } from './helpers';

const PORT = 8931;

let service: ServiceHandle;
let root: HTMLElement;

function setMobileViewport(): void {
  const happy = (window as unknown as { happyDOM?: { setViewport?: (v: object) => void } }).happyDOM;
  if (happy?.setViewport) {
    happy.setViewport({ width: 375, height: 700 });
  } else {
    Object.defineProperty(window, 'innerWidth', { value: 375, configurable: true });
  }
}

beforeAll(async () => {
  service = await startFixtureService(PORT);
  setBaseUrl(service.baseUrl);
  setOverrideHour(3); // night bucket: the MINIMAL-plan regime in the fixture config
  setMobileViewport();
  root = document.createElement('div');
  document.body.appendChild(root);
}, 60_000);

afterAll(() => {
  service?.stop();
});

describe('interactive loop', () => {
  let userId: string;
  let sessionId: string;

  it('onboarding creates the user and session through the UI', async () => {
    const done = new Promise<{ userId: string; sessionId: string }>((resolve) => {
      renderOnboarding(root, resolve);
    });
    (root.querySelector('[data-testid="occupation"]') as HTMLInputElement).value = 'programmer';
    (root.querySelector('[data-testid="goal"]') as HTMLSelectElement).value = 'ENTERTAINMENT';
    (root.querySelector('[data-testid="onboarding-submit"]') as HTMLButtonElement).click();
    const result = await done;
    userId = result.userId;
    sessionId = result.sessionId;
    expect(userId).toBeTruthy();
    expect(sessionId).toBeTruthy();
    expect(loadState().userId).toBe(userId);
  }, 30_000);

  it('all-V questionnaire renders a (100, 0, 0, 0) chart', async () => {
    const scored = new Promise((resolve) => {
      renderQuestionnaire(root, userId, resolve);
    });
    for (let i = 0; i < 16; i++) {
      (root.querySelector(`[data-testid="q${i}-V"]`) as HTMLInputElement).click();
    }
    const submit = root.querySelector('[data-testid="questionnaire-submit"]') as HTMLButtonElement;
    expect(submit.hasAttribute('disabled')).toBe(false);
    submit.click();
    await scored;
    expect(root.querySelector('[data-testid="vark-v"]')!.textContent).toBe('100%');
    expect(root.querySelector('[data-testid="vark-a"]')!.textContent).toBe('0%');
    expect(root.querySelector('[data-testid="vark-r"]')!.textContent).toBe('0%');
    expect(root.querySelector('[data-testid="vark-k"]')!.textContent).toBe('0%');
  }, 30_000);

  it('the MINIMAL-plan feed shows exactly 3 items with descriptions hidden', async () => {
    const view = new FeedView(root, sessionId, 10);
    await view.load();
    const feed = root.querySelector('[data-testid="feed"]')!;
    expect(feed.getAttribute('data-detail')).toBe('MINIMAL');
    expect(root.querySelectorAll('[data-testid="feed-item"]')).toHaveLength(3);
    expect(root.querySelectorAll('[data-testid="description"]')).toHaveLength(0);
  }, 30_000);

  it('a 5-star rating on the first item reorders the refetched feed', async () => {
    const view = new FeedView(root, sessionId, 10);
    await view.load();
    const before = view.currentOrder();
    expect(before.length).toBeGreaterThan(0);
    const firstItem = before[0];
    const updated = nextEvent(root, 'feed:updated', 20_000);
    (root.querySelector(`[data-testid="rate5-${firstItem}"]`) as HTMLButtonElement).click();
    await updated;
    const after = view.currentOrder();
    expect(after).not.toEqual(before);
  }, 30_000);

  it('the dashboard gains a second drift point after 20 positive events', async () => {
    const preProfile = await renderDashboard(root, userId);
    const pointsBefore = preProfile.drift_history.length;
    for (let i = 0; i < 20; i++) {
      await api.sendFeedback(sessionId, '1', 'RATING', 5, `drift-${i}`);
    }
    await sleep(100);
    const profile = await renderDashboard(root, userId);
    expect(profile.drift_history.length).toBeGreaterThanOrEqual(pointsBefore + 1);
    expect(profile.drift_history.length).toBeGreaterThanOrEqual(2);
    const points = root.querySelectorAll('[data-testid="drift-point"]');
    expect(points.length).toBeGreaterThanOrEqual(2);
    // every rendered snapshot still sums to 100%
    points.forEach((_, i) => {
      const total = root.querySelector(`[data-testid="drift-total-${i}"]`)!;
      expect(parseFloat(total.textContent!)).toBeCloseTo(100, 1);
    });
  }, 30_000);
});
