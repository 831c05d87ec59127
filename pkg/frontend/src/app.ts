// Hash-routed single-page app wiring the four views to the service.

import { clear, el } from './dom';
import { loadState, saveState } from './state';
import { FeedView } from './views/feed';
import { renderDashboard } from './views/dashboard';
import { renderOnboarding } from './views/onboarding';
import { renderQuestionnaire } from './views/questionnaire';

export function mountApp(root: HTMLElement): void {
  const nav = el('nav', {},
    el('a', { href: '#/feed' }, 'Feed'), ' | ',
    el('a', { href: '#/dashboard' }, 'Profile'), ' | ',
    el('a', { href: '#/onboarding' }, 'Start over'));
  const outlet = el('main', {});
  root.append(nav, outlet);

  const route = async () => {
    const state = loadState();
    const hash = window.location.hash || '#/onboarding';
    clear(outlet);
    if (hash.startsWith('#/questionnaire') && state.userId) {
      renderQuestionnaire(outlet, state.userId, () => {
        window.location.hash = '#/feed';
      });
    } else if (hash.startsWith('#/feed') && state.sessionId) {
      const view = new FeedView(outlet, state.sessionId);
      await view.load();
    } else if (hash.startsWith('#/dashboard') && state.userId) {
      await renderDashboard(outlet, state.userId);
    } else {
      renderOnboarding(outlet, ({ userId, sessionId }) => {
        saveState({ userId, sessionId });
        window.location.hash = '#/questionnaire';
      });
    }
  };

  window.addEventListener('hashchange', () => void route());
  void route();
}
