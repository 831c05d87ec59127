// Step one of the loop: collect demographics and a goal, create the user and
// the session. Invalid goals never reach the wire; service failures surface
// as an inline retry banner.

import { createSession, createUser } from '../api';
import { clear, el } from '../dom';
import { detectDevice, saveState } from '../state';
import { GOALS, type Goal } from '../types';

export interface OnboardingResult {
  userId: string;
  sessionId: string;
}

const AGE_BRACKETS = ['under 18', '18-24', '25-34', '35-44', '45-49', '50-55', '56+'];

export function renderOnboarding(root: HTMLElement,
                                 onDone: (result: OnboardingResult) => void): void {
  clear(root);

  const age = el('select', { 'data-testid': 'age' },
    ...AGE_BRACKETS.map((b) => el('option', { value: b }, b)));
  const gender = el('select', { 'data-testid': 'gender' },
    el('option', { value: 'female' }, 'female'),
    el('option', { value: 'male' }, 'male'),
    el('option', { value: 'other' }, 'other'));
  const occupation = el('input', {
    'data-testid': 'occupation', placeholder: 'occupation', value: '',
  });
  const goal = el('select', { 'data-testid': 'goal' },
    ...GOALS.map((g) => el('option', { value: g }, g.toLowerCase())));
  const error = el('p', { class: 'error', 'data-testid': 'onboarding-error' });
  const banner = el('div', { class: 'banner hidden', 'data-testid': 'retry-banner' });

  const submit = el('button', {
    'data-testid': 'onboarding-submit',
    onclick: async () => {
      error.textContent = '';
      banner.classList.add('hidden');
      const chosenGoal = goal.value as Goal;
      if (!GOALS.includes(chosenGoal)) {
        // constrained select should make this unreachable; belt and braces
        error.textContent = `goal must be one of ${GOALS.join(', ')}`;
        return;
      }
      submit.setAttribute('disabled', 'true');
      try {
        const device = detectDevice(window.innerWidth);
        const { user_id } = await createUser({
          age_bracket: age.value,
          gender: gender.value,
          occupation: occupation.value,
        }, chosenGoal);
        const session = await createSession(user_id, device);
        saveState({ userId: user_id, sessionId: session.session_id });
        onDone({ userId: user_id, sessionId: session.session_id });
      } catch (err) {
        banner.textContent = `service unreachable or rejected the request (${String(err)}); try again`;
        banner.classList.remove('hidden');
      } finally {
        submit.removeAttribute('disabled');
      }
    },
  }, 'Start');

  root.append(
    el('h2', {}, 'Tell us a little about yourself'),
    el('label', {}, 'Age bracket ', age),
    el('label', {}, 'Gender ', gender),
    el('label', {}, 'Occupation ', occupation),
    el('label', {}, 'What brings you here? ', goal),
    error,
    banner,
    submit,
  );
}
