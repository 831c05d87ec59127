// The 16-question style questionnaire. Submit stays disabled until every
// question has an answer; the returned vector renders as a four-bar chart.

import { submitQuestionnaire } from '../api';
import { clear, el } from '../dom';
import { QUESTIONS } from '../questions';
import type { VarkVector } from '../types';

const CHANNEL_LABELS: [keyof VarkVector, string][] = [
  ['v', 'Visual'], ['a', 'Auditory'], ['r', 'Reading/Writing'], ['k', 'Kinesthetic'],
];

export function renderVarkChart(vark: VarkVector): HTMLElement {
  const chart = el('div', { class: 'vark-chart', 'data-testid': 'vark-chart' });
  for (const [key, label] of CHANNEL_LABELS) {
    const percent = Math.round(vark[key] * 1000) / 10;
    chart.append(el('div', { class: 'vark-row' },
      el('span', { class: 'vark-label' }, label),
      el('div', { class: 'vark-bar', style: `width: ${percent}%` }),
      el('span', { class: 'vark-value', 'data-testid': `vark-${key}` }, `${percent}%`),
    ));
  }
  return chart;
}

export function renderQuestionnaire(root: HTMLElement, userId: string,
                                    onScored: (vark: VarkVector) => void): void {
  clear(root);
  const answers: (string | null)[] = QUESTIONS.map(() => null);
  const error = el('p', { class: 'error', 'data-testid': 'questionnaire-error' });
  const chartSlot = el('div', {});

  const submit = el('button', {
    'data-testid': 'questionnaire-submit', disabled: 'true',
    onclick: async () => {
      error.textContent = '';
      try {
        const { vark } = await submitQuestionnaire(userId, answers as string[]);
        chartSlot.replaceChildren(renderVarkChart(vark));
        onScored(vark);
      } catch (err) {
        error.textContent = String(err);
      }
    },
  }, 'See my profile');

  const refresh = () => {
    if (answers.every((a) => a !== null)) {
      submit.removeAttribute('disabled');
    } else {
      submit.setAttribute('disabled', 'true');
    }
  };

  const list = el('ol', { class: 'questions' });
  QUESTIONS.forEach((question, qi) => {
    const item = el('li', {}, el('p', {}, question.text));
    for (const option of question.options) {
      const radio = el('input', {
        type: 'radio', name: `q${qi}`, value: option.letter,
        'data-testid': `q${qi}-${option.letter}`,
        onchange: () => {
          answers[qi] = option.letter;
          refresh();
        },
      });
      item.append(el('label', { class: 'option' }, radio, ` ${option.label}`));
    }
    list.append(item);
  });

  root.append(
    el('h2', {}, 'How do you prefer to take things in?'),
    list, error, submit, chartSlot,
  );
}
