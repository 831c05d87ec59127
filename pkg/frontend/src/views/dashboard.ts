// Profile-drift dashboard: the style vector's history as a four-series time
// chart (every snapshot sums to 100%), plus the user's strongest entities.

import { fetchProfile } from '../api';
import { clear, el } from '../dom';
import type { ProfilePayload, VarkVector } from '../types';

const SERIES: { key: keyof VarkVector; label: string }[] = [
  { key: 'v', label: 'Visual' },
  { key: 'a', label: 'Auditory' },
  { key: 'r', label: 'Reading/Writing' },
  { key: 'k', label: 'Kinesthetic' },
];

function driftChart(history: VarkVector[]): HTMLElement {
  if (history.length === 0) {
    return el('p', { 'data-testid': 'drift-placeholder' },
      'No profile history yet; answer the questionnaire to begin.');
  }
  const width = 320;
  const height = 120;
  const step = history.length > 1 ? width / (history.length - 1) : 0;
  const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg');
  svg.setAttribute('viewBox', `0 0 ${width} ${height}`);
  svg.setAttribute('data-testid', 'drift-chart');
  svg.setAttribute('data-points', String(history.length));
  for (const series of SERIES) {
    const points = history.map((snap, i) => {
      const x = history.length > 1 ? i * step : width / 2;
      const y = height - snap[series.key] * height;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    }).join(' ');
    const line = document.createElementNS('http://www.w3.org/2000/svg', 'polyline');
    line.setAttribute('points', points);
    line.setAttribute('fill', 'none');
    line.setAttribute('class', `series-${series.key}`);
    svg.appendChild(line);
  }
  return svg as unknown as HTMLElement;
}

export function renderDriftTable(history: VarkVector[]): HTMLElement {
  const table = el('table', { 'data-testid': 'drift-table' });
  const header = el('tr', {}, el('th', {}, '#'));
  for (const s of SERIES) header.append(el('th', {}, s.label));
  header.append(el('th', {}, 'total'));
  table.append(header);
  history.forEach((snap, i) => {
    const row = el('tr', { 'data-testid': 'drift-point' }, el('td', {}, String(i)));
    let total = 0;
    for (const s of SERIES) {
      const pct = snap[s.key] * 100;
      total += pct;
      row.append(el('td', {}, `${pct.toFixed(1)}%`));
    }
    row.append(el('td', { 'data-testid': `drift-total-${i}` }, `${total.toFixed(1)}%`));
    table.append(row);
  });
  return table;
}

export async function renderDashboard(root: HTMLElement, userId: string):
    Promise<ProfilePayload> {
  const profile = await fetchProfile(userId);
  clear(root);
  root.append(
    el('h2', {}, 'Your profile over time'),
    driftChart(profile.drift_history),
    renderDriftTable(profile.drift_history),
    el('h3', {}, 'Strongest interests'),
    el('ul', { 'data-testid': 'top-entities' },
      ...profile.top_entities.map((e) =>
        el('li', {}, `${e.name} (${e.weight.toFixed(2)})`))),
  );
  return profile;
}
