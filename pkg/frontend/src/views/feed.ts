// The adaptive feed. Rendering honors the server's presentation plan
// exactly: the emphasis mode picks the layout variant, MINIMAL detail hides
// descriptions, and only plan.visible_count items show before "show more".
// Feedback buttons fire exactly one POST each (unique client event id,
// optimistic disable while in flight) and trigger a debounced refetch --
// ordering always comes back from the server, never from local reshuffling.

import { fetchFeed, sendFeedback } from '../api';
import { clear, el } from '../dom';
import type { FeedbackKind, FeedItem, FeedPayload } from '../types';

const REFETCH_DEBOUNCE_MS = 150;

function eventId(): string {
  const anyCrypto = globalThis.crypto as Crypto | undefined;
  if (anyCrypto?.randomUUID) return anyCrypto.randomUUID();
  return `ev-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

export class FeedView {
  private payload: FeedPayload | null = null;
  private showAll = false;
  private fetchSeq = 0;
  private refetchTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private root: HTMLElement, private sessionId: string,
              private k = 10) {}

  async load(): Promise<void> {
    const seq = ++this.fetchSeq;
    const payload = await fetchFeed(this.sessionId, this.k);
    if (seq !== this.fetchSeq) return; // a newer fetch superseded this one
    this.payload = payload;
    this.render();
    this.root.dispatchEvent(new CustomEvent('feed:updated', { detail: payload }));
  }

  currentOrder(): string[] {
    return this.payload?.items.map((i) => i.item_id) ?? [];
  }

  private scheduleRefetch(): void {
    if (this.refetchTimer !== null) clearTimeout(this.refetchTimer);
    this.refetchTimer = setTimeout(() => {
      this.refetchTimer = null;
      void this.load();
    }, REFETCH_DEBOUNCE_MS);
  }

  private async feedback(button: HTMLButtonElement, itemId: string,
                         kind: FeedbackKind, value: number | null): Promise<void> {
    if (button.hasAttribute('disabled')) return;
    button.setAttribute('disabled', 'true'); // optimistic button state only
    try {
      await sendFeedback(this.sessionId, itemId, kind, value, eventId());
    } finally {
      button.removeAttribute('disabled');
    }
    this.scheduleRefetch();
  }

  private itemCard(item: FeedItem, detail: string): HTMLElement {
    const card = el('article', {
      class: `card detail-${detail.toLowerCase()}`,
      'data-testid': 'feed-item',
      'data-item-id': item.item_id,
    });
    if (item.serendipity) {
      card.append(el('span', { class: 'badge', 'data-testid': 'serendipity-badge' },
        'something different'));
    }
    card.append(el('h3', {}, item.title));
    if (detail !== 'MINIMAL') {
      card.append(el('p', { class: 'description', 'data-testid': 'description' },
        item.description || item.explanation));
    }
    card.append(el('p', { class: 'explanation' }, item.explanation));

    const actions = el('div', { class: 'actions' });
    const mk = (label: string, testid: string, kind: FeedbackKind,
                value: number | null) => {
      const button = el('button', { 'data-testid': `${testid}-${item.item_id}` },
        label);
      button.addEventListener('click', () => {
        void this.feedback(button as HTMLButtonElement, item.item_id, kind, value);
      });
      return button;
    };
    actions.append(
      mk('open', 'click', 'CLICK', null),
      mk('skip', 'skip', 'SKIP', null),
      mk('save', 'wishlist', 'WISHLIST', null),
    );
    for (let stars = 1; stars <= 5; stars++) {
      actions.append(mk('★'.repeat(stars), `rate${stars}`, 'RATING', stars));
    }
    card.append(actions);
    return card;
  }

  private render(): void {
    clear(this.root);
    if (!this.payload) return;
    const { items, plan } = this.payload;
    const container = el('div', {
      class: `feed emphasis-${plan.emphasis.toLowerCase()}`,
      'data-testid': 'feed',
      'data-emphasis': plan.emphasis,
      'data-detail': plan.detail,
    });
    const visible = this.showAll ? items.length
      : Math.min(plan.visible_count, items.length);
    for (const item of items.slice(0, visible)) {
      container.append(this.itemCard(item, plan.detail));
    }
    if (visible < items.length) {
      const more = el('button', { 'data-testid': 'show-more' },
        `Show ${items.length - visible} more`);
      more.addEventListener('click', () => {
        this.showAll = true;
        this.render();
      });
      container.append(more);
    }
    this.root.append(container);
  }
}
