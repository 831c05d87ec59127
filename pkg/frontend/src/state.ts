// App-level identifiers survive a hard refresh in sessionStorage; every view
// re-derives its content from service responses, never from cached payloads.

export interface AppState {
  userId: string | null;
  sessionId: string | null;
}

const KEY = 'cogrec-state';

function storage(): Storage | null {
  try {
    return globalThis.sessionStorage ?? null;
  } catch {
    return null;
  }
}

export function loadState(): AppState {
  const raw = storage()?.getItem(KEY);
  if (!raw) return { userId: null, sessionId: null };
  try {
    return JSON.parse(raw) as AppState;
  } catch {
    return { userId: null, sessionId: null };
  }
}

export function saveState(state: AppState): void {
  storage()?.setItem(KEY, JSON.stringify(state));
}

export function resetState(): void {
  storage()?.removeItem(KEY);
}

/** Viewport-width buckets stand in for a real device signal. */
export function detectDevice(width: number): 'MOBILE' | 'TABLET' | 'DESKTOP' {
  if (width < 768) return 'MOBILE';
  if (width < 1100) return 'TABLET';
  return 'DESKTOP';
}
