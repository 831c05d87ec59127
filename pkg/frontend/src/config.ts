// Single configuration knob: where the recommendation service lives.
// Overridable at runtime (tests, reverse proxies) via window.COGREC_BASE_URL.

declare global {
  // eslint-disable-next-line no-var
  var COGREC_BASE_URL: string | undefined;
}

export function baseUrl(): string {
  return globalThis.COGREC_BASE_URL ?? 'http://127.0.0.1:8000';
}

export function setBaseUrl(url: string): void {
  globalThis.COGREC_BASE_URL = url;
}
