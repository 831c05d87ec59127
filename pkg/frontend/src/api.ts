// Thin typed client over the service's JSON API. All state the app renders
// comes back through these calls; nothing is derived client-side.

import { baseUrl } from './config';
import type {
  ApiErrorBody, Demographics, FeedbackKind, FeedPayload, Goal,
  ProfilePayload, SessionInfo, VarkVector,
} from './types';

export class ServiceError extends Error {
  constructor(public status: number, public body: ApiErrorBody | null) {
    super(body?.message ?? `service error ${status}`);
  }
}

/** Hour override; honored by the service only in test mode. */
let overrideHour: number | null = null;

export function setOverrideHour(hour: number | null): void {
  overrideHour = hour;
}

async function request<T>(method: string, path: string, body?: unknown,
                          headers: Record<string, string> = {}): Promise<T> {
  const allHeaders: Record<string, string> = {
    'Content-Type': 'application/json',
    ...headers,
  };
  if (overrideHour !== null) {
    allHeaders['X-Override-Hour'] = String(overrideHour);
  }
  const resp = await fetch(`${baseUrl()}${path}`, {
    method,
    headers: allHeaders,
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  if (!resp.ok) {
    let parsed: ApiErrorBody | null = null;
    try {
      parsed = (await resp.json()) as ApiErrorBody;
    } catch {
      parsed = null;
    }
    throw new ServiceError(resp.status, parsed);
  }
  return (await resp.json()) as T;
}

export function createUser(demographics: Demographics, goal: Goal,
                           idempotencyKey?: string): Promise<{ user_id: string }> {
  const headers: Record<string, string> = {};
  if (idempotencyKey) headers['Idempotency-Key'] = idempotencyKey;
  return request('POST', '/users', { demographics, goal }, headers);
}

export function submitQuestionnaire(userId: string, answers: string[]):
    Promise<{ vark: VarkVector }> {
  return request('POST', `/users/${userId}/questionnaire`, { answers });
}

export function createSession(userId: string, device: string):
    Promise<SessionInfo> {
  return request('POST', '/sessions', { user_id: userId, device });
}

export function fetchFeed(sessionId: string, k = 10): Promise<FeedPayload> {
  return request('GET', `/sessions/${sessionId}/recommendations?k=${k}`);
}

export function sendFeedback(sessionId: string, itemId: string, kind: FeedbackKind,
                             value: number | null, eventId: string): Promise<unknown> {
  return request('POST', '/feedback', {
    session_id: sessionId,
    item_id: itemId,
    kind,
    value,
    event_id: eventId,
  });
}

export function fetchProfile(userId: string): Promise<ProfilePayload> {
  return request('GET', `/users/${userId}/profile`);
}

export function health(): Promise<{ status: string }> {
  return request('GET', '/healthz');
}
