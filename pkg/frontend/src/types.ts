export type Goal = 'PURCHASE' | 'ENTERTAINMENT' | 'RESEARCH' | 'LEARNING';
export type Device = 'MOBILE' | 'TABLET' | 'DESKTOP';
export type VarkLetter = 'V' | 'A' | 'R' | 'K';

export const GOALS: Goal[] = ['PURCHASE', 'ENTERTAINMENT', 'RESEARCH', 'LEARNING'];

export interface VarkVector {
  v: number;
  a: number;
  r: number;
  k: number;
}

export interface Demographics {
  age_bracket: string;
  gender: string;
  occupation: string;
}

export interface CognitiveState {
  capacity: number;
  attention: number;
  complexity_pref: number;
  presentation: Record<string, number>;
}

export interface SessionInfo {
  session_id: string;
  cognitive_state: CognitiveState;
}

export interface FeedItem {
  item_id: string;
  title: string;
  score: number;
  explanation: string;
  serendipity: boolean;
  description: string;
}

export interface PresentationPlan {
  emphasis: 'VISUAL' | 'AUDIO' | 'TEXT' | 'INTERACTIVE';
  detail: 'FULL' | 'COMPACT' | 'MINIMAL';
  visible_count: number;
}

export interface FeedPayload {
  session_id: string;
  items: FeedItem[];
  plan: PresentationPlan;
  replaced: [string, string][];
}

export type FeedbackKind =
  | 'IMPRESSION' | 'CLICK' | 'VIEW_TIME' | 'RATING' | 'SKIP' | 'WISHLIST' | 'COMPLETE';

export interface ProfilePayload {
  user_id: string;
  goal: Goal;
  vark: VarkVector;
  drift_history: VarkVector[];
  top_entities: { name: string; weight: number }[];
}

export interface ApiErrorBody {
  code: number;
  message: string;
  details?: unknown;
}
