/**
 * Consultation state: the latest server view plus a local answer history
 * used only for the progress trail. The server view is the single source
 * of truth -- reducers never synthesize status, questions or results, they
 * only copy what the server returned.
 */

import type { SessionView } from "./types.js";

export interface AnswerRecord {
  attribute: string;
  value: string;
}

export interface UiSessionState {
  view: SessionView;
  history: AnswerRecord[];
}

export function startState(view: SessionView): UiSessionState {
  return { view, history: [] };
}

export function applyAnswer(
  state: UiSessionState,
  attribute: string,
  value: string,
  view: SessionView,
): UiSessionState {
  return { view, history: [...state.history, { attribute, value }] };
}

export function replaceView(state: UiSessionState, view: SessionView): UiSessionState {
  return { view, history: state.history };
}

/** Exactly one question may be pending, and only while the session is active. */
export function pendingAttribute(state: UiSessionState): string | null {
  const question = state.view.pending_question;
  if (!question || state.view.status !== "active") return null;
  return question.attribute;
}

export function isConcluded(state: UiSessionState): boolean {
  return state.view.status === "concluded" && state.view.result !== null;
}

export function needsDiscovery(state: UiSessionState): boolean {
  return state.view.status === "unknown" || state.view.status === "awaiting_discovery";
}
