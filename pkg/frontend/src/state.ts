// Pure view-state logic. The session view is always a projection of the last
// fetched server state; these helpers never invent latents or attributes.

import type { SessionState } from "./api";
import { normalizesToEmpty } from "./normalize";

export interface ComposerState {
  text: string;
  alpha: number;
  k: number;
  sigma: number;
  validation: string | null;
}

export interface ViewState {
  session: SessionState | null;
  composer: ComposerState;
  pending: boolean;
  banner: string | null;
}

export const DEFAULT_COMPOSER: ComposerState = {
  text: "",
  alpha: 1.0,
  k: 6,
  sigma: 0.1,
  validation: null,
};

export function initialState(): ViewState {
  return {
    session: null,
    composer: { ...DEFAULT_COMPOSER },
    pending: false,
    banner: null,
  };
}

export function canSubmit(state: ViewState): boolean {
  return !state.pending && !normalizesToEmpty(state.composer.text) && sessionOpen(state);
}

export function sessionOpen(state: ViewState): boolean {
  return state.session === null || state.session.status === "active";
}

export function hasSelection(session: SessionState | null): boolean {
  return session !== null && session.steps.some((s) => s.selected !== null);
}

/** Server state replaces the view wholesale; alpha defaults follow selections. */
export function applySessionState(state: ViewState, session: SessionState): ViewState {
  const alphaDefault = hasSelection(session) ? 0.5 : 1.0;
  return {
    ...state,
    session,
    banner: null,
    composer: { ...state.composer, alpha: alphaDefault, validation: null },
  };
}

export function applyComposerText(state: ViewState, text: string): ViewState {
  const validation = normalizesToEmpty(text) && text.trim().length > 0
    ? "description has no usable words"
    : null;
  return { ...state, composer: { ...state.composer, text, validation } };
}

/** API 400s surface inline; the composer text is never cleared. */
export function applyApiError(state: ViewState, message: string): ViewState {
  return {
    ...state,
    pending: false,
    composer: { ...state.composer, validation: message },
  };
}

/** Network failures surface as a retry banner; state otherwise unchanged. */
export function applyNetworkError(state: ViewState, message: string): ViewState {
  return { ...state, pending: false, banner: `server unreachable: ${message}` };
}

export function currentStep(session: SessionState | null) {
  if (session === null || session.steps.length === 0) return null;
  return session.steps[session.steps.length - 1];
}
