import { describe, expect, it } from "vitest";
import type { SessionState } from "../src/api";
import {
  applyApiError,
  applyComposerText,
  applyNetworkError,
  applySessionState,
  canSubmit,
  currentStep,
  hasSelection,
  initialState,
} from "../src/state";

function session(partial: Partial<SessionState> = {}): SessionState {
  return {
    session_id: "s1",
    created_at: 0,
    status: "active",
    steps: [],
    ...partial,
  };
}

function step(index: number, selected: number | null) {
  return {
    index,
    text: `step ${index}`,
    alpha: 1,
    base: [],
    k: 2,
    sigma: 0.1,
    noise_seed: 0,
    variants: [[], []],
    selected,
    timestamp: 0,
  };
}

describe("view state", () => {
  it("blocks submit for empty or all-stopword text", () => {
    let state = initialState();
    expect(canSubmit(state)).toBe(false);
    state = applyComposerText(state, "the a an");
    expect(canSubmit(state)).toBe(false);
    expect(state.composer.validation).toMatch(/no usable words/);
    state = applyComposerText(state, "a young man");
    expect(canSubmit(state)).toBe(true);
    expect(state.composer.validation).toBeNull();
  });

  it("blocks submit while a request is pending", () => {
    let state = applyComposerText(initialState(), "a boy");
    state = { ...state, pending: true };
    expect(canSubmit(state)).toBe(false);
  });

  it("projects server state and drops the alpha default after a selection", () => {
    let state = applyComposerText(initialState(), "a boy");
    state = applySessionState(state, session({ steps: [step(0, null)] }));
    expect(state.composer.alpha).toBe(1.0);
    state = applySessionState(state, session({ steps: [step(0, 1)] }));
    expect(state.composer.alpha).toBe(0.5);
    expect(hasSelection(state.session)).toBe(true);
  });

  it("keeps composer text through API errors", () => {
    let state = applyComposerText(initialState(), "a sad woman");
    state = applyApiError(state, "empty-description: nope");
    expect(state.composer.text).toBe("a sad woman");
    expect(state.composer.validation).toMatch(/empty-description/);
  });

  it("keeps composer text through network failures and shows a banner", () => {
    let state = applyComposerText(initialState(), "a sad woman");
    state = applyNetworkError(state, "connection refused");
    expect(state.composer.text).toBe("a sad woman");
    expect(state.banner).toMatch(/unreachable/);
  });

  it("closed sessions block submission", () => {
    let state = applyComposerText(initialState(), "a boy");
    state = applySessionState(state, session({ status: "closed" }));
    expect(canSubmit(state)).toBe(false);
  });

  it("currentStep returns the newest step", () => {
    const s = session({ steps: [step(0, null), step(1, 0)] });
    expect(currentStep(s)?.index).toBe(1);
    expect(currentStep(null)).toBeNull();
    expect(currentStep(session())).toBeNull();
  });
});
