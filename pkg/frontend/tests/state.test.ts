import { describe, expect, it } from "vitest";

import {
  applyAnswer,
  isConcluded,
  needsDiscovery,
  pendingAttribute,
  replaceView,
  startState,
} from "../src/state.js";
import { question, view } from "./helpers.js";

describe("session state", () => {
  it("starts with the server view and no history", () => {
    const state = startState(view({ pending_question: question("hbsagreact") }));
    expect(state.history).toEqual([]);
    expect(pendingAttribute(state)).toBe("hbsagreact");
  });

  it("answers append to history in click order", () => {
    let state = startState(view({ pending_question: question("hbsagreact") }));
    state = applyAnswer(state, "hbsagreact", "yes",
      view({ pending_question: question("igmantihbcreact"), answers_applied: 1 }));
    state = applyAnswer(state, "igmantihbcreact", "no",
      view({ status: "concluded", answers_applied: 2,
        result: { attribute: "hbv", value: "positive", advice: "", rules: ["r2"] } }));
    expect(state.history).toEqual([
      { attribute: "hbsagreact", value: "yes" },
      { attribute: "igmantihbcreact", value: "no" },
    ]);
    expect(isConcluded(state)).toBe(true);
  });

  it("exposes at most one pending question, only while active", () => {
    const active = startState(view({ pending_question: question("a") }));
    expect(pendingAttribute(active)).toBe("a");
    const concludedWithStaleQuestion = startState(view({
      status: "concluded",
      pending_question: question("a"),
      result: { attribute: "hbv", value: "negative", advice: "", rules: [] },
    }));
    expect(pendingAttribute(concludedWithStaleQuestion)).toBeNull();
  });

  it("never invents a result: concluded requires the server's result", () => {
    const state = startState(view({ status: "concluded", result: null }));
    expect(isConcluded(state)).toBe(false);
  });

  it("flags unresolved sessions for discovery", () => {
    expect(needsDiscovery(startState(view({ status: "unknown" })))).toBe(true);
    expect(needsDiscovery(startState(view({ status: "awaiting_discovery" })))).toBe(true);
    expect(needsDiscovery(startState(view({ status: "active" })))).toBe(false);
  });

  it("replaceView keeps the history intact", () => {
    let state = startState(view({}));
    state = applyAnswer(state, "a", "yes", view({ answers_applied: 1 }));
    const replaced = replaceView(state, view({ status: "unknown", answers_applied: 1 }));
    expect(replaced.history).toEqual(state.history);
    expect(replaced.view.status).toBe("unknown");
  });
});
