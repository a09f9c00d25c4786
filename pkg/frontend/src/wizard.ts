/**
 * Consultation wizard: one question card at a time, a progress trail of
 * the answers already given, and a result card with advice when the
 * session concludes. Answer buttons come straight from the server view's
 * allowed answers; every click is sent in order, and outcomes shown are
 * exactly the server's.
 */

import { ApiClient, ApiError } from "./api.js";
import { button, clear, el } from "./dom.js";
import { DiscoveryDialog } from "./discovery.js";
import {
  applyAnswer,
  isConcluded,
  needsDiscovery,
  pendingAttribute,
  startState,
  type UiSessionState,
} from "./state.js";
import type { SessionView } from "./types.js";

export class ConsultationWizard {
  private state: UiSessionState | null = null;
  private whyText: string | null = null;
  private howText: string | null = null;
  private lastError: ApiError | null = null;
  private busy = false;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    private readonly onKbChanged: () => void = () => {},
  ) {}

  async start(goal: string | undefined, facts: Record<string, string>): Promise<void> {
    this.whyText = null;
    this.howText = null;
    this.lastError = null;
    try {
      const view = await this.api.startSession(goal, facts);
      this.state = startState(view);
    } catch (error) {
      this.state = null;
      this.lastError = error instanceof ApiError ? error : null;
      if (!(error instanceof ApiError)) throw error;
    }
    this.render();
  }

  current(): UiSessionState | null {
    return this.state;
  }

  private async sendAnswer(attribute: string, value: string): Promise<void> {
    if (!this.state || this.busy) return;
    this.busy = true;
    this.lastError = null;
    this.whyText = null;
    try {
      const view = await this.api.answer(this.state.view.id, attribute, value);
      this.state = applyAnswer(this.state, attribute, value, view);
    } catch (error) {
      if (error instanceof ApiError) {
        this.lastError = error;
      } else {
        throw error;
      }
    } finally {
      this.busy = false;
    }
    this.render();
  }

  private async toggleWhy(): Promise<void> {
    if (!this.state) return;
    if (this.whyText !== null) {
      this.whyText = null;
    } else {
      const explanation = await this.api.explanation(this.state.view.id, "why");
      this.whyText = explanation.text;
    }
    this.render();
  }

  private async toggleHow(): Promise<void> {
    if (!this.state) return;
    if (this.howText !== null) {
      this.howText = null;
    } else {
      const explanation = await this.api.explanation(this.state.view.id, "how");
      this.howText = explanation.text;
    }
    this.render();
  }

  render(): void {
    clear(this.root);
    if (this.lastError) {
      this.root.append(
        el("div", { class: "error", "data-testid": "error" }, [
          el("strong", {}, [this.lastError.body.code]),
          ` ${this.lastError.body.message}`,
        ]),
      );
    }
    if (!this.state) return;
    const view = this.state.view;

    this.root.append(this.renderTrail());

    const pending = pendingAttribute(this.state);
    if (pending && view.pending_question) {
      this.root.append(this.renderQuestionCard(pending, view.pending_question.prompt,
        view.pending_question.answers));
    } else if (isConcluded(this.state)) {
      this.root.append(this.renderResultCard(view));
    } else if (needsDiscovery(this.state)) {
      this.root.append(this.renderUnknownCard(view));
    }
  }

  private renderTrail(): HTMLElement {
    const items = this.state!.history.map((record) =>
      el("li", { class: "trail-item" }, [`${record.attribute}: ${record.value}`]),
    );
    const givenFacts = Object.entries(this.state!.view.facts)
      .filter(([attribute]) =>
        !this.state!.history.some((record) => record.attribute === attribute))
      .filter(([attribute]) => attribute !== this.state!.view.goal);
    const given = givenFacts.map(([attribute, value]) =>
      el("li", { class: "trail-item given" }, [`${attribute}: ${value} (known)`]),
    );
    return el("ol", { class: "trail", "data-testid": "trail" }, [...given, ...items]);
  }

  private renderQuestionCard(attribute: string, prompt: string, answers: string[]): HTMLElement {
    const buttons = answers.map((value) =>
      button(value, () => void this.sendAnswer(attribute, value), {
        class: "answer",
        "data-testid": `answer-${value}`,
      }),
    );
    const card = el("section", { class: "card question", "data-testid": "question-card" }, [
      el("h2", {}, [prompt]),
      el("div", { class: "answers" }, buttons),
      button("why is this asked?", () => void this.toggleWhy(), {
        class: "link",
        "data-testid": "why-toggle",
      }),
    ]);
    card.setAttribute("data-attribute", attribute);
    if (this.whyText !== null) {
      card.append(el("pre", { class: "why", "data-testid": "why-text" }, [this.whyText]));
    }
    return card;
  }

  private renderResultCard(view: SessionView): HTMLElement {
    const result = view.result!;
    const card = el("section", { class: "card result", "data-testid": "result-card" }, [
      el("h2", {}, [`${result.attribute} = ${result.value}`]),
      result.advice ? el("p", { class: "advice", "data-testid": "advice" }, [result.advice]) : "",
      el("p", { class: "rules" }, [`rules: ${result.rules.join(", ") || "(direct)"}`]),
      button("how was this derived?", () => void this.toggleHow(), {
        class: "link",
        "data-testid": "how-toggle",
      }),
    ].filter((x) => x !== "") as Array<Node | string>);
    if (this.howText !== null) {
      card.append(el("pre", { class: "how", "data-testid": "how-text" }, [this.howText]));
    }
    return card;
  }

  private renderUnknownCard(view: SessionView): HTMLElement {
    const card = el("section", { class: "card unknown", "data-testid": "unknown-card" }, [
      el("h2", {}, [`no conclusion for ${view.goal}`]),
      el("p", {}, ["The rule base cannot decide this case. An expert can teach a new rule."]),
    ]);
    const host = el("div", { "data-testid": "discovery-host" });
    const dialog = new DiscoveryDialog(this.api, host, (updated) => {
      this.state = { view: updated, history: this.state!.history };
      this.onKbChanged();
      this.render();
    });
    card.append(
      button("teach the system", () => void dialog.open(view.id), {
        class: "primary",
        "data-testid": "open-discovery",
      }),
      host,
    );
    return card;
  }
}
