/**
 * Discovery dialog: opens when a consultation ends unresolved. The
 * template's premises arrive pre-checked from the server; the expert can
 * add one or more new attribute=value premises, pick the conclusion, and
 * commit. The commit is never optimistic -- the dialog waits for the
 * validation result and shows conflicting case rows verbatim on rejection.
 */

import { ApiClient, ApiError } from "./api.js";
import { button, clear, el } from "./dom.js";
import type { CaseInfo, DiscoveryTemplate, FactBody, SessionView } from "./types.js";

export class DiscoveryDialog {
  private template: DiscoveryTemplate | null = null;
  private sessionId: string | null = null;
  private extraPremises: FactBody[] = [];
  private checked = new Map<string, boolean>();
  private conclusionValue: string | null = null;
  private expert = "";
  private conflictCases: CaseInfo[] = [];
  private error: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    private readonly onResolved: (view: SessionView) => void,
  ) {}

  async open(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    this.template = await this.api.openDiscovery(sessionId);
    this.checked = new Map(this.template.premises.map((p) => [p.attribute, true]));
    this.extraPremises = [];
    this.conclusionValue = null;
    this.conflictCases = [];
    this.error = null;
    this.render();
  }

  private selectedPremises(): FactBody[] {
    const fromTemplate = (this.template?.premises ?? []).filter(
      (p) => this.checked.get(p.attribute) !== false,
    );
    return [...fromTemplate, ...this.extraPremises];
  }

  private async commit(override: boolean): Promise<void> {
    if (!this.template || !this.sessionId) return;
    if (!this.conclusionValue) {
      this.error = "pick a conclusion value";
      this.render();
      return;
    }
    this.error = null;
    try {
      const response = await this.api.commitDiscovery(
        this.sessionId,
        this.selectedPremises(),
        { attribute: this.template.conclusion_attribute, value: this.conclusionValue },
        this.expert,
        override,
      );
      if (response.validation.status === "accepted") {
        clear(this.root);
        this.onResolved(response.session);
        return;
      }
      const conflicting = new Set(response.validation.conflicting_cases);
      const allCases = await this.api.cases();
      this.conflictCases = allCases.filter((c) => conflicting.has(c.id));
    } catch (error) {
      this.error = error instanceof ApiError
        ? `${error.body.code}: ${error.body.message}`
        : String(error);
    }
    this.render();
  }

  private async abort(): Promise<void> {
    if (!this.sessionId) return;
    await this.api.abortDiscovery(this.sessionId);
    this.template = null;
    clear(this.root);
  }

  render(): void {
    clear(this.root);
    if (!this.template) return;

    const premiseRows = this.template.premises.map((premise) => {
      const checkbox = el("input", {
        type: "checkbox",
        "data-testid": `premise-${premise.attribute}`,
      });
      checkbox.checked = this.checked.get(premise.attribute) !== false;
      checkbox.addEventListener("change", () => {
        this.checked.set(premise.attribute, checkbox.checked);
      });
      return el("label", { class: "premise" }, [
        checkbox,
        ` ${premise.attribute} = ${premise.value}`,
      ]);
    });

    const extraList = el(
      "ul",
      { class: "extra-premises", "data-testid": "extra-premises" },
      this.extraPremises.map((p) => el("li", {}, [`${p.attribute} = ${p.value}`])),
    );

    const attrInput = el("input", {
      type: "text",
      placeholder: "new attribute",
      "data-testid": "new-attribute",
    });
    const valueInput = el("input", {
      type: "text",
      placeholder: "value",
      "data-testid": "new-value",
    });
    const addButton = button(
      "add premise",
      () => {
        const attribute = attrInput.value.trim().toLowerCase();
        const value = valueInput.value.trim().toLowerCase();
        if (!attribute || !value) return;
        this.extraPremises.push({ attribute, value });
        this.render();
      },
      { "data-testid": "add-premise" },
    );

    const conclusionSelect = el("select", { "data-testid": "conclusion" });
    conclusionSelect.append(el("option", { value: "" }, ["(pick conclusion)"]));
    for (const value of this.template.goal_values) {
      conclusionSelect.append(el("option", { value }, [value]));
    }
    if (this.conclusionValue) conclusionSelect.value = this.conclusionValue;
    conclusionSelect.addEventListener("change", () => {
      this.conclusionValue = conclusionSelect.value || null;
    });

    const expertInput = el("input", {
      type: "text",
      placeholder: "expert name",
      "data-testid": "expert",
    });
    expertInput.value = this.expert;
    expertInput.addEventListener("input", () => {
      this.expert = expertInput.value;
    });

    const dialog = el("div", { class: "discovery", "data-testid": "discovery-dialog" }, [
      el("h3", {}, [`teach a rule for ${this.template.conclusion_attribute}`]),
      el("div", { class: "premises" }, premiseRows),
      extraList,
      el("div", { class: "add-row" }, [attrInput, valueInput, addButton]),
      el("div", { class: "conclusion-row" }, [
        el("span", {}, [`${this.template.conclusion_attribute} = `]),
        conclusionSelect,
      ]),
      el("div", { class: "expert-row" }, [expertInput]),
      el("div", { class: "actions" }, [
        button("commit", () => void this.commit(false), {
          class: "primary",
          "data-testid": "commit-discovery",
        }),
        button("abort", () => void this.abort(), { "data-testid": "abort-discovery" }),
      ]),
    ]);

    if (this.error) {
      dialog.append(el("div", { class: "error", "data-testid": "discovery-error" }, [this.error]));
    }
    if (this.conflictCases.length) {
      const rows = this.conflictCases.map((c) =>
        el("tr", { "data-testid": `conflict-${c.id}` }, [
          el("td", {}, [String(c.id)]),
          el("td", {}, [c.label]),
          el("td", {}, [c.text]),
        ]),
      );
      dialog.append(
        el("div", { class: "conflicts", "data-testid": "conflicts" }, [
          el("p", {}, ["the proposal contradicts these stored cases:"]),
          el("table", {}, [el("tbody", {}, rows)]),
          button("commit anyway (override)", () => void this.commit(true), {
            "data-testid": "override-discovery",
          }),
        ]),
      );
    }
    this.root.append(dialog);
  }
}
