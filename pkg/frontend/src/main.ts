/**
 * App shell: start form (goal picker, optional already-known facts), the
 * consultation wizard, and tabs for the KB browser and maintenance panel.
 * One active session per tab; the API base defaults to same-origin and can
 * be overridden with ?api=http://host:port.
 */

import { ApiClient } from "./api.js";
import { KbBrowser } from "./browser.js";
import { button, clear, el } from "./dom.js";
import { MaintenancePanel } from "./maintenance.js";
import type { SchemaInfo } from "./types.js";
import { ConsultationWizard } from "./wizard.js";

export function apiBaseFromLocation(href: string): string {
  const url = new URL(href);
  return url.searchParams.get("api") ?? url.origin;
}

export class App {
  private readonly api: ApiClient;
  private schema: SchemaInfo | null = null;
  private wizard: ConsultationWizard | null = null;
  private browser: KbBrowser | null = null;

  constructor(
    private readonly root: HTMLElement,
    apiBase: string,
  ) {
    this.api = new ApiClient(apiBase);
  }

  async boot(): Promise<void> {
    this.schema = await this.api.schema();
    clear(this.root);

    const consultPane = el("div", { id: "consult-pane" });
    const browsePane = el("div", { id: "browse-pane", style: "display:none" });
    const maintainPane = el("div", { id: "maintain-pane", style: "display:none" });
    const panes: Record<string, HTMLElement> = {
      consult: consultPane,
      browse: browsePane,
      maintain: maintainPane,
    };

    const show = (name: string) => {
      for (const [key, pane] of Object.entries(panes)) {
        pane.style.display = key === name ? "" : "none";
      }
      if (name === "browse") void this.browser?.refresh();
    };

    const tabs = el("nav", { class: "tabs" }, [
      button("consult", () => show("consult"), { "data-testid": "tab-consult" }),
      button("knowledge base", () => show("browse"), { "data-testid": "tab-browse" }),
      button("maintenance", () => show("maintain"), { "data-testid": "tab-maintain" }),
    ]);

    const wizardHost = el("div", { id: "wizard-host" });
    this.browser = new KbBrowser(this.api, browsePane);
    const maintenance = new MaintenancePanel(this.api, maintainPane,
      () => void this.browser?.refresh());
    maintenance.render();
    this.wizard = new ConsultationWizard(this.api, wizardHost,
      () => void this.browser?.refresh());

    consultPane.append(this.renderStartForm(), wizardHost);
    this.root.append(el("h1", {}, ["consultation console"]), tabs,
      consultPane, browsePane, maintainPane);
  }

  private renderStartForm(): HTMLElement {
    const schema = this.schema!;
    const goalSelect = el("select", { "data-testid": "goal" });
    const goalish = schema.attributes.filter((a) => !a.askable);
    for (const attr of goalish.length ? goalish : schema.attributes) {
      goalSelect.append(el("option", { value: attr.name }, [attr.name]));
    }
    goalSelect.value = schema.goal_attribute;

    const factRows: Array<{ name: string; select: HTMLSelectElement }> = [];
    const factsBox = el("details", { class: "known-facts" }, [
      el("summary", {}, ["already-known findings (optional)"]),
    ]);
    for (const attr of schema.attributes.filter((a) => a.askable)) {
      const select = el("select", { "data-testid": `fact-${attr.name}` });
      select.append(el("option", { value: "" }, ["(not known)"]));
      for (const value of attr.domain) {
        select.append(el("option", { value }, [value]));
      }
      factRows.push({ name: attr.name, select });
      factsBox.append(el("label", { class: "fact-row" }, [`${attr.name} `, select]));
    }

    const start = button(
      "start consultation",
      () => {
        const facts: Record<string, string> = {};
        for (const row of factRows) {
          if (row.select.value) facts[row.name] = row.select.value;
        }
        void this.wizard!.start(goalSelect.value || undefined, facts);
      },
      { class: "primary", "data-testid": "start" },
    );

    return el("form", { class: "start-form" }, [
      el("label", {}, ["goal ", goalSelect]),
      factsBox,
      start,
    ]);
  }
}

export function mount(root: HTMLElement, href: string): App {
  const app = new App(root, apiBaseFromLocation(href));
  void app.boot();
  return app;
}

declare global {
  interface Window {
    hepxApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.hepxApp = mount(document.getElementById("app")!, window.location.href);
}
