/**
 * Knowledge-base browser: rules table, cases table, audit timeline, and
 * the experience-report text as served.
 */

import { ApiClient } from "./api.js";
import { clear, el } from "./dom.js";

export class KbBrowser {
  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  async refresh(): Promise<void> {
    const [rules, cases, audit, report] = await Promise.all([
      this.api.rules(),
      this.api.cases(),
      this.api.audit(),
      this.api.experienceReport(),
    ]);
    clear(this.root);

    const ruleRows = rules.map((rule) =>
      el("tr", { "data-testid": `rule-${rule.id}` }, [
        el("td", {}, [rule.id]),
        el("td", {}, [rule.premises.join(" AND ")]),
        el("td", {}, [rule.conclusion]),
        el("td", {}, [String(rule.experience)]),
        el("td", {}, [rule.origin]),
      ]),
    );
    const caseRows = cases.map((c) =>
      el("tr", {}, [
        el("td", {}, [String(c.id)]),
        el("td", {}, [c.label]),
        el("td", {}, [
          Object.entries(c.observations).map(([a, v]) => `${a}=${v}`).join(", "),
        ]),
      ]),
    );
    const auditItems = audit.map((entry) =>
      el("li", { class: "audit-entry" }, [
        el("time", {}, [entry.timestamp]),
        ` ${entry.actor}${entry.note ? `(${entry.note})` : ""} ${entry.action} `,
        el("code", {}, [entry.rule_ids.join(",")]),
        entry.text ? el("div", { class: "audit-text" }, [entry.text]) : "",
      ].filter((x) => x !== "") as Array<Node | string>),
    );

    this.root.append(
      el("section", { class: "panel" }, [
        el("h3", {}, [`rules (${rules.length})`]),
        el("table", { class: "rules", "data-testid": "rules-table" }, [
          el("thead", {}, [el("tr", {}, ["id", "premises", "conclusion", "experience", "origin"]
            .map((h) => el("th", {}, [h])))]),
          el("tbody", {}, ruleRows),
        ]),
      ]),
      el("section", { class: "panel" }, [
        el("h3", {}, [`cases (${cases.length})`]),
        el("table", { class: "cases", "data-testid": "cases-table" }, [
          el("thead", {}, [el("tr", {}, ["id", "label", "observations"]
            .map((h) => el("th", {}, [h])))]),
          el("tbody", {}, caseRows),
        ]),
      ]),
      el("section", { class: "panel" }, [
        el("h3", {}, [`audit (${audit.length})`]),
        el("ol", { class: "audit", "data-testid": "audit-timeline" }, auditItems),
      ]),
      el("section", { class: "panel" }, [
        el("h3", {}, ["experience report"]),
        el("pre", { class: "report", "data-testid": "experience-report" }, [report]),
      ]),
    );
  }
}
