/**
 * Maintenance panel: run induction and generalization. Generalization is
 * dry-run first -- the report renders before a separate commit action is
 * offered, and the commit repeats the operation server-side.
 */

import { ApiClient, ApiError } from "./api.js";
import { button, clear, el } from "./dom.js";
import type { GeneralizationReport } from "./types.js";

export class MaintenancePanel {
  private report: GeneralizationReport | null = null;
  private induceText: string | null = null;
  private mode = "experience";
  private threshold = 9;
  private message: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    private readonly onKbChanged: () => void = () => {},
  ) {}

  private async runInduce(emit: boolean): Promise<void> {
    const response = await this.api.induce(emit);
    this.induceText = response.report;
    this.message = emit ? `wrote ${response.rules.length} induced rules` : null;
    if (emit) this.onKbChanged();
    this.render();
  }

  private async runGeneralize(dryRun: boolean): Promise<void> {
    try {
      this.report = await this.api.generalize(this.mode, this.threshold, dryRun);
      this.message = dryRun ? "dry run only; nothing committed" : "committed";
      if (!dryRun) this.onKbChanged();
    } catch (error) {
      this.message = error instanceof ApiError ? error.message : String(error);
    }
    this.render();
  }

  render(): void {
    clear(this.root);

    const modeSelect = el("select", { "data-testid": "generalize-mode" });
    for (const mode of ["experience", "subsume"]) {
      modeSelect.append(el("option", { value: mode }, [mode]));
    }
    modeSelect.value = this.mode;
    modeSelect.addEventListener("change", () => {
      this.mode = modeSelect.value;
    });

    const thresholdInput = el("input", {
      type: "number",
      min: "1",
      value: String(this.threshold),
      "data-testid": "generalize-threshold",
    });
    thresholdInput.addEventListener("change", () => {
      this.threshold = Number(thresholdInput.value) || 9;
    });

    this.root.append(
      el("section", { class: "panel" }, [
        el("h3", {}, ["induction"]),
        el("div", { class: "actions" }, [
          button("preview report", () => void this.runInduce(false),
            { "data-testid": "induce-preview" }),
          button("write rules back", () => void this.runInduce(true),
            { "data-testid": "induce-emit" }),
        ]),
        this.induceText !== null
          ? el("pre", { class: "report", "data-testid": "induce-report" }, [this.induceText])
          : el("div", {}),
      ]),
      el("section", { class: "panel" }, [
        el("h3", {}, ["generalization"]),
        el("div", { class: "controls" }, [modeSelect, thresholdInput]),
        el("div", { class: "actions" }, [
          button("dry run", () => void this.runGeneralize(true),
            { "data-testid": "generalize-dry-run" }),
          this.report
            ? button("commit", () => void this.runGeneralize(false),
              { class: "danger", "data-testid": "generalize-commit" })
            : el("span", {}),
        ]),
        this.report ? this.renderReport(this.report) : el("div", {}),
      ]),
    );
    if (this.message) {
      this.root.append(el("p", { class: "message", "data-testid": "maintenance-message" },
        [this.message]));
    }
  }

  private renderReport(report: GeneralizationReport): HTMLElement {
    const rows: Array<[string, string]> = [
      ["mode", report.mode],
      ["removed", report.removed.join(", ") || "-"],
      ["kept", report.kept.join(", ") || "-"],
      ["added", report.added.join(", ") || "-"],
      ["exceptions", report.exceptions.join(", ") || "-"],
      ["accuracy", `${report.accuracy_before.toFixed(4)} -> ${report.accuracy_after.toFixed(4)}`],
    ];
    return el("dl", { class: "report-diff", "data-testid": "generalize-report" },
      rows.flatMap(([k, v]) => [el("dt", {}, [k]), el("dd", {}, [v])]));
  }
}
