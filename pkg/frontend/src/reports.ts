/**
 * Evaluation reports: run interview scoring for a character and render
 * the five-dimension table. The Avg column is always recomputed in the
 * client from the rendered dimension means, never trusted from the wire.
 */

import type { ApiClient, Evaluation, EvaluationReport } from "./api.js";

export const REPORT_DIMENSIONS = [
  "memorisation",
  "values",
  "personality",
  "hallucination",
  "stability",
] as const;

export const REPORT_HEADER = [
  "Model",
  "Memorisation",
  "Values",
  "Personality",
  "Hallucination",
  "Stability",
  "Avg",
] as const;

export function rowAverage(means: Record<string, number>): number {
  let total = 0;
  for (const dim of REPORT_DIMENSIONS) total += means[dim] ?? 0;
  return total / REPORT_DIMENSIONS.length;
}

export function renderReportTable(reports: EvaluationReport[]): HTMLTableElement {
  const table = document.createElement("table");
  table.className = "report";

  const head = table.createTHead().insertRow();
  for (const title of REPORT_HEADER) {
    const cell = document.createElement("th");
    cell.textContent = title;
    head.appendChild(cell);
  }

  const body = table.createTBody();
  for (const report of reports) {
    const row = body.insertRow();
    row.insertCell().textContent = report.model_label || "agent";
    const shown: number[] = [];
    for (const dim of REPORT_DIMENSIONS) {
      const cell = (report.means[dim] ?? 0).toFixed(2);
      shown.push(Number(cell));
      row.insertCell().textContent = cell;
    }
    // averaged over the displayed values, so the row stays consistent
    // with what the reader can recompute from it
    const avg = shown.reduce((a, b) => a + b, 0) / shown.length;
    row.insertCell().textContent = avg.toFixed(2);
  }
  return table;
}

export class ReportsView {
  readonly characterSelect: HTMLSelectElement;
  readonly questionCount: HTMLInputElement;
  readonly runButton: HTMLButtonElement;
  readonly results: HTMLElement;

  constructor(root: HTMLElement, private readonly api: ApiClient) {
    const form = document.createElement("div");
    form.className = "report-form";
    this.characterSelect = document.createElement("select");
    this.questionCount = document.createElement("input");
    this.questionCount.type = "number";
    this.questionCount.min = "1";
    this.questionCount.value = "5";
    this.runButton = document.createElement("button");
    this.runButton.textContent = "Run evaluation";
    this.runButton.addEventListener("click", () => void this.run());
    form.append(this.characterSelect, this.questionCount, this.runButton);

    this.results = document.createElement("div");
    this.results.className = "report-results";
    root.append(form, this.results);
  }

  async refreshCharacters(): Promise<void> {
    const characters = await this.api.listCharacters();
    this.characterSelect.replaceChildren(
      ...characters.map((c) => new Option(`${c.profile.name} (${c.id})`, c.id)),
    );
  }

  async showExisting(): Promise<void> {
    const evaluations = await this.api.listEvaluations();
    if (evaluations.length === 0) return;
    this.results.replaceChildren(
      renderReportTable(evaluations.map((e: Evaluation) => e.report)),
    );
  }

  async run(): Promise<void> {
    if (!this.characterSelect.value) return;
    this.runButton.disabled = true;
    try {
      await this.api.runEvaluation(
        this.characterSelect.value,
        Number(this.questionCount.value) || 5,
      );
      await this.showExisting();
    } finally {
      this.runButton.disabled = false;
    }
  }
}
