/**
 * Weighing dashboard: six-step stage indicator, target-weight entry,
 * mass progress bar, robot heatmap, and the stale-telemetry banner.
 */

import { UiState, progressFraction } from "./state";

export const STAGE_NAMES = [
  "set target", "approach", "grasp", "position", "dispense", "confirm",
];

export class Dashboard {
  readonly root: HTMLElement;
  private steps: HTMLElement[] = [];
  private heatCells: HTMLElement[] = [];
  private massLabel: HTMLElement;
  private progressFill: HTMLElement;
  private staleBanner: HTMLElement;
  private targetInput: HTMLInputElement;
  onTargetSubmit: ((grams: number) => void) | null = null;

  constructor(root: HTMLElement) {
    this.root = root;

    const stepper = document.createElement("div");
    stepper.className = "stepper";
    STAGE_NAMES.forEach((name, i) => {
      const step = document.createElement("div");
      step.className = "step";
      step.dataset.stage = String(i + 1);
      step.textContent = `${i + 1} ${name}`;
      stepper.appendChild(step);
      this.steps.push(step);
    });
    root.appendChild(stepper);

    const targetRow = document.createElement("div");
    targetRow.className = "target-row";
    this.targetInput = document.createElement("input");
    this.targetInput.type = "number";
    this.targetInput.step = "0.01";
    this.targetInput.value = "1.00";
    this.targetInput.id = "target-input";
    const button = document.createElement("button");
    button.id = "target-send";
    button.textContent = "set target (g)";
    button.addEventListener("click", () => {
      const grams = parseFloat(this.targetInput.value);
      if (Number.isFinite(grams) && grams > 0) this.onTargetSubmit?.(grams);
    });
    targetRow.append(this.targetInput, button);
    root.appendChild(targetRow);

    const progress = document.createElement("div");
    progress.className = "progress";
    this.progressFill = document.createElement("div");
    this.progressFill.className = "progress-fill";
    progress.appendChild(this.progressFill);
    root.appendChild(progress);

    this.massLabel = document.createElement("div");
    this.massLabel.className = "mass-label";
    root.appendChild(this.massLabel);

    const heat = document.createElement("div");
    heat.className = "heatmap";
    for (let i = 0; i < 8; i++) {
      const cell = document.createElement("div");
      cell.className = "heat-cell";
      cell.dataset.region = String(i);
      heat.appendChild(cell);
      this.heatCells.push(cell);
    }
    root.appendChild(heat);

    this.staleBanner = document.createElement("div");
    this.staleBanner.className = "stale-banner";
    this.staleBanner.textContent = "telemetry stale";
    this.staleBanner.style.display = "none";
    root.appendChild(this.staleBanner);
  }

  render(state: UiState, heatScaleUt = 100): void {
    this.steps.forEach((step, i) => {
      step.classList.toggle("current", i + 1 === state.stage);
      step.classList.toggle("done", i + 1 < state.stage);
    });
    const frac = progressFraction(state);
    this.progressFill.style.width = `${(frac * 100).toFixed(1)}%`;
    this.massLabel.textContent = state.targetG === null
      ? `mass ${state.massG.toFixed(2)} g`
      : `mass ${state.massG.toFixed(2)} / ${state.targetG.toFixed(2)} g`;
    state.heatmap.forEach((mag, i) => {
      const level = Math.min(1, mag / heatScaleUt);
      this.heatCells[i].style.opacity = String(0.15 + 0.85 * level);
    });
    this.staleBanner.style.display = state.stale ? "block" : "none";
  }

  get progressPercent(): string {
    return this.progressFill.style.width;
  }

  get currentStep(): number {
    const idx = this.steps.findIndex((s) => s.classList.contains("current"));
    return idx + 1;
  }

  get staleVisible(): boolean {
    return this.staleBanner.style.display !== "none";
  }
}
