/**
 * Vibration feedback cue: eight cells pulsing at the commanded duty,
 * cleared when the command's duration elapses. An optional click train
 * uses WebAudio when available.
 */

export class FeedbackRenderer {
  readonly root: HTMLElement;
  private cells: HTMLElement[] = [];
  private clearTimer: ReturnType<typeof setTimeout> | null = null;
  audioEnabled = false;

  constructor(root: HTMLElement) {
    this.root = root;
    for (let i = 0; i < 8; i++) {
      const cell = document.createElement("div");
      cell.className = "feedback-cell";
      cell.dataset.channel = String(i);
      root.appendChild(cell);
      this.cells.push(cell);
    }
  }

  /** Apply a vibration command: cue appears synchronously on receipt. */
  apply(duties: Uint8Array | number[], durationMs: number): void {
    for (let i = 0; i < 8; i++) {
      const level = (duties[i] ?? 0) / 255;
      const cell = this.cells[i];
      cell.style.opacity = String(0.15 + 0.85 * level);
      cell.classList.toggle("active", level > 0);
    }
    if (this.clearTimer !== null) clearTimeout(this.clearTimer);
    this.clearTimer = setTimeout(() => this.clear(), durationMs);
    if (this.audioEnabled) this.click(durationMs);
  }

  clear(): void {
    for (const cell of this.cells) {
      cell.style.opacity = "0.15";
      cell.classList.remove("active");
    }
  }

  levels(): number[] {
    return this.cells.map((c) =>
      c.classList.contains("active") ? (parseFloat(c.style.opacity) - 0.15) / 0.85 : 0);
  }

  private click(durationMs: number): void {
    const Ctx = (window as unknown as { AudioContext?: typeof AudioContext }).AudioContext;
    if (!Ctx) return;
    const ctx = new Ctx();
    const osc = ctx.createOscillator();
    const gain = ctx.createGain();
    osc.frequency.value = 170;
    gain.gain.value = 0.05;
    osc.connect(gain).connect(ctx.destination);
    osc.start();
    osc.stop(ctx.currentTime + durationMs / 1000);
  }
}
