/**
 * Virtual e-skin pad: pointer input on a canvas mapped to the 40x65 mm
 * footprint. Mouse pressure is proxied by hold duration (ramping 0 to 1
 * over 300 ms); pointers with real pressure use it directly. While a
 * touch is live the pad synthesizes zeroed readings from the served
 * response grid and hands them to the frame sender at 50 Hz.
 */

import { GatewayConfig, ResponseGrid } from "./forward";

export const PRESSURE_RAMP_MS = 300;

export interface ActiveTouch {
  xMm: number;
  yMm: number;
  startedMs: number;
  rawPressure: number | null; // from the pointer, when the device has it
}

export class Touchpad {
  readonly canvas: HTMLCanvasElement;
  private config: GatewayConfig | null = null;
  private grid: ResponseGrid | null = null;
  touch: ActiveTouch | null = null;
  enabled = false;

  constructor(canvas: HTMLCanvasElement) {
    this.canvas = canvas;
    canvas.addEventListener("pointerdown", (e) => this.begin(e));
    canvas.addEventListener("pointermove", (e) => this.move(e));
    canvas.addEventListener("pointerup", () => this.end());
    canvas.addEventListener("pointerleave", () => this.end());
  }

  configure(config: GatewayConfig): void {
    this.config = config;
    if (config.response_grid) {
      this.grid = new ResponseGrid(config.response_grid, config.footprint_mm);
    }
    this.enabled = true;
    this.render();
  }

  private toMm(e: PointerEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    const [w, h] = this.config?.footprint_mm ?? [40, 65];
    return [
      ((e.clientX - rect.left) / rect.width) * w,
      ((e.clientY - rect.top) / rect.height) * h,
    ];
  }

  private begin(e: PointerEvent): void {
    if (!this.enabled) return;
    const [xMm, yMm] = this.toMm(e);
    this.touch = {
      xMm, yMm,
      startedMs: performance.now(),
      rawPressure: e.pressure > 0 && e.pressure < 1 ? e.pressure : null,
    };
  }

  private move(e: PointerEvent): void {
    if (this.touch === null) return;
    const [xMm, yMm] = this.toMm(e);
    this.touch.xMm = xMm;
    this.touch.yMm = yMm;
    if (e.pressure > 0 && e.pressure < 1) this.touch.rawPressure = e.pressure;
  }

  private end(): void {
    this.touch = null;
    this.render();
  }

  pressureAt(nowMs: number): number {
    if (this.touch === null) return 0;
    if (this.touch.rawPressure !== null) return this.touch.rawPressure;
    return Math.min(1, (nowMs - this.touch.startedMs) / PRESSURE_RAMP_MS);
  }

  /** Zeroed 24-channel reading for the current touch (zeros when idle). */
  sample(nowMs: number): Float64Array {
    if (this.touch === null || this.grid === null) return new Float64Array(24);
    return this.grid.zeroedAt(this.touch.xMm, this.touch.yMm,
                              this.pressureAt(nowMs));
  }

  render(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx || !this.config) return;
    const { width, height } = this.canvas;
    const [wMm, hMm] = this.config.footprint_mm;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#1c2330";
    ctx.fillRect(0, 0, width, height);
    const sx = width / wMm, sy = height / hMm;
    ctx.font = "10px sans-serif";
    this.config.sensor_positions_mm.forEach(([x, y], i) => {
      ctx.fillStyle = "#3d79c0";
      ctx.beginPath();
      ctx.arc(x * sx, y * sy, 9, 0, 2 * Math.PI);
      ctx.fill();
      ctx.fillStyle = "#cfe3f7";
      ctx.fillText(String(i), x * sx - 3, y * sy + 3);
    });
    this.config.motor_positions_mm.forEach(([x, y]) => {
      ctx.strokeStyle = "#7a5fa0";
      ctx.strokeRect(x * sx - 7, y * sy - 7, 14, 14);
    });
    if (this.touch) {
      ctx.fillStyle = "rgba(240, 180, 60, 0.6)";
      ctx.beginPath();
      ctx.arc(this.touch.xMm * sx, this.touch.yMm * sy,
              6 + 10 * this.pressureAt(performance.now()), 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}
