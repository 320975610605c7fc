/**
 * Gateway WebSocket client: binary protocol frames plus the JSON
 * side-channel (config on connect, telemetry at 10 Hz).
 *
 * The UI only ever originates sensor frames, target weights, and the
 * hello; send() enforces that.
 */

import { FrameDecoder, Message, encode } from "./protocol";
import { GatewayConfig } from "./forward";
import { TelemetryRecord } from "./state";

const UI_ALLOWED_KINDS = new Set<Message["kind"]>([
  "sensor_frame", "target_weight", "hello",
]);

export class UiOriginationError extends Error {}

export interface ClientHandlers {
  onConfig?: (config: GatewayConfig) => void;
  onTelemetry?: (telemetry: TelemetryRecord) => void;
  onMessage?: (message: Message) => void;
  onClose?: () => void;
}

export function assertUiMayOriginate(msg: Message): void {
  if (!UI_ALLOWED_KINDS.has(msg.kind)) {
    throw new UiOriginationError(
      `UI may not originate ${msg.kind} frames`);
  }
}

export class GatewayClient {
  private ws: WebSocket | null = null;
  private decoder = new FrameDecoder();
  readonly handlers: ClientHandlers;

  constructor(handlers: ClientHandlers) {
    this.handlers = handlers;
  }

  connect(url: string): void {
    this.ws = new WebSocket(url);
    this.ws.binaryType = "arraybuffer";
    this.ws.onmessage = (ev) => this.handleData(ev.data);
    this.ws.onclose = () => this.handlers.onClose?.();
    this.ws.onerror = () => this.handlers.onClose?.();
  }

  /** Exposed for tests: feed a raw websocket payload. */
  handleData(data: ArrayBuffer | string): void {
    if (typeof data === "string") {
      const record = JSON.parse(data);
      if (record.type === "config") this.handlers.onConfig?.(record);
      else if (record.type === "telemetry") this.handlers.onTelemetry?.(record);
      return;
    }
    for (const msg of this.decoder.feed(new Uint8Array(data))) {
      this.handlers.onMessage?.(msg);
    }
  }

  get open(): boolean {
    return this.ws !== null && this.ws.readyState === WebSocket.OPEN;
  }

  send(msg: Message): void {
    assertUiMayOriginate(msg);
    if (this.ws === null || this.ws.readyState !== WebSocket.OPEN) return;
    // frames are allocated exactly, so the backing buffer is the frame
    this.ws.send(encode(msg).buffer as ArrayBuffer);
  }

  close(): void {
    this.ws?.close();
  }
}
