import "./style.css";
import { GatewayClient } from "./client";
import { Dashboard } from "./dashboard";
import { FeedbackRenderer } from "./feedback";
import { toSensorFrame } from "./forward";
import { initialState, onMessage, onTelemetry, onTick } from "./state";
import { Touchpad } from "./touchpad";

const app = document.querySelector<HTMLDivElement>("#app")!;
app.innerHTML = `
  <h1>e-skin operator console</h1>
  <div class="layout">
    <div>
      <h2>touch pad</h2>
      <canvas id="pad" width="280" height="455"></canvas>
      <div id="banner" class="stale-banner">disconnected</div>
    </div>
    <div>
      <h2>session</h2>
      <div id="dashboard"></div>
      <h2>vibration feedback</h2>
      <div id="feedback" class="feedback-grid"></div>
    </div>
  </div>
`;

const pad = new Touchpad(document.querySelector<HTMLCanvasElement>("#pad")!);
const dashboard = new Dashboard(document.querySelector("#dashboard")!);
const feedback = new FeedbackRenderer(document.querySelector("#feedback")!);
const banner = document.querySelector<HTMLElement>("#banner")!;

let state = initialState();
let frameTimer: ReturnType<typeof setInterval> | null = null;
let seq = 1;

const client = new GatewayClient({
  onConfig(config) {
    pad.configure(config);
    banner.style.display = "none";
    client.send({ kind: "hello", version: 1 });
    const periodMs = 1000 / config.touch.frame_rate_hz;
    frameTimer = setInterval(() => {
      const now = performance.now();
      client.send(toSensorFrame(seq++, pad.sample(now)));
      pad.render();
    }, periodMs);
  },
  onTelemetry(rec) {
    state = onTelemetry(state, rec, performance.now());
  },
  onMessage(msg) {
    state = onMessage(state, msg, performance.now());
    if (msg.kind === "vibration_cmd") {
      feedback.apply(msg.duties, msg.durationMs);
    }
  },
  onClose() {
    pad.enabled = false;
    banner.style.display = "block";
    if (frameTimer !== null) clearInterval(frameTimer);
  },
});

dashboard.onTargetSubmit = (grams) => {
  client.send({ kind: "target_weight", centigrams: Math.round(grams * 100) });
};

setInterval(() => {
  state = onTick(state, performance.now());
  dashboard.render(state);
}, 100);

const url = new URLSearchParams(location.search).get("gateway")
  ?? "ws://127.0.0.1:8765";
client.connect(url);
