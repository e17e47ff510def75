/**
 * Browser entry point: wires the reconnecting client, store, and control
 * channel to the DOM, and draws the probability chart on a canvas.
 * All protocol/state logic lives in the imported modules; this file is
 * deliberately thin glue.
 */

import { ReconnectingClient } from "./client.js";
import { ControlChannel } from "./controls.js";
import { parseServerMessage } from "./protocol.js";
import { DashboardStore } from "./store.js";
import type { UiState } from "./store.js";
import { polyline, thresholdLineY } from "./chart.js";
import type { ChartGeometry } from "./chart.js";

const TUNABLES = [
  "threshold",
  "smoothing_window",
  "consecutive_k",
  "release_m",
  "increment_rate",
  "max_frame_s",
] as const;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function wsUrl(): string {
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${location.host}/ws`;
}

function boot(): void {
  const store = new DashboardStore();
  const canvas = el<HTMLCanvasElement>("chart");
  const ctx = canvas.getContext("2d")!;

  const client = new ReconnectingClient(
    wsUrl(),
    {
      onMessage: (text) => {
        const parsed = parseServerMessage(text);
        if (parsed.ok && parsed.msg.type === "ack") {
          controls.handleAck(parsed.msg.ok, parsed.msg.reason);
          return;
        }
        store.apply(parsed);
      },
      onStatus: (status) => {
        if (status === "closed") controls.handleDisconnect();
        store.setConnection(status);
      },
    },
    (url) => new WebSocket(url),
  );

  const toast = el<HTMLDivElement>("toast");
  const controls = new ControlChannel(
    (text) => client.send(text),
    (outcome) => {
      toast.textContent = outcome.ok
        ? `applied ${JSON.stringify(outcome.changes)}`
        : `rejected: ${outcome.reason ?? "unknown"}`;
      toast.className = outcome.ok ? "toast ok" : "toast err";
      setTimeout(() => (toast.className = "toast hidden"), 4000);
    },
  );

  el<HTMLButtonElement>("apply").addEventListener("click", () => {
    const cfg = store.state.config;
    const changes: Record<string, number> = {};
    for (const name of TUNABLES) {
      const input = el<HTMLInputElement>(`input-${name}`);
      const value = Number(input.value);
      if (!Number.isFinite(value)) continue;
      if (cfg === null || value !== (cfg[name] as number)) changes[name] = value;
    }
    if (Object.keys(changes).length > 0) controls.request(changes);
  });

  for (const name of TUNABLES) {
    const input = el<HTMLInputElement>(`input-${name}`);
    input.addEventListener("input", () => {
      el(`edit-${name}`).textContent = input.value;
    });
  }

  // Render at most once per animation frame, no matter the message rate.
  let dirty = false;
  store.subscribe(() => {
    if (dirty) return;
    dirty = true;
    requestAnimationFrame(() => {
      dirty = false;
      render(store.state);
    });
  });

  function render(state: UiState): void {
    const status = el("status");
    status.textContent = state.connection;
    status.className = `badge ${state.connection}`;

    const engineState = el("engine-state");
    engineState.textContent = state.engineState;
    engineState.className = `badge state-${state.engineState.toLowerCase()}`;

    const last = state.frames.last();
    el("frame-ms").textContent = last ? last.frameMs.toFixed(1) : "–";
    el("infer-ms").textContent = last ? last.inferMs.toFixed(1) : "–";
    el("prob-now").textContent = last ? last.prob.toFixed(3) : "–";

    if (state.stats) {
      el("rt-factor").textContent = state.stats.rt_factor.toFixed(2) + "x";
      el("fps").textContent = state.stats.fps.toFixed(2);
      setGauge("cpu", state.stats.cpu_pct);
      setGauge("mem", state.stats.mem_pct);
    }

    if (state.config) {
      for (const name of TUNABLES) {
        el(`current-${name}`).textContent = String(state.config[name]);
      }
    }

    const rows = state.detections
      .slice(-12)
      .reverse()
      .map((d) => {
        const offset = d.offset === null ? "…" : d.offset.toFixed(2);
        return `<tr><td>${d.onset.toFixed(2)}</td><td>${offset}</td>` +
          `<td>${d.peak.toFixed(3)}</td></tr>`;
      })
      .join("");
    el("detections").innerHTML = rows;
    el("detection-count").textContent = String(state.detections.length);

    el("debug").textContent = state.debug.toArray().slice(-8).join("\n");

    drawChart(state);
  }

  function setGauge(name: string, pct: number): void {
    el(`${name}-bar`).style.width = `${Math.min(100, Math.max(0, pct))}%`;
    el(`${name}-label`).textContent = `${pct.toFixed(1)}%`;
  }

  function drawChart(state: UiState): void {
    const geom: ChartGeometry = {
      width: canvas.width,
      height: canvas.height,
      windowS: 60,
    };
    ctx.clearRect(0, 0, geom.width, geom.height);
    ctx.fillStyle = "#10151c";
    ctx.fillRect(0, 0, geom.width, geom.height);

    ctx.strokeStyle = "#2a3442";
    ctx.lineWidth = 1;
    for (const frac of [0.25, 0.5, 0.75]) {
      ctx.beginPath();
      ctx.moveTo(0, geom.height * frac);
      ctx.lineTo(geom.width, geom.height * frac);
      ctx.stroke();
    }

    const frames = state.frames.toArray();
    const nowT = frames.length > 0 ? frames[frames.length - 1]!.t : 0;

    if (state.config) {
      const y = thresholdLineY(state.config.threshold as number, geom);
      ctx.strokeStyle = "#e05555";
      ctx.setLineDash([6, 4]);
      ctx.beginPath();
      ctx.moveTo(0, y);
      ctx.lineTo(geom.width, y);
      ctx.stroke();
      ctx.setLineDash([]);
    }

    strokeSeries(
      polyline(frames.map((f) => ({ t: f.t, v: f.prob })), nowT, geom),
      "#5c8dc9",
    );
    strokeSeries(
      polyline(frames.map((f) => ({ t: f.t, v: f.smoothed })), nowT, geom),
      "#e8a33d",
    );
  }

  function strokeSeries(points: Array<[number, number]>, color: string): void {
    if (points.length < 2) return;
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(points[0]![0], points[0]![1]);
    for (const [x, y] of points.slice(1)) ctx.lineTo(x, y);
    ctx.stroke();
  }

  client.connect();
}

boot();
