/** DOM wiring: render the dashboard state, forward button gestures. */

import { BrokerApi } from "./api.js";
import { Dashboard } from "./controller.js";
import type { DashboardState } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function render(state: DashboardState): void {
  const presence = el<HTMLSpanElement>("presence");
  presence.textContent = state.presence ? "pet at the feeder" : "no pet";
  presence.className = state.presence ? "badge on" : "badge";

  el<HTMLSpanElement>("distance").textContent =
    state.distance == null ? "-" : `${(state.distance * 100).toFixed(1)} cm`;

  const fill = state.fillEstimate;
  el<HTMLDivElement>("fill-bar").style.width = fill == null ? "0%" : `${fill * 100}%`;
  el<HTMLSpanElement>("fill-label").textContent =
    fill == null ? "bowl: unknown" : `bowl: ${(fill * 100).toFixed(0)}% full`;

  const connection = el<HTMLSpanElement>("connection");
  connection.textContent = state.connection;
  connection.className = state.connection === "ok" ? "badge on" : "badge warn";

  el<HTMLSpanElement>("updated").textContent = state.lastIrEntry
    ? `entry ${state.lastIrEntry.entry_id} at t=${state.lastIrEntry.created_at.toFixed(1)} s`
    : "no telemetry yet";

  const busy = state.pendingSelection !== 0;
  el<HTMLButtonElement>("feed1").disabled = busy;
  el<HTMLButtonElement>("feed2").disabled = busy;
  el<HTMLParagraphElement>("message").textContent =
    state.countdown != null
      ? `${state.message} (window reopens in ${state.countdown.toFixed(1)} s)`
      : state.message;
}

async function boot(): Promise<void> {
  const api = new BrokerApi("");
  const config = await api.config();
  el<HTMLSpanElement>("rate-note").textContent =
    `the cloud accepts one command every ${config.broker.min_interval.toFixed(0)} s`;

  const dashboard = new Dashboard(api, config, { onChange: render });
  el<HTMLButtonElement>("feed1").addEventListener("click", () => void dashboard.chooseFeed(1));
  el<HTMLButtonElement>("feed2").addEventListener("click", () => void dashboard.chooseFeed(2));
  dashboard.startPolling();
}

boot().catch((err) => {
  el<HTMLParagraphElement>("message").textContent = `failed to start: ${err}`;
});
