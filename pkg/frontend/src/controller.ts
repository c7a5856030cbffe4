/**
 * Dashboard behavior: the telemetry poll loop and the feed-choice gesture.
 *
 * Gesture rules, in order:
 *  - at most one AppChannel write per gesture: clicks are ignored while a
 *    selection is pending (in flight or counting down);
 *  - an accepted write confirms and clears the pending selection;
 *  - a rate-limited write whose selection already matches the channel's
 *    latest entry is treated as satisfied (the cloud already says what the
 *    user wants), so a stray double click never writes twice;
 *  - otherwise the rejection starts a visible countdown and retries exactly
 *    once when the window reopens; a second rejection is surfaced, never
 *    silently retried.
 */

import type { BrokerApi, LiveConfig, WriteResult } from "./api.js";
import {
  applyPoll,
  applyPollError,
  initialState,
  type DashboardState,
} from "./state.js";

export type GestureOutcome = "accepted" | "ignored" | "duplicate" | "failed";

export interface DashboardOptions {
  onChange?: (state: DashboardState) => void;
  /** Injectable for tests; wall-clock milliseconds. */
  sleep?: (ms: number) => Promise<void>;
}

const realSleep = (ms: number) => new Promise<void>((res) => setTimeout(res, ms));

export class Dashboard {
  state: DashboardState = initialState();
  private timer: ReturnType<typeof setInterval> | null = null;
  private readonly sleep: (ms: number) => Promise<void>;
  private readonly onChange?: (state: DashboardState) => void;

  constructor(
    private readonly api: BrokerApi,
    private readonly config: LiveConfig,
    opts: DashboardOptions = {},
  ) {
    this.sleep = opts.sleep ?? realSleep;
    this.onChange = opts.onChange;
  }

  private set(patch: Partial<DashboardState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange?.(this.state);
  }

  async pollOnce(): Promise<void> {
    const ir = this.config.channels.ir;
    try {
      const entry = await this.api.readLast(ir.id, ir.read_key);
      this.state = applyPoll(this.state, entry, this.config.geometry);
    } catch {
      this.state = applyPollError(this.state);
    }
    this.onChange?.(this.state);
  }

  /** Poll no more often than the configured period (seconds). */
  startPolling(periodSeconds: number = this.config.ui_poll_period): void {
    if (this.timer !== null) return;
    void this.pollOnce();
    this.timer = setInterval(() => void this.pollOnce(), periodSeconds * 1000);
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async chooseFeed(selection: 1 | 2): Promise<GestureOutcome> {
    if (this.state.pendingSelection !== 0) return "ignored";
    this.set({ pendingSelection: selection, message: `sending feed ${selection}...` });

    let result: WriteResult;
    try {
      result = await this.writeOnce(selection);
    } catch {
      this.set({
        pendingSelection: 0,
        connection: "degraded",
        message: "broker unreachable; selection not sent",
      });
      return "failed";
    }

    if (result.accepted) return this.confirm(selection, result.entryId);
    if (result.reason === "auth") {
      this.set({ pendingSelection: 0, message: "write key rejected" });
      return "failed";
    }

    // Rate limited. If the channel already carries this selection, the
    // cloud state is what the user asked for; do not write it again.
    if (await this.channelAlreadySays(selection)) {
      this.set({
        pendingSelection: 0,
        message: `feed ${selection} already requested`,
      });
      return "duplicate";
    }

    // One visible countdown, one automatic retry.
    const wallSeconds = result.retryAfter / (this.config.speed || 1);
    this.set({
      countdown: result.retryAfter,
      message: `cloud busy; retrying in ${result.retryAfter.toFixed(1)} s`,
    });
    await this.sleep(wallSeconds * 1000);
    this.set({ countdown: null });

    let retry: WriteResult;
    try {
      retry = await this.writeOnce(selection);
    } catch {
      this.set({ pendingSelection: 0, connection: "degraded", message: "retry failed" });
      return "failed";
    }
    if (retry.accepted) return this.confirm(selection, retry.entryId);
    this.set({
      pendingSelection: 0,
      message: "cloud still busy; selection not sent",
    });
    return "failed";
  }

  private writeOnce(selection: 1 | 2): Promise<WriteResult> {
    return this.api.writeSelection(this.config.channels.app.write_key, selection);
  }

  private confirm(selection: 1 | 2, entryId: number): GestureOutcome {
    this.set({
      pendingSelection: 0,
      lastConfirmed: { selection, entryId },
      message: `feed ${selection} confirmed (entry ${entryId})`,
    });
    return "accepted";
  }

  private async channelAlreadySays(selection: 1 | 2): Promise<boolean> {
    const app = this.config.channels.app;
    try {
      const last = await this.api.readLast(app.id, app.read_key);
      return last !== null && Number(last.field1) === selection;
    } catch {
      return false;
    }
  }
}
