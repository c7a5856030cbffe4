/**
 * Dashboard state and its pure reducers.
 *
 * Every rendered number comes from a broker response or from the geometry
 * constants the server publishes at /config.json; in particular the fill
 * estimate uses the same linear distance map as the simulator, so the bar
 * on screen and the bowl in the world can never disagree about what "half
 * full" means.
 */

import type { FeedEntry } from "./api.js";

export type Connection = "ok" | "degraded";

export interface Geometry {
  d_empty: number;
  d_full: number;
}

export interface DashboardState {
  lastIrEntry: FeedEntry | null;
  presence: boolean;
  distance: number | null; // meters, from the ultrasonic telemetry
  fillEstimate: number | null; // 0..1
  pendingSelection: 0 | 1 | 2;
  lastConfirmed: { selection: 1 | 2; entryId: number } | null;
  connection: Connection;
  message: string;
  countdown: number | null; // seconds until the single automatic retry
}

export function initialState(): DashboardState {
  return {
    lastIrEntry: null,
    presence: false,
    distance: null,
    fillEstimate: null,
    pendingSelection: 0,
    lastConfirmed: null,
    connection: "ok",
    message: "no data yet",
    countdown: null,
  };
}

export function fillFromDistance(geometry: Geometry, distance: number): number {
  const fill = (geometry.d_empty - distance) / (geometry.d_empty - geometry.d_full);
  return Math.min(1, Math.max(0, fill));
}

/** Successful poll: fold the latest telemetry entry into the state. */
export function applyPoll(
  state: DashboardState,
  entry: FeedEntry | null,
  geometry: Geometry,
): DashboardState {
  if (entry === null) {
    return { ...state, connection: "ok", message: "no data yet" };
  }
  const presence = Number(entry.field1) === 1;
  const distance = entry.field2 == null ? null : Number(entry.field2);
  return {
    ...state,
    lastIrEntry: entry,
    presence,
    distance,
    fillEstimate: distance == null ? null : fillFromDistance(geometry, distance),
    connection: "ok",
    message: presence ? "pet at the feeder" : "no pet in sight",
  };
}

/** Failed poll: keep the stale data, flag the connection. */
export function applyPollError(state: DashboardState): DashboardState {
  return { ...state, connection: "degraded" };
}
