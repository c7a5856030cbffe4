/**
 * Typed client for the feeder broker's HTTP API.
 *
 * The update endpoint answers with the new entry id as plain text, or "0"
 * plus a Retry-After header while the channel's minimum write interval has
 * not elapsed; both shapes are surfaced as a discriminated WriteResult so
 * the dashboard never has to parse wire details.
 */

export interface FeedEntry {
  entry_id: number;
  created_at: number;
  field1?: string | number | null;
  field2?: string | number | null;
  status?: string | null;
}

export interface ChannelRef {
  id: number;
  read_key: string;
  field_names: string[];
}

export interface LiveConfig {
  channels: { ir: ChannelRef; app: ChannelRef & { write_key: string } };
  geometry: { d_empty: number; d_full: number };
  controller: { poll_interval: number; full_threshold: number };
  broker: { min_interval: number };
  ui_poll_period: number;
  speed: number;
  tick: number;
}

export type WriteResult =
  | { accepted: true; entryId: number }
  | { accepted: false; reason: "rate_limited"; retryAfter: number }
  | { accepted: false; reason: "auth" };

export class BrokerApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async config(): Promise<LiveConfig> {
    const resp = await this.fetchImpl(this.url("/config.json"));
    if (!resp.ok) throw new Error(`config fetch failed: ${resp.status}`);
    return resp.json() as Promise<LiveConfig>;
  }

  async readLast(channelId: number, readKey: string): Promise<FeedEntry | null> {
    const resp = await this.fetchImpl(
      this.url(`/channels/${channelId}/feeds/last.json?api_key=${encodeURIComponent(readKey)}`),
    );
    if (!resp.ok) throw new Error(`read failed: ${resp.status}`);
    return resp.json() as Promise<FeedEntry | null>;
  }

  async readFeed(channelId: number, readKey: string, since = 0): Promise<FeedEntry[]> {
    const resp = await this.fetchImpl(
      this.url(
        `/channels/${channelId}/feeds.json?api_key=${encodeURIComponent(readKey)}&since=${since}`,
      ),
    );
    if (!resp.ok) throw new Error(`feed read failed: ${resp.status}`);
    const payload = (await resp.json()) as { feeds: FeedEntry[] };
    return payload.feeds;
  }

  async writeSelection(writeKey: string, selection: 1 | 2): Promise<WriteResult> {
    const resp = await this.fetchImpl(
      this.url(`/update?api_key=${encodeURIComponent(writeKey)}&field1=${selection}`),
    );
    const body = (await resp.text()).trim();
    if (resp.status === 401) return { accepted: false, reason: "auth" };
    if (body === "0") {
      const retryAfter = Number.parseFloat(resp.headers.get("Retry-After") ?? "15");
      return { accepted: false, reason: "rate_limited", retryAfter };
    }
    return { accepted: true, entryId: Number.parseInt(body, 10) };
  }
}
