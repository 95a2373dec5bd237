import { BoundedSeries } from './history.js';
import type { ApiChannel, ApiSample, ApiStatus, StreamBatch } from './types.js';

export interface ChannelView {
  index: number;
  label: string;
  unit: string;
  enabled: boolean;
  thresholdVoltage: number;
  thresholdPressure: number;
  live: ApiSample | null;
  // retained for display when the current sample is clamped/disconnected;
  // only a status-ok sample may update it
  lastGood: ApiSample | null;
}

export type ConnectionState = 'connecting' | 'live' | 'stale' | 'offline';

export interface EngineView {
  polling: 'running' | 'stopped' | 'degraded' | 'unknown';
  pollIntervalMs: number;
  cycles: number;
  pollErrors: number;
  logError: string | null;
  target: string;
}

const STALE_INTERVALS = 3;

/** Client-side state: fed by the SSE stream and /api/status, read by views. */
export class ConsoleStore {
  channels = new Map<number, ChannelView>();
  engine: EngineView = {
    polling: 'unknown', pollIntervalMs: 1000, cycles: 0, pollErrors: 0,
    logError: null, target: '',
  };
  history = new Map<number, BoundedSeries>();
  connection: ConnectionState = 'connecting';
  controlInFlight = false;
  banner: string | null = null;

  private lastSeq = -1;
  private lastBatchAt: number | null = null;

  constructor(readonly historyCapacity = 600) {}

  private channel(index: number): ChannelView {
    let view = this.channels.get(index);
    if (!view) {
      view = {
        index, label: `CH${index}`, unit: 'mbar', enabled: true,
        thresholdVoltage: 0, thresholdPressure: 0, live: null, lastGood: null,
      };
      this.channels.set(index, view);
    }
    return view;
  }

  private series(index: number): BoundedSeries {
    let series = this.history.get(index);
    if (!series) {
      series = new BoundedSeries(this.historyCapacity);
      this.history.set(index, series);
    }
    return series;
  }

  /** Apply one stream batch; duplicates after a reconnect are dropped. */
  applyBatch(batch: StreamBatch, now: number = Date.now()): boolean {
    if (batch.seq <= this.lastSeq) return false;
    this.lastSeq = batch.seq;
    this.lastBatchAt = now;
    this.connection = 'live';
    for (const sample of batch.samples) {
      const view = this.channel(sample.channel);
      view.live = sample;
      view.unit = sample.unit;
      if (sample.status === 'ok') {
        view.lastGood = sample;
      }
      if (sample.status !== 'disabled') {
        this.series(sample.channel).push({
          t: Date.parse(sample.timestamp),
          v: sample.pressure,
        });
      }
    }
    return true;
  }

  applyStatus(status: ApiStatus): void {
    this.engine = {
      polling: status.polling,
      pollIntervalMs: status.poll_interval_ms,
      cycles: status.cycles,
      pollErrors: status.poll_errors,
      logError: status.log_error,
      target: status.target,
    };
    for (const channel of status.channels) {
      this.applyChannel(channel);
    }
  }

  applyChannel(channel: ApiChannel): void {
    const view = this.channel(channel.index);
    view.label = channel.label;
    view.unit = channel.unit;
    view.enabled = channel.enabled;
    view.thresholdVoltage = channel.threshold_voltage;
    view.thresholdPressure = channel.threshold_pressure;
    if (channel.last) {
      view.live = channel.last;
      if (channel.last.status === 'ok') view.lastGood = channel.last;
    }
  }

  /** Stale after 3 missed poll intervals; offline is set by the stream client. */
  refreshConnection(now: number = Date.now()): ConnectionState {
    if (this.connection === 'offline' || this.lastBatchAt === null) {
      return this.connection;
    }
    const limit = STALE_INTERVALS * this.engine.pollIntervalMs;
    this.connection = now - this.lastBatchAt > limit ? 'stale' : 'live';
    return this.connection;
  }

  markOffline(): void {
    this.connection = 'offline';
  }

  channelList(): ChannelView[] {
    return [...this.channels.values()].sort((a, b) => a.index - b.index);
  }
}
