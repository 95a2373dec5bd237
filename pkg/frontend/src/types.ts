// Wire types mirroring the engine's HTTP API. The console never computes
// physics: voltages and pressures are displayed exactly as received.

export type SampleStatus =
  | 'ok'
  | 'clamped'
  | 'disconnected'
  | 'not_ignited'
  | 'underrange'
  | 'overrange'
  | 'disabled';

export interface ApiSample {
  timestamp: string;
  channel: number;
  raw_count: number;
  voltage: number;
  pressure: number;
  unit: string;
  status: SampleStatus;
  clamped: boolean;
}

export interface ApiChannel {
  index: number;
  label: string;
  unit: string;
  enabled: boolean;
  threshold_voltage: number;
  threshold_pressure: number;
  last: ApiSample | null;
}

export type PollingState = 'running' | 'stopped' | 'degraded';

export interface ApiStatus {
  polling: PollingState;
  target: string;
  unit_id: number;
  poll_interval_ms: number;
  cycles: number;
  poll_errors: number;
  consecutive_failures: number;
  last_cycle_at: string | null;
  log_path: string;
  log_error: string | null;
  channels: ApiChannel[];
}

export interface StreamBatch {
  seq: number;
  timestamp: string | null;
  samples: ApiSample[];
}
