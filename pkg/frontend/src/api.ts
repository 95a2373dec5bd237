import type { ApiChannel, ApiSample, ApiStatus } from './types.js';

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const message = (body as { error?: string }).error ?? `HTTP ${response.status}`;
    throw new ApiError(response.status, message);
  }
  return body as T;
}

/** Thin fetch wrapper over the engine's REST surface. */
export class ApiClient {
  constructor(readonly baseUrl: string = '') {}

  getStatus(): Promise<ApiStatus> {
    return fetch(`${this.baseUrl}/api/status`).then((r) => asJson<ApiStatus>(r));
  }

  getChannels(): Promise<ApiChannel[]> {
    return fetch(`${this.baseUrl}/api/channels`).then((r) => asJson<ApiChannel[]>(r));
  }

  getLog(limit: number): Promise<ApiSample[]> {
    return fetch(`${this.baseUrl}/api/log?limit=${limit}`).then((r) => asJson<ApiSample[]>(r));
  }

  setThreshold(channel: number, voltage: number): Promise<ApiChannel> {
    return fetch(`${this.baseUrl}/api/channels/${channel}/threshold`, {
      method: 'PUT',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ voltage }),
    }).then((r) => asJson<ApiChannel>(r));
  }

  setEnabled(channel: number, enabled: boolean): Promise<ApiChannel> {
    return fetch(`${this.baseUrl}/api/channels/${channel}/enabled`, {
      method: 'PUT',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ enabled }),
    }).then((r) => asJson<ApiChannel>(r));
  }

  start(): Promise<{ polling: string }> {
    return fetch(`${this.baseUrl}/api/control/start`, { method: 'POST' })
      .then((r) => asJson<{ polling: string }>(r));
  }

  stop(): Promise<{ polling: string }> {
    return fetch(`${this.baseUrl}/api/control/stop`, { method: 'POST' })
      .then((r) => asJson<{ polling: string }>(r));
  }
}

/** Threshold inputs are validated client-side against the analog span. */
export function validateThresholdVolts(value: number): string | null {
  if (!Number.isFinite(value)) return 'threshold must be a number';
  if (value < 0 || value > 10) return 'threshold must be within 0 and 10 V';
  return null;
}
