import { afterEach, describe, expect, it, vi } from 'vitest';

import { ApiClient, ApiError, validateThresholdVolts } from '../src/api.js';

function mockFetch(status: number, body: unknown) {
  const fn = vi.fn().mockResolvedValue({
    ok: status >= 200 && status < 300,
    status,
    json: () => Promise.resolve(body),
  });
  vi.stubGlobal('fetch', fn);
  return fn;
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe('ApiClient', () => {
  it('GET /api/status', async () => {
    const fn = mockFetch(200, { polling: 'running', channels: [] });
    const api = new ApiClient('http://engine');
    const status = await api.getStatus();
    expect(fn).toHaveBeenCalledWith('http://engine/api/status');
    expect(status.polling).toBe('running');
  });

  it('PUT threshold sends a JSON body', async () => {
    const fn = mockFetch(200, { index: 2, threshold_voltage: 3.25 });
    const api = new ApiClient('');
    const channel = await api.setThreshold(2, 3.25);
    expect(channel.threshold_voltage).toBe(3.25);
    const [url, init] = fn.mock.calls[0]!;
    expect(url).toBe('/api/channels/2/threshold');
    expect(init.method).toBe('PUT');
    expect(JSON.parse(init.body)).toEqual({ voltage: 3.25 });
  });

  it('engine rejection surfaces as ApiError with the message', async () => {
    mockFetch(400, { error: 'threshold must be within [0, 10] V' });
    const api = new ApiClient('');
    await expect(api.setThreshold(1, 12)).rejects.toThrowError(ApiError);
    await expect(api.setThreshold(1, 12)).rejects.toThrow(/threshold/);
  });

  it('control endpoints use POST', async () => {
    const fn = mockFetch(200, { polling: 'stopped' });
    await new ApiClient('').stop();
    expect(fn.mock.calls[0]![0]).toBe('/api/control/stop');
    expect(fn.mock.calls[0]![1].method).toBe('POST');
  });

  it('log endpoint passes the limit through', async () => {
    const fn = mockFetch(200, []);
    await new ApiClient('').getLog(24);
    expect(fn).toHaveBeenCalledWith('/api/log?limit=24');
  });
});

describe('validateThresholdVolts', () => {
  it('accepts the analog span', () => {
    expect(validateThresholdVolts(0)).toBeNull();
    expect(validateThresholdVolts(3.2)).toBeNull();
    expect(validateThresholdVolts(10)).toBeNull();
  });

  it('rejects out-of-span and non-numeric values', () => {
    expect(validateThresholdVolts(12)).toMatch(/within/);
    expect(validateThresholdVolts(-1)).toMatch(/within/);
    expect(validateThresholdVolts(Number.NaN)).toMatch(/number/);
  });
});
