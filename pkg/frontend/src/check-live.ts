// Scripted console check against a live engine (node):
//   node dist/check-live.js [http://127.0.0.1:8080]
// Verifies: stream delivers batches at >= 1 Hz relative to the poll interval,
// a threshold edit round-trips through the API and shows up in later samples,
// and start/stop toggles the polling state.

import { ApiClient } from './api.js';
import { SseParser } from './sse.js';
import type { StreamBatch } from './types.js';

const base = process.argv[2] ?? 'http://127.0.0.1:8080';
const api = new ApiClient(base);

function fail(message: string): never {
  console.error(`FAIL ${message}`);
  process.exit(1);
}

function ok(message: string): void {
  console.log(`ok   ${message}`);
}

async function readBatches(count: number, timeoutMs: number): Promise<StreamBatch[]> {
  const controller = new AbortController();
  const timer = setTimeout(() => controller.abort(), timeoutMs);
  const batches: StreamBatch[] = [];
  try {
    const response = await fetch(`${base}/api/stream`, { signal: controller.signal });
    if (!response.ok || !response.body) fail(`stream HTTP ${response.status}`);
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SseParser();
    while (batches.length < count) {
      const { value, done } = await reader.read();
      if (done) break;
      for (const event of parser.feed(decoder.decode(value, { stream: true }))) {
        batches.push(JSON.parse(event.data) as StreamBatch);
      }
    }
    void reader.cancel().catch(() => undefined);
  } catch (error) {
    if ((error as Error).name !== 'AbortError') throw error;
  } finally {
    clearTimeout(timer);
  }
  return batches;
}

async function main(): Promise<void> {
  const status = await api.getStatus();
  ok(`engine reachable, polling=${status.polling}, interval=${status.poll_interval_ms} ms`);
  if (status.polling !== 'running') {
    await api.start();
    ok('started polling');
  }

  // stream rate: 4 batches within 4 poll intervals + slack, seq strictly increasing
  const windowMs = status.poll_interval_ms * 4 + 3000;
  const t0 = Date.now();
  const batches = await readBatches(4, windowMs);
  if (batches.length < 4) fail(`only ${batches.length} stream batches in ${windowMs} ms`);
  const seqs = batches.map((b) => b.seq);
  if (!seqs.every((s, i) => i === 0 || s > seqs[i - 1]!)) fail(`non-monotonic seq ${seqs}`);
  const perBatch = (Date.now() - t0) / batches.length;
  if (perBatch > Math.max(status.poll_interval_ms * 1.5, 1000)) {
    fail(`stream too slow: ${perBatch.toFixed(0)} ms/batch`);
  }
  ok(`stream delivered ${batches.length} batches (${perBatch.toFixed(0)} ms/batch), six channels: ` +
     `${batches[0]!.samples.length === 6}`);

  // threshold round trip on channel 1
  const before = (await api.getChannels()).find((c) => c.index === 1);
  if (!before) fail('channel 1 missing');
  const target = Math.abs(before.threshold_voltage - 9.5) < 0.01 ? 9.0 : 9.5;
  const updated = await api.setThreshold(1, target);
  if (updated.threshold_voltage !== target) fail('PUT did not return the stored threshold');
  const after = (await api.getChannels()).find((c) => c.index === 1);
  if (after?.threshold_voltage !== target) fail('GET after PUT returned a different threshold');
  ok(`threshold round trip: ${before.threshold_voltage} -> ${target} V`);

  const later = await readBatches(2, windowMs);
  const ch1 = later.at(-1)?.samples.find((s) => s.channel === 1);
  if (ch1 && ch1.voltage <= target && !ch1.clamped) {
    fail('sample below the new threshold is not clamped');
  }
  ok(`subsequent samples honor the new threshold (ch1 status=${ch1?.status})`);
  await api.setThreshold(1, before.threshold_voltage);

  // start/stop toggling
  await api.stop();
  const stopped = await api.getStatus();
  if (stopped.polling !== 'stopped') fail(`expected stopped, got ${stopped.polling}`);
  await api.start();
  const running = await api.getStatus();
  if (running.polling !== 'running') fail(`expected running, got ${running.polling}`);
  ok('start/stop toggles polling state');

  console.log('live check passed');
}

main().catch((error) => fail(String(error)));
