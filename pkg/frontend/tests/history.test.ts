import { describe, expect, it } from 'vitest';

import { BoundedSeries } from '../src/history.js';

describe('BoundedSeries', () => {
  it('keeps every point below capacity', () => {
    const series = new BoundedSeries(100);
    for (let i = 0; i < 99; i++) series.push({ t: i, v: i });
    expect(series.length).toBe(99);
    expect(series.points[0]).toEqual({ t: 0, v: 0 });
    expect(series.points.at(-1)).toEqual({ t: 98, v: 98 });
  });

  it('never exceeds capacity however many points arrive', () => {
    const series = new BoundedSeries(100);
    for (let i = 0; i < 100_000; i++) series.push({ t: i, v: i });
    expect(series.length).toBeLessThan(100);
  });

  it('decimation preserves the full time span', () => {
    const series = new BoundedSeries(100);
    for (let i = 0; i < 10_000; i++) series.push({ t: i, v: i });
    expect(series.points[0]?.t).toBe(0);
    // the retained window still reaches near the newest samples
    expect(series.points.at(-1)!.t).toBeGreaterThan(8_000);
  });

  it('retained points stay in time order after decimation', () => {
    const series = new BoundedSeries(64);
    for (let i = 0; i < 5_000; i++) series.push({ t: i, v: Math.sin(i) });
    const times = series.points.map((p) => p.t);
    expect([...times].sort((a, b) => a - b)).toEqual(times);
  });

  it('clear resets stride and contents', () => {
    const series = new BoundedSeries(8);
    for (let i = 0; i < 100; i++) series.push({ t: i, v: i });
    series.clear();
    series.push({ t: 0, v: 1 });
    series.push({ t: 1, v: 2 });
    expect(series.points).toEqual([{ t: 0, v: 1 }, { t: 1, v: 2 }]);
  });
});
