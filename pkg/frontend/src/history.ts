export interface Point {
  t: number; // ms since epoch
  v: number;
}

/**
 * Bounded time series that degrades by decimation instead of discarding the
 * window: when the buffer reaches capacity every second point is dropped and
 * the accept stride doubles, so the full time span survives at half the
 * resolution. Growth is never unbounded.
 */
export class BoundedSeries {
  points: Point[] = [];
  private stride = 1;
  private skip = 0;

  constructor(readonly capacity: number = 600) {
    if (capacity < 4) throw new Error('capacity must be at least 4');
  }

  push(point: Point): void {
    if (this.skip > 0) {
      this.skip -= 1;
      return;
    }
    this.points.push(point);
    this.skip = this.stride - 1;
    if (this.points.length >= this.capacity) {
      this.points = this.points.filter((_, i) => i % 2 === 0);
      this.stride *= 2;
    }
  }

  get length(): number {
    return this.points.length;
  }

  clear(): void {
    this.points = [];
    this.stride = 1;
    this.skip = 0;
  }
}
