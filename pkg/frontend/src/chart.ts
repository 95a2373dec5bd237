import type { BoundedSeries } from './history.js';

const COLORS = ['#4fc3f7', '#aed581', '#ffb74d', '#f06292', '#ba68c8', '#4db6ac'];

export interface ChartOptions {
  logScale: boolean;
}

/** Canvas strip chart of per-channel pressure history. Pressure axis is
 * logarithmic (decades) by default, with a linear toggle. */
export class HistoryChart {
  private readonly ctx: CanvasRenderingContext2D;
  options: ChartOptions = { logScale: true };

  constructor(private readonly canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext('2d');
    if (!ctx) throw new Error('canvas 2d context unavailable');
    this.ctx = ctx;
  }

  draw(history: Map<number, BoundedSeries>, visible: Set<number>): void {
    const { canvas, ctx } = this;
    const width = canvas.clientWidth || canvas.width;
    const height = canvas.clientHeight || canvas.height;
    if (canvas.width !== width * devicePixelRatio) {
      canvas.width = width * devicePixelRatio;
      canvas.height = height * devicePixelRatio;
    }
    ctx.setTransform(devicePixelRatio, 0, 0, devicePixelRatio, 0, 0);
    ctx.clearRect(0, 0, width, height);

    const margin = { left: 64, right: 8, top: 8, bottom: 20 };
    const plotW = width - margin.left - margin.right;
    const plotH = height - margin.top - margin.bottom;
    if (plotW <= 0 || plotH <= 0) return;

    let tMin = Infinity, tMax = -Infinity, vMin = Infinity, vMax = -Infinity;
    for (const [index, series] of history) {
      if (!visible.has(index)) continue;
      for (const point of series.points) {
        if (point.v <= 0 && this.options.logScale) continue;
        tMin = Math.min(tMin, point.t);
        tMax = Math.max(tMax, point.t);
        vMin = Math.min(vMin, point.v);
        vMax = Math.max(vMax, point.v);
      }
    }
    if (!Number.isFinite(tMin) || tMin === tMax) return;
    if (vMin === vMax) {
      vMin *= 0.5;
      vMax *= 2;
    }

    const toY = (v: number): number => {
      if (this.options.logScale) {
        const ly = Math.log10(v), lo = Math.log10(vMin), hi = Math.log10(vMax);
        return margin.top + plotH * (1 - (ly - lo) / (hi - lo));
      }
      return margin.top + plotH * (1 - (v - vMin) / (vMax - vMin));
    };
    const toX = (t: number): number => margin.left + (plotW * (t - tMin)) / (tMax - tMin);

    // horizontal grid: decades in log mode, quarters otherwise
    ctx.strokeStyle = '#2b3a4a';
    ctx.fillStyle = '#7f96a8';
    ctx.font = '10px system-ui';
    ctx.textAlign = 'right';
    const gridValues: number[] = [];
    if (this.options.logScale) {
      for (let e = Math.ceil(Math.log10(vMin)); e <= Math.floor(Math.log10(vMax)); e++) {
        gridValues.push(10 ** e);
      }
    } else {
      for (let i = 0; i <= 4; i++) gridValues.push(vMin + ((vMax - vMin) * i) / 4);
    }
    for (const value of gridValues) {
      const y = toY(value);
      ctx.beginPath();
      ctx.moveTo(margin.left, y);
      ctx.lineTo(width - margin.right, y);
      ctx.stroke();
      ctx.fillText(value.toExponential(0), margin.left - 6, y + 3);
    }

    for (const [index, series] of history) {
      if (!visible.has(index) || series.points.length < 2) continue;
      ctx.strokeStyle = COLORS[(index - 1) % COLORS.length] ?? '#ccc';
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      let started = false;
      for (const point of series.points) {
        if (this.options.logScale && point.v <= 0) continue;
        const x = toX(point.t), y = toY(point.v);
        if (started) ctx.lineTo(x, y);
        else ctx.moveTo(x, y);
        started = true;
      }
      ctx.stroke();
    }
  }
}

export function channelColor(index: number): string {
  return COLORS[(index - 1) % COLORS.length] ?? '#ccc';
}
