// Display formatting only; every number shown comes from the engine API.

export function formatPressure(value: number): string {
  if (!Number.isFinite(value)) return '—';
  const exponent = Math.floor(Math.log10(Math.abs(value)));
  if (exponent >= -2 && exponent < 4) return value.toPrecision(4);
  return value.toExponential(3);
}

export function formatVoltage(value: number): string {
  return Number.isFinite(value) ? `${value.toFixed(5)} V` : '—';
}

export function formatTimestamp(iso: string | null): string {
  if (!iso) return '—';
  const date = new Date(iso);
  return Number.isNaN(date.getTime()) ? iso : date.toLocaleTimeString();
}

export const STATUS_LABELS: Record<string, string> = {
  ok: 'OK',
  clamped: 'CLAMPED',
  disconnected: 'DISCONNECTED',
  not_ignited: 'NOT IGNITED',
  underrange: 'UNDERRANGE',
  overrange: 'OVERRANGE',
  disabled: 'DISABLED',
};
