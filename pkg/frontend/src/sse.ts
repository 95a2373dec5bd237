// Server-sent events: an incremental parser (pure, testable) plus a client
// that reconnects with exponential backoff. The engine sets the event id to
// the poll-cycle sequence number, which lets the store drop duplicates after
// a reconnect.

export interface SseEvent {
  id: number | null;
  data: string;
}

/** Incremental SSE parser; feed() returns completed events. */
export class SseParser {
  private buffer = '';
  private id: number | null = null;
  private dataLines: string[] = [];

  feed(chunk: string): SseEvent[] {
    this.buffer += chunk;
    const events: SseEvent[] = [];
    let newline;
    while ((newline = this.buffer.indexOf('\n')) >= 0) {
      const line = this.buffer.slice(0, newline).replace(/\r$/, '');
      this.buffer = this.buffer.slice(newline + 1);
      if (line === '') {
        if (this.dataLines.length > 0) {
          events.push({ id: this.id, data: this.dataLines.join('\n') });
        }
        this.id = null;
        this.dataLines = [];
      } else if (line.startsWith('id:')) {
        const parsed = Number(line.slice(3).trim());
        this.id = Number.isFinite(parsed) ? parsed : null;
      } else if (line.startsWith('data:')) {
        this.dataLines.push(line.slice(5).trimStart());
      }
      // comment lines (":" prefix) are keepalives; ignored
    }
    return events;
  }
}

export interface StreamCallbacks {
  onBatch: (data: string, id: number | null) => void;
  onStateChange?: (connected: boolean) => void;
}

const BACKOFF_INITIAL_MS = 1000;
const BACKOFF_MAX_MS = 10000;

/** EventSource wrapper with exponential-backoff reconnect. */
export class StreamClient {
  private source: EventSource | null = null;
  private backoffMs = BACKOFF_INITIAL_MS;
  private timer: number | null = null;
  private stopped = false;

  constructor(
    private readonly url: string,
    private readonly callbacks: StreamCallbacks,
  ) {}

  start(): void {
    this.stopped = false;
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.source?.close();
    this.source = null;
  }

  private connect(): void {
    this.source = new EventSource(this.url);
    this.source.onopen = () => {
      this.backoffMs = BACKOFF_INITIAL_MS;
      this.callbacks.onStateChange?.(true);
    };
    this.source.onmessage = (event) => {
      const id = event.lastEventId ? Number(event.lastEventId) : null;
      this.callbacks.onBatch(event.data, Number.isFinite(id as number) ? id : null);
    };
    this.source.onerror = () => {
      this.callbacks.onStateChange?.(false);
      this.source?.close();
      this.source = null;
      if (!this.stopped) {
        this.timer = window.setTimeout(() => this.connect(), this.backoffMs);
        this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
      }
    };
  }
}
