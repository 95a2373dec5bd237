import { channelColor } from './chart.js';
import { STATUS_LABELS, formatPressure, formatTimestamp, formatVoltage } from './format.js';
import type { ChannelView, ConsoleStore } from './store.js';
import type { ApiSample } from './types.js';

export interface ViewActions {
  setThreshold(channel: number, volts: number): void;
  toggleChannel(channel: number, enabled: boolean): void;
  start(): void;
  stop(): void;
  toggleScale(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ConsoleView {
  private readonly channelCards = new Map<number, HTMLElement>();
  private readonly thresholdInputs = new Map<number, HTMLInputElement>();
  private readonly thresholdErrors = new Map<number, HTMLElement>();

  constructor(
    private readonly root: HTMLElement,
    private readonly store: ConsoleStore,
    private readonly actions: ViewActions,
  ) {}

  private badge(status: string): HTMLElement {
    const node = el('span', `badge badge-${status}`, STATUS_LABELS[status] ?? status);
    return node;
  }

  renderHeader(): void {
    const header = this.root.querySelector('#engine-state') as HTMLElement;
    header.innerHTML = '';
    const { engine, connection } = this.store;
    header.appendChild(this.badge(connection === 'live' ? engine.polling : connection));
    header.appendChild(el('span', 'meta',
      `${engine.target} · ${engine.pollIntervalMs} ms · ${engine.cycles} cycles` +
      (engine.pollErrors ? ` · ${engine.pollErrors} errors` : '')));

    const banner = this.root.querySelector('#banner') as HTMLElement;
    const message = this.store.banner ?? engine.logError;
    banner.textContent = message ?? '';
    banner.hidden = !message;

    const start = this.root.querySelector('#btn-start') as HTMLButtonElement;
    const stop = this.root.querySelector('#btn-stop') as HTMLButtonElement;
    start.disabled = this.store.controlInFlight;
    stop.disabled = this.store.controlInFlight;
  }

  private sampleRow(label: string, sample: ApiSample | null): HTMLElement {
    const row = el('div', 'value-row');
    row.appendChild(el('span', 'value-label', label));
    if (sample) {
      row.appendChild(el('span', 'pressure', `${formatPressure(sample.pressure)} ${sample.unit}`));
      row.appendChild(el('span', 'voltage', formatVoltage(sample.voltage)));
    } else {
      row.appendChild(el('span', 'pressure', '—'));
    }
    return row;
  }

  private buildCard(view: ChannelView): HTMLElement {
    const card = el('section', 'channel-card');
    card.style.borderTopColor = channelColor(view.index);

    const title = el('header');
    title.appendChild(el('h2', undefined, view.label));
    const enable = el('input') as HTMLInputElement;
    enable.type = 'checkbox';
    enable.title = 'channel enabled';
    enable.addEventListener('change', () => this.actions.toggleChannel(view.index, enable.checked));
    title.appendChild(enable);
    card.appendChild(title);

    card.appendChild(el('div', 'badge-slot'));
    card.appendChild(el('div', 'live-slot'));
    card.appendChild(el('div', 'lastgood-slot'));

    const form = el('div', 'threshold');
    const input = el('input') as HTMLInputElement;
    input.type = 'number';
    input.step = '0.1';
    input.min = '0';
    input.max = '10';
    const set = el('button', undefined, 'Set threshold');
    set.addEventListener('click', () => {
      this.actions.setThreshold(view.index, Number(input.value));
    });
    form.appendChild(input);
    form.appendChild(set);
    card.appendChild(form);
    card.appendChild(el('div', 'threshold-info'));
    const error = el('div', 'inline-error');
    error.hidden = true;
    card.appendChild(error);

    this.thresholdInputs.set(view.index, input);
    this.thresholdErrors.set(view.index, error);
    return card;
  }

  renderChannels(): void {
    const grid = this.root.querySelector('#channels') as HTMLElement;
    for (const view of this.store.channelList()) {
      let card = this.channelCards.get(view.index);
      if (!card) {
        card = this.buildCard(view);
        this.channelCards.set(view.index, card);
        grid.appendChild(card);
      }
      (card.querySelector('h2') as HTMLElement).textContent = view.label;

      const badgeSlot = card.querySelector('.badge-slot') as HTMLElement;
      badgeSlot.innerHTML = '';
      badgeSlot.appendChild(this.badge(view.enabled ? (view.live?.status ?? 'ok') : 'disabled'));

      const liveSlot = card.querySelector('.live-slot') as HTMLElement;
      liveSlot.innerHTML = '';
      liveSlot.appendChild(this.sampleRow('live', view.live));

      const lastGoodSlot = card.querySelector('.lastgood-slot') as HTMLElement;
      lastGoodSlot.innerHTML = '';
      const retained = view.live && view.live.status !== 'ok' ? view.lastGood : null;
      if (retained) {
        const row = this.sampleRow('last good', retained);
        row.appendChild(el('span', 'meta', formatTimestamp(retained.timestamp)));
        lastGoodSlot.appendChild(row);
      }

      const info = card.querySelector('.threshold-info') as HTMLElement;
      info.textContent =
        `threshold ${view.thresholdVoltage.toFixed(2)} V ` +
        `(${formatPressure(view.thresholdPressure)} ${view.unit})`;

      const input = this.thresholdInputs.get(view.index)!;
      if (document.activeElement !== input && input.value === '') {
        input.value = String(view.thresholdVoltage);
      }
      const enable = card.querySelector('input[type=checkbox]') as HTMLInputElement;
      enable.checked = view.enabled;
      enable.disabled = this.store.controlInFlight;
    }
  }

  showThresholdError(channel: number, message: string | null): void {
    const node = this.thresholdErrors.get(channel);
    if (!node) return;
    node.textContent = message ?? '';
    node.hidden = message === null;
  }

  clearThresholdInput(channel: number): void {
    const input = this.thresholdInputs.get(channel);
    if (input) input.value = '';
  }

  renderLog(rows: ApiSample[]): void {
    const body = this.root.querySelector('#log-body') as HTMLElement;
    body.innerHTML = '';
    for (const sample of rows.slice().reverse()) {
      const tr = el('tr');
      tr.appendChild(el('td', undefined, formatTimestamp(sample.timestamp)));
      tr.appendChild(el('td', undefined, String(sample.channel)));
      tr.appendChild(el('td', undefined, formatVoltage(sample.voltage)));
      tr.appendChild(el('td', undefined, `${formatPressure(sample.pressure)} ${sample.unit}`));
      const status = el('td');
      status.appendChild(this.badge(sample.status));
      tr.appendChild(status);
      body.appendChild(tr);
    }
  }
}
