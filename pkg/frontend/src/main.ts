import { ApiClient, ApiError, validateThresholdVolts } from './api.js';
import { HistoryChart } from './chart.js';
import { ConsoleStore } from './store.js';
import { StreamClient } from './sse.js';
import { ConsoleView, type ViewActions } from './view.js';
import type { StreamBatch } from './types.js';

const api = new ApiClient('');
const store = new ConsoleStore();

let view: ConsoleView;
let chart: HistoryChart;
let renderQueued = false;

function scheduleRender(): void {
  // one render per animation frame, however many batches arrived
  if (renderQueued) return;
  renderQueued = true;
  requestAnimationFrame(() => {
    renderQueued = false;
    view.renderHeader();
    view.renderChannels();
    const visible = new Set(store.channelList().filter((c) => c.enabled).map((c) => c.index));
    chart.draw(store.history, visible);
  });
}

async function refreshStatus(): Promise<void> {
  try {
    store.applyStatus(await api.getStatus());
    store.banner = null;
  } catch {
    store.markOffline();
    store.banner = 'engine unreachable';
  }
  scheduleRender();
}

async function refreshLog(): Promise<void> {
  try {
    view.renderLog(await api.getLog(24));
  } catch {
    // offline: the banner from refreshStatus covers it
  }
}

async function control(action: () => Promise<unknown>): Promise<void> {
  store.controlInFlight = true;
  scheduleRender();
  try {
    await action();
  } catch (error) {
    store.banner = error instanceof ApiError ? error.message : 'request failed';
  } finally {
    store.controlInFlight = false;
    // UI state follows the status poll, never the optimistic local value
    await refreshStatus();
  }
}

const actions: ViewActions = {
  setThreshold(channel, volts) {
    const problem = validateThresholdVolts(volts);
    view.showThresholdError(channel, problem);
    if (problem) return;
    void control(async () => {
      const updated = await api.setThreshold(channel, volts);
      store.applyChannel(updated);
      view.clearThresholdInput(channel);
    }).catch(() => undefined);
  },
  toggleChannel(channel, enabled) {
    void control(() => api.setEnabled(channel, enabled));
  },
  start() {
    void control(() => api.start());
  },
  stop() {
    void control(() => api.stop());
  },
  toggleScale() {
    chart.options.logScale = !chart.options.logScale;
    const button = document.querySelector('#btn-scale') as HTMLButtonElement;
    button.textContent = chart.options.logScale ? 'log scale' : 'linear scale';
    scheduleRender();
  },
};

function startStream(): void {
  const stream = new StreamClient('/api/stream', {
    onBatch(data) {
      let batch: StreamBatch;
      try {
        batch = JSON.parse(data) as StreamBatch;
      } catch {
        return;
      }
      if (store.applyBatch(batch)) {
        scheduleRender();
        void refreshLog();
      }
    },
    onStateChange(connected) {
      if (!connected) store.markOffline();
      else void refreshStatus();
      scheduleRender();
    },
  });
  stream.start();
}

function main(): void {
  const root = document.querySelector('#app') as HTMLElement;
  view = new ConsoleView(root, store, actions);
  chart = new HistoryChart(document.querySelector('#chart') as HTMLCanvasElement);

  (document.querySelector('#btn-start') as HTMLButtonElement)
    .addEventListener('click', actions.start);
  (document.querySelector('#btn-stop') as HTMLButtonElement)
    .addEventListener('click', actions.stop);
  (document.querySelector('#btn-scale') as HTMLButtonElement)
    .addEventListener('click', actions.toggleScale);

  void refreshStatus().then(refreshLog);
  startStream();
  // status poll keeps polling-state and staleness honest even without stream traffic
  setInterval(() => {
    void refreshStatus();
    store.refreshConnection();
    scheduleRender();
  }, 2000);
}

main();
