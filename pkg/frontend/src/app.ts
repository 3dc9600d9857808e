// Operator console: create campaigns, watch convergence, and work through the
// measurement queue of a hardware-in-the-loop campaign. All state shown on
// the page comes from service payloads; the only mutations are the create
// form and measurement submissions.

import {
  ApiClient,
  ApiError,
  type CampaignRecord,
  type CreateCampaignBody,
  type FetchFn,
  type HistoryPoint,
  type PendingRequest,
} from "./api.js";
import { renderConvergence } from "./chart.js";
import { PendingStore, parseRpm } from "./pending.js";
import { renderAlleleBars, renderSlice } from "./slice.js";

const MAX_BACKOFF_MS = 30_000;

function messageOf(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  if (err instanceof Error) return err.message;
  return String(err);
}

/**
 * Fixed-cadence poll loop. Each cycle aborts whatever the previous one still
 * has in flight, so a slow response is replaced rather than queued behind.
 * Consecutive failures stretch the delay exponentially up to a cap; the first
 * success snaps it back.
 */
export class Poller {
  private controller: AbortController | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private failures = 0;
  private running = false;

  constructor(
    private tick: (signal: AbortSignal) => Promise<void>,
    private intervalMs: number,
    private onHealth: (healthy: boolean, message: string) => void = () => {},
  ) {}

  start(): void {
    if (this.running) return;
    this.running = true;
    void this.cycle();
  }

  stop(): void {
    this.running = false;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.controller?.abort();
    this.controller = null;
  }

  /** Run a cycle now, replacing both the pending timer and any in-flight one. */
  refreshNow(): Promise<void> {
    if (!this.running) return Promise.resolve();
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    return this.cycle();
  }

  private async cycle(): Promise<void> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    try {
      await this.tick(controller.signal);
      if (controller.signal.aborted) return;
      this.failures = 0;
      this.onHealth(true, "");
    } catch (err) {
      if (controller.signal.aborted) return;
      this.failures += 1;
      this.onHealth(false, messageOf(err));
    }
    if (!this.running || this.controller !== controller) return;
    const delay = Math.min(this.intervalMs * 2 ** this.failures, MAX_BACKOFF_MS);
    this.timer = setTimeout(() => void this.cycle(), delay);
  }
}

export interface AppOptions {
  baseUrl?: string;
  fetchFn?: FetchFn;
  pollMs?: number;
}

export interface AppHandle {
  client: ApiClient;
  store: PendingStore;
  select(campaignId: string): Promise<void>;
  refresh(): Promise<void>;
  stop(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function labeledInput(label: string, input: HTMLElement): HTMLLabelElement {
  const wrap = el("label", "field");
  wrap.append(el("span", "field-name", label), input);
  return wrap;
}

export function mountApp(root: HTMLElement, options: AppOptions = {}): AppHandle {
  const client = new ApiClient(options.baseUrl ?? "", options.fetchFn);
  const store = new PendingStore();
  const pollMs = options.pollMs ?? 2000;

  let selectedId: string | null = null;
  let record: CampaignRecord | null = null;
  let campaigns: CampaignRecord[] = [];
  const cardNodes = new Map<string, HTMLElement>();

  root.textContent = "";
  root.className = "console-root";

  const banner = el("div", "error-banner");
  banner.id = "error-banner";
  banner.hidden = true;

  const header = el("header");
  header.append(el("h1", "", "Turbine campaign console"), banner);

  // create form -------------------------------------------------------------

  const form = el("form", "create-form");
  const oracleSelect = el("select") as HTMLSelectElement;
  for (const kind of ["manual", "proxy", "target"]) {
    const option = el("option", "", kind) as HTMLOptionElement;
    option.value = kind;
    oracleSelect.append(option);
  }
  const modeSelect = el("select") as HTMLSelectElement;
  for (const mode of ["surrogate", "ga"]) {
    const option = el("option", "", mode) as HTMLOptionElement;
    option.value = mode;
    modeSelect.append(option);
  }
  const budgetInput = el("input") as HTMLInputElement;
  budgetInput.type = "number";
  budgetInput.min = "20";
  budgetInput.value = "26";
  budgetInput.name = "evaluationBudget";
  const seedInput = el("input") as HTMLInputElement;
  seedInput.type = "number";
  seedInput.value = "0";
  seedInput.name = "seed";
  const warmupInput = el("input") as HTMLInputElement;
  warmupInput.type = "number";
  warmupInput.min = "0";
  warmupInput.value = "0";
  warmupInput.name = "warmupGenerations";
  const zModeInput = el("input") as HTMLInputElement;
  zModeInput.type = "checkbox";
  zModeInput.name = "zMode";
  const targetInput = el("input") as HTMLInputElement;
  targetInput.type = "text";
  targetInput.placeholder = "2,2,3,4,5,8,13,20,34,40";
  targetInput.name = "targetGenome";
  const targetField = labeledInput("target alleles", targetInput);
  targetField.hidden = true;
  oracleSelect.addEventListener("change", () => {
    targetField.hidden = oracleSelect.value !== "target";
  });
  const createButton = el("button", "create-button", "Start campaign") as HTMLButtonElement;
  createButton.type = "submit";
  const formError = el("p", "form-error");
  formError.hidden = true;

  form.append(
    labeledInput("fitness source", oracleSelect),
    labeledInput("mode", modeSelect),
    labeledInput("evaluation budget", budgetInput),
    labeledInput("seed", seedInput),
    labeledInput("warmup generations", warmupInput),
    labeledInput("z sections", zModeInput),
    targetField,
    createButton,
    formError,
  );

  // campaign list + detail ---------------------------------------------------

  const listEl = el("ul", "campaign-list");
  const aside = el("aside");
  aside.append(el("h2", "", "Campaigns"), listEl);

  const statusLine = el("p", "status-line");
  const chartBox = el("div", "convergence");
  chartBox.id = "convergence";
  const queueBox = el("div", "queue");
  queueBox.id = "queue";
  const detail = el("section", "detail");
  detail.append(statusLine, chartBox, el("h2", "", "Measurement queue"), queueBox);

  const main = el("main");
  main.append(aside, detail);
  root.append(header, form, main);

  // rendering ----------------------------------------------------------------

  function renderCampaignList(): void {
    listEl.textContent = "";
    if (campaigns.length === 0) {
      listEl.append(el("li", "campaign-list-empty", "No campaigns yet."));
      return;
    }
    for (const c of campaigns) {
      const item = el("li");
      const button = el("button", "campaign-item") as HTMLButtonElement;
      if (c.id === selectedId) button.classList.add("selected");
      button.dataset.campaignId = c.id;
      button.textContent = `${c.id.slice(0, 8)}  ${c.oracle}/${c.config.mode}  ${c.status}`;
      button.addEventListener("click", () => void select(c.id));
      item.append(button);
      listEl.append(item);
    }
  }

  function renderStatus(): void {
    if (!record) {
      statusLine.textContent = "Select or create a campaign.";
      return;
    }
    const best = record.bestFitness === null ? "none" : String(record.bestFitness);
    statusLine.textContent =
      `${record.status}  |  ${record.oracle} oracle, ${record.config.mode} mode  |  ` +
      `generation ${record.generation}  |  evaluations ${record.evaluations}  |  best ${best}`;
  }

  function showCardError(card: HTMLElement, message: string | null): void {
    const errorEl = card.querySelector<HTMLElement>(".card-error");
    if (!errorEl) return;
    errorEl.hidden = message === null;
    errorEl.textContent = message ?? "";
  }

  function buildCard(request: PendingRequest): HTMLElement {
    const card = el("article", "pending-card");
    card.dataset.requestId = request.requestId;

    const title = el("header", "card-title", `${request.requestId}`);
    const hash = el("span", "design-hash", request.genomeHash.slice(0, 10));
    title.append(hash);

    const alleleSlot = el("div", "allele-slot");
    renderAlleleBars(alleleSlot, request.genome);
    const sliceSlot = el("div", "slice-slot", "loading slice");
    if (selectedId) {
      client
        .getSlice(selectedId, request.genomeHash)
        .then((payload) => renderSlice(sliceSlot, payload))
        .catch(() => {
          sliceSlot.textContent = "slice unavailable";
        });
    }

    const stlLink = el("a", "stl-link", "Download STL") as HTMLAnchorElement;
    stlLink.href = client.stlHref(request.stlUrl);
    stlLink.setAttribute("download", "");

    const measureForm = el("form", "measure-form");
    const rpmInput = el("input", "rpm-input") as HTMLInputElement;
    rpmInput.placeholder = "measured rpm";
    rpmInput.autocomplete = "off";
    const submitButton = el("button", "rpm-submit", "Record") as HTMLButtonElement;
    submitButton.type = "submit";
    measureForm.append(rpmInput, submitButton);

    const cardError = el("p", "card-error");
    cardError.hidden = true;

    measureForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const rpm = parseRpm(rpmInput.value);
      if (rpm === null) {
        showCardError(card, "Enter the measured speed as a non-negative number.");
        return;
      }
      if (!selectedId || !store.beginSubmit(request.requestId)) return;
      submitButton.disabled = true;
      renderQueue();
      const campaignId = selectedId;
      void client
        .submitMeasurement(campaignId, request.requestId, rpm)
        .then(() => {
          store.submitSucceeded(request.requestId);
          return poller.refreshNow();
        })
        .catch((err: unknown) => {
          store.submitFailed(request.requestId, messageOf(err));
          submitButton.disabled = false;
          renderQueue();
          showCardError(card, messageOf(err));
        });
    });

    card.append(title, alleleSlot, sliceSlot, stlLink, measureForm, cardError);
    return card;
  }

  function renderQueue(): void {
    if (!record) {
      queueBox.textContent = "";
      cardNodes.clear();
      return;
    }
    if (record.oracle !== "manual") {
      queueBox.textContent = "";
      cardNodes.clear();
      const note = el(
        "p",
        "empty-state",
        "This campaign scores designs from a computed fitness source; no measurements are requested.",
      );
      queueBox.append(note);
      return;
    }

    const visible = store.visible();
    const wantIds = visible.map((card) => card.request.requestId);

    for (const [id, node] of [...cardNodes]) {
      if (!wantIds.includes(id)) {
        node.remove();
        cardNodes.delete(id);
      }
    }
    queueBox.querySelectorAll(".empty-state, .queue-empty").forEach((n) => n.remove());

    if (visible.length === 0) {
      const message = record.status === "finished"
        ? "Campaign finished; no further prototypes are requested."
        : "No open measurement requests right now.";
      queueBox.append(el("p", "queue-empty", message));
      return;
    }

    for (const cardState of visible) {
      let node = cardNodes.get(cardState.request.requestId);
      if (!node) {
        node = buildCard(cardState.request);
        cardNodes.set(cardState.request.requestId, node);
      }
      showCardError(node, cardState.error);
    }

    // reorder only when the id sequence changed, so typing is not disturbed
    const currentOrder = [...queueBox.querySelectorAll(".pending-card")].map(
      (n) => (n as HTMLElement).dataset.requestId,
    );
    if (currentOrder.join(" ") !== wantIds.join(" ")) {
      for (const id of wantIds) queueBox.append(cardNodes.get(id) as HTMLElement);
    }
  }

  function renderChart(series: HistoryPoint[]): void {
    if (!record) {
      chartBox.textContent = "";
      return;
    }
    renderConvergence(chartBox, series, {
      mode: record.config.mode,
      generation: record.generation,
    });
  }

  // polling ------------------------------------------------------------------

  async function tick(signal: AbortSignal): Promise<void> {
    const listPromise = client.listCampaigns(signal);
    // awaited later; keep an early rejection from going unobserved
    listPromise.catch(() => {});
    if (selectedId) {
      const historyPromise = client.getHistory(selectedId, signal);
      historyPromise.catch(() => {});
      record = await client.getCampaign(selectedId, signal);
      const pendingList = record.oracle === "manual"
        ? await client.getPending(selectedId, signal)
        : [];
      store.reconcile(pendingList);
      renderStatus();
      renderChart(await historyPromise);
      renderQueue();
    }
    campaigns = await listPromise;
    renderCampaignList();
  }

  const poller = new Poller(tick, pollMs, (healthy, message) => {
    banner.hidden = healthy;
    banner.textContent = healthy ? "" : `Service unreachable, retrying: ${message}`;
  });

  async function select(campaignId: string): Promise<void> {
    selectedId = campaignId;
    record = null;
    store.reconcile([]);
    cardNodes.clear();
    queueBox.textContent = "";
    chartBox.textContent = "";
    await poller.refreshNow();
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    formError.hidden = true;
    const body: CreateCampaignBody = {
      oracle: oracleSelect.value,
      mode: modeSelect.value,
      evaluationBudget: Number(budgetInput.value),
      seed: Number(seedInput.value),
      warmupGenerations: Number(warmupInput.value),
      zMode: zModeInput.checked,
    };
    if (oracleSelect.value === "target") {
      body.targetGenome = targetInput.value
        .split(",")
        .map((piece) => Number(piece.trim()))
        .filter((n) => Number.isFinite(n));
    }
    createButton.disabled = true;
    void client
      .createCampaign(body)
      .then((created) => select(created.id))
      .catch((err: unknown) => {
        formError.hidden = false;
        formError.textContent = messageOf(err);
      })
      .finally(() => {
        createButton.disabled = false;
      });
  });

  renderStatus();
  poller.start();

  return {
    client,
    store,
    select,
    refresh: () => poller.refreshNow(),
    stop: () => poller.stop(),
  };
}

// Browser entry point: mount onto #app when the page provides one. The test
// environment imports this module without that element.
const rootEl = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootEl) {
  const params = new URLSearchParams(window.location.search);
  mountApp(rootEl, { baseUrl: params.get("api") ?? "" });
}
