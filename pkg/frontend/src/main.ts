// App controller: one BoardModel is the single source of truth, every edit
// goes through it, and the DOM is rebuilt from it. The server stays the
// authority on fingerprints, validation verdicts, and metrics; this layer
// only arranges what it returns.

import { ApiClient, ApiError, type ApiLike } from "./api.js";
import { BoardModel, type CardModel } from "./board.js";
import {
  allowedSections,
  canDrop,
  catalogByKind,
  groupPlugins,
  pickRequirement,
  resolveRequirement,
  type PluginGroup,
} from "./catalog.js";
import { buildCompareTable, formatCell } from "./compare.js";
import { resolveErrorCard } from "./errors.js";
import { flagServerError, renderParamForm } from "./forms.js";
import { pollRun } from "./poll.js";
import type {
  DatasetDoc,
  ManifestDoc,
  RunRecordDoc,
  Section,
} from "./types.js";
import { SECTIONS } from "./types.js";

type DragPayload =
  | { kind: "palette"; plugin: string; version: string }
  | { kind: "card"; instanceId: string };

export interface AppOptions {
  sleep?: (ms: number) => Promise<void>;
}

export class App {
  board = new BoardModel("pipeline");
  groups: PluginGroup[] = [];
  datasets: DatasetDoc[] = [];
  runs: RunRecordDoc[] = [];
  selectedRuns = new Set<string>();
  metric = "val_accuracy";

  private fieldErrors = new Map<string, Map<string, string>>();
  private dragging: DragPayload | null = null;

  constructor(readonly root: HTMLElement,
              readonly client: ApiLike,
              private readonly options: AppOptions = {}) {}

  async init(): Promise<void> {
    const manifests = await this.client.getPlugins();
    this.groups = groupPlugins(manifests);
    this.datasets = await this.client.getDatasets();
    try {
      this.runs = await this.client.listRuns();
    } catch {
      this.runs = [];
    }
    this.render();
  }

  // -- lookups ---------------------------------------------------------------

  group(plugin: string): PluginGroup | undefined {
    return this.groups.find((g) => g.name === plugin);
  }

  /** Concrete manifest a card's requirement resolves to, or null. */
  manifestFor(card: CardModel): ManifestDoc | null {
    const group = this.group(card.plugin);
    return group ? resolveRequirement(group, card.version) : null;
  }

  hasFieldErrors(): boolean {
    for (const perCard of this.fieldErrors.values()) {
      if (perCard.size > 0) return true;
    }
    return false;
  }

  // -- drag and drop ---------------------------------------------------------

  /** Sections the current drag may land in; empty when nothing drags. */
  private dragTargets(): Section[] {
    const drag = this.dragging;
    if (!drag) return [];
    if (drag.kind === "palette") {
      const manifest = this.group(drag.plugin)
        ?.versions.find((m) => m.version === drag.version);
      return manifest ? allowedSections(manifest) : [];
    }
    const card = this.board.card(drag.instanceId);
    const manifest = card ? this.manifestFor(card) : null;
    return manifest ? allowedSections(manifest) : [...SECTIONS];
  }

  beginDrag(payload: DragPayload): void {
    this.dragging = payload;
    const targets = this.dragTargets();
    for (const section of SECTIONS) {
      const column = this.columnEl(section);
      column?.classList.toggle("drop-disabled", !targets.includes(section));
    }
  }

  endDrag(): void {
    this.dragging = null;
    for (const section of SECTIONS) {
      this.columnEl(section)?.classList.remove("drop-disabled", "drop-hover");
    }
  }

  /**
   * Drop a palette plugin into a column. Returns false (and toasts) when
   * the manifest forbids the section; nothing is added in that case, so
   * the drag visually snaps back.
   */
  dropFromPalette(plugin: string, version: string,
                  section: Section, index?: number): CardModel | null {
    const group = this.group(plugin);
    const manifest = group?.versions.find((m) => m.version === version);
    if (!group || !manifest) {
      this.showToast(`unknown plugin ${plugin}@${version}`);
      return null;
    }
    if (!canDrop(manifest, section)) {
      this.showToast(
        `'${plugin}' is not allowed in the ${section} section`);
      return null;
    }
    const requirement = pickRequirement(group, version);
    const card = this.board.addCard(plugin, requirement, section, index);
    this.renderBoard();
    return card;
  }

  /**
   * Move an existing card. The target index addresses the column as it
   * looks after the card leaves its old slot, matching the server's move
   * semantics. Returns false on a forbidden or out-of-range drop.
   */
  dropCard(instanceId: string, section: Section, index: number): boolean {
    const card = this.board.card(instanceId);
    if (!card) return false;
    const manifest = this.manifestFor(card);
    if (manifest && !canDrop(manifest, section)) {
      this.showToast(
        `'${card.plugin}' is not allowed in the ${section} section`);
      return false;
    }
    try {
      this.board.moveCard(card.section, card.position, section, index);
    } catch (e) {
      this.showToast(e instanceof Error ? e.message : String(e));
      return false;
    }
    this.renderBoard();
    return true;
  }

  // -- server operations -------------------------------------------------------

  /**
   * Serialize and save the board. Fields currently in error block the save
   * before any request is made; server rejections are routed back onto the
   * offending card.
   */
  async save(): Promise<string | null> {
    if (this.hasFieldErrors()) {
      this.showToast("fix the highlighted parameter fields first");
      return null;
    }
    const { pipeline, params } = this.board.serialize();
    try {
      const fingerprint = await this.client.savePipeline(pipeline, params);
      this.board.dirty = false;
      this.board.lastValidation = { fingerprint };
      this.renderBoard();
      return fingerprint;
    } catch (e) {
      if (e instanceof ApiError) {
        this.applyServerError(e);
        return null;
      }
      throw e;
    }
  }

  private applyServerError(error: ApiError): void {
    const cards = this.board.allCards().map((c) => ({
      instanceId: c.instanceId, plugin: c.plugin, section: c.section,
    }));
    const target = resolveErrorCard(cards, error.message);
    if (target.cardId && target.paramName) {
      const card = this.board.card(target.cardId);
      if (card) card.expanded = true;
    }
    this.board.lastValidation = {
      errorKind: error.kind,
      errorMessage: error.message,
      errorCardId: target.cardId,
      errorParam: target.paramName,
    };
    this.renderBoard();
  }

  async loadPipeline(fingerprint: string): Promise<void> {
    const stored = await this.client.getPipeline(fingerprint);
    this.board = BoardModel.deserialize(stored.pipeline, stored.params);
    this.board.lastValidation = { fingerprint: stored.fingerprint };
    this.fieldErrors.clear();
    this.renderBoard();
  }

  /** Save if needed, then enqueue a run and poll it to a terminal status. */
  async launchRun(dataset: string, seed: number): Promise<RunRecordDoc | null> {
    let fingerprint = this.board.lastValidation?.fingerprint;
    if (this.board.dirty || !fingerprint) {
      fingerprint = (await this.save()) ?? undefined;
      if (!fingerprint) return null;
    }
    let runId: string;
    try {
      runId = await this.client.enqueueRun({ fingerprint, dataset, seed });
    } catch (e) {
      if (e instanceof ApiError) {
        this.showToast(`run rejected: ${e.message}`);
        return null;
      }
      throw e;
    }
    this.selectedRuns.add(runId);
    const record = await pollRun(
      (id) => this.client.getRun(id), runId,
      {
        sleep: this.options.sleep,
        onUpdate: (r) => {
          this.upsertRun(r);
          this.renderRuns();
        },
      });
    this.renderRuns();
    return record;
  }

  private upsertRun(record: RunRecordDoc): void {
    const at = this.runs.findIndex((r) => r.run_id === record.run_id);
    if (at >= 0) this.runs[at] = record;
    else this.runs.unshift(record);
  }

  // -- rendering ---------------------------------------------------------------

  render(): void {
    this.root.innerHTML = "";
    this.root.appendChild(this.buildToolbar());
    const banner = document.createElement("div");
    banner.className = "banner";
    banner.hidden = true;
    this.root.appendChild(banner);

    const layout = document.createElement("div");
    layout.className = "layout";
    layout.appendChild(this.buildPalette());
    const boardEl = document.createElement("div");
    boardEl.className = "board";
    layout.appendChild(boardEl);
    layout.appendChild(this.buildRunPanel());
    this.root.appendChild(layout);

    const toasts = document.createElement("div");
    toasts.className = "toast-area";
    this.root.appendChild(toasts);

    this.renderBoard();
    this.renderRuns();
  }

  private columnEl(section: Section): HTMLElement | null {
    return this.root.querySelector(`.column[data-section="${section}"]`);
  }

  renderBoard(): void {
    const boardEl = this.root.querySelector<HTMLElement>(".board");
    if (!boardEl) return;
    boardEl.innerHTML = "";
    for (const section of SECTIONS) {
      boardEl.appendChild(this.buildColumn(section));
    }
    this.syncChrome();
  }

  /** Toolbar chrome that tracks board state: id, dirty flag, banner. */
  private syncChrome(): void {
    const chip = this.root.querySelector<HTMLElement>(".fingerprint-chip");
    if (chip) {
      const v = this.board.lastValidation;
      if (v?.fingerprint) {
        chip.textContent = `saved ${v.fingerprint.slice(0, 12)}`;
        chip.dataset.fingerprint = v.fingerprint;
        chip.classList.remove("chip-dirty");
      } else {
        chip.textContent = this.board.dirty ? "unsaved changes" : "not saved yet";
        delete chip.dataset.fingerprint;
        chip.classList.add("chip-dirty");
      }
    }
    const banner = this.root.querySelector<HTMLElement>(".banner");
    if (banner) {
      const v = this.board.lastValidation;
      const boardLevel = v?.errorMessage && !v.errorCardId;
      banner.hidden = !boardLevel;
      banner.textContent = boardLevel ? `${v!.errorKind}: ${v!.errorMessage}` : "";
    }
    const idInput = this.root.querySelector<HTMLInputElement>(".pipeline-id");
    if (idInput && idInput.value !== this.board.pipelineId) {
      idInput.value = this.board.pipelineId;
    }
  }

  private buildToolbar(): HTMLElement {
    const bar = document.createElement("header");
    bar.className = "topbar";

    const title = document.createElement("h1");
    title.textContent = "Pipeline Builder";
    bar.appendChild(title);

    const idInput = document.createElement("input");
    idInput.className = "pipeline-id";
    idInput.value = this.board.pipelineId;
    idInput.title = "pipeline id";
    idInput.addEventListener("input", () => {
      this.board.pipelineId = idInput.value;
      this.board.dirty = true;
      this.board.lastValidation = null;
      this.syncChrome();
    });
    bar.appendChild(idInput);

    const save = document.createElement("button");
    save.className = "save-btn";
    save.textContent = "Save";
    save.addEventListener("click", () => { void this.save(); });
    bar.appendChild(save);

    const chip = document.createElement("span");
    chip.className = "fingerprint-chip chip-dirty";
    chip.textContent = "not saved yet";
    bar.appendChild(chip);

    const loadBtn = document.createElement("button");
    loadBtn.className = "load-btn";
    loadBtn.textContent = "Load saved…";
    loadBtn.addEventListener("click", () => { void this.showStored(); });
    bar.appendChild(loadBtn);

    return bar;
  }

  private async showStored(): Promise<void> {
    const stored = await this.client.listPipelines();
    if (stored.length === 0) {
      this.showToast("no stored pipelines yet");
      return;
    }
    let picker = this.root.querySelector<HTMLElement>(".stored-list");
    picker?.remove();
    picker = document.createElement("div");
    picker.className = "stored-list";
    for (const doc of stored) {
      const row = document.createElement("button");
      row.className = "stored-row";
      row.dataset.fingerprint = doc.fingerprint;
      row.textContent = `${doc.pipeline.id}  (${doc.fingerprint.slice(0, 12)})`;
      row.addEventListener("click", () => {
        picker!.remove();
        void this.loadPipeline(doc.fingerprint);
      });
      picker.appendChild(row);
    }
    this.root.querySelector(".topbar")?.appendChild(picker);
  }

  // -- palette -----------------------------------------------------------------

  private buildPalette(): HTMLElement {
    const palette = document.createElement("aside");
    palette.className = "palette";
    for (const [kind, groups] of catalogByKind(this.groups)) {
      const heading = document.createElement("h3");
      heading.className = "palette-kind";
      heading.textContent = kind;
      palette.appendChild(heading);
      for (const group of groups) {
        palette.appendChild(this.buildPaletteItem(group));
      }
    }
    return palette;
  }

  private buildPaletteItem(group: PluginGroup): HTMLElement {
    const item = document.createElement("div");
    item.className = "palette-item";
    item.dataset.plugin = group.name;
    const droppable = group.kind === "transform";
    item.draggable = droppable;
    if (!droppable) item.classList.add("palette-static");

    const name = document.createElement("span");
    name.className = "palette-name";
    name.textContent = group.name;
    item.appendChild(name);

    let versionPick = () => group.versions[0].version;
    if (group.versions.length > 1) {
      const select = document.createElement("select");
      select.className = "palette-version";
      for (const m of group.versions) {
        const option = document.createElement("option");
        option.value = m.version;
        option.textContent = m.version;
        select.appendChild(option);
      }
      select.value = group.versions[0].version; // default to highest
      item.appendChild(select);
      versionPick = () => select.value;
    } else {
      const version = document.createElement("span");
      version.className = "palette-single-version";
      version.textContent = group.versions[0].version;
      item.appendChild(version);
    }

    const scopes = document.createElement("span");
    scopes.className = "palette-scopes";
    scopes.textContent = droppable
      ? group.versions[0].scopes.join(" · ")
      : group.kind;
    item.appendChild(scopes);

    if (droppable) {
      item.addEventListener("dragstart", (event) => {
        this.beginDrag({
          kind: "palette", plugin: group.name, version: versionPick(),
        });
        try {
          (event as DragEvent).dataTransfer?.setData("text/plain", group.name);
        } catch {
          // happy-dom drags carry no dataTransfer; state above is enough
        }
      });
      item.addEventListener("dragend", () => this.endDrag());
    }
    return item;
  }

  // -- board columns -------------------------------------------------------------

  private buildColumn(section: Section): HTMLElement {
    const column = document.createElement("section");
    column.className = "column";
    column.dataset.section = section;

    const title = document.createElement("h2");
    title.className = "column-title";
    title.textContent = section;
    column.appendChild(title);

    const cards = document.createElement("div");
    cards.className = "column-cards";
    for (const card of this.board.columns[section]) {
      cards.appendChild(this.buildCard(card));
    }
    column.appendChild(cards);

    column.addEventListener("dragover", (event) => {
      if (this.dragging && this.dragTargets().includes(section)) {
        event.preventDefault();
        column.classList.add("drop-hover");
      }
    });
    column.addEventListener("dragleave", () => {
      column.classList.remove("drop-hover");
    });
    column.addEventListener("drop", (event) => {
      event.preventDefault();
      column.classList.remove("drop-hover");
      const payload = this.dragging;
      this.endDrag();
      if (!payload) return;
      const index = this.dropIndex(cards, (event as DragEvent).clientY ?? 0,
                                   payload, section);
      if (payload.kind === "palette") {
        this.dropFromPalette(payload.plugin, payload.version, section, index);
      } else {
        this.dropCard(payload.instanceId, section, index);
      }
    });
    return column;
  }

  /**
   * Insertion index from the pointer position. For a card moving within
   * its own column the index addresses the column after removal, so slots
   * below the card's old place shift up by one.
   */
  private dropIndex(cardsEl: HTMLElement, clientY: number,
                    payload: DragPayload, section: Section): number {
    const els = [...cardsEl.querySelectorAll<HTMLElement>(".card")];
    let slot = els.length;
    for (let i = 0; i < els.length; i++) {
      const rect = els[i].getBoundingClientRect();
      if (rect.height > 0 && clientY < rect.top + rect.height / 2) {
        slot = i;
        break;
      }
    }
    if (payload.kind === "card") {
      const moving = this.board.card(payload.instanceId);
      if (moving && moving.section === section && slot > moving.position) {
        slot -= 1;
      }
    }
    return slot;
  }

  private buildCard(card: CardModel): HTMLElement {
    const el = document.createElement("div");
    el.className = "card";
    el.dataset.instanceId = card.instanceId;
    el.draggable = true;

    const manifest = this.manifestFor(card);
    const head = document.createElement("div");
    head.className = "card-head";

    const title = document.createElement("span");
    title.className = "card-title";
    title.textContent = card.plugin;
    head.appendChild(title);

    const version = document.createElement("span");
    version.className = "card-version";
    version.textContent = manifest
      ? `${card.version} → ${manifest.version}`
      : `${card.version} (unresolved)`;
    head.appendChild(version);

    const id = document.createElement("span");
    id.className = "card-id";
    id.textContent = `#${card.instanceId}`;
    head.appendChild(id);

    const expand = document.createElement("button");
    expand.className = "expand-btn";
    expand.textContent = card.expanded ? "▴" : "▾";
    expand.addEventListener("click", () => {
      card.expanded = !card.expanded;
      this.renderBoard();
    });
    head.appendChild(expand);

    const remove = document.createElement("button");
    remove.className = "remove-btn";
    remove.textContent = "×";
    remove.addEventListener("click", () => {
      this.board.removeCard(card.instanceId);
      this.fieldErrors.delete(card.instanceId);
      this.renderBoard();
    });
    head.appendChild(remove);
    el.appendChild(head);

    const validation = this.board.lastValidation;
    const flagged = validation?.errorCardId === card.instanceId;
    if (flagged) {
      el.classList.add("card-error");
      const msg = document.createElement("div");
      msg.className = "card-error-msg";
      msg.textContent = `${validation!.errorKind}: ${validation!.errorMessage}`;
      el.appendChild(msg);
    }

    if (card.expanded) {
      el.appendChild(this.buildCardBody(card, manifest, flagged));
    }

    el.addEventListener("dragstart", (event) => {
      event.stopPropagation();
      this.beginDrag({ kind: "card", instanceId: card.instanceId });
      try {
        (event as DragEvent).dataTransfer?.setData("text/plain", card.instanceId);
      } catch {
        // no dataTransfer outside real browsers
      }
    });
    el.addEventListener("dragend", () => this.endDrag());
    return el;
  }

  private buildCardBody(card: CardModel, manifest: ManifestDoc | null,
                        flagged: boolean): HTMLElement {
    const body = document.createElement("div");
    body.className = "card-body";

    const idRow = document.createElement("div");
    idRow.className = "card-id-row";
    const idLabel = document.createElement("label");
    idLabel.textContent = "id";
    idRow.appendChild(idLabel);
    const idInput = document.createElement("input");
    idInput.className = "id-input";
    idInput.value = card.instanceId;
    idInput.addEventListener("change", () => {
      try {
        this.board.renameCard(card.instanceId, idInput.value.trim());
        this.renderBoard();
      } catch (e) {
        this.showToast(e instanceof Error ? e.message : String(e));
        idInput.value = card.instanceId;
      }
    });
    idRow.appendChild(idInput);
    body.appendChild(idRow);

    if (!manifest) {
      const warn = document.createElement("div");
      warn.className = "param-none";
      warn.textContent = "no installed version satisfies this requirement";
      body.appendChild(warn);
      return body;
    }

    const form = renderParamForm(manifest.params, card.params, {
      setParam: (name, value) => {
        this.board.setParam(card.instanceId, name, value);
        this.clearFieldError(card.instanceId, name);
        this.syncChrome();
      },
      clearParam: (name) => {
        this.board.clearParam(card.instanceId, name);
        this.clearFieldError(card.instanceId, name);
        this.syncChrome();
      },
      setFieldError: (name, message) => {
        if (message === null) this.clearFieldError(card.instanceId, name);
        else this.setFieldError(card.instanceId, name, message);
      },
    });
    const validation = this.board.lastValidation;
    if (flagged && validation?.errorParam) {
      flagServerError(form, validation.errorParam, validation.errorMessage ?? "");
    }
    body.appendChild(form);
    return body;
  }

  private setFieldError(cardId: string, name: string, message: string): void {
    let perCard = this.fieldErrors.get(cardId);
    if (!perCard) {
      perCard = new Map();
      this.fieldErrors.set(cardId, perCard);
    }
    perCard.set(name, message);
    this.syncSaveButton();
  }

  private clearFieldError(cardId: string, name: string): void {
    this.fieldErrors.get(cardId)?.delete(name);
    this.syncSaveButton();
  }

  private syncSaveButton(): void {
    const save = this.root.querySelector<HTMLButtonElement>(".save-btn");
    if (save) save.classList.toggle("save-blocked", this.hasFieldErrors());
  }

  // -- run panel ----------------------------------------------------------------

  private buildRunPanel(): HTMLElement {
    const panel = document.createElement("aside");
    panel.className = "runpanel";

    const heading = document.createElement("h2");
    heading.textContent = "Runs";
    panel.appendChild(heading);

    const controls = document.createElement("div");
    controls.className = "run-controls";

    const datasetSelect = document.createElement("select");
    datasetSelect.className = "dataset-select";
    for (const d of this.datasets) {
      const option = document.createElement("option");
      option.value = d.name;
      option.textContent = d.name;
      datasetSelect.appendChild(option);
    }
    controls.appendChild(datasetSelect);

    const seed = document.createElement("input");
    seed.className = "seed-input";
    seed.type = "text";
    seed.value = "0";
    seed.title = "seed";
    controls.appendChild(seed);

    const runBtn = document.createElement("button");
    runBtn.className = "run-btn";
    runBtn.textContent = "Save & run";
    runBtn.addEventListener("click", () => {
      const dataset = datasetSelect.value;
      if (!dataset) {
        this.showToast("no dataset roots configured on the server");
        return;
      }
      const seedValue = Number(seed.value);
      if (!Number.isInteger(seedValue) || seedValue < 0) {
        this.showToast("seed must be a non-negative integer");
        return;
      }
      void this.launchRun(dataset, seedValue);
    });
    controls.appendChild(runBtn);
    panel.appendChild(controls);

    const runsTable = document.createElement("div");
    runsTable.className = "runs-table";
    panel.appendChild(runsTable);

    const compareHead = document.createElement("h2");
    compareHead.textContent = "Compare";
    panel.appendChild(compareHead);

    const metricSelect = document.createElement("select");
    metricSelect.className = "metric-select";
    metricSelect.addEventListener("change", () => {
      this.metric = metricSelect.value;
      this.renderCompare();
    });
    panel.appendChild(metricSelect);

    const compareArea = document.createElement("div");
    compareArea.className = "compare-area";
    panel.appendChild(compareArea);
    return panel;
  }

  renderRuns(): void {
    const host = this.root.querySelector<HTMLElement>(".runs-table");
    if (!host) return;
    host.innerHTML = "";
    const table = document.createElement("table");
    const head = document.createElement("tr");
    for (const label of ["", "run", "status", this.metric]) {
      const th = document.createElement("th");
      th.textContent = label;
      head.appendChild(th);
    }
    table.appendChild(head);

    for (const record of this.runs) {
      const row = document.createElement("tr");
      row.className = "run-row";
      row.dataset.runId = record.run_id;
      row.dataset.status = record.status;

      const pickCell = document.createElement("td");
      const pick = document.createElement("input");
      pick.type = "checkbox";
      pick.checked = this.selectedRuns.has(record.run_id);
      pick.addEventListener("change", () => {
        if (pick.checked) this.selectedRuns.add(record.run_id);
        else this.selectedRuns.delete(record.run_id);
        this.renderCompare();
      });
      pickCell.appendChild(pick);
      row.appendChild(pickCell);

      const idCell = document.createElement("td");
      idCell.textContent = record.run_id.slice(0, 10);
      idCell.title = record.run_id;
      row.appendChild(idCell);

      const statusCell = document.createElement("td");
      statusCell.className = `status-${record.status}`;
      statusCell.textContent = record.status;
      row.appendChild(statusCell);

      const metricCell = document.createElement("td");
      metricCell.textContent = formatCell(record.metrics?.[this.metric]);
      row.appendChild(metricCell);
      table.appendChild(row);
    }
    host.appendChild(table);

    this.syncMetricChoices();
    this.renderCompare();
  }

  private syncMetricChoices(): void {
    const select = this.root.querySelector<HTMLSelectElement>(".metric-select");
    if (!select) return;
    const known = new Set<string>([this.metric]);
    for (const r of this.runs) {
      for (const name of Object.keys(r.metrics ?? {})) known.add(name);
    }
    const current = this.metric;
    select.innerHTML = "";
    for (const name of [...known].sort()) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      select.appendChild(option);
    }
    select.value = current;
  }

  renderCompare(): void {
    const host = this.root.querySelector<HTMLElement>(".compare-area");
    if (!host) return;
    host.innerHTML = "";
    const chosen = this.runs.filter((r) => this.selectedRuns.has(r.run_id));
    if (chosen.length === 0) return;
    if (!chosen.some((r) => this.metric in (r.metrics ?? {}))) {
      const note = document.createElement("div");
      note.className = "compare-empty";
      note.textContent = `no selected run recorded '${this.metric}' yet`;
      host.appendChild(note);
      return;
    }

    const report = buildCompareTable(chosen, this.metric);
    for (const warning of report.warnings) {
      const div = document.createElement("div");
      div.className = "compare-warning";
      div.textContent = warning;
      host.appendChild(div);
    }
    const table = document.createElement("table");
    table.className = "compare-table";
    const head = document.createElement("tr");
    for (const label of ["run", report.metric, "seed",
                         ...report.paramColumns, "note"]) {
      const th = document.createElement("th");
      th.textContent = label;
      head.appendChild(th);
    }
    table.appendChild(head);
    for (const row of report.rows) {
      const tr = document.createElement("tr");
      tr.className = "compare-row";
      if (row.note.startsWith("failed")) tr.classList.add("row-failed");
      const cells = [
        row.runId.slice(0, 10),
        row.value === null ? "-" : formatCell(row.value),
        String(row.seed),
        ...report.paramColumns.map((c) => formatCell(row.params[c])),
        row.note,
      ];
      for (const text of cells) {
        const td = document.createElement("td");
        td.textContent = text;
        tr.appendChild(td);
      }
      table.appendChild(tr);
    }
    host.appendChild(table);
  }

  // -- feedback -------------------------------------------------------------------

  showToast(message: string): void {
    const area = this.root.querySelector<HTMLElement>(".toast-area");
    if (!area) return;
    const toast = document.createElement("div");
    toast.className = "toast";
    toast.textContent = message;
    area.appendChild(toast);
    setTimeout(() => toast.remove(), 4000);
  }
}

export function bootstrap(): App | null {
  const root = document.getElementById("app");
  if (!root) return null;
  const app = new App(root, new ApiClient(""));
  void app.init();
  return app;
}

if (typeof document !== "undefined") bootstrap();
