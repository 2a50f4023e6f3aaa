// The board: three ordered card columns that serialize to exactly the
// pipeline document + params file the server validates. Moving a card
// reproduces the server's move semantics (remove first, then insert, so a
// move to the end of its own column targets index length-1), and every
// mutation renumbers positions so they stay contiguous from 0.

import type { ParamsDoc, PipelineDoc, Section, StepRef } from "./types.js";
import { SECTIONS } from "./types.js";

export interface CardModel {
  instanceId: string;
  plugin: string;
  version: string; // requirement string, preserved verbatim through round trips
  section: Section;
  position: number;
  params: Record<string, unknown>; // explicitly set values only
  expanded: boolean;
}

export interface ValidationResult {
  fingerprint?: string;
  errorKind?: string;
  errorMessage?: string;
  errorCardId?: string | null;
  errorParam?: string;
}

export class BoardModel {
  pipelineId: string;
  columns: Record<Section, CardModel[]>;
  dirty = false;
  lastValidation: ValidationResult | null = null;

  constructor(pipelineId = "board") {
    this.pipelineId = pipelineId;
    this.columns = { sample: [], dataset: [], batch: [] };
  }

  allCards(): CardModel[] {
    return SECTIONS.flatMap((s) => this.columns[s]);
  }

  card(instanceId: string): CardModel | undefined {
    return this.allCards().find((c) => c.instanceId === instanceId);
  }

  /** Unique id derived from the plugin name: mfcc, mfcc_2, mfcc_3, ... */
  freshInstanceId(plugin: string): string {
    const taken = new Set(this.allCards().map((c) => c.instanceId));
    if (!taken.has(plugin)) return plugin;
    for (let n = 2; ; n++) {
      const candidate = `${plugin}_${n}`;
      if (!taken.has(candidate)) return candidate;
    }
  }

  addCard(plugin: string, version: string, section: Section,
          index?: number): CardModel {
    const column = this.columns[section];
    const at = index === undefined ? column.length : index;
    if (at < 0 || at > column.length) {
      throw new RangeError(
        `to index ${at} out of range for section '${section}' of length ${column.length}`);
    }
    const card: CardModel = {
      instanceId: this.freshInstanceId(plugin),
      plugin, version, section,
      position: at,
      params: {},
      expanded: false,
    };
    column.splice(at, 0, card);
    this.renumber();
    this.markDirty();
    return card;
  }

  /**
   * Relocate one card; all other order preserved. The target index
   * addresses the column as it looks after removal.
   */
  moveCard(fromSection: Section, fromIndex: number,
           toSection: Section, toIndex: number): void {
    if (!SECTIONS.includes(fromSection) || !SECTIONS.includes(toSection)) {
      throw new RangeError(`unknown section '${fromSection}' or '${toSection}'`);
    }
    const src = this.columns[fromSection];
    if (fromIndex < 0 || fromIndex >= src.length) {
      throw new RangeError(
        `from index ${fromIndex} out of range for section '${fromSection}' of length ${src.length}`);
    }
    const [card] = src.splice(fromIndex, 1);
    const dst = this.columns[toSection];
    if (toIndex < 0 || toIndex > dst.length) {
      src.splice(fromIndex, 0, card); // restore before reporting
      throw new RangeError(
        `to index ${toIndex} out of range for section '${toSection}' of length ${dst.length}`);
    }
    dst.splice(toIndex, 0, card);
    card.section = toSection;
    this.renumber();
    this.markDirty();
  }

  removeCard(instanceId: string): void {
    for (const section of SECTIONS) {
      const column = this.columns[section];
      const at = column.findIndex((c) => c.instanceId === instanceId);
      if (at >= 0) {
        column.splice(at, 1);
        this.renumber();
        this.markDirty();
        return;
      }
    }
    throw new RangeError(`no card with instance id '${instanceId}'`);
  }

  renameCard(instanceId: string, newId: string): void {
    const card = this.card(instanceId);
    if (!card) throw new RangeError(`no card with instance id '${instanceId}'`);
    if (newId === instanceId) return;
    if (!newId.trim()) throw new RangeError("instance id must not be empty");
    if (this.card(newId)) {
      throw new RangeError(`instance id '${newId}' is already taken`);
    }
    card.instanceId = newId;
    this.markDirty();
  }

  setParam(instanceId: string, name: string, value: unknown): void {
    const card = this.card(instanceId);
    if (!card) throw new RangeError(`no card with instance id '${instanceId}'`);
    card.params[name] = value;
    this.markDirty();
  }

  /** Reverting to the manifest default means dropping the explicit entry. */
  clearParam(instanceId: string, name: string): void {
    const card = this.card(instanceId);
    if (!card) throw new RangeError(`no card with instance id '${instanceId}'`);
    delete card.params[name];
    this.markDirty();
  }

  serialize(): { pipeline: PipelineDoc; params: ParamsDoc } {
    const ref = (c: CardModel): StepRef => ({
      plugin: c.plugin, version: c.version, instance_id: c.instanceId,
    });
    const params: ParamsDoc = {};
    for (const card of this.allCards()) {
      if (Object.keys(card.params).length > 0) {
        params[card.instanceId] = { ...card.params };
      }
    }
    return {
      pipeline: {
        id: this.pipelineId,
        sample: this.columns.sample.map(ref),
        dataset: this.columns.dataset.map(ref),
        batch: this.columns.batch.map(ref),
      },
      params,
    };
  }

  static deserialize(pipeline: PipelineDoc, params: ParamsDoc = {}): BoardModel {
    const board = new BoardModel(pipeline.id);
    for (const section of SECTIONS) {
      for (const ref of pipeline[section] ?? []) {
        board.columns[section].push({
          instanceId: ref.instance_id,
          plugin: ref.plugin,
          version: ref.version,
          section,
          position: 0,
          params: { ...(params[ref.instance_id] ?? {}) },
          expanded: false,
        });
      }
    }
    board.renumber();
    board.dirty = false;
    return board;
  }

  private renumber(): void {
    for (const section of SECTIONS) {
      this.columns[section].forEach((card, i) => {
        card.position = i;
        card.section = section;
      });
    }
  }

  private markDirty(): void {
    this.dirty = true;
    this.lastValidation = null;
  }
}
