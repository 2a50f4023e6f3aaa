import { describe, expect, it } from "vitest";

import { BoardModel } from "../src/board.js";
import type { Section } from "../src/types.js";
import { SECTIONS } from "../src/types.js";

function ids(board: BoardModel, section: Section): string[] {
  return board.columns[section].map((c) => c.instanceId);
}

function seeded(seed: number): () => number {
  // mulberry32; deterministic across runs
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("adding cards", () => {
  it("derives unique instance ids from the plugin name", () => {
    const board = new BoardModel();
    expect(board.addCard("mfcc", "^1", "sample").instanceId).toBe("mfcc");
    expect(board.addCard("mfcc", "^1", "sample").instanceId).toBe("mfcc_2");
    expect(board.addCard("mfcc", "^1", "batch").instanceId).toBe("mfcc_3");
  });

  it("appends by default and honors an explicit index", () => {
    const board = new BoardModel();
    board.addCard("a", "^1", "sample");
    board.addCard("b", "^1", "sample");
    board.addCard("c", "^1", "sample", 1);
    expect(ids(board, "sample")).toEqual(["a", "c", "b"]);
  });

  it("rejects an out-of-range insertion index", () => {
    const board = new BoardModel();
    board.addCard("a", "^1", "sample");
    expect(() => board.addCard("b", "^1", "sample", 3)).toThrowError(
      "to index 3 out of range for section 'sample' of length 1");
  });

  it("keeps positions contiguous from 0", () => {
    const board = new BoardModel();
    for (const name of ["a", "b", "c", "d"]) board.addCard(name, "^1", "sample");
    board.removeCard("b");
    expect(board.columns.sample.map((c) => c.position)).toEqual([0, 1, 2]);
  });
});

describe("moving cards", () => {
  function threeCards(): BoardModel {
    const board = new BoardModel();
    for (const name of ["a", "b", "c"]) board.addCard(name, "^1", "sample");
    return board;
  }

  it("targets the column as it looks after removal", () => {
    const board = threeCards();
    // moving the head to the end of its own column: length after removal is 2
    board.moveCard("sample", 0, "sample", 2);
    expect(ids(board, "sample")).toEqual(["b", "c", "a"]);
  });

  it("moves across sections preserving the rest of the order", () => {
    const board = threeCards();
    board.addCard("x", "^1", "batch");
    board.moveCard("sample", 1, "batch", 0);
    expect(ids(board, "sample")).toEqual(["a", "c"]);
    expect(ids(board, "batch")).toEqual(["b", "x"]);
    expect(board.card("b")!.section).toBe("batch");
    expect(board.card("b")!.position).toBe(0);
  });

  it("no-ops cleanly when dropped back on its own slot", () => {
    const board = threeCards();
    board.moveCard("sample", 1, "sample", 1);
    expect(ids(board, "sample")).toEqual(["a", "b", "c"]);
  });

  it("rejects an out-of-range source index", () => {
    const board = threeCards();
    expect(() => board.moveCard("sample", 5, "sample", 0)).toThrowError(
      "from index 5 out of range for section 'sample' of length 3");
  });

  it("rejects an out-of-range target index and restores the card", () => {
    const board = threeCards();
    expect(() => board.moveCard("sample", 0, "batch", 1)).toThrowError(
      "to index 1 out of range for section 'batch' of length 0");
    expect(ids(board, "sample")).toEqual(["a", "b", "c"]);
    expect(board.columns.sample.map((c) => c.position)).toEqual([0, 1, 2]);
  });

  it("marks the board dirty and clears the last validation", () => {
    const board = threeCards();
    board.dirty = false;
    board.lastValidation = { fingerprint: "f".repeat(64) };
    board.moveCard("sample", 0, "sample", 1);
    expect(board.dirty).toBe(true);
    expect(board.lastValidation).toBeNull();
  });
});

describe("renaming and params", () => {
  it("renames a card, refusing duplicates and empty ids", () => {
    const board = new BoardModel();
    board.addCard("mfcc", "^1", "sample");
    board.addCard("pad_trim", "^1", "sample");
    board.renameCard("mfcc", "feats");
    expect(board.card("feats")).toBeDefined();
    expect(board.card("mfcc")).toBeUndefined();
    expect(() => board.renameCard("feats", "pad_trim")).toThrowError(
      "instance id 'pad_trim' is already taken");
    expect(() => board.renameCard("feats", "  ")).toThrowError(
      "instance id must not be empty");
  });

  it("serializes only explicitly set params", () => {
    const board = new BoardModel("p");
    board.addCard("mfcc", "^1", "sample");
    board.setParam("mfcc", "n_mfcc", 12);
    board.addCard("pad_trim", "^1", "sample");
    const { params } = board.serialize();
    expect(params).toEqual({ mfcc: { n_mfcc: 12 } });
    board.clearParam("mfcc", "n_mfcc");
    expect(board.serialize().params).toEqual({});
  });
});

describe("serialization round trips", () => {
  it("keeps order, ids, requirement strings, and params intact", () => {
    const board = new BoardModel("roundtrip");
    board.addCard("pad_trim", "^1", "sample");
    board.addCard("mfcc", "=1.0.0", "sample");
    board.addCard("mean_std_normalize", "^1.0", "dataset");
    board.setParam("mfcc", "n_mfcc", 10);
    const { pipeline, params } = board.serialize();

    const restored = BoardModel.deserialize(pipeline, params);
    expect(restored.serialize()).toEqual({ pipeline, params });
    expect(restored.card("mfcc")!.version).toBe("=1.0.0");
    expect(restored.dirty).toBe(false);
  });

  it("emits the exact document shape the server validates", () => {
    const board = new BoardModel("shape");
    board.addCard("pad_trim", "^1", "sample");
    const { pipeline } = board.serialize();
    expect(pipeline).toEqual({
      id: "shape",
      sample: [{ plugin: "pad_trim", version: "^1", instance_id: "pad_trim" }],
      dataset: [],
      batch: [],
    });
  });
});

describe("random edit storm", () => {
  it("keeps positions contiguous and sections consistent", () => {
    const rand = seeded(0xbeef);
    const board = new BoardModel();
    for (let i = 0; i < 8; i++) {
      board.addCard(`p${i}`, "^1", SECTIONS[Math.floor(rand() * 3)]);
    }
    for (let op = 0; op < 50; op++) {
      const from = SECTIONS[Math.floor(rand() * 3)];
      if (board.columns[from].length === 0) continue;
      const fromIndex = Math.floor(rand() * board.columns[from].length);
      const to = SECTIONS[Math.floor(rand() * 3)];
      const lenAfter = board.columns[to].length - (from === to ? 1 : 0);
      const toIndex = Math.floor(rand() * (lenAfter + 1));
      board.moveCard(from, fromIndex, to, toIndex);

      expect(board.allCards()).toHaveLength(8);
      for (const section of SECTIONS) {
        board.columns[section].forEach((card, i) => {
          expect(card.position).toBe(i);
          expect(card.section).toBe(section);
        });
      }
      const { pipeline } = board.serialize();
      for (const section of SECTIONS) {
        expect(pipeline[section].map((r) => r.instance_id))
          .toEqual(ids(board, section));
      }
    }
  });
});
