/**
 * Parsers for the public heterophily-benchmark text distribution:
 * a tab-separated node/feature/label file and a tab-separated edge list,
 * plus ten fixed-split .npz archives per dataset.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { parseNpz } from "./npz.js";

export interface RawNodes {
  ids: number[];
  /** per node: dense feature values, or active indices when indexFeatures */
  features: number[][];
  labels: number[];
}

export function parseNodeFile(filePath: string): RawNodes {
  const lines = fs.readFileSync(filePath, "utf-8").split(/\r?\n/).filter((l) => l.length > 0);
  const out: RawNodes = { ids: [], features: [], labels: [] };
  for (const line of lines) {
    const parts = line.split("\t");
    if (parts.length !== 3) {
      throw new Error(`malformed node line (expected 3 tab-separated fields): ${line.slice(0, 60)}`);
    }
    if (!/^\d+$/.test(parts[0])) continue; // header row
    out.ids.push(parseInt(parts[0], 10));
    out.features.push(parts[1].split(",").map((v) => {
      const x = Number(v);
      if (!Number.isFinite(x)) throw new Error(`bad feature value '${v}'`);
      return x;
    }));
    out.labels.push(parseInt(parts[2], 10));
  }
  return out;
}

export function parseEdgeFile(filePath: string): [number, number][] {
  const lines = fs.readFileSync(filePath, "utf-8").split(/\r?\n/).filter((l) => l.length > 0);
  const edges: [number, number][] = [];
  for (const line of lines) {
    const parts = line.split(/\s+/).filter((p) => p.length > 0);
    if (parts.length < 2 || !/^\d+$/.test(parts[0]) || !/^\d+$/.test(parts[1])) continue; // header
    edges.push([parseInt(parts[0], 10), parseInt(parts[1], 10)]);
  }
  return edges;
}

export interface RawSplit {
  train: number[];
  val: number[];
  test: number[];
}

/** Read the ten fixed split archives `${name}_split_0.6_0.2_${i}.npz`, in index order. */
export function readFixedSplits(dir: string, name: string, nNodes: number): RawSplit[] {
  const splits: RawSplit[] = [];
  for (let i = 0; i < 10; i++) {
    const file = path.join(dir, `${name}_split_0.6_0.2_${i}.npz`);
    if (!fs.existsSync(file)) {
      throw new Error(`missing fixed split archive ${file}`);
    }
    const arrays = parseNpz(fs.readFileSync(file));
    for (const key of ["train_mask", "val_mask", "test_mask"]) {
      if (!(key in arrays)) throw new Error(`${file}: missing array ${key}`);
      if (arrays[key].data.length !== nNodes) {
        throw new Error(`${file}: ${key} has ${arrays[key].data.length} entries for ${nNodes} nodes`);
      }
    }
    const indicesOf = (key: string) =>
      arrays[key].data.reduce<number[]>((acc, v, idx) => {
        if (v !== 0) acc.push(idx);
        return acc;
      }, []);
    splits.push({
      train: indicesOf("train_mask"),
      val: indicesOf("val_mask"),
      test: indicesOf("test_mask"),
    });
  }
  return splits;
}
