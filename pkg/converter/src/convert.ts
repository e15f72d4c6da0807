import * as fs from "node:fs";
import * as path from "node:path";

import { DatasetDescriptor } from "./descriptors.js";
import { parseEdgeFile, parseNodeFile, readFixedSplits } from "./geomgcn.js";

export interface CanonicalDataset {
  name: string;
  n: number;
  f: number;
  C: number;
  edges: [number, number][];
  features: number[][];
  labels: number[];
  splits: { train: number[]; val: number[]; test: number[] }[];
}

export interface ConversionMeta {
  source_edge_count: number;
  undirected_edge_count: number;
  self_loops_dropped: number;
  duplicates_merged: number;
  normalization: string;
  class_count_discrepancy: boolean;
  class_count_note?: string;
  label_values: number[];
}

export interface ConversionResult {
  dataset: CanonicalDataset;
  meta: ConversionMeta;
}

export function convertDataset(
  desc: DatasetDescriptor,
  srcDir: string,
  splitsDir?: string,
): ConversionResult {
  const nodeFile = path.join(srcDir, "out1_node_feature_label.txt");
  const edgeFile = path.join(srcDir, "out1_graph_edges.txt");
  const raw = parseNodeFile(nodeFile);
  const rawEdges = parseEdgeFile(edgeFile);

  // map possibly sparse node ids onto 0..n-1 in ascending id order
  const sortedIds = [...raw.ids].sort((a, b) => a - b);
  const indexOf = new Map<number, number>(sortedIds.map((id, idx) => [id, idx]));
  if (indexOf.size !== raw.ids.length) {
    throw new Error(`duplicate node ids in ${nodeFile}`);
  }
  const n = raw.ids.length;

  // features in node-file order -> canonical order
  const features: number[][] = new Array(n);
  const labelsRaw: number[] = new Array(n);
  for (let row = 0; row < n; row++) {
    const idx = indexOf.get(raw.ids[row])!;
    let vec: number[];
    if (desc.indexFeatures) {
      vec = new Array(desc.indexFeatures).fill(0);
      for (const active of raw.features[row]) {
        if (active < 0 || active >= desc.indexFeatures) {
          throw new Error(`feature index ${active} outside width ${desc.indexFeatures}`);
        }
        vec[active] = 1;
      }
    } else {
      vec = raw.features[row];
    }
    features[idx] = vec;
    labelsRaw[idx] = raw.labels[row];
  }
  const width = features[0].length;
  for (const vec of features) {
    if (vec.length !== width) throw new Error("inconsistent feature widths");
  }
  if (desc.rowNormalize) {
    for (const vec of features) {
      const s = vec.reduce((a, b) => a + b, 0);
      if (s !== 0) for (let j = 0; j < vec.length; j++) vec[j] = vec[j] / s;
    }
  }

  // labels re-indexed to 0-based contiguous in ascending source order
  const labelValues = [...new Set(labelsRaw)].sort((a, b) => a - b);
  const labelIndex = new Map(labelValues.map((v, i) => [v, i]));
  const labels = labelsRaw.map((v) => labelIndex.get(v)!);

  // symmetrize + dedup, dropping self-loops
  let selfLoops = 0;
  const seen = new Set<number>();
  const undirected: [number, number][] = [];
  for (const [a, b] of rawEdges) {
    const u = indexOf.get(a);
    const v = indexOf.get(b);
    if (u === undefined || v === undefined) {
      throw new Error(`edge (${a}, ${b}) references an unknown node id`);
    }
    if (u === v) {
      selfLoops += 1;
      continue;
    }
    const key = Math.min(u, v) * n + Math.max(u, v);
    if (!seen.has(key)) {
      seen.add(key);
      undirected.push([Math.min(u, v), Math.max(u, v)]);
    }
  }
  undirected.sort((e1, e2) => e1[0] - e2[0] || e1[1] - e2[1]);

  const splits = readFixedSplits(splitsDir ?? srcDir, desc.name, n);

  const meta: ConversionMeta = {
    source_edge_count: rawEdges.length,
    undirected_edge_count: undirected.length,
    self_loops_dropped: selfLoops,
    duplicates_merged: rawEdges.length - selfLoops - undirected.length,
    normalization: desc.rowNormalize ? "row-sum" : "none",
    class_count_discrepancy: false,
    label_values: labelValues,
  };

  // hard gates against the published statistics
  const problems: string[] = [];
  if (n !== desc.nodes) {
    problems.push(`nodes: got ${n}, expected ${desc.nodes}`);
  }
  if (rawEdges.length !== desc.edges && undirected.length !== desc.edges) {
    problems.push(
      `edges: expected ${desc.edges} under some counting convention, got ` +
        `${rawEdges.length} source lines / ${undirected.length} undirected`,
    );
  }
  const C = labelValues.length;
  if (C !== desc.classes) {
    if (desc.swappedClassCount !== undefined && C === desc.swappedClassCount) {
      meta.class_count_discrepancy = true;
      meta.class_count_note =
        `published table prints ${desc.classes} classes but the source ` +
        `distribution carries ${C}; surfaced for review, not silently fixed`;
    } else {
      problems.push(`classes: got ${C}, expected ${desc.classes}`);
    }
  }
  if (problems.length > 0) {
    throw new Error(`conversion gate failed for ${desc.name}:\n  ${problems.join("\n  ")}`);
  }

  return {
    dataset: {
      name: desc.name,
      n,
      f: width,
      C,
      edges: undirected,
      features,
      labels,
      splits,
    },
    meta,
  };
}

export function writeConversion(result: ConversionResult, outPath: string): void {
  fs.mkdirSync(path.dirname(outPath), { recursive: true });
  fs.writeFileSync(outPath, JSON.stringify(result.dataset));
  fs.writeFileSync(outPath.replace(/\.json$/, "") + ".meta.json", JSON.stringify(result.meta, null, 2));
}
