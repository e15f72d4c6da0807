#!/usr/bin/env node
/**
 * Usage:
 *   node dist/cli.js convert --name texas --src raw/texas [--splits raw/splits] --out data/real/texas.json
 *   node dist/cli.js audit --file data/real/texas.json
 */

import { auditFile } from "./audit.js";
import { convertDataset, writeConversion } from "./convert.js";
import { DESCRIPTORS } from "./descriptors.js";

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || argv[i + 1] === undefined) {
      throw new Error(`malformed arguments near '${argv[i]}'`);
    }
    out[argv[i].slice(2)] = argv[i + 1];
  }
  return out;
}

function main(): number {
  const [command, ...rest] = process.argv.slice(2);
  if (command === "convert") {
    const args = parseArgs(rest);
    for (const key of ["name", "src", "out"]) {
      if (!args[key]) {
        console.error(`convert: missing --${key}`);
        return 2;
      }
    }
    const desc = DESCRIPTORS[args.name];
    if (!desc) {
      console.error(`unknown dataset '${args.name}'; known: ${Object.keys(DESCRIPTORS).join(", ")}`);
      return 2;
    }
    const result = convertDataset(desc, args.src, args.splits);
    writeConversion(result, args.out);
    console.log(
      `${args.name}: n=${result.dataset.n} undirected_edges=${result.dataset.edges.length} ` +
        `(source lines ${result.meta.source_edge_count}) C=${result.dataset.C} ` +
        `splits=${result.dataset.splits.length} -> ${args.out}`,
    );
    if (result.meta.class_count_discrepancy) {
      console.warn(`note: ${result.meta.class_count_note}`);
    }
    return 0;
  }
  if (command === "audit") {
    const args = parseArgs(rest);
    if (!args.file) {
      console.error("audit: missing --file");
      return 2;
    }
    const report = auditFile(args.file);
    console.log(JSON.stringify(report, null, 2));
    if (report.classes.discrepancy) {
      console.warn(`note: ${report.classes.discrepancy}`);
    }
    return report.passed ? 0 : 1;
  }
  console.error("usage: cli.js <convert|audit> [options]");
  return 2;
}

try {
  process.exit(main());
} catch (err) {
  console.error(String(err instanceof Error ? err.message : err));
  process.exit(1);
}
