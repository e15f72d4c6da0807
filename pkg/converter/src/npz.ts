import { unzipSync } from "fflate";

import { NpyArray, parseNpy } from "./npy.js";

/** Unpack an .npz archive into named arrays ("train_mask", ...). */
export function parseNpz(buf: Uint8Array): Record<string, NpyArray> {
  const entries = unzipSync(buf);
  const out: Record<string, NpyArray> = {};
  for (const [name, payload] of Object.entries(entries)) {
    out[name.replace(/\.npy$/, "")] = parseNpy(payload);
  }
  return out;
}
