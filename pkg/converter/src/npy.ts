/**
 * Minimal .npy parser for the dtypes the split archives actually use:
 * booleans, small ints, and floats in little-endian or byte order '|'.
 */

export interface NpyArray {
  shape: number[];
  data: number[];
}

const MAGIC = "\x93NUMPY";

export function parseNpy(buf: Uint8Array): NpyArray {
  const magic = String.fromCharCode(...buf.subarray(0, 6));
  if (magic !== MAGIC) {
    throw new Error("not an npy payload (bad magic)");
  }
  const major = buf[6];
  let headerLen: number;
  let offset: number;
  if (major === 1) {
    headerLen = buf[8] | (buf[9] << 8);
    offset = 10;
  } else {
    headerLen = buf[8] | (buf[9] << 8) | (buf[10] << 16) | (buf[11] << 24);
    offset = 12;
  }
  const header = new TextDecoder("latin1").decode(buf.subarray(offset, offset + headerLen));
  const descr = matchField(header, "descr");
  const fortran = matchField(header, "fortran_order");
  if (fortran !== "False") {
    throw new Error("fortran-ordered arrays are not supported");
  }
  const shapeText = /'shape'\s*:\s*\(([^)]*)\)/.exec(header);
  if (!shapeText) throw new Error("npy header missing shape");
  const shape = shapeText[1]
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => parseInt(s, 10));
  const count = shape.reduce((a, b) => a * b, 1);
  const body = buf.subarray(offset + headerLen);
  const view = new DataView(body.buffer, body.byteOffset, body.byteLength);
  const data = new Array<number>(count);
  const read = readerFor(descr, view);
  for (let i = 0; i < count; i++) data[i] = read(i);
  return { shape, data };
}

function matchField(header: string, name: string): string {
  const m = new RegExp(`'${name}'\\s*:\\s*('([^']*)'|True|False)`).exec(header);
  if (!m) throw new Error(`npy header missing ${name}`);
  return m[2] !== undefined ? m[2] : m[1];
}

function readerFor(descr: string, view: DataView): (i: number) => number {
  switch (descr) {
    case "|b1":
    case "|u1":
      return (i) => view.getUint8(i);
    case "|i1":
      return (i) => view.getInt8(i);
    case "<i2":
      return (i) => view.getInt16(2 * i, true);
    case "<i4":
      return (i) => view.getInt32(4 * i, true);
    case "<i8":
      return (i) => Number(view.getBigInt64(8 * i, true));
    case "<u4":
      return (i) => view.getUint32(4 * i, true);
    case "<f4":
      return (i) => view.getFloat32(4 * i, true);
    case "<f8":
      return (i) => view.getFloat64(8 * i, true);
    default:
      throw new Error(`unsupported npy dtype ${descr}`);
  }
}
