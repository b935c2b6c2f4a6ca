/** Minimal decoder for 8-bit grayscale, non-interlaced PNGs.
 *
 * This covers exactly what the byte-image converter emits (plus the
 * standard per-row filters, so externally produced grayscale PNGs load
 * too). Anything else — palette, RGB, 16-bit, interlacing, or a failed
 * CRC — raises CorruptImage naming the offending file.
 */

import { inflateSync } from 'node:zlib';

import { CorruptImage } from './errors.js';

const PNG_SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

export interface GrayImage {
  width: number;
  height: number;
  /** Row-major pixels, one byte per pixel. */
  pixels: Uint8Array;
  /** tEXt entries, keyword -> text. */
  text: Record<string, string>;
}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(data: Buffer): number {
  let crc = 0xffffffff;
  for (const byte of data) {
    crc = CRC_TABLE[(crc ^ byte) & 0xff] ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

export function decodeGrayPng(data: Buffer, name = '<buffer>'): GrayImage {
  const fail = (reason: string): never => {
    throw new CorruptImage(`${name}: ${reason}`);
  };

  if (data.length < 8 || !data.subarray(0, 8).equals(PNG_SIGNATURE)) {
    fail('not a PNG (bad signature)');
  }

  let width = 0;
  let height = 0;
  let sawHeader = false;
  let sawEnd = false;
  const idatParts: Buffer[] = [];
  const text: Record<string, string> = {};

  let offset = 8;
  while (offset < data.length) {
    if (offset + 8 > data.length) fail('truncated chunk header');
    const length = data.readUInt32BE(offset);
    const type = data.toString('latin1', offset + 4, offset + 8);
    const body = data.subarray(offset + 8, offset + 8 + length);
    if (body.length !== length || offset + 12 + length > data.length) {
      fail(`truncated ${type} chunk`);
    }
    const declaredCrc = data.readUInt32BE(offset + 8 + length);
    if (crc32(data.subarray(offset + 4, offset + 8 + length)) !== declaredCrc) {
      fail(`CRC mismatch in ${type} chunk`);
    }
    offset += 12 + length;

    if (type === 'IHDR') {
      if (length !== 13) fail('IHDR length is not 13');
      width = body.readUInt32BE(0);
      height = body.readUInt32BE(4);
      const bitDepth = body[8];
      const colorType = body[9];
      const interlace = body[12];
      if (bitDepth !== 8) fail(`unsupported bit depth ${bitDepth}`);
      if (colorType !== 0) fail(`unsupported color type ${colorType} (need grayscale)`);
      if (interlace !== 0) fail('interlaced PNGs are not supported');
      if (width < 1 || height < 1) fail('zero-sized image');
      sawHeader = true;
    } else if (type === 'IDAT') {
      if (!sawHeader) fail('IDAT before IHDR');
      idatParts.push(body);
    } else if (type === 'tEXt') {
      const sep = body.indexOf(0);
      if (sep > 0) {
        text[body.toString('latin1', 0, sep)] = body.toString('latin1', sep + 1);
      }
    } else if (type === 'IEND') {
      sawEnd = true;
      break;
    }
  }
  if (!sawHeader) fail('missing IHDR chunk');
  if (!sawEnd) fail('missing IEND chunk');
  if (idatParts.length === 0) fail('missing IDAT chunk');

  let raw: Buffer;
  try {
    raw = inflateSync(Buffer.concat(idatParts));
  } catch {
    return fail('IDAT stream does not inflate');
  }
  if (raw.length !== height * (width + 1)) {
    fail(`decoded size ${raw.length} != ${height}x(1+${width})`);
  }

  const pixels = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (width + 1)];
    const row = raw.subarray(y * (width + 1) + 1, (y + 1) * (width + 1));
    const out = y * width;
    const prev = out - width;
    for (let x = 0; x < width; x++) {
      const left = x > 0 ? pixels[out + x - 1] : 0;
      const up = y > 0 ? pixels[prev + x] : 0;
      const upLeft = x > 0 && y > 0 ? pixels[prev + x - 1] : 0;
      let value: number;
      switch (filter) {
        case 0: value = row[x]; break;
        case 1: value = row[x] + left; break;
        case 2: value = row[x] + up; break;
        case 3: value = row[x] + ((left + up) >> 1); break;
        case 4: value = row[x] + paeth(left, up, upLeft); break;
        default: return fail(`unknown row filter ${filter}`);
      }
      pixels[out + x] = value & 0xff;
    }
  }
  return { width, height, pixels, text };
}
