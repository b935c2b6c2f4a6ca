import { readFileSync, readdirSync } from 'node:fs';
import { deflateSync } from 'node:zlib';

import { describe, expect, it } from 'vitest';

import { CorruptImage } from '../src/errors.js';
import { decodeGrayPng } from '../src/png.js';

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

function crc32(data: Buffer): number {
  let crc = 0xffffffff;
  for (const byte of data) {
    let c = (crc ^ byte) & 0xff;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    crc = c ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

function chunk(type: string, body: Buffer): Buffer {
  const header = Buffer.alloc(4);
  header.writeUInt32BE(body.length);
  const typed = Buffer.concat([Buffer.from(type, 'latin1'), body]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(typed));
  return Buffer.concat([header, typed, crc]);
}

function ihdr(width: number, height: number, bitDepth = 8, colorType = 0, interlace = 0): Buffer {
  const body = Buffer.alloc(13);
  body.writeUInt32BE(width, 0);
  body.writeUInt32BE(height, 4);
  body[8] = bitDepth;
  body[9] = colorType;
  body[10] = 0;
  body[11] = 0;
  body[12] = interlace;
  return chunk('IHDR', body);
}

/** Encode one grayscale image applying the given filter to every row. */
function encodePng(
  width: number,
  height: number,
  pixels: Uint8Array,
  filter: number,
  textEntries: Record<string, string> = {},
): Buffer {
  const raw = Buffer.alloc(height * (width + 1));
  const at = (x: number, y: number) => (x < 0 || y < 0 ? 0 : pixels[y * width + x]);
  for (let y = 0; y < height; y++) {
    raw[y * (width + 1)] = filter;
    for (let x = 0; x < width; x++) {
      const value = at(x, y);
      const left = at(x - 1, y);
      const up = at(x, y - 1);
      const upLeft = at(x - 1, y - 1);
      let encoded: number;
      switch (filter) {
        case 0:
          encoded = value;
          break;
        case 1:
          encoded = value - left;
          break;
        case 2:
          encoded = value - up;
          break;
        case 3:
          encoded = value - ((left + up) >> 1);
          break;
        case 4: {
          const p = left + up - upLeft;
          const pa = Math.abs(p - left);
          const pb = Math.abs(p - up);
          const pc = Math.abs(p - upLeft);
          const predictor = pa <= pb && pa <= pc ? left : pb <= pc ? up : upLeft;
          encoded = value - predictor;
          break;
        }
        default:
          throw new Error(`bad filter ${filter}`);
      }
      raw[y * (width + 1) + 1 + x] = encoded & 0xff;
    }
  }
  const chunks = [SIGNATURE, ihdr(width, height)];
  for (const [keyword, value] of Object.entries(textEntries)) {
    chunks.push(chunk('tEXt', Buffer.from(`${keyword}\0${value}`, 'latin1')));
  }
  chunks.push(chunk('IDAT', deflateSync(raw)), chunk('IEND', Buffer.alloc(0)));
  return Buffer.concat(chunks);
}

function gradientPixels(width: number, height: number): Uint8Array {
  const pixels = new Uint8Array(width * height);
  for (let i = 0; i < pixels.length; i++) {
    pixels[i] = (i * 37 + (i % 11) * 5) & 0xff;
  }
  return pixels;
}

describe('decodeGrayPng', () => {
  it.each([0, 1, 2, 3, 4])('round-trips pixels through row filter %d', (filter) => {
    const pixels = gradientPixels(9, 7);
    const image = decodeGrayPng(encodePng(9, 7, pixels, filter), 'f.png');
    expect(image.width).toBe(9);
    expect(image.height).toBe(7);
    expect(Array.from(image.pixels)).toEqual(Array.from(pixels));
  });

  it('decodes a 1x1 image', () => {
    const image = decodeGrayPng(encodePng(1, 1, new Uint8Array([200]), 0));
    expect(Array.from(image.pixels)).toEqual([200]);
  });

  it('captures tEXt entries', () => {
    const png = encodePng(2, 2, new Uint8Array(4), 0, { source: 'sample_0001.bin', length: '4' });
    const image = decodeGrayPng(png);
    expect(image.text).toEqual({ source: 'sample_0001.bin', length: '4' });
  });

  it('decodes the run fixtures produced by the imaging pipeline', () => {
    const dir = new URL('./fixtures/run2/images/train/fam00/', import.meta.url).pathname;
    const name = readdirSync(dir)
      .filter((f) => f.endsWith('.png'))
      .sort()[0];
    const image = decodeGrayPng(readFileSync(dir + name), name);
    expect(image.width).toBe(64);
    expect(image.height).toBeGreaterThan(0);
    expect(image.pixels.length).toBe(image.width * image.height);
  });

  describe('rejects corrupt input, naming the file', () => {
    const pixels = gradientPixels(4, 3);
    const good = encodePng(4, 3, pixels, 0);

    const expectCorrupt = (data: Buffer, name: string, fragment: string | RegExp) => {
      expect(() => decodeGrayPng(data, name)).toThrowError(CorruptImage);
      try {
        decodeGrayPng(data, name);
      } catch (error) {
        expect((error as Error).message).toContain(name);
        expect((error as Error).message).toMatch(fragment);
      }
    };

    it('bad signature', () => {
      const bad = Buffer.from(good);
      bad[0] = 0x00;
      expectCorrupt(bad, 'sig.png', /signature/);
    });

    it('flipped byte breaks the chunk CRC', () => {
      const bad = Buffer.from(good);
      bad[SIGNATURE.length + 8] ^= 0xff; // first IHDR body byte
      expectCorrupt(bad, 'crc.png', /CRC mismatch/);
    });

    it('truncated file', () => {
      expectCorrupt(good.subarray(0, good.length - 6), 'trunc.png', /truncated|missing/);
    });

    it('16-bit depth is unsupported', () => {
      const png = Buffer.concat([
        SIGNATURE,
        ihdr(2, 2, 16),
        chunk('IDAT', deflateSync(Buffer.alloc(2 * 5))),
        chunk('IEND', Buffer.alloc(0)),
      ]);
      expectCorrupt(png, 'depth.png', /bit depth/);
    });

    it('rgb color type is unsupported', () => {
      const png = Buffer.concat([
        SIGNATURE,
        ihdr(2, 2, 8, 2),
        chunk('IDAT', deflateSync(Buffer.alloc(2 * 7))),
        chunk('IEND', Buffer.alloc(0)),
      ]);
      expectCorrupt(png, 'rgb.png', /color type/);
    });

    it('interlacing is unsupported', () => {
      const png = Buffer.concat([
        SIGNATURE,
        ihdr(2, 2, 8, 0, 1),
        chunk('IDAT', deflateSync(Buffer.alloc(2 * 3))),
        chunk('IEND', Buffer.alloc(0)),
      ]);
      expectCorrupt(png, 'adam7.png', /interlaced/);
    });

    it('garbage IDAT does not inflate', () => {
      const png = Buffer.concat([
        SIGNATURE,
        ihdr(2, 2),
        chunk('IDAT', Buffer.from([1, 2, 3, 4])),
        chunk('IEND', Buffer.alloc(0)),
      ]);
      expectCorrupt(png, 'inflate.png', /inflate/);
    });

    it('pixel payload of the wrong size', () => {
      const png = Buffer.concat([
        SIGNATURE,
        ihdr(4, 4),
        chunk('IDAT', deflateSync(Buffer.alloc(3 * 5))), // three rows instead of four
        chunk('IEND', Buffer.alloc(0)),
      ]);
      expectCorrupt(png, 'short.png', /decoded size/);
    });

    it('unknown row filter code', () => {
      const raw = Buffer.alloc(2 * 3);
      raw[0] = 9;
      const png = Buffer.concat([
        SIGNATURE,
        ihdr(2, 2),
        chunk('IDAT', deflateSync(raw)),
        chunk('IEND', Buffer.alloc(0)),
      ]);
      expectCorrupt(png, 'filter.png', /unknown row filter/);
    });

    it('missing IEND', () => {
      const raw = Buffer.alloc(2 * 3);
      const png = Buffer.concat([SIGNATURE, ihdr(2, 2), chunk('IDAT', deflateSync(raw))]);
      expectCorrupt(png, 'noend.png', /missing IEND/);
    });
  });
});
