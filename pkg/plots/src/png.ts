/** Scene -> PNG bytes: a small software rasterizer plus a PNG encoder built on
 * zlib. Text shapes are skipped; PNG output is a convenience raster and the
 * SVG carries the labels. */

import { deflateSync } from 'zlib';
import type { Scene, Shape } from './scene.js';

type RGBA = [number, number, number, number];

export function parseColor(c: string, opacity = 1): RGBA {
  let r = 0, g = 0, b = 0;
  if (c.startsWith('#')) {
    r = parseInt(c.slice(1, 3), 16);
    g = parseInt(c.slice(3, 5), 16);
    b = parseInt(c.slice(5, 7), 16);
  } else if (c.startsWith('rgb(')) {
    [r, g, b] = c.slice(4, -1).split(',').map((v) => Number(v.trim()));
  } else if (c.startsWith('hsl(')) {
    const [hs, ss, ls] = c.slice(4, -1).split(',');
    const h = Number(hs) / 360;
    const s = Number(ss.trim().replace('%', '')) / 100;
    const l = Number(ls.trim().replace('%', '')) / 100;
    const q = l < 0.5 ? l * (1 + s) : l + s - l * s;
    const p = 2 * l - q;
    const hue = (t: number) => {
      if (t < 0) t += 1;
      if (t > 1) t -= 1;
      if (t < 1 / 6) return p + (q - p) * 6 * t;
      if (t < 1 / 2) return q;
      if (t < 2 / 3) return p + (q - p) * (2 / 3 - t) * 6;
      return p;
    };
    r = Math.round(hue(h + 1 / 3) * 255);
    g = Math.round(hue(h) * 255);
    b = Math.round(hue(h - 1 / 3) * 255);
  } else {
    // named colors used by the figures
    const named: Record<string, [number, number, number]> = {
      white: [255, 255, 255], black: [0, 0, 0], gray: [128, 128, 128],
      lightgray: [211, 211, 211], steelblue: [70, 130, 180],
      crimson: [220, 20, 60],
    };
    [r, g, b] = named[c] ?? [0, 0, 0];
  }
  return [r, g, b, Math.round(255 * opacity)];
}

class Raster {
  data: Uint8ClampedArray;

  constructor(public width: number, public height: number, bg: RGBA) {
    this.data = new Uint8ClampedArray(width * height * 4);
    for (let i = 0; i < width * height; i++) {
      this.data.set(bg, i * 4);
    }
  }

  blend(x: number, y: number, c: RGBA) {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = (y * this.width + x) * 4;
    const a = c[3] / 255;
    for (let k = 0; k < 3; k++) {
      this.data[i + k] = Math.round(c[k] * a + this.data[i + k] * (1 - a));
    }
    this.data[i + 3] = 255;
  }

  fillRect(x: number, y: number, w: number, h: number, c: RGBA) {
    for (let yy = Math.floor(y); yy < y + h; yy++) {
      for (let xx = Math.floor(x); xx < x + w; xx++) {
        this.blend(xx, yy, c);
      }
    }
  }

  fillPolygon(pts: [number, number][], c: RGBA) {
    const ys = pts.map((p) => p[1]);
    const y0 = Math.max(0, Math.floor(Math.min(...ys)));
    const y1 = Math.min(this.height - 1, Math.ceil(Math.max(...ys)));
    for (let y = y0; y <= y1; y++) {
      const xs: number[] = [];
      for (let i = 0; i < pts.length; i++) {
        const [ax, ay] = pts[i];
        const [bx, by] = pts[(i + 1) % pts.length];
        if ((ay <= y + 0.5 && by > y + 0.5) || (by <= y + 0.5 && ay > y + 0.5)) {
          xs.push(ax + ((y + 0.5 - ay) / (by - ay)) * (bx - ax));
        }
      }
      xs.sort((a, b) => a - b);
      for (let i = 0; i + 1 < xs.length; i += 2) {
        for (let x = Math.ceil(xs[i] - 0.5); x <= Math.floor(xs[i + 1] - 0.5); x++) {
          this.blend(x, y, c);
        }
      }
    }
  }

  fillCircle(cx: number, cy: number, r: number, c: RGBA) {
    for (let y = Math.floor(cy - r); y <= cy + r; y++) {
      for (let x = Math.floor(cx - r); x <= cx + r; x++) {
        if ((x + 0.5 - cx) ** 2 + (y + 0.5 - cy) ** 2 <= r * r) {
          this.blend(x, y, c);
        }
      }
    }
  }

  drawLine(x0: number, y0: number, x1: number, y1: number, c: RGBA, width = 1.5) {
    const steps = Math.max(1, Math.ceil(Math.hypot(x1 - x0, y1 - y0) * 2));
    const half = Math.max(0, Math.round(width / 2) - 1);
    for (let i = 0; i <= steps; i++) {
      const t = i / steps;
      const x = Math.round(x0 + (x1 - x0) * t);
      const y = Math.round(y0 + (y1 - y0) * t);
      for (let dy = -half; dy <= half; dy++) {
        for (let dx = -half; dx <= half; dx++) {
          this.blend(x + dx, y + dy, c);
        }
      }
    }
  }
}

function renderShape(r: Raster, s: Shape) {
  switch (s.kind) {
    case 'rect':
      r.fillRect(s.x, s.y, s.w, s.h, parseColor(s.fill, s.opacity ?? 1));
      break;
    case 'polygon':
      r.fillPolygon(s.points, parseColor(s.fill, s.opacity ?? 1));
      break;
    case 'polyline': {
      const c = parseColor(s.stroke);
      for (let i = 0; i + 1 < s.points.length; i++) {
        r.drawLine(s.points[i][0], s.points[i][1],
                   s.points[i + 1][0], s.points[i + 1][1], c, s.width ?? 1.5);
      }
      break;
    }
    case 'circle':
      r.fillCircle(s.cx, s.cy, s.r, parseColor(s.fill, s.opacity ?? 1));
      break;
    case 'text':
      break;
  }
}

const CRC_TABLE = (() => {
  const t = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    t[n] = c >>> 0;
  }
  return t;
})();

function crc32(buf: Buffer): number {
  let c = 0xffffffff;
  for (const byte of buf) {
    c = CRC_TABLE[(c ^ byte) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Buffer): Buffer {
  const len = Buffer.alloc(4);
  len.writeUInt32BE(data.length);
  const body = Buffer.concat([Buffer.from(type, 'ascii'), data]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(body));
  return Buffer.concat([len, body, crc]);
}

export function encodePng(width: number, height: number,
                          rgba: Uint8ClampedArray): Buffer {
  const sig = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8;      // bit depth
  ihdr[9] = 6;      // RGBA
  const raw = Buffer.alloc(height * (1 + width * 4));
  for (let y = 0; y < height; y++) {
    raw[y * (1 + width * 4)] = 0;   // filter: none
    Buffer.from(rgba.buffer, y * width * 4, width * 4)
      .copy(raw, y * (1 + width * 4) + 1);
  }
  return Buffer.concat([
    sig,
    chunk('IHDR', ihdr),
    chunk('IDAT', deflateSync(raw)),
    chunk('IEND', Buffer.alloc(0)),
  ]);
}

export function sceneToPng(scene: Scene): Buffer {
  const r = new Raster(scene.width, scene.height, parseColor(scene.background));
  for (const s of scene.shapes) {
    renderShape(r, s);
  }
  return encodePng(scene.width, scene.height, r.data);
}
