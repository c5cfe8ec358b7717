/** MDS scatter with a grounding overlay: each embedded point and its ground
 * position share one color (hue from ground x, lightness from ground y), so
 * the correspondence between abstract and ground space is visible at a
 * glance. The inset shows the ground positions themselves. */

import type { MdsPoints } from './csv.js';
import { Axes, hslColor, scene, type Scene } from './scene.js';

function extent(xs: number[]): [number, number] {
  const lo = Math.min(...xs);
  const hi = Math.max(...xs);
  return hi > lo ? [lo, hi] : [lo - 1, hi + 1];
}

export function buildMdsScatter(pts: MdsPoints,
                                title = '2D MDS of the abstract space'): Scene {
  const W = 640, H = 480;
  const sc = scene(W, H);
  const [x0, x1] = extent(pts.z1);
  const [y0, y1] = extent(pts.z2);
  const ax = new Axes(x0, x1, y0, y1, 60, 50, W - 260, H - 110);
  sc.shapes.push({ kind: 'rect', x: ax.px, y: ax.py, w: ax.pw, h: ax.ph, fill: '#fafafa' });

  const [gx0, gx1] = extent(pts.groundX);
  const [gy0, gy1] = extent(pts.groundY);
  const colorOf = (i: number) => {
    const hx = (pts.groundX[i] - gx0) / (gx1 - gx0 || 1);
    const ly = (pts.groundY[i] - gy0) / (gy1 - gy0 || 1);
    return hslColor(20 + 300 * hx, 0.75, 0.25 + 0.5 * ly);
  };

  for (let i = 0; i < pts.z1.length; i++) {
    sc.shapes.push({ kind: 'circle', cx: ax.sx(pts.z1[i]), cy: ax.sy(pts.z2[i]),
                     r: 3, fill: colorOf(i), opacity: 0.85 });
  }
  sc.shapes.push({ kind: 'text', x: ax.px + ax.pw / 2, y: H - 30,
                   text: 'z1', anchor: 'middle' });
  sc.shapes.push({ kind: 'text', x: 24, y: ax.py + ax.ph / 2, text: 'z2' });

  // grounding inset: the same colors at the ground coordinates
  const inset = new Axes(gx0, gx1, gy0, gy1, W - 180, 60, 150, 150);
  sc.shapes.push({ kind: 'rect', x: inset.px - 4, y: inset.py - 4,
                   w: inset.pw + 8, h: inset.ph + 8, fill: '#f0f0f0' });
  for (let i = 0; i < pts.z1.length; i++) {
    sc.shapes.push({ kind: 'circle', cx: inset.sx(pts.groundX[i]),
                     cy: inset.sy(pts.groundY[i]), r: 2, fill: colorOf(i) });
  }
  sc.shapes.push({ kind: 'text', x: inset.px + inset.pw / 2, y: inset.py + inset.ph + 20,
                   text: 'ground (x, y)', anchor: 'middle' });
  sc.shapes.push({ kind: 'text', x: W / 2, y: 24, text: title, anchor: 'middle', size: 13 });
  return sc;
}
