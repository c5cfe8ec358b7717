/** MI-matrix heatmap: ground features on the vertical axis, abstract features
 * on the horizontal axis, color anchored at [0, max]. */

import type { MiMatrix } from './csv.js';
import { colorRamp, scene, type Scene } from './scene.js';

export function buildHeatmap(mi: MiMatrix, title = 'MI matrix (nats)'): Scene {
  const nR = mi.rows.length;
  const nC = mi.cols.length;
  const cell = 56;
  const px = 90, py = 50;
  const W = px + nC * cell + 70;
  const H = py + nR * cell + 40;
  const sc = scene(W, H);
  const flat = mi.values.flat();
  const vmax = Math.max(...flat, 1e-12);

  for (let i = 0; i < nR; i++) {
    for (let j = 0; j < nC; j++) {
      const v = mi.values[i][j];
      sc.shapes.push({ kind: 'rect', x: px + j * cell, y: py + i * cell,
                       w: cell - 2, h: cell - 2, fill: colorRamp(v / vmax) });
      sc.shapes.push({ kind: 'text', x: px + j * cell + cell / 2 - 1,
                       y: py + i * cell + cell / 2 + 4,
                       text: v.toFixed(2), anchor: 'middle',
                       fill: v / vmax > 0.6 ? '#ffffff' : '#222222' });
    }
    sc.shapes.push({ kind: 'text', x: px - 10, y: py + i * cell + cell / 2 + 4,
                     text: mi.rows[i], anchor: 'end', size: 12 });
  }
  for (let j = 0; j < nC; j++) {
    sc.shapes.push({ kind: 'text', x: px + j * cell + cell / 2 - 1, y: py - 10,
                     text: mi.cols[j], anchor: 'middle', size: 12 });
  }
  // color scale anchored at [0, max]
  const barX = px + nC * cell + 16;
  for (let k = 0; k < 40; k++) {
    sc.shapes.push({ kind: 'rect', x: barX, y: py + (39 - k) * (nR * cell / 40),
                     w: 14, h: nR * cell / 40 + 1, fill: colorRamp(k / 39) });
  }
  sc.shapes.push({ kind: 'text', x: barX + 18, y: py + 10, text: vmax.toFixed(2) });
  sc.shapes.push({ kind: 'text', x: barX + 18, y: py + nR * cell, text: '0.00' });
  sc.shapes.push({ kind: 'text', x: W / 2, y: 22, text: title, anchor: 'middle', size: 13 });
  return sc;
}
