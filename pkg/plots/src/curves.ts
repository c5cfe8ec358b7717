/** Learning-curve figure: per-seed series collapse to mean +/- 1 std shading,
 * with a gray band covering the pretraining offset. */

import type { CurveSeries } from './csv.js';
import { bandAcrossSeeds, type Band } from './stats.js';
import { Axes, scene, type Scene } from './scene.js';

export interface CurveFigure {
  scene: Scene;
  band: Band;
  legend: string;
}

export function buildCurveFigure(seeds: CurveSeries[], pretrainOffset = 0,
                                 title = 'Success rate v. environment steps'): CurveFigure {
  const band = bandAcrossSeeds(seeds);
  const W = 640, H = 400;
  const sc = scene(W, H);
  const maxStep = Math.max(...band.steps, pretrainOffset, 1);
  const ax = new Axes(0, maxStep, 0, 1, 60, 40, W - 90, H - 90);

  // frame and axis labels
  sc.shapes.push({ kind: 'rect', x: ax.px, y: ax.py, w: ax.pw, h: ax.ph, fill: '#fafafa' });
  for (const tick of [0, 0.25, 0.5, 0.75, 1.0]) {
    sc.shapes.push({ kind: 'polyline', stroke: '#dddddd', width: 1,
                     points: [[ax.sx(0), ax.sy(tick)], [ax.sx(maxStep), ax.sy(tick)]] });
    sc.shapes.push({ kind: 'text', x: ax.px - 8, y: ax.sy(tick) + 4,
                     text: tick.toFixed(2), anchor: 'end' });
  }
  for (let i = 0; i <= 4; i++) {
    const s = (maxStep * i) / 4;
    sc.shapes.push({ kind: 'text', x: ax.sx(s), y: ax.py + ax.ph + 18,
                     text: String(Math.round(s)), anchor: 'middle' });
  }

  // gray pretraining band
  if (pretrainOffset > 0) {
    sc.shapes.push({ kind: 'rect', x: ax.sx(0), y: ax.py,
                     w: ax.sx(pretrainOffset) - ax.sx(0), h: ax.ph,
                     fill: 'gray', opacity: 0.25 });
  }

  // +/- 1 std shading
  const upper = band.steps.map((s, i): [number, number] =>
    [ax.sx(s), ax.sy(Math.min(1, band.mean[i] + band.std[i]))]);
  const lower = band.steps.map((s, i): [number, number] =>
    [ax.sx(s), ax.sy(Math.max(0, band.mean[i] - band.std[i]))]).reverse();
  sc.shapes.push({ kind: 'polygon', points: [...upper, ...lower],
                   fill: 'steelblue', opacity: 0.25 });
  sc.shapes.push({ kind: 'polyline', stroke: 'steelblue', width: 2,
                   points: band.steps.map((s, i) => [ax.sx(s), ax.sy(band.mean[i])]) });

  const last = band.mean.length - 1;
  const legend = `final ${band.mean[last].toFixed(3)} +/- ${band.std[last].toFixed(3)} ` +
    `(n=${seeds.length} seeds)`;
  sc.shapes.push({ kind: 'text', x: ax.px + 6, y: ax.py + 16, text: legend });
  sc.shapes.push({ kind: 'text', x: W / 2, y: 22, text: title, anchor: 'middle', size: 13 });
  sc.shapes.push({ kind: 'text', x: W / 2, y: H - 8, text: 'ground environment steps',
                   anchor: 'middle' });
  if (band.resampled) {
    sc.shapes.push({ kind: 'text', x: W - 12, y: 22,
                     text: 'resampled to coarsest grid', anchor: 'end', fill: '#a33' });
  }
  return { scene: sc, band, legend };
}
