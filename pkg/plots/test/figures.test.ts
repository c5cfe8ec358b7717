import { mkdtempSync, writeFileSync } from 'fs';
import { tmpdir } from 'os';
import { join } from 'path';
import { inflateSync } from 'zlib';
import { describe, expect, it } from 'vitest';

import { parseCsv, readCurves, readMds, readMiMatrix } from '../src/csv.js';
import { buildCurveFigure } from '../src/curves.js';
import { buildHeatmap } from '../src/heatmap.js';
import { buildMdsScatter } from '../src/mds.js';
import { sceneToSvg } from '../src/svg.js';
import { parseColor, sceneToPng } from '../src/png.js';
import { main } from '../src/cli.js';

function tmpFile(name: string, content: string): string {
  const dir = mkdtempSync(join(tmpdir(), 'plots-'));
  const p = join(dir, name);
  writeFileSync(p, content);
  return p;
}

const CURVES = 'ground_env_steps,success_rate,mean_return,epsilon\n' +
  '0,0.0,-1.0,1.0\n1000,0.4,-0.5,0.5\n2000,1.0,-0.2,0.1\n';
const CURVES_B = 'ground_env_steps,success_rate,mean_return,epsilon\n' +
  '0,0.0,-1.0,1.0\n1000,0.6,-0.4,0.5\n2000,1.0,-0.1,0.1\n';
const MI = 'feature,z0,z1\nx,1.0,0.25\ny,0.5,0.75\n';
const MDS = 'z1,z2,ground_x,ground_y\n0,0,0,0\n1,0,1,0\n1,1,1,1\n0,1,0,1\n';

describe('csv loaders', () => {
  it('parses curves', () => {
    const c = readCurves(tmpFile('c.csv', CURVES));
    expect(c.steps).toEqual([0, 1000, 2000]);
    expect(c.success).toEqual([0, 0.4, 1.0]);
  });

  it('rejects empty csv', () => {
    expect(() => parseCsv('')).toThrow('empty');
    expect(() => readMiMatrix(tmpFile('m.csv', 'feature,z0\n'))).toThrow();
  });

  it('parses the mi matrix', () => {
    const m = readMiMatrix(tmpFile('m.csv', MI));
    expect(m.rows).toEqual(['x', 'y']);
    expect(m.cols).toEqual(['z0', 'z1']);
    expect(m.values[1][1]).toBe(0.75);
  });
});

describe('curve figure', () => {
  it('legend carries the hand-checked statistics', () => {
    const a = readCurves(tmpFile('a.csv', CURVES));
    const b = readCurves(tmpFile('b.csv', CURVES_B));
    const fig = buildCurveFigure([a, b]);
    // at step 1000: values {0.4, 0.6} -> mean 0.5, std 0.1*sqrt(2)
    expect(fig.band.mean[1]).toBeCloseTo(0.5, 12);
    expect(fig.band.std[1]).toBeCloseTo(0.1 * Math.SQRT2, 12);
    expect(fig.legend).toContain('1.000 +/- 0.000');
  });

  it('single seed renders a zero-width band and a flat line at 1 stays at 1', () => {
    const flat = { steps: [0, 10, 20], success: [1, 1, 1] };
    const fig = buildCurveFigure([flat]);
    expect(fig.band.std).toEqual([0, 0, 0]);
    expect(fig.legend).toContain('final 1.000 +/- 0.000');
    const svg = sceneToSvg(fig.scene);
    expect(svg).toContain('<polyline');
  });

  it('draws the gray pretraining band when an offset is given', () => {
    const fig = buildCurveFigure([readCurves(tmpFile('a.csv', CURVES))], 500);
    const grays = fig.scene.shapes.filter(
      (s) => s.kind === 'rect' && s.fill === 'gray');
    expect(grays.length).toBe(1);
  });
});

describe('heatmap and mds', () => {
  it('1x1 matrix occupies the full color scale', () => {
    const sc = buildHeatmap({ rows: ['x'], cols: ['z0'], values: [[0.7]] });
    const cells = sc.shapes.filter((s) => s.kind === 'rect' && 'fill' in s &&
      (s as { fill: string }).fill.startsWith('rgb('));
    // the single data cell uses the top of the ramp (value / max = 1)
    const svg = sceneToSvg(sc);
    expect(svg).toContain('0.70');
    expect(cells.length).toBeGreaterThan(0);
  });

  it('square corners produce four separated clusters', () => {
    const sc = buildMdsScatter(readMds(tmpFile('mds.csv', MDS)));
    const pts = sc.shapes.filter((s) => s.kind === 'circle');
    expect(pts.length).toBe(8);    // 4 in the main panel + 4 in the inset
  });
});

describe('png encoder', () => {
  it('produces a valid signed png whose pixel data round-trips zlib', () => {
    const fig = buildCurveFigure([readCurves(tmpFile('a.csv', CURVES))]);
    const png = sceneToPng(fig.scene);
    expect([...png.subarray(0, 8)]).toEqual([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
    // IDAT payload inflates to height * (1 + width*4) bytes
    const idatIdx = png.indexOf('IDAT');
    const len = png.readUInt32BE(idatIdx - 4);
    const raw = inflateSync(png.subarray(idatIdx + 4, idatIdx + 4 + len));
    expect(raw.length).toBe(fig.scene.height * (1 + fig.scene.width * 4));
  });

  it('parses the color syntaxes the scenes use', () => {
    expect(parseColor('#ff0000')).toEqual([255, 0, 0, 255]);
    expect(parseColor('rgb(10,20,30)')).toEqual([10, 20, 30, 255]);
    expect(parseColor('hsl(0,100%,50%)')).toEqual([255, 0, 0, 255]);
    expect(parseColor('gray', 0.5)[3]).toBe(128);
  });
});

describe('cli', () => {
  it('renders everything present in a run directory', () => {
    const dir = mkdtempSync(join(tmpdir(), 'run-'));
    writeFileSync(join(dir, 'curves.csv'), CURVES);
    writeFileSync(join(dir, 'mi_matrix.csv'), MI);
    writeFileSync(join(dir, 'mds.csv'), MDS);
    expect(main(['all', dir])).toBe(0);
  });

  it('fails on an empty run directory', () => {
    const dir = mkdtempSync(join(tmpdir(), 'empty-'));
    expect(main(['all', dir])).toBe(1);
  });

  it('fails on an empty csv', () => {
    const dir = mkdtempSync(join(tmpdir(), 'bad-'));
    writeFileSync(join(dir, 'curves.csv'), '');
    expect(main(['all', dir])).toBe(1);
  });
});
