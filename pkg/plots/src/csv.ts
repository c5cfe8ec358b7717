/** CSV loaders for the artifacts the pipeline exports; no recomputation here. */

import { readFileSync } from 'fs';

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error('empty CSV');
  }
  const header = lines[0].split(',');
  const rows = lines.slice(1).map((l) => l.split(','));
  for (const r of rows) {
    if (r.length !== header.length) {
      throw new Error(`ragged CSV row: expected ${header.length} fields, got ${r.length}`);
    }
  }
  return { header, rows };
}

export interface CurveSeries {
  steps: number[];
  success: number[];
}

/** curves.csv: ground_env_steps, success_rate, mean_return, epsilon */
export function readCurves(path: string): CurveSeries {
  const t = parseCsv(readFileSync(path, 'utf8'));
  const si = t.header.indexOf('ground_env_steps');
  const ri = t.header.indexOf('success_rate');
  if (si < 0 || ri < 0) {
    throw new Error(`${path} is not a curves.csv (missing columns)`);
  }
  return {
    steps: t.rows.map((r) => Number(r[si])),
    success: t.rows.map((r) => Number(r[ri])),
  };
}

export interface MiMatrix {
  rows: string[];
  cols: string[];
  values: number[][];
}

/** mi_matrix.csv: header = feature, z0, z1, ...; one row per ground feature */
export function readMiMatrix(path: string): MiMatrix {
  const t = parseCsv(readFileSync(path, 'utf8'));
  if (t.rows.length === 0) {
    throw new Error(`${path} has no data rows`);
  }
  return {
    rows: t.rows.map((r) => r[0]),
    cols: t.header.slice(1),
    values: t.rows.map((r) => r.slice(1).map(Number)),
  };
}

export interface MdsPoints {
  z1: number[];
  z2: number[];
  groundX: number[];
  groundY: number[];
}

/** mds.csv: z1, z2, ground_x, ground_y */
export function readMds(path: string): MdsPoints {
  const t = parseCsv(readFileSync(path, 'utf8'));
  const need = ['z1', 'z2', 'ground_x', 'ground_y'];
  const idx = need.map((c) => t.header.indexOf(c));
  if (idx.some((i) => i < 0)) {
    throw new Error(`${path} is not an mds.csv`);
  }
  if (t.rows.length === 0) {
    throw new Error(`${path} has no data rows`);
  }
  return {
    z1: t.rows.map((r) => Number(r[idx[0]])),
    z2: t.rows.map((r) => Number(r[idx[1]])),
    groundX: t.rows.map((r) => Number(r[idx[2]])),
    groundY: t.rows.map((r) => Number(r[idx[3]])),
  };
}
