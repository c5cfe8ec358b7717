/** Render figures from a skillworld output directory. No science happens
 * here: every number comes from the CSVs.
 *
 *   node dist/cli.js all <run-dir> [out-dir]
 *   node dist/cli.js curves <out-base> [--pretrain N] <curves.csv> [more seeds...]
 *   node dist/cli.js heatmap <out-base> <mi_matrix.csv>
 *   node dist/cli.js mds <out-base> <mds.csv>
 */

import { existsSync, mkdirSync, writeFileSync } from 'fs';
import { join } from 'path';
import { readCurves, readMiMatrix, readMds } from './csv.js';
import { buildCurveFigure } from './curves.js';
import { buildHeatmap } from './heatmap.js';
import { buildMdsScatter } from './mds.js';
import { sceneToSvg } from './svg.js';
import { sceneToPng } from './png.js';
import type { Scene } from './scene.js';

function emit(base: string, sc: Scene) {
  writeFileSync(`${base}.svg`, sceneToSvg(sc));
  writeFileSync(`${base}.png`, sceneToPng(sc));
  console.log(`wrote ${base}.svg and ${base}.png`);
}

export function main(argv: string[]): number {
  const [cmd, ...rest] = argv;
  try {
    if (cmd === 'curves') {
      const [outBase, ...files] = rest;
      let pretrain = 0;
      const csvs: string[] = [];
      for (let i = 0; i < files.length; i++) {
        if (files[i] === '--pretrain') {
          pretrain = Number(files[++i]);
        } else {
          csvs.push(files[i]);
        }
      }
      if (csvs.length === 0) throw new Error('curves needs at least one curves.csv');
      const fig = buildCurveFigure(csvs.map(readCurves), pretrain);
      if (fig.band.resampled) console.warn('warning: mismatched step grids; resampled');
      console.log(`legend: ${fig.legend}`);
      emit(outBase, fig.scene);
      return 0;
    }
    if (cmd === 'heatmap') {
      const [outBase, csv] = rest;
      emit(outBase, buildHeatmap(readMiMatrix(csv)));
      return 0;
    }
    if (cmd === 'mds') {
      const [outBase, csv] = rest;
      emit(outBase, buildMdsScatter(readMds(csv)));
      return 0;
    }
    if (cmd === 'all') {
      const runDir = rest[0];
      if (!runDir) throw new Error('usage: all <run-dir> [out-dir]');
      const outDir = rest[1] ?? join(runDir, 'figures');
      mkdirSync(outDir, { recursive: true });
      let produced = 0;
      const curvesPath = join(runDir, 'curves.csv');
      if (existsSync(curvesPath)) {
        emit(join(outDir, 'curves'), buildCurveFigure([readCurves(curvesPath)]).scene);
        produced++;
      }
      const miPath = join(runDir, 'mi_matrix.csv');
      if (existsSync(miPath)) {
        emit(join(outDir, 'mi_heatmap'), buildHeatmap(readMiMatrix(miPath)));
        produced++;
      }
      const mdsPath = join(runDir, 'mds.csv');
      if (existsSync(mdsPath)) {
        emit(join(outDir, 'mds'), buildMdsScatter(readMds(mdsPath)));
        produced++;
      }
      if (produced === 0) throw new Error(`no renderable CSVs found in ${runDir}`);
      return 0;
    }
    throw new Error(`unknown command ${cmd ?? '(none)'}`);
  } catch (e) {
    console.error(`error: ${(e as Error).message}`);
    return 1;
  }
}

const invokedDirectly = process.argv[1]?.endsWith('cli.js');
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
