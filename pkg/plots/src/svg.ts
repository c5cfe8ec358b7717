/** Scene -> SVG text. */

import type { Scene, Shape } from './scene.js';

function esc(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

function shapeToSvg(s: Shape): string {
  switch (s.kind) {
    case 'rect':
      return `<rect x="${s.x}" y="${s.y}" width="${s.w}" height="${s.h}" ` +
        `fill="${s.fill}"${s.opacity !== undefined ? ` opacity="${s.opacity}"` : ''}/>`;
    case 'polygon':
      return `<polygon points="${s.points.map(([x, y]) => `${x},${y}`).join(' ')}" ` +
        `fill="${s.fill}"${s.opacity !== undefined ? ` opacity="${s.opacity}"` : ''}/>`;
    case 'polyline':
      return `<polyline points="${s.points.map(([x, y]) => `${x},${y}`).join(' ')}" ` +
        `fill="none" stroke="${s.stroke}" stroke-width="${s.width ?? 1.5}"/>`;
    case 'circle':
      return `<circle cx="${s.cx}" cy="${s.cy}" r="${s.r}" fill="${s.fill}"` +
        `${s.opacity !== undefined ? ` opacity="${s.opacity}"` : ''}/>`;
    case 'text':
      return `<text x="${s.x}" y="${s.y}" font-size="${s.size ?? 11}" ` +
        `font-family="sans-serif" text-anchor="${s.anchor ?? 'start'}" ` +
        `fill="${s.fill ?? '#222'}">${esc(s.text)}</text>`;
  }
}

export function sceneToSvg(scene: Scene): string {
  const body = scene.shapes.map(shapeToSvg).join('\n  ');
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${scene.width}" ` +
    `height="${scene.height}" viewBox="0 0 ${scene.width} ${scene.height}">\n` +
    `  <rect x="0" y="0" width="${scene.width}" height="${scene.height}" ` +
    `fill="${scene.background}"/>\n  ${body}\n</svg>\n`;
}
