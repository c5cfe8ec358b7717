/** A minimal retained scene: every figure builds one of these, and the SVG
 * and PNG writers render it without knowing anything about the science. */

export interface Rect {
  kind: 'rect';
  x: number; y: number; w: number; h: number;
  fill: string;
  opacity?: number;
}

export interface Polygon {
  kind: 'polygon';
  points: [number, number][];
  fill: string;
  opacity?: number;
}

export interface Polyline {
  kind: 'polyline';
  points: [number, number][];
  stroke: string;
  width?: number;
}

export interface Circle {
  kind: 'circle';
  cx: number; cy: number; r: number;
  fill: string;
  opacity?: number;
}

export interface Text {
  kind: 'text';
  x: number; y: number;
  text: string;
  size?: number;
  anchor?: 'start' | 'middle' | 'end';
  fill?: string;
}

export type Shape = Rect | Polygon | Polyline | Circle | Text;

export interface Scene {
  width: number;
  height: number;
  background: string;
  shapes: Shape[];
}

export function scene(width: number, height: number, background = '#ffffff'): Scene {
  return { width, height, background, shapes: [] };
}

/** Linear map from data coordinates to pixel coordinates (y flipped). */
export class Axes {
  constructor(
    public x0: number, public x1: number,
    public y0: number, public y1: number,
    public px: number, public py: number,
    public pw: number, public ph: number,
  ) {}

  sx(x: number): number {
    return this.px + ((x - this.x0) / (this.x1 - this.x0 || 1)) * this.pw;
  }

  sy(y: number): number {
    return this.py + this.ph - ((y - this.y0) / (this.y1 - this.y0 || 1)) * this.ph;
  }
}

export function colorRamp(t: number): string {
  // light -> dark blue, clamped
  const c = Math.max(0, Math.min(1, t));
  const r = Math.round(247 - 215 * c);
  const g = Math.round(251 - 170 * c);
  const b = Math.round(255 - 108 * c);
  return `rgb(${r},${g},${b})`;
}

export function hslColor(h: number, s: number, l: number): string {
  return `hsl(${Math.round(h)},${Math.round(s * 100)}%,${Math.round(l * 100)}%)`;
}
