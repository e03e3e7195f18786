/** Stroke capture model: build strokes from pointer samples, undo, and the
 * exact wire serialization.  The console never interprets strokes itself;
 * the server rasterizes and parses them with the canonical renderer. */

import { CanvasStroke, DrawMode, Tool } from './types.js';

const MIN_SAMPLE_DIST = 1.5;
const CIRCLE_SAMPLES = 36;

export class StrokeBuilder {
  private samples: [number, number][] = [];

  constructor(
    readonly tool: Tool,
    readonly ordinal: number,
    readonly widthPx: number,
    readonly mode: DrawMode,
    readonly bounds: { width: number; height: number },
  ) {}

  add(u: number, v: number): void {
    const cu = Math.max(0, Math.min(this.bounds.width - 1, u));
    const cv = Math.max(0, Math.min(this.bounds.height - 1, v));
    const last = this.samples[this.samples.length - 1];
    if (last && Math.hypot(cu - last[0], cv - last[1]) < MIN_SAMPLE_DIST) return;
    this.samples.push([cu, cv]);
  }

  /** Whether the captured gesture is a usable stroke yet. */
  viable(): boolean {
    return this.samples.length >= 2;
  }

  /** Finish the gesture into a wire stroke, or null if it was a stray tap. */
  finish(): CanvasStroke | null {
    if (!this.viable()) return null;
    if (this.tool === 'circle') {
      return this.circleStroke();
    }
    const hint: Tool | undefined =
      this.tool === 'arrow' && this.mode === 'geometric' ? 'arrow' : undefined;
    const stroke: CanvasStroke = {
      color_ordinal: this.ordinal,
      width_px: this.widthPx,
      points: this.samples.slice(),
    };
    if (hint) stroke.primitive_hint = hint;
    return stroke;
  }

  /** Circle tool: the drag defines center (first sample) and radius (last);
   * the wire stroke carries perimeter samples so the server's fit recovers
   * exactly that center and radius. */
  private circleStroke(): CanvasStroke | null {
    const c = this.samples[0];
    const edge = this.samples[this.samples.length - 1];
    const radius = Math.hypot(edge[0] - c[0], edge[1] - c[1]);
    if (radius < 4) return null;
    const points: [number, number][] = [];
    for (let i = 0; i < CIRCLE_SAMPLES; i++) {
      const t = (2 * Math.PI * i) / CIRCLE_SAMPLES;
      points.push([c[0] + radius * Math.cos(t), c[1] + radius * Math.sin(t)]);
    }
    return {
      color_ordinal: this.ordinal,
      width_px: this.widthPx,
      points,
      primitive_hint: 'circle',
    };
  }

  /** Raw samples, for live preview while drawing. */
  preview(): [number, number][] {
    return this.samples.slice();
  }
}

/** Triangle-head preview for the geometric arrow tool: apex at the final
 * sample, base behind it along the end tangent.  Purely cosmetic; the
 * server draws the canonical head when it rasterizes. */
export function arrowHeadPreview(
  points: [number, number][],
  widthPx: number,
): [number, number][] | null {
  if (points.length < 2) return null;
  const tip = points[points.length - 1];
  let back = points.length - 2;
  while (
    back > 0 &&
    Math.hypot(points[back][0] - tip[0], points[back][1] - tip[1]) < 2 * widthPx
  ) {
    back--;
  }
  const ref = points[back];
  const len = Math.hypot(tip[0] - ref[0], tip[1] - ref[1]);
  if (len < 1e-6) return null;
  const t = [(tip[0] - ref[0]) / len, (tip[1] - ref[1]) / len];
  const n = [-t[1], t[0]];
  const h = 5 * widthPx;
  const b = 2 * widthPx;
  const base = [tip[0] - t[0] * h, tip[1] - t[1] * h];
  return [
    tip,
    [base[0] + n[0] * b, base[1] + n[1] * b],
    [base[0] - n[0] * b, base[1] - n[1] * b],
  ];
}

export class StrokeStore {
  private strokes: CanvasStroke[] = [];

  push(stroke: CanvasStroke): void {
    for (const [u, v] of stroke.points) {
      if (!Number.isFinite(u) || !Number.isFinite(v)) {
        throw new Error('stroke points must be finite');
      }
    }
    if (stroke.points.length < 2) throw new Error('stroke needs >= 2 points');
    this.strokes.push(stroke);
  }

  undo(): CanvasStroke | undefined {
    return this.strokes.pop();
  }

  clear(): void {
    this.strokes = [];
  }

  get length(): number {
    return this.strokes.length;
  }

  list(): CanvasStroke[] {
    return this.strokes.slice();
  }

  /** Wire body for POST /scenes/{id}/execute. */
  toWire(): { strokes: CanvasStroke[] } {
    return { strokes: this.list() };
  }
}

export function serializeStrokes(strokes: CanvasStroke[]): string {
  return JSON.stringify({ strokes });
}

export function deserializeStrokes(text: string): CanvasStroke[] {
  const body = JSON.parse(text) as { strokes: CanvasStroke[] };
  return body.strokes;
}
