import { describe, expect, it } from 'vitest';

import {
  StrokeBuilder,
  StrokeStore,
  arrowHeadPreview,
  deserializeStrokes,
  serializeStrokes,
} from '../src/strokes.js';
import { CanvasStroke } from '../src/types.js';

const BOUNDS = { width: 320, height: 240 };

describe('StrokeBuilder', () => {
  it('captures pointer samples with a minimum spacing', () => {
    const b = new StrokeBuilder('freehand', 1, 4, 'geometric', BOUNDS);
    b.add(10, 10);
    b.add(10.5, 10.2); // closer than the sample gate, dropped
    b.add(20, 10);
    const stroke = b.finish()!;
    expect(stroke.points).toEqual([
      [10, 10],
      [20, 10],
    ]);
    expect(stroke.primitive_hint).toBeUndefined();
  });

  it('clamps samples to the canvas bounds', () => {
    const b = new StrokeBuilder('freehand', 1, 4, 'geometric', BOUNDS);
    b.add(-5, 10);
    b.add(400, 300);
    const stroke = b.finish()!;
    expect(stroke.points[0]).toEqual([0, 10]);
    expect(stroke.points[1]).toEqual([319, 239]);
  });

  it('single tap is not a stroke', () => {
    const b = new StrokeBuilder('arrow', 1, 4, 'geometric', BOUNDS);
    b.add(10, 10);
    expect(b.finish()).toBeNull();
  });

  it('arrow tool hints the server head in geometric mode only', () => {
    const geo = new StrokeBuilder('arrow', 1, 4, 'geometric', BOUNDS);
    geo.add(10, 10);
    geo.add(100, 10);
    expect(geo.finish()!.primitive_hint).toBe('arrow');

    const loose = new StrokeBuilder('arrow', 1, 4, 'loose', BOUNDS);
    loose.add(10, 10);
    loose.add(100, 10);
    expect(loose.finish()!.primitive_hint).toBeUndefined();
  });

  it('circle drag produces a center/radius perimeter stroke', () => {
    const b = new StrokeBuilder('circle', 2, 4, 'geometric', BOUNDS);
    b.add(100, 100); // center
    b.add(120, 100); // rim: radius 20
    const stroke = b.finish()!;
    expect(stroke.primitive_hint).toBe('circle');
    expect(stroke.color_ordinal).toBe(2);
    const cx = stroke.points.reduce((s, p) => s + p[0], 0) / stroke.points.length;
    const cy = stroke.points.reduce((s, p) => s + p[1], 0) / stroke.points.length;
    expect(cx).toBeCloseTo(100, 6);
    expect(cy).toBeCloseTo(100, 6);
    for (const [u, v] of stroke.points) {
      expect(Math.hypot(u - 100, v - 100)).toBeCloseTo(20, 6);
    }
  });
});

describe('arrowHeadPreview', () => {
  it('puts the apex on the final sample, base behind it', () => {
    const head = arrowHeadPreview(
      [
        [10, 50],
        [110, 50],
      ],
      5,
    )!;
    expect(head[0]).toEqual([110, 50]);
    expect(head[1][0]).toBeCloseTo(110 - 25, 6);
    expect(head[1][1]).toBeCloseTo(50 + 10, 6);
    expect(head[2][1]).toBeCloseTo(50 - 10, 6);
  });
});

describe('StrokeStore', () => {
  it('undo removes the latest stroke', () => {
    const store = new StrokeStore();
    const s1: CanvasStroke = { color_ordinal: 1, width_px: 4, points: [[0, 0], [9, 9]] };
    const s2: CanvasStroke = { color_ordinal: 2, width_px: 4, points: [[5, 5], [9, 1]] };
    store.push(s1);
    store.push(s2);
    expect(store.length).toBe(2);
    store.undo();
    expect(store.length).toBe(1);
    expect(store.list()[0]).toEqual(s1);
  });

  it('rejects degenerate strokes', () => {
    const store = new StrokeStore();
    expect(() =>
      store.push({ color_ordinal: 1, width_px: 4, points: [[0, 0]] }),
    ).toThrow();
    expect(() =>
      store.push({ color_ordinal: 1, width_px: 4, points: [[0, 0], [NaN, 1]] }),
    ).toThrow();
  });

  it('serialization round-trips byte-identically', () => {
    const strokes: CanvasStroke[] = [
      {
        color_ordinal: 1,
        width_px: 5,
        points: [
          [102.25, 108.5],
          [215, 98.75],
        ],
        primitive_hint: 'arrow',
      },
      { color_ordinal: 2, width_px: 4, points: [[60, 170], [82, 170]] },
    ];
    const text = serializeStrokes(strokes);
    const back = deserializeStrokes(text);
    expect(serializeStrokes(back)).toBe(text);
    expect(back).toEqual(strokes);
  });
});
