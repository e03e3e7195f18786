import { describe, expect, it } from 'vitest';

import { overlayFromResponse } from '../src/overlay.js';
import { ExecuteResponse } from '../src/types.js';

const resp: ExecuteResponse = {
  scene_id: 'scene-0001',
  symbols: {
    symbols: [
      {
        kind: 'arrow',
        color: { rgb: [0, 255, 94], ordinal: 1 },
        style: 'geometric',
        keypoints: [
          { u: 102.03125, v: 108.5, role: 'start' },
          { u: 160.0, v: 90.25, role: 'waypoint' },
          { u: 215.875, v: 98.0, role: 'end' },
        ],
      },
      {
        kind: 'circle',
        color: { rgb: [0, 255, 247], ordinal: 2 },
        center: { u: 80.5, v: 180.125, role: 'center' },
        radius: 22,
      },
    ],
    unknown_components: [],
  },
  plan: {
    task_label: 'move then pick, 2 steps',
    steps: [],
    narration: ['Step 1: move.', 'Step 2: pick.'],
    actions: [[], []],
  },
  trace: [],
  events: [],
  report: {
    task: {},
    success: true,
    alignment: 0.97,
    per_step_alignment: [0.97],
    details: {},
  },
  trajectory_px: {
    instructed: [
      [
        [102, 108],
        [215, 98],
      ],
    ],
    executed: [
      [
        [102.1, 108.2],
        [214.9, 98.1],
      ],
    ],
  },
};

describe('overlayFromResponse', () => {
  it('uses the server keypoint pixels exactly, no re-derivation', () => {
    const overlay = overlayFromResponse(resp);
    expect(overlay.crosses).toHaveLength(4);
    expect(overlay.crosses[0]).toEqual({
      u: 102.03125,
      v: 108.5,
      role: 'start',
      ordinal: 1,
    });
    expect(overlay.crosses[3]).toEqual({
      u: 80.5,
      v: 180.125,
      role: 'center',
      ordinal: 2,
    });
  });

  it('ships trajectories and narration through untouched', () => {
    const overlay = overlayFromResponse(resp);
    expect(overlay.executed).toBe(resp.trajectory_px.executed);
    expect(overlay.instructed).toBe(resp.trajectory_px.instructed);
    expect(overlay.narration).toEqual(resp.plan.narration);
    expect(overlay.success).toBe(true);
    expect(overlay.alignment).toBeCloseTo(0.97);
  });
});
