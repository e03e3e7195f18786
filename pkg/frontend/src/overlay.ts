/** Pure translation of an execute response into drawable overlay items.
 * Every pixel coordinate is taken verbatim from the server; the client
 * never re-derives keypoints or trajectories. */

import { ExecuteResponse, WireSymbol } from './types.js';

export interface Cross {
  u: number;
  v: number;
  role: string;
  ordinal: number;
}

export interface OverlayState {
  crosses: Cross[];
  instructed: [number, number][][];
  executed: [number, number][][];
  narration: string[];
  taskLabel: string;
  success: boolean;
  alignment: number;
}

function symbolCrosses(sym: WireSymbol): Cross[] {
  if (sym.kind === 'arrow') {
    return sym.keypoints.map((k) => ({
      u: k.u,
      v: k.v,
      role: k.role,
      ordinal: sym.color.ordinal,
    }));
  }
  return [
    {
      u: sym.center.u,
      v: sym.center.v,
      role: sym.center.role,
      ordinal: sym.color.ordinal,
    },
  ];
}

export function overlayFromResponse(resp: ExecuteResponse): OverlayState {
  return {
    crosses: resp.symbols.symbols.flatMap(symbolCrosses),
    instructed: resp.trajectory_px.instructed,
    executed: resp.trajectory_px.executed,
    narration: resp.plan.narration.slice(),
    taskLabel: resp.plan.task_label,
    success: resp.report.success,
    alignment: resp.report.alignment,
  };
}
