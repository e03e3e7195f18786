/** Wire types shared with the sketchplan service (see docs/formats.md). */

export type Tool = 'arrow' | 'circle' | 'freehand';
export type DrawMode = 'geometric' | 'loose';

export interface CanvasStroke {
  color_ordinal: number;
  width_px: number;
  points: [number, number][];
  primitive_hint?: Tool;
}

export interface PaletteEntry {
  rgb: [number, number, number];
  ordinal: number;
}

/** The three default step colors; extra steps may add separated colors. */
export const DEFAULT_PALETTE: PaletteEntry[] = [
  { rgb: [0, 255, 94], ordinal: 1 },
  { rgb: [0, 255, 247], ordinal: 2 },
  { rgb: [255, 106, 138], ordinal: 3 },
];

export interface WireKeypoint {
  u: number;
  v: number;
  role: 'start' | 'waypoint' | 'end' | 'center';
}

export interface WireArrow {
  kind: 'arrow';
  color: PaletteEntry;
  style: string;
  keypoints: WireKeypoint[];
}

export interface WireCircle {
  kind: 'circle';
  color: PaletteEntry;
  center: WireKeypoint;
  radius: number;
}

export type WireSymbol = WireArrow | WireCircle;

export interface SymbolSetWire {
  symbols: WireSymbol[];
  unknown_components: {
    ordinal: number;
    pixel_count: number;
    bbox: number[];
    reason: string;
  }[];
}

export interface PlanWire {
  task_label: string;
  steps: unknown[];
  narration: string[];
  actions: unknown[][];
}

export interface ReportWire {
  task: Record<string, unknown>;
  success: boolean;
  alignment: number;
  per_step_alignment: number[];
  details: Record<string, unknown>;
}

export interface ExecuteResponse {
  scene_id: string;
  symbols: SymbolSetWire;
  plan: PlanWire;
  trace: unknown[];
  events: { tick: number; kind: string; step: number }[];
  report: ReportWire;
  trajectory_px: {
    instructed: [number, number][][];
    executed: [number, number][][];
  };
}

export interface ServiceError {
  stage: string;
  code: string;
  message: string;
}

export function isServiceError(x: unknown): x is ServiceError {
  return (
    typeof x === 'object' &&
    x !== null &&
    'stage' in x &&
    'code' in x &&
    'message' in x
  );
}
