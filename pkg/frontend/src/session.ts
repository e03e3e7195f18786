/** One drawing session against one scene: stroke list, a single in-flight
 * execute (later submissions cancel earlier ones), and the overlay or error
 * banner derived from the latest response. */

import { Client, ServiceFailure } from './api.js';
import { OverlayState, overlayFromResponse } from './overlay.js';
import { StrokeStore } from './strokes.js';
import { CanvasStroke, ServiceError } from './types.js';

export class SketchSession {
  readonly store = new StrokeStore();
  overlay: OverlayState | null = null;
  banner: ServiceError | null = null;
  private inflight: AbortController | null = null;
  private generation = 0;

  constructor(readonly client: Client, readonly sceneId: string) {}

  addStroke(stroke: CanvasStroke): void {
    this.store.push(stroke);
    // the picture changed: previous results no longer describe it
    this.overlay = null;
    this.banner = null;
  }

  undo(): void {
    this.store.undo();
    this.overlay = null;
    this.banner = null;
  }

  clear(): void {
    this.store.clear();
    this.overlay = null;
    this.banner = null;
  }

  get pending(): boolean {
    return this.inflight !== null;
  }

  /** Submit the current strokes; cancels any submission still in flight.
   * Resolves to the overlay on success, null when superseded or failed
   * (failures land in ``banner`` with their pipeline stage). */
  async submit(): Promise<OverlayState | null> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const generation = ++this.generation;
    try {
      const resp = await this.client.execute(this.sceneId, this.store.list(), {
        signal: controller.signal,
      });
      if (generation !== this.generation) return null; // superseded
      this.overlay = overlayFromResponse(resp);
      this.banner = null;
      return this.overlay;
    } catch (err) {
      if (controller.signal.aborted || generation !== this.generation) {
        return null;
      }
      this.overlay = null;
      if (err instanceof ServiceFailure) {
        this.banner = err.detail;
      } else {
        this.banner = {
          stage: 'network',
          code: 'RequestFailed',
          message: String(err),
        };
      }
      return null;
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }
}
