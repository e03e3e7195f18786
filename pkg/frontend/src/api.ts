/** Thin typed client over the sketchplan service endpoints. */

import {
  CanvasStroke,
  ExecuteResponse,
  ServiceError,
  isServiceError,
} from './types.js';

export class ServiceFailure extends Error {
  constructor(readonly detail: ServiceError, readonly status: number) {
    super(`${detail.stage}/${detail.code}: ${detail.message}`);
  }
}

export class Client {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  async createScene(scene: unknown): Promise<string> {
    const r = await this.fetchImpl(`${this.baseUrl}/scenes`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(scene),
    });
    const body = await r.json();
    if (!r.ok) throw this.failure(body, r.status);
    return (body as { id: string }).id;
  }

  renderUrl(sceneId: string): string {
    return `${this.baseUrl}/scenes/${sceneId}/render`;
  }

  async execute(
    sceneId: string,
    strokes: CanvasStroke[],
    options: { signal?: AbortSignal } = {},
  ): Promise<ExecuteResponse> {
    const r = await this.fetchImpl(`${this.baseUrl}/scenes/${sceneId}/execute`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ strokes }),
      signal: options.signal,
    });
    const body = await r.json();
    if (!r.ok) throw this.failure(body, r.status);
    return body as ExecuteResponse;
  }

  private failure(body: unknown, status: number): ServiceFailure {
    if (isServiceError(body)) return new ServiceFailure(body, status);
    return new ServiceFailure(
      { stage: 'service', code: 'UnknownError', message: JSON.stringify(body) },
      status,
    );
  }
}
