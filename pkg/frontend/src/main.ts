/** Canvas and toolbar wiring for the sketch console.
 *
 * The page loads a scene render as the canvas background; the user draws
 * colored strokes over it, submits, and the parsed keypoints, narration and
 * executed trajectory come back from the service and are painted verbatim.
 */

import { Client } from './api.js';
import { SketchSession } from './session.js';
import { StrokeBuilder, arrowHeadPreview } from './strokes.js';
import { DEFAULT_PALETTE, DrawMode, Tool } from './types.js';

const SERVICE = (window as unknown as { SKETCHPLAN_URL?: string }).SKETCHPLAN_URL
  ?? 'http://127.0.0.1:8021';

function rgb(c: [number, number, number]): string {
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = '',
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

async function boot(): Promise<void> {
  const client = new Client(SERVICE);
  const root = document.getElementById('app')!;

  // scene picker: paste scene JSON, or use the demo scene baked into the page
  const sceneText = (document.getElementById('scene-json') as HTMLTextAreaElement).value;
  const sceneId = await client.createScene(JSON.parse(sceneText));

  const background = new Image();
  background.crossOrigin = 'anonymous';
  background.src = client.renderUrl(sceneId);
  await background.decode();

  const canvas = el('canvas', {
    width: String(background.naturalWidth),
    height: String(background.naturalHeight),
    style: 'border:1px solid #555; image-rendering:pixelated; touch-action:none;'
      + ' width:640px;',
  });
  const status = el('div', { class: 'status' });
  const narration = el('ul', { class: 'narration' });
  const banner = el('div', { class: 'banner', style: 'color:#ff6a8a;' });
  const toolbar = el('div', { class: 'toolbar' });
  root.append(toolbar, canvas, banner, status, narration);

  const session = new SketchSession(client, sceneId);
  let tool: Tool = 'arrow';
  let mode: DrawMode = 'geometric';
  let ordinal = 1;
  let widthPx = 5;
  let builder: StrokeBuilder | null = null;

  // toolbar: tools, mode, palette, undo, submit
  for (const t of ['arrow', 'circle', 'freehand'] as Tool[]) {
    const b = el('button', {}, t);
    b.onclick = () => { tool = t; };
    toolbar.append(b);
  }
  const modeBtn = el('button', {}, 'mode: geometric');
  modeBtn.onclick = () => {
    mode = mode === 'geometric' ? 'loose' : 'geometric';
    modeBtn.textContent = `mode: ${mode}`;
  };
  toolbar.append(modeBtn);
  for (const entry of DEFAULT_PALETTE) {
    const b = el('button', {
      style: `background:${rgb(entry.rgb)}; width:2.2em;`,
      title: `step ${entry.ordinal}`,
    }, String(entry.ordinal));
    b.onclick = () => { ordinal = entry.ordinal; };
    toolbar.append(b);
  }
  const undoBtn = el('button', {}, 'undo');
  undoBtn.onclick = () => { session.undo(); paint(); };
  const submitBtn = el('button', {}, 'run');
  submitBtn.onclick = () => void submit();
  toolbar.append(undoBtn, submitBtn);

  const ctx = canvas.getContext('2d')!;
  const scaleX = () => canvas.width / canvas.getBoundingClientRect().width;
  const scaleY = () => canvas.height / canvas.getBoundingClientRect().height;

  canvas.onpointerdown = (ev) => {
    builder = new StrokeBuilder(tool, ordinal, widthPx, mode, {
      width: canvas.width,
      height: canvas.height,
    });
    const r = canvas.getBoundingClientRect();
    builder.add((ev.clientX - r.left) * scaleX(), (ev.clientY - r.top) * scaleY());
    canvas.setPointerCapture(ev.pointerId);
  };
  canvas.onpointermove = (ev) => {
    if (!builder) return;
    const r = canvas.getBoundingClientRect();
    builder.add((ev.clientX - r.left) * scaleX(), (ev.clientY - r.top) * scaleY());
    paint();
  };
  canvas.onpointerup = () => {
    if (builder) {
      const stroke = builder.finish();
      if (stroke) session.addStroke(stroke);
      builder = null;
      paint();
    }
  };

  async function submit(): Promise<void> {
    status.textContent = 'running...';
    await session.submit();
    status.textContent = session.overlay
      ? `${session.overlay.taskLabel}  success=${session.overlay.success}`
        + `  alignment=${session.overlay.alignment.toFixed(3)}`
      : '';
    paint();
  }

  function drawPolyline(points: [number, number][], color: string, dash: number[]): void {
    if (points.length < 2) return;
    ctx.save();
    ctx.strokeStyle = color;
    ctx.setLineDash(dash);
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(points[0][0], points[0][1]);
    for (const [u, v] of points.slice(1)) ctx.lineTo(u, v);
    ctx.stroke();
    ctx.restore();
  }

  function paint(): void {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.drawImage(background, 0, 0);

    const color = (o: number) =>
      rgb(DEFAULT_PALETTE.find((p) => p.ordinal === o)?.rgb ?? [255, 255, 255]);

    for (const s of session.store.list()) {
      drawPolyline(s.points, color(s.color_ordinal), []);
      if (s.primitive_hint === 'arrow') {
        const head = arrowHeadPreview(s.points, s.width_px);
        if (head) {
          ctx.fillStyle = color(s.color_ordinal);
          ctx.beginPath();
          ctx.moveTo(head[0][0], head[0][1]);
          ctx.lineTo(head[1][0], head[1][1]);
          ctx.lineTo(head[2][0], head[2][1]);
          ctx.fill();
        }
      }
    }
    if (builder) drawPolyline(builder.preview(), color(ordinal), [2, 2]);

    // overlay: server-provided pixels, drawn verbatim
    banner.textContent = session.banner
      ? `[${session.banner.stage}] ${session.banner.code}: ${session.banner.message}`
      : '';
    narration.replaceChildren();
    if (session.overlay) {
      for (const line of session.overlay.narration) {
        narration.append(el('li', {}, line));
      }
      for (const poly of session.overlay.executed) {
        drawPolyline(poly, '#ffffff', [4, 3]);
      }
      ctx.strokeStyle = '#ffffff';
      for (const c of session.overlay.crosses) {
        ctx.beginPath();
        ctx.moveTo(c.u - 4, c.v);
        ctx.lineTo(c.u + 4, c.v);
        ctx.moveTo(c.u, c.v - 4);
        ctx.lineTo(c.u, c.v + 4);
        ctx.stroke();
      }
    }
  }

  paint();
}

boot().catch((err) => {
  const root = document.getElementById('app');
  if (root) root.textContent = `failed to start: ${err}`;
});
