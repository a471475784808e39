/** Shared test doubles: recording raster surfaces, a hand-cranked frame
 * scheduler, payload builders, and a fetch-level fake of the annotation
 * service for driving the app without a real server. */

import { Window } from "happy-dom";

import type { PairTask, RatingTask, VideoPayload } from "../src/api.js";
import type { FrameScheduler, RasterSurface } from "../src/playback.js";

export interface Draw {
  pixels: Uint8ClampedArray;
  width: number;
  height: number;
}

export class RecordingSurface implements RasterSurface {
  draws: Draw[] = [];

  drawFrame(pixels: Uint8ClampedArray<ArrayBuffer>, width: number, height: number): void {
    this.draws.push({ pixels: new Uint8ClampedArray(pixels), width, height });
  }

  get last(): Draw {
    const draw = this.draws[this.draws.length - 1];
    if (!draw) {
      throw new Error("nothing drawn yet");
    }
    return draw;
  }
}

export class ManualScheduler implements FrameScheduler {
  private nextId = 1;
  private readonly tasks = new Map<number, { callback: () => void; delayMs: number }>();

  schedule(callback: () => void, delayMs: number): number {
    const id = this.nextId++;
    this.tasks.set(id, { callback, delayMs });
    return id;
  }

  cancel(handle: number): void {
    this.tasks.delete(handle);
  }

  get pendingCount(): number {
    return this.tasks.size;
  }

  get pendingDelays(): number[] {
    return [...this.tasks.values()].map((t) => t.delayMs);
  }

  /** Run the oldest pending callback, as the timer would. */
  fire(): void {
    const next = this.tasks.entries().next();
    if (next.done) {
      throw new Error("no scheduled callback to fire");
    }
    const [id, task] = next.value;
    this.tasks.delete(id);
    task.callback();
  }
}

/** Payload whose frame f is a solid color (f, 10 + f, 200 - f). */
export function solidPayload(t: number, h: number, w: number, fps = 8): VideoPayload {
  const frames: string[] = [];
  for (let f = 0; f < t; f++) {
    const rgb = new Uint8Array(h * w * 3);
    for (let p = 0; p < rgb.length; p += 3) {
      rgb[p] = f;
      rgb[p + 1] = 10 + f;
      rgb[p + 2] = 200 - f;
    }
    frames.push(Buffer.from(rgb).toString("base64"));
  }
  return { t, h, w, fps, frames };
}

export function newDocument(): { document: Document; root: HTMLElement } {
  const window = new Window();
  const document = window.document as unknown as Document;
  const root = document.createElement("div");
  document.body.appendChild(root);
  return { document, root };
}

/** Click a radio by name/value; sets checked first so the handler sees a
 * consistent state regardless of the DOM emulator's default-action rules. */
export function pickRadio(root: ParentNode, name: string, value: string): void {
  const input = root.querySelector<HTMLInputElement>(`input[name="${name}"][value="${value}"]`);
  if (!input) {
    throw new Error(`no radio ${name}=${value}`);
  }
  input.checked = true;
  input.click();
}

export function clickAction(root: ParentNode, action: string): HTMLButtonElement {
  const button = root.querySelector<HTMLButtonElement>(`button[data-action="${action}"]`);
  if (!button) {
    throw new Error(`no button with action ${action}`);
  }
  button.click();
  return button;
}

export function submitButton(root: ParentNode): HTMLButtonElement {
  const button = root.querySelector<HTMLButtonElement>('button[data-action="submit"]');
  if (!button) {
    throw new Error("no submit button rendered");
  }
  return button;
}

interface CannedResponse {
  status: number;
  body: unknown;
}

/** Fetch-level fake of the annotation service, just enough semantics to
 * drive the session controller: task queues, video payloads, and
 * scriptable submission outcomes. */
export class FakeService {
  ratingTasks: RatingTask[] = [];
  pairTasks: PairTask[] = [];
  videos = new Map<string, VideoPayload>();
  ratingOutcomes: CannedResponse[] = [];
  pairOutcomes: CannedResponse[] = [];
  ratingPosts: Array<Record<string, unknown>> = [];
  pairPosts: Array<Record<string, unknown>> = [];

  readonly fetchFn = async (input: string, init?: RequestInit): Promise<Response> =>
    this.route(input, init);

  private route(input: string, init?: RequestInit): Response {
    const url = new URL(input, "http://fake.test");
    if (url.pathname === "/api/next-task") {
      const mode = url.searchParams.get("mode");
      const task = mode === "rating" ? this.ratingTasks[0] : this.pairTasks[0];
      if (!task) {
        return json(404, { error: "NoTasksRemaining", message: `no open ${mode} tasks` });
      }
      return json(200, task);
    }
    if (url.pathname.startsWith("/api/video/")) {
      const id = decodeURIComponent(url.pathname.slice("/api/video/".length));
      const payload = this.videos.get(id);
      if (!payload) {
        return json(404, { error: "NotFound", message: `no video '${id}' in this study` });
      }
      return json(200, payload);
    }
    if (url.pathname === "/api/rating" && init?.method === "POST") {
      this.ratingPosts.push(JSON.parse(String(init.body)) as Record<string, unknown>);
      const outcome = this.ratingOutcomes.shift();
      if (outcome) {
        return json(outcome.status, outcome.body);
      }
      this.ratingTasks.shift();
      return json(200, { ok: true, records: 4 });
    }
    if (url.pathname === "/api/pair" && init?.method === "POST") {
      this.pairPosts.push(JSON.parse(String(init.body)) as Record<string, unknown>);
      const outcome = this.pairOutcomes.shift();
      if (outcome) {
        return json(outcome.status, outcome.body);
      }
      this.pairTasks.shift();
      return json(200, { ok: true, records: 4 });
    }
    return json(404, { error: "NotFound", message: `no route ${url.pathname}` });
  }
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export class MemoryDraftStore {
  private readonly items = new Map<string, string>();

  getItem(key: string): string | null {
    return this.items.get(key) ?? null;
  }

  setItem(key: string, value: string): void {
    this.items.set(key, value);
  }

  removeItem(key: string): void {
    this.items.delete(key);
  }

  get size(): number {
    return this.items.size;
  }
}
