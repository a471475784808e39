/** Frame-accurate raster playback of the service's base64 RGB clips.
 *
 * Frames are decoded once and drawn to an injected `RasterSurface`; a
 * `FrameScheduler` paces the loop at the payload fps.  Both seams exist so
 * tests can substitute recording surfaces and a hand-cranked clock.
 */

import type { VideoPayload } from "./api.js";

export class DecodeError extends Error {
  override readonly name = "DecodeError";
}

export interface RasterSurface {
  drawFrame(pixels: Uint8ClampedArray<ArrayBuffer>, width: number, height: number): void;
}

export interface FrameScheduler {
  schedule(callback: () => void, delayMs: number): number;
  cancel(handle: number): void;
}

export const timerScheduler: FrameScheduler = {
  schedule: (callback, delayMs) => setTimeout(callback, delayMs) as unknown as number,
  cancel: (handle) => clearTimeout(handle),
};

/** Decode every frame to RGBA rasters (alpha forced opaque). */
export function decodeFrames(payload: VideoPayload): Uint8ClampedArray<ArrayBuffer>[] {
  const { t, h, w, frames } = payload;
  if (frames.length !== t) {
    throw new DecodeError(`payload declares ${t} frames but carries ${frames.length}`);
  }
  const rgbBytes = h * w * 3;
  return frames.map((encoded, index) => {
    let binary: string;
    try {
      binary = atob(encoded);
    } catch {
      throw new DecodeError(`frame ${index}: invalid base64`);
    }
    if (binary.length !== rgbBytes) {
      throw new DecodeError(`frame ${index}: expected ${rgbBytes} bytes, got ${binary.length}`);
    }
    const rgba = new Uint8ClampedArray(h * w * 4);
    for (let src = 0, dst = 0; src < rgbBytes; src += 3, dst += 4) {
      rgba[dst] = binary.charCodeAt(src);
      rgba[dst + 1] = binary.charCodeAt(src + 1);
      rgba[dst + 2] = binary.charCodeAt(src + 2);
      rgba[dst + 3] = 255;
    }
    return rgba;
  });
}

/** Looping playback over a decoded clip; frame index always in [0, T). */
export class Player {
  readonly fps: number;
  readonly width: number;
  readonly height: number;

  private readonly frames: Uint8ClampedArray<ArrayBuffer>[];
  private index = 0;
  private handle: number | null = null;
  private isPlaying = false;

  constructor(
    payload: VideoPayload,
    private readonly surface: RasterSurface,
    private readonly scheduler: FrameScheduler = timerScheduler,
  ) {
    this.frames = decodeFrames(payload);
    if (this.frames.length === 0) {
      throw new DecodeError("clip has no frames");
    }
    if (!(payload.fps > 0)) {
      throw new DecodeError(`fps must be positive, got ${payload.fps}`);
    }
    this.fps = payload.fps;
    this.width = payload.w;
    this.height = payload.h;
  }

  get playing(): boolean {
    return this.isPlaying;
  }

  get frameIndex(): number {
    return this.index;
  }

  get frameCount(): number {
    return this.frames.length;
  }

  get frameDelayMs(): number {
    return 1000 / this.fps;
  }

  loopDurationMs(): number {
    return (this.frames.length / this.fps) * 1000;
  }

  play(): void {
    if (this.isPlaying) {
      return;
    }
    this.isPlaying = true;
    this.draw();
    this.scheduleNext();
  }

  pause(): void {
    this.isPlaying = false;
    if (this.handle !== null) {
      this.scheduler.cancel(this.handle);
      this.handle = null;
    }
  }

  /** Restart from frame 0 and play, whatever the current position. */
  replay(): void {
    this.pause();
    this.index = 0;
    this.play();
  }

  dispose(): void {
    this.pause();
  }

  private draw(): void {
    const frame = this.frames[this.index];
    if (frame !== undefined) {
      this.surface.drawFrame(frame, this.width, this.height);
    }
  }

  private scheduleNext(): void {
    this.handle = this.scheduler.schedule(() => this.tick(), this.frameDelayMs);
  }

  private tick(): void {
    if (!this.isPlaying) {
      return;
    }
    this.index = (this.index + 1) % this.frames.length;
    this.draw();
    this.scheduleNext();
  }
}

/** Decode a payload and start looping playback immediately. */
export function loadAndPlay(
  payload: VideoPayload,
  surface: RasterSurface,
  scheduler: FrameScheduler = timerScheduler,
): Player {
  const player = new Player(payload, surface, scheduler);
  player.play();
  return player;
}
