/** Browser bootstrap: canvas-backed surfaces, real timers, localStorage
 * drafts.  Annotator id and starting mode come from the query string:
 * `/?annotator=ann1&mode=pair`. */

import { ApiClient, type Mode } from "./api.js";
import { AnnotatorApp } from "./app.js";
import type { RasterSurface } from "./playback.js";

function canvasSurface(canvas: HTMLCanvasElement): RasterSurface {
  const context = canvas.getContext("2d");
  if (!context) {
    throw new Error("canvas 2d context unavailable");
  }
  return {
    drawFrame(pixels, width, height) {
      if (canvas.width !== width) {
        canvas.width = width;
      }
      if (canvas.height !== height) {
        canvas.height = height;
      }
      context.putImageData(new ImageData(pixels, width, height), 0, 0);
    },
  };
}

window.addEventListener("DOMContentLoaded", () => {
  const params = new URLSearchParams(window.location.search);
  const mode: Mode = params.get("mode") === "pair" ? "pair" : "rating";
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app root element");
  }
  const app = new AnnotatorApp({
    root,
    api: new ApiClient(""),
    annotatorId: params.get("annotator") ?? "anonymous",
    surfaceFactory: canvasSurface,
    draftStore: window.localStorage,
  });
  void app.start(mode);
});
