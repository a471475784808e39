/** End-to-end: the real annotation service (spawned as a child process) driven
 * through the real UI under a DOM emulator. Three scripted annotators work one
 * comparison pair; one of them also completes a rating task and receives the
 * pair with displayed_swap set, so the whole un-swap path is exercised against
 * the authoritative server, not a fake. */

import { execFileSync, spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  ApiClient,
  DIMENSIONS,
  type Choice,
  type Dimension,
  type PairTask,
  type RatingTask,
  type Score,
} from "../src/api.js";
import { AnnotatorApp } from "../src/app.js";
import { decodeFrames } from "../src/playback.js";
import {
  ManualScheduler,
  RecordingSurface,
  clickAction,
  newDocument,
  pickRadio,
  submitButton,
} from "./helpers.js";

const PROMPT = "a red cube rotating on a table";

const BUILD_STUDY = `
import sys
import numpy as np
from vqbench.pairstudy import PairSpec, make_pair_id
from vqbench.service import build_study
from vqbench.store import VideoTensor

study = sys.argv[1]
rng = np.random.default_rng(5)
videos = {vid: VideoTensor(rng.random((4, 6, 6, 3)), 8.0) for vid in ("va", "vb")}
pid = make_pair_id("va", "vb")
build_study(study, videos,
            rating_tasks=[("va", ${JSON.stringify(PROMPT)})],
            pair_tasks=[(PairSpec(pid, "va", "vb", "p0"), ${JSON.stringify(PROMPT)})])
print(pid)
`;

let studyDir: string;
let pairId: string;
let server: ChildProcessWithoutNullStreams;
let baseUrl: string;

beforeAll(async () => {
  studyDir = mkdtempSync(join(tmpdir(), "vq-ui-study-"));
  pairId = execFileSync("python3", ["-c", BUILD_STUDY, studyDir]).toString().trim();
  server = spawn("python3", [
    "-m", "vqbench.cli", "serve", "--study", studyDir, "--port", "0", "--seed", "0",
  ]);
  baseUrl = await new Promise<string>((resolve, reject) => {
    let out = "";
    let err = "";
    const timer = setTimeout(
      () => reject(new Error(`server never announced a port\nstdout: ${out}\nstderr: ${err}`)),
      20_000,
    );
    server.stdout.on("data", (chunk: Buffer) => {
      out += chunk.toString();
      const match = out.match(/on (http:\/\/127\.0\.0\.1:\d+)/);
      if (match && match[1]) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    server.stderr.on("data", (chunk: Buffer) => {
      err += chunk.toString();
    });
    server.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`server exited early (code ${code})\nstderr: ${err}`));
    });
  });
});

afterAll(() => {
  server?.kill();
  if (studyDir) {
    rmSync(studyDir, { recursive: true, force: true });
  }
});

interface Session {
  app: AnnotatorApp;
  root: HTMLElement;
  paneSurface(pane: string): RecordingSurface;
}

function makeSession(annotatorId: string): Session {
  const { root } = newDocument();
  const surfaces: Array<{ pane: string; surface: RecordingSurface }> = [];
  const app = new AnnotatorApp({
    root,
    api: new ApiClient(baseUrl),
    annotatorId,
    surfaceFactory: (canvas) => {
      const surface = new RecordingSurface();
      const figure = canvas.closest("figure") as HTMLElement | null;
      surfaces.push({ pane: figure?.dataset["pane"] ?? "?", surface });
      return surface;
    },
    scheduler: new ManualScheduler(),
  });
  const paneSurface = (pane: string): RecordingSurface => {
    for (let i = surfaces.length - 1; i >= 0; i--) {
      const entry = surfaces[i];
      if (entry && entry.pane === pane) {
        return entry.surface;
      }
    }
    throw new Error(`no surface created for pane ${pane}`);
  };
  return { app, root, paneSurface };
}

function displayedFor(canonical: Choice, displayedSwap: boolean): Choice {
  if (!displayedSwap) {
    return canonical;
  }
  return canonical === "A" ? "B" : "A";
}

/** Work the open pair through the UI, clicking in displayed coordinates so the
 * stored canonical choices come out as `canonical`. Returns the served task. */
async function judgePair(
  session: Session,
  canonical: Record<Dimension, Choice>,
): Promise<PairTask> {
  const { app, root } = session;
  const task = app.currentTask();
  if (task?.mode !== "pair") {
    throw new Error(`expected a pair task, got ${JSON.stringify(task)}`);
  }
  for (const dimension of DIMENSIONS) {
    pickRadio(root, `choose-${dimension}`, displayedFor(canonical[dimension], task.displayed_swap));
  }
  expect(submitButton(root).disabled).toBe(false);
  clickAction(root, "submit");
  await app.settled();
  return task;
}

interface LogRecord {
  type: string;
  subject_id?: string;
  annotator_id?: string;
  video_id?: string;
  pair_id?: string;
  dimension: string;
  score?: number;
  choice?: string;
  displayed_swap?: boolean;
}

function readLog(): LogRecord[] {
  return readFileSync(join(studyDir, "log.jsonl"), "utf-8")
    .split("\n")
    .filter((line) => line.trim() !== "")
    .map((line) => JSON.parse(line) as LogRecord);
}

describe("scripted annotation sessions against the live service", () => {
  const ratingScores: Record<Dimension, Score> = { static: 4, temporal: 3, dynamic: 5, tv: 2 };
  const canonicalIntents: Record<string, Record<Dimension, Choice>> = {
    a1: { static: "B", temporal: "A", dynamic: "B", tv: "B" },
    a2: { static: "B", temporal: "A", dynamic: "B", tv: "B" },
    a3: { static: "A", temporal: "A", dynamic: "B", tv: "A" },
  };
  // per-dimension majorities of the three canonical intents above
  const handVerdict: Record<Dimension, Choice> = {
    static: "B",
    temporal: "A",
    dynamic: "B",
    tv: "B",
  };
  const swapFlags: Record<string, boolean> = {};

  it("annotator a1 records the first pair judgment", async () => {
    const session = makeSession("a1");
    await session.app.start("pair");
    const task = await judgePair(session, canonicalIntents["a1"]!);
    swapFlags["a1"] = task.displayed_swap;
    expect(task.pair_id).toBe(pairId);
    expect(session.root.querySelector('[data-role="done"]')).not.toBeNull();
  });

  it("annotator a2 completes a rating task and a swapped pair task in one session", async () => {
    const session = makeSession("a2");
    const { app, root } = session;

    await app.start("rating");
    const rating = app.currentTask();
    expect(rating?.mode).toBe("rating");
    expect((rating as RatingTask).video_id).toBe("va");
    expect(root.querySelector('[data-role="prompt"]')?.textContent).toBe(PROMPT);
    for (const dimension of DIMENSIONS) {
      pickRadio(root, `rate-${dimension}`, String(ratingScores[dimension]));
    }
    clickAction(root, "submit");
    await app.settled();
    expect(root.querySelector('[data-role="done"]')?.textContent).toContain("rating");

    root.querySelector<HTMLButtonElement>('button[data-mode="pair"]')?.click();
    await app.settled();
    const task = app.currentTask();
    expect(task?.mode).toBe("pair");
    expect((task as PairTask).displayed_swap).toBe(true);

    // under the swap the left "A" pane must carry the canonical second video
    const payloadB = await new ApiClient(baseUrl).video((task as PairTask).video_b);
    const frame0 = decodeFrames(payloadB)[0]!;
    const drawnLeft = session.paneSurface("left").draws[0]!;
    expect(drawnLeft.width).toBe(payloadB.w);
    expect(drawnLeft.height).toBe(payloadB.h);
    expect([...drawnLeft.pixels]).toEqual([...frame0]);

    const served = await judgePair(session, canonicalIntents["a2"]!);
    swapFlags["a2"] = served.displayed_swap;
  });

  it("annotator a3 casts the closing judgment", async () => {
    const session = makeSession("a3");
    await session.app.start("pair");
    const task = await judgePair(session, canonicalIntents["a3"]!);
    swapFlags["a3"] = task.displayed_swap;
  });

  it("stores canonical choices, un-swapped, with the swap flags on record", () => {
    const log = readLog();

    const ratings = log.filter((rec) => rec.type === "rating");
    expect(ratings).toHaveLength(4);
    expect(new Set(ratings.map((rec) => rec.dimension))).toEqual(new Set(DIMENSIONS));
    for (const rec of ratings) {
      expect(rec.subject_id).toBe("a2");
      expect(rec.video_id).toBe("va");
      expect(rec.score).toBe(ratingScores[rec.dimension as Dimension]);
    }

    const judgments = log.filter((rec) => rec.type === "pair");
    expect(judgments).toHaveLength(12);
    for (const [annotator, intent] of Object.entries(canonicalIntents)) {
      const own = judgments.filter((rec) => rec.annotator_id === annotator);
      expect(new Set(own.map((rec) => rec.dimension))).toEqual(new Set(DIMENSIONS));
      for (const rec of own) {
        expect(rec.pair_id).toBe(pairId);
        expect(rec.choice).toBe(intent[rec.dimension as Dimension]);
        expect(rec.displayed_swap).toBe(swapFlags[annotator]);
      }
    }
    expect(Object.values(swapFlags).some(Boolean)).toBe(true);
  });

  it("the three judgments yield the hand-computed majority verdict", () => {
    const judgments = readLog().filter((rec) => rec.type === "pair");
    for (const dimension of DIMENSIONS) {
      const votes = judgments.filter((rec) => rec.dimension === dimension);
      expect(votes).toHaveLength(3);
      const aVotes = votes.filter((rec) => rec.choice === "A").length;
      const winner: Choice = aVotes > votes.length - aVotes ? "A" : "B";
      expect(winner, `majority for ${dimension}`).toBe(handVerdict[dimension]);
    }
  });

  it("reports the pair closed and offers nothing further", async () => {
    const api = new ApiClient(baseUrl);
    const progress = await api.progress();
    expect(progress.ratings).toBe(4);
    expect(progress.pair_judgments).toBe(12);
    expect(progress.pair_tasks_closed).toBe(1);

    expect(await api.nextTask("a4", "pair")).toBeNull();

    const session = makeSession("a4");
    await session.app.start("pair");
    expect(session.root.querySelector('[data-role="done"]')).not.toBeNull();
  });
});
