/** Typed client for the annotation service HTTP API.
 *
 * Endpoints: GET /api/next-task, GET /api/video/{id}, POST /api/rating,
 * POST /api/pair, GET /api/progress.  All responses are JSON; error
 * responses carry `{error, message}` and map to `ApiError`, except the
 * task queue running dry, which `nextTask` reports as `null`.
 */

export const DIMENSIONS = ["static", "temporal", "dynamic", "tv"] as const;
export type Dimension = (typeof DIMENSIONS)[number];

export type Score = 1 | 2 | 3 | 4 | 5;
export type Choice = "A" | "B";
export type Mode = "rating" | "pair";

export interface RatingTask {
  mode: "rating";
  task_id: string;
  video_id: string;
  prompt: string;
}

export interface PairTask {
  mode: "pair";
  task_id: string;
  pair_id: string;
  /** Canonical first video; shown in the "A" pane unless displayed_swap. */
  video_a: string;
  /** Canonical second video; shown in the "B" pane unless displayed_swap. */
  video_b: string;
  prompt: string;
  /** When true the panes are exchanged for display; choices are still
   * reported against the displayed layout and the server restores the
   * canonical orientation before storage. */
  displayed_swap: boolean;
}

export type Task = RatingTask | PairTask;

export interface VideoPayload {
  t: number;
  h: number;
  w: number;
  fps: number;
  /** One base64 string per frame: row-major uint8 RGB, h*w*3 bytes. */
  frames: string[];
}

export interface AnnotatorProgress {
  ratings: number;
  pair_judgments: number;
}

export interface Progress {
  ratings: number;
  pair_judgments: number;
  rating_tasks: number;
  pair_tasks: number;
  pair_tasks_closed: number;
  annotators: Record<string, AnnotatorProgress>;
}

export class ApiError extends Error {
  override readonly name = "ApiError";

  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

interface ErrorBody {
  error?: string;
  message?: string;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  /** Next open task for this annotator, or null when none remain. */
  async nextTask(annotator: string, mode: Mode): Promise<Task | null> {
    const query = new URLSearchParams({ annotator, mode });
    const res = await this.fetchFn(`${this.baseUrl}/api/next-task?${query}`);
    if (res.status === 404) {
      const body = (await this.json(res)) as ErrorBody;
      if (body.error === "NoTasksRemaining") {
        return null;
      }
      throw new ApiError(res.status, body.error ?? "NotFound", body.message ?? "not found");
    }
    return (await this.parse(res)) as Task;
  }

  async video(videoId: string): Promise<VideoPayload> {
    const res = await this.fetchFn(`${this.baseUrl}/api/video/${encodeURIComponent(videoId)}`);
    return (await this.parse(res)) as VideoPayload;
  }

  /** Submit all four Likert scores for one video. */
  async submitRating(
    annotatorId: string,
    videoId: string,
    scores: Record<Dimension, Score>,
  ): Promise<void> {
    await this.post("/api/rating", {
      annotator_id: annotatorId,
      video_id: videoId,
      scores,
    });
  }

  /** Submit all four A/B choices for one pair, in displayed coordinates. */
  async submitPair(
    annotatorId: string,
    pairId: string,
    choices: Record<Dimension, Choice>,
  ): Promise<void> {
    await this.post("/api/pair", {
      annotator_id: annotatorId,
      pair_id: pairId,
      choices,
    });
  }

  async progress(): Promise<Progress> {
    const res = await this.fetchFn(`${this.baseUrl}/api/progress`);
    return (await this.parse(res)) as Progress;
  }

  private async post(path: string, body: unknown): Promise<unknown> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return await this.parse(res);
  }

  private async parse(res: Response): Promise<unknown> {
    const body = await this.json(res);
    if (!res.ok) {
      const err = body as ErrorBody;
      throw new ApiError(res.status, err.error ?? `HTTP ${res.status}`, err.message ?? res.statusText);
    }
    return body;
  }

  private async json(res: Response): Promise<unknown> {
    try {
      return await res.json();
    } catch {
      return {};
    }
  }
}
