/** Session controller: one annotator, one task on screen at a time.
 *
 * Wires the task queue, raster playback, and the two forms into the DOM.
 * Rendering targets an injected root element; the raster surface factory
 * and frame scheduler are injected so the whole flow runs under a DOM
 * emulator with fake surfaces and a hand-cranked clock.
 */

import {
  ApiClient,
  ApiError,
  DIMENSIONS,
  type Dimension,
  type Mode,
  type PairTask,
  type RatingTask,
  type Task,
} from "./api.js";
import {
  loadAndPlay,
  timerScheduler,
  type FrameScheduler,
  type Player,
  type RasterSurface,
} from "./playback.js";
import { PairFormState } from "./pair_form.js";
import { RatingFormState } from "./rating_form.js";

export const DIMENSION_LABELS: Record<Dimension, string> = {
  static: "Static quality",
  temporal: "Temporal smoothness",
  dynamic: "Dynamic degree",
  tv: "Text-video correspondence",
};

export interface DraftStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export type SurfaceFactory = (canvas: HTMLCanvasElement) => RasterSurface;

export interface AppOptions {
  root: HTMLElement;
  api: ApiClient;
  annotatorId: string;
  surfaceFactory: SurfaceFactory;
  scheduler?: FrameScheduler;
  draftStore?: DraftStore;
}

export class AnnotatorApp {
  private readonly root: HTMLElement;
  private readonly doc: Document;
  private readonly api: ApiClient;
  private readonly annotatorId: string;
  private readonly surfaceFactory: SurfaceFactory;
  private readonly scheduler: FrameScheduler;
  private readonly draftStore: DraftStore | null;

  private mode: Mode = "rating";
  private task: Task | null = null;
  private players: Player[] = [];
  private busy = false;
  private playbackBroken = false;
  private chain: Promise<void> = Promise.resolve();

  private taskEl!: HTMLElement;
  private statusEl!: HTMLElement;
  private submitBtn: HTMLButtonElement | null = null;

  constructor(options: AppOptions) {
    this.root = options.root;
    const doc = options.root.ownerDocument;
    if (!doc) {
      throw new Error("root element must be attached to a document");
    }
    this.doc = doc;
    this.api = options.api;
    this.annotatorId = options.annotatorId;
    this.surfaceFactory = options.surfaceFactory;
    this.scheduler = options.scheduler ?? timerScheduler;
    this.draftStore = options.draftStore ?? null;
  }

  async start(mode: Mode = "rating"): Promise<void> {
    this.mode = mode;
    this.renderChrome();
    await this.loadNextTask();
  }

  async setMode(mode: Mode): Promise<void> {
    if (mode === this.mode) {
      return;
    }
    this.mode = mode;
    this.syncTabs();
    await this.loadNextTask();
  }

  currentTask(): Task | null {
    return this.task;
  }

  /** Resolve once every operation triggered so far (including follow-ups
   * those operations enqueue) has finished. */
  async settled(): Promise<void> {
    let current: Promise<void>;
    do {
      current = this.chain;
      await current;
    } while (current !== this.chain);
  }

  dispose(): void {
    this.disposePlayers();
  }

  // -- task loading --------------------------------------------------------

  private async loadNextTask(notice = ""): Promise<void> {
    this.disposePlayers();
    this.task = null;
    this.playbackBroken = false;
    this.submitBtn = null;
    this.taskEl.replaceChildren();
    this.showStatus(notice);
    const task = await this.api.nextTask(this.annotatorId, this.mode);
    if (task === null) {
      this.renderDone();
      return;
    }
    this.task = task;
    if (task.mode === "rating") {
      await this.renderRatingTask(task);
    } else {
      await this.renderPairTask(task);
    }
  }

  private renderDone(): void {
    const done = this.el("p", "done");
    done.dataset["role"] = "done";
    done.textContent = `No open ${this.mode} tasks remain for ${this.annotatorId} — thank you!`;
    this.taskEl.replaceChildren(done);
  }

  // -- rating screen -------------------------------------------------------

  private async renderRatingTask(task: RatingTask): Promise<void> {
    const draftKey = this.draftKey("rating", task.video_id);
    const form = this.restoreRatingDraft(draftKey);

    this.taskEl.append(this.promptEl(task.prompt));
    const panes = this.el("div", "panes");
    const pane = this.buildPane("single", "Video", "replay");
    panes.append(pane.figure);
    this.taskEl.append(panes);

    const fields = this.el("form", "dimension-form");
    fields.addEventListener("submit", (event) => event.preventDefault());
    for (const dimension of DIMENSIONS) {
      fields.append(
        this.radioFieldset(dimension, `rate-${dimension}`, ["1", "2", "3", "4", "5"],
          form.get(dimension)?.toString(), (value) => {
            form.set(dimension, Number(value));
            this.refreshSubmit(form.complete);
          }),
      );
    }
    this.taskEl.append(fields);
    this.taskEl.append(this.actionRow(
      () => {
        this.saveDraft(draftKey, form.toDraft());
        this.showStatus("Draft saved.");
      },
      form.complete,
      () => this.submitGuarded(async () => {
        await this.api.submitRating(this.annotatorId, task.video_id, form.scores());
        this.clearDraft(draftKey);
      }, draftKey, () => form.toDraft()),
    ));

    await this.attachVideo(pane, task.video_id);
  }

  private restoreRatingDraft(draftKey: string): RatingFormState {
    const draft = this.draftStore?.getItem(draftKey);
    return draft ? RatingFormState.fromDraft(draft) : new RatingFormState();
  }

  // -- pair screen ---------------------------------------------------------

  private async renderPairTask(task: PairTask): Promise<void> {
    const draftKey = this.draftKey("pair", task.pair_id);
    const form = this.restorePairDraft(draftKey, task.displayed_swap);

    // the displayed layout is the only orientation this screen knows:
    // under displayed_swap the canonical second video takes the "A" pane
    const leftVideoId = task.displayed_swap ? task.video_b : task.video_a;
    const rightVideoId = task.displayed_swap ? task.video_a : task.video_b;

    this.taskEl.append(this.promptEl(task.prompt));
    const panes = this.el("div", "panes");
    const left = this.buildPane("left", "Video A", "replay-left");
    const right = this.buildPane("right", "Video B", "replay-right");
    panes.append(left.figure, right.figure);
    this.taskEl.append(panes);

    const fields = this.el("form", "dimension-form");
    fields.addEventListener("submit", (event) => event.preventDefault());
    for (const dimension of DIMENSIONS) {
      fields.append(
        this.radioFieldset(dimension, `choose-${dimension}`, ["A", "B"],
          form.get(dimension), (value) => {
            form.choose(dimension, value as "A" | "B");
            this.refreshSubmit(form.complete);
          }),
      );
    }
    this.taskEl.append(fields);
    this.taskEl.append(this.actionRow(
      () => {
        this.saveDraft(draftKey, form.toDraft());
        this.showStatus("Draft saved.");
      },
      form.complete,
      () => this.submitGuarded(async () => {
        await this.api.submitPair(this.annotatorId, task.pair_id, form.choices());
        this.clearDraft(draftKey);
      }, draftKey, () => form.toDraft()),
    ));

    await this.attachVideo(left, leftVideoId);
    await this.attachVideo(right, rightVideoId);
  }

  private restorePairDraft(draftKey: string, displayedSwap: boolean): PairFormState {
    const draft = this.draftStore?.getItem(draftKey);
    return draft ? PairFormState.fromDraft(draft, displayedSwap) : new PairFormState(displayedSwap);
  }

  // -- playback ------------------------------------------------------------

  private buildPane(
    name: string,
    caption: string,
    replayAction: string,
  ): { figure: HTMLElement; canvas: HTMLCanvasElement; replay: HTMLButtonElement } {
    const figure = this.el("figure", "pane");
    figure.dataset["pane"] = name;
    const canvas = this.doc.createElement("canvas");
    const captionEl = this.el("figcaption");
    captionEl.textContent = caption;
    const replay = this.doc.createElement("button");
    replay.type = "button";
    replay.dataset["action"] = replayAction;
    replay.textContent = "Replay";
    figure.append(captionEl, canvas, replay);
    return { figure, canvas, replay };
  }

  private async attachVideo(
    pane: { figure: HTMLElement; canvas: HTMLCanvasElement; replay: HTMLButtonElement },
    videoId: string,
  ): Promise<void> {
    try {
      const payload = await this.api.video(videoId);
      const player = loadAndPlay(payload, this.surfaceFactory(pane.canvas), this.scheduler);
      this.players.push(player);
      pane.replay.addEventListener("click", () => player.replay());
    } catch (error) {
      this.playbackBroken = true;
      this.refreshSubmit(false);
      const note = this.el("p", "decode-error");
      note.dataset["role"] = "playback-error";
      note.textContent = `Cannot play ${videoId}: ${describe(error)}`;
      pane.figure.append(note);
      this.showStatus(`Playback failed — submission disabled. ${describe(error)}`, true);
    }
  }

  private disposePlayers(): void {
    for (const player of this.players) {
      player.dispose();
    }
    this.players = [];
  }

  // -- form plumbing -------------------------------------------------------

  private radioFieldset(
    dimension: Dimension,
    name: string,
    values: string[],
    preset: string | undefined,
    onPick: (value: string) => void,
  ): HTMLElement {
    const fieldset = this.el("fieldset");
    fieldset.dataset["dimension"] = dimension;
    const legend = this.el("legend");
    legend.textContent = DIMENSION_LABELS[dimension];
    fieldset.append(legend);
    for (const value of values) {
      const label = this.el("label");
      const input = this.doc.createElement("input");
      input.type = "radio";
      input.name = name;
      input.value = value;
      if (value === preset) {
        input.checked = true;
      }
      const pick = () => {
        if (input.checked) {
          onPick(value);
        }
      };
      input.addEventListener("change", pick);
      input.addEventListener("click", pick);
      label.append(input, this.doc.createTextNode(value));
      fieldset.append(label);
    }
    return fieldset;
  }

  private actionRow(onSave: () => void, enableSubmit: boolean, onSubmit: () => void): HTMLElement {
    const row = this.el("div", "actions");
    const save = this.doc.createElement("button");
    save.type = "button";
    save.dataset["action"] = "save";
    save.textContent = "Save";
    save.addEventListener("click", onSave);
    const submit = this.doc.createElement("button");
    submit.type = "button";
    submit.dataset["action"] = "submit";
    submit.textContent = "Submit & next";
    submit.disabled = !enableSubmit || this.playbackBroken;
    submit.addEventListener("click", onSubmit);
    this.submitBtn = submit;
    row.append(save, submit);
    return row;
  }

  private refreshSubmit(formComplete: boolean): void {
    if (this.submitBtn) {
      this.submitBtn.disabled = !formComplete || this.playbackBroken || this.busy;
    }
  }

  /** One submission per click storm: the guard is synchronous, so a
   * double-click produces a single POST. */
  private submitGuarded(
    send: () => Promise<void>,
    draftKey: string,
    draft: () => string,
  ): void {
    if (this.busy || this.playbackBroken) {
      return;
    }
    this.busy = true;
    if (this.submitBtn) {
      this.submitBtn.disabled = true;
    }
    this.enqueue(async () => {
      try {
        await send();
        this.busy = false;
        await this.loadNextTask();
      } catch (error) {
        this.busy = false;
        if (error instanceof ApiError && error.status === 409) {
          // someone else closed the task; drop the stale form and move on
          this.clearDraft(draftKey);
          await this.loadNextTask("Task was already recorded — loading the next one.");
          return;
        }
        this.saveDraft(draftKey, draft());
        this.refreshSubmit(true);
        this.showStatus(`Submission failed — draft kept. ${describe(error)}`, true);
      }
    });
  }

  // -- chrome --------------------------------------------------------------

  private renderChrome(): void {
    this.root.replaceChildren();
    const header = this.el("header");
    const title = this.el("h1");
    title.textContent = "Video annotation";
    const who = this.el("span", "annotator");
    who.dataset["role"] = "annotator";
    who.textContent = this.annotatorId;
    const nav = this.el("nav");
    for (const mode of ["rating", "pair"] as const) {
      const tab = this.doc.createElement("button");
      tab.type = "button";
      tab.dataset["mode"] = mode;
      tab.textContent = mode === "rating" ? "Rate videos" : "Compare pairs";
      tab.addEventListener("click", () => {
        this.enqueue(() => this.setMode(mode));
      });
      nav.append(tab);
    }
    header.append(title, who, nav);

    this.statusEl = this.el("p", "status");
    this.statusEl.dataset["role"] = "status";
    this.taskEl = this.el("section", "task");
    this.taskEl.dataset["role"] = "task";
    this.root.append(header, this.statusEl, this.taskEl);
    this.syncTabs();
  }

  private syncTabs(): void {
    for (const tab of this.root.querySelectorAll<HTMLButtonElement>("button[data-mode]")) {
      tab.classList.toggle("active", tab.dataset["mode"] === this.mode);
    }
  }

  private showStatus(text: string, isError = false): void {
    this.statusEl.textContent = text;
    this.statusEl.classList.toggle("error", isError);
  }

  private promptEl(prompt: string): HTMLElement {
    const p = this.el("p", "prompt");
    p.dataset["role"] = "prompt";
    p.textContent = prompt;
    return p;
  }

  private draftKey(mode: Mode, taskKey: string): string {
    return `vqbench-draft:${mode}:${this.annotatorId}:${taskKey}`;
  }

  private saveDraft(key: string, value: string): void {
    this.draftStore?.setItem(key, value);
  }

  private clearDraft(key: string): void {
    this.draftStore?.removeItem(key);
  }

  private enqueue(op: () => Promise<void>): void {
    this.chain = this.chain.then(op).catch((error) => {
      this.showStatus(describe(error), true);
    });
  }

  private el(tag: string, className?: string): HTMLElement {
    const element = this.doc.createElement(tag);
    if (className) {
      element.className = className;
    }
    return element;
  }
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}
