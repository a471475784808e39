/** State for the side-by-side A/B form: four forced choices against the
 * displayed layout, with the task's displayed_swap flag echoed for
 * reference.  The form never maps choices back to canonical order — that
 * is the server's job. */

import { DIMENSIONS, type Choice, type Dimension } from "./api.js";

export class PairFormState {
  private readonly selections = new Map<Dimension, Choice>();

  constructor(readonly displayedSwap: boolean) {}

  choose(dimension: Dimension, choice: Choice): void {
    if (choice !== "A" && choice !== "B") {
      throw new RangeError(`choice must be "A" or "B", got ${JSON.stringify(choice)}`);
    }
    this.selections.set(dimension, choice);
  }

  get(dimension: Dimension): Choice | undefined {
    return this.selections.get(dimension);
  }

  clear(): void {
    this.selections.clear();
  }

  get complete(): boolean {
    return DIMENSIONS.every((dimension) => this.selections.has(dimension));
  }

  /** All four choices exactly as displayed, for the POST body. */
  choices(): Record<Dimension, Choice> {
    if (!this.complete) {
      throw new Error("all four dimensions must be chosen before submission");
    }
    const out = {} as Record<Dimension, Choice>;
    for (const dimension of DIMENSIONS) {
      out[dimension] = this.selections.get(dimension) as Choice;
    }
    return out;
  }

  toDraft(): string {
    return JSON.stringify(Object.fromEntries(this.selections));
  }

  /** Rebuild from a draft string, silently dropping anything invalid. */
  static fromDraft(draft: string, displayedSwap: boolean): PairFormState {
    const form = new PairFormState(displayedSwap);
    let parsed: unknown;
    try {
      parsed = JSON.parse(draft);
    } catch {
      return form;
    }
    if (typeof parsed !== "object" || parsed === null) {
      return form;
    }
    for (const dimension of DIMENSIONS) {
      const value = (parsed as Record<string, unknown>)[dimension];
      if (value === "A" || value === "B") {
        form.choose(dimension, value);
      }
    }
    return form;
  }
}
