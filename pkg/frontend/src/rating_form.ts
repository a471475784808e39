/** State for the single-video Likert form: four selections in 1..5,
 * submission possible only when every dimension has one. */

import { DIMENSIONS, type Dimension, type Score } from "./api.js";

export class RatingFormState {
  private readonly selections = new Map<Dimension, Score>();

  set(dimension: Dimension, value: number): void {
    if (!Number.isInteger(value) || value < 1 || value > 5) {
      throw new RangeError(`score must be an integer in 1..5, got ${value}`);
    }
    this.selections.set(dimension, value as Score);
  }

  get(dimension: Dimension): Score | undefined {
    return this.selections.get(dimension);
  }

  clear(): void {
    this.selections.clear();
  }

  get complete(): boolean {
    return DIMENSIONS.every((dimension) => this.selections.has(dimension));
  }

  /** All four scores, for the POST body; throws if any is unset. */
  scores(): Record<Dimension, Score> {
    if (!this.complete) {
      throw new Error("all four dimensions must be rated before submission");
    }
    const out = {} as Record<Dimension, Score>;
    for (const dimension of DIMENSIONS) {
      out[dimension] = this.selections.get(dimension) as Score;
    }
    return out;
  }

  toDraft(): string {
    return JSON.stringify(Object.fromEntries(this.selections));
  }

  /** Rebuild from a draft string, silently dropping anything invalid. */
  static fromDraft(draft: string): RatingFormState {
    const form = new RatingFormState();
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
      if (typeof value === "number" && Number.isInteger(value) && value >= 1 && value <= 5) {
        form.set(dimension, value);
      }
    }
    return form;
  }
}
