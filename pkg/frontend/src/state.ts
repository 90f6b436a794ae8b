import type { ApiClient } from "./api";
import type { BlindedDiff, CategoryDefinition, Progress } from "./types";

export type Phase = "welcome" | "tutorial" | "practice" | "labeling" | "done";

const PHASE_ORDER: Phase[] = ["welcome", "tutorial", "practice", "labeling", "done"];

export interface ViewState {
  phase: Phase;
  annotatorId: string;
  sessionId: string | null;
  definitions: CategoryDefinition[];
  diff: BlindedDiff | null;
  selected: Set<string>;
  noneSelected: boolean;
  comment: string;
  progress: Progress;
  doneReason: string | null;
  error: string | null;
}

/**
 * The annotation flow: welcome -> tutorial -> practice -> labeling -> done.
 * Phases only move forward; the server stays authoritative for which diff is
 * current and how many submissions count, so a reload lands back on the same
 * diff with the same progress.
 */
export class AnnotationFlow {
  readonly state: ViewState = {
    phase: "welcome",
    annotatorId: "",
    sessionId: null,
    definitions: [],
    diff: null,
    selected: new Set(),
    noneSelected: false,
    comment: "",
    progress: { submitted: 0, cap: 250 },
    doneReason: null,
    error: null,
  };

  constructor(private readonly api: ApiClient) {}

  private advanceTo(phase: Phase): void {
    if (PHASE_ORDER.indexOf(phase) < PHASE_ORDER.indexOf(this.state.phase)) {
      throw new Error(`phase may not move backward: ${this.state.phase} -> ${phase}`);
    }
    this.state.phase = phase;
  }

  /** Welcome consent: opens (or resumes) the session, then shows the tutorial. */
  async consent(annotatorId: string): Promise<void> {
    const session = await this.api.openSession(annotatorId);
    this.state.annotatorId = session.annotator_id;
    this.state.sessionId = session.session_id;
    this.state.progress = { submitted: session.submitted_count, cap: session.cap };
    this.state.definitions = await this.api.definitions();
    this.advanceTo("tutorial");
  }

  /** Tutorial acknowledged: fetch the first diff (the practice one, if pending). */
  async beginLabeling(): Promise<void> {
    if (this.state.sessionId === null) throw new Error("no session");
    await this.fetchNext();
  }

  private async fetchNext(): Promise<void> {
    const response = await this.api.nextDiff(this.state.sessionId!);
    this.state.selected = new Set();
    this.state.noneSelected = false;
    this.state.comment = "";
    this.state.error = null;
    this.state.progress = response.progress;
    if (response.status === "done") {
      this.state.diff = null;
      this.state.doneReason = response.reason ?? null;
      this.advanceTo("done");
      return;
    }
    this.state.diff = response.diff;
    this.advanceTo(response.practice ? "practice" : "labeling");
  }

  toggleCategory(id: string): void {
    if (this.state.selected.has(id)) {
      this.state.selected.delete(id);
    } else {
      this.state.selected.add(id);
    }
  }

  toggleNone(): void {
    this.state.noneSelected = !this.state.noneSelected;
  }

  setComment(text: string): void {
    this.state.comment = text;
  }

  /** Submit is legal only when categories XOR None is satisfied. */
  canSubmit(): boolean {
    if (this.state.diff === null) return false;
    const hasCategories = this.state.selected.size > 0;
    return hasCategories !== this.state.noneSelected;
  }

  async submit(): Promise<void> {
    if (!this.canSubmit()) {
      this.state.error = "Pick at least one category, or None.";
      return;
    }
    try {
      await this.api.submitLabels(
        this.state.sessionId!,
        this.state.diff!.diff_id,
        [...this.state.selected].sort(),
        this.state.noneSelected,
        this.state.comment.trim() === "" ? null : this.state.comment.trim(),
      );
    } catch (err) {
      // rejection keeps the current diff and selections on screen
      this.state.error = err instanceof Error ? err.message : String(err);
      return;
    }
    await this.fetchNext();
  }
}
