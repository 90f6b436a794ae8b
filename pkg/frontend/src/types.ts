/** Wire types, mirroring the annotation service payloads exactly. */

export interface WireSegment {
  inserted: string;
  deleted: string;
  old_offset: number;
  new_offset: number;
}

export interface WireLine {
  old_line: string;
  new_line: string;
  segments: WireSegment[];
  context_before: string;
  context_after: string;
}

/** A blinded diff: id and rendered lines only. No comment, author, or date. */
export interface BlindedDiff {
  diff_id: string;
  lines: WireLine[];
}

export interface SessionInfo {
  session_id: string;
  annotator_id: string;
  practice_done: boolean;
  submitted_count: number;
  cap: number;
}

export interface Progress {
  submitted: number;
  cap: number;
}

export type NextResponse =
  | { status: "ok"; practice: boolean; progress: Progress; diff: BlindedDiff }
  | { status: "done"; reason?: string; progress: Progress };

export interface SubmitResult {
  status: string;
  submitted_count: number;
}

export interface CategoryDefinition {
  id: string;
  name: string;
  definition: string;
}

export const CATEGORY_IDS = ["citation", "point_of_view", "clarification"] as const;
export type CategoryId = (typeof CATEGORY_IDS)[number];
