import type { ViewState } from "./state";
import type { BlindedDiff, WireLine, WireSegment } from "./types";

/**
 * Pure HTML-string renderers. They read only the fields named in the wire
 * types, so metadata that should never reach the annotator (comments,
 * authors, dates) cannot leak into the page even if a payload smuggled it.
 */

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

interface Span {
  start: number;
  end: number;
}

function highlight(text: string, spans: Span[], tag: "del" | "ins"): string {
  const parts: string[] = [];
  let cursor = 0;
  for (const span of spans) {
    if (span.end <= span.start) continue;
    parts.push(escapeHtml(text.slice(cursor, span.start)));
    parts.push(`<${tag}>${escapeHtml(text.slice(span.start, span.end))}</${tag}>`);
    cursor = span.end;
  }
  parts.push(escapeHtml(text.slice(cursor)));
  return parts.join("");
}

export function renderLine(line: WireLine): string {
  const deleted: Span[] = line.segments
    .filter((s: WireSegment) => s.deleted.length > 0)
    .map((s) => ({ start: s.old_offset, end: s.old_offset + s.deleted.length }));
  const inserted: Span[] = line.segments
    .filter((s: WireSegment) => s.inserted.length > 0)
    .map((s) => ({ start: s.new_offset, end: s.new_offset + s.inserted.length }));
  const context = (text: string) =>
    text === "" ? "" : `<div class="context">${escapeHtml(text)}</div>`;
  return [
    '<div class="line-change">',
    context(line.context_before),
    '<div class="side-by-side">',
    `<div class="side old">${highlight(line.old_line, deleted, "del")}</div>`,
    `<div class="side new">${highlight(line.new_line, inserted, "ins")}</div>`,
    "</div>",
    context(line.context_after),
    "</div>",
  ].join("");
}

export function renderDiff(diff: BlindedDiff): string {
  if (diff.lines.length === 0) {
    return '<div class="diff empty">No change in this revision pair.</div>';
  }
  return `<div class="diff">${diff.lines.map(renderLine).join("")}</div>`;
}

export function renderProgress(state: ViewState): string {
  return `<div class="progress">${state.progress.submitted} / ${state.progress.cap}</div>`;
}

export function renderWelcome(): string {
  return [
    '<section class="welcome">',
    "<h1>Edit labeling study</h1>",
    "<p>You will see a series of wiki edits, one at a time, and mark what each",
    " edit was trying to improve. Reading the consent form and continuing",
    " indicates that you agree to take part.</p>",
    '<p><a href="consent.html" target="_blank">Consent form</a></p>',
    '<label>Your annotator name <input id="annotator" type="text"></label>',
    '<button id="consent">I consent, continue</button>',
    "</section>",
  ].join("");
}

export function renderTutorial(state: ViewState): string {
  const items = state.definitions
    .map(
      (d) =>
        `<li><strong>${escapeHtml(d.name)}</strong>: ${escapeHtml(d.definition)}</li>`,
    )
    .join("");
  return [
    '<section class="tutorial">',
    "<h1>How to label</h1>",
    "<p>Each page shows one edit: the text before on the left, after on the",
    " right, with removals and additions highlighted. Tick every category",
    " that applies, or None if none do, then submit. The first edit is a",
    " practice round.</p>",
    `<ul class="definitions">${items}</ul>`,
    '<button id="begin">Start labeling</button>',
    "</section>",
  ].join("");
}

export function renderLabeling(state: ViewState): string {
  if (state.diff === null) return "";
  const banner =
    state.phase === "practice"
      ? '<div class="banner practice">Practice edit - not counted</div>'
      : "";
  const checkboxes = state.definitions
    .map((d) => {
      const checked = state.selected.has(d.id) ? " checked" : "";
      return (
        `<label class="category"><input type="checkbox" data-category="${escapeHtml(d.id)}"${checked}>` +
        ` ${escapeHtml(d.name)}</label>`
      );
    })
    .join("");
  const noneChecked = state.noneSelected ? " checked" : "";
  const error = state.error ? `<div class="error">${escapeHtml(state.error)}</div>` : "";
  const disabled =
    state.selected.size > 0 !== state.noneSelected ? "" : " disabled";
  return [
    '<section class="labeling">',
    banner,
    renderProgress(state),
    renderDiff(state.diff),
    '<form class="labels">',
    checkboxes,
    `<label class="category none"><input type="checkbox" id="none"${noneChecked}> None</label>`,
    `<textarea id="comment" placeholder="Optional comment">${escapeHtml(state.comment)}</textarea>`,
    error,
    `<button id="submit"${disabled}>Submit</button>`,
    "</form>",
    "</section>",
  ].join("");
}

export function renderDone(state: ViewState): string {
  const reason =
    state.doneReason === "cap"
      ? `You reached the ${state.progress.cap}-edit limit.`
      : "There are no more edits to label.";
  return [
    '<section class="done">',
    "<h1>All done - thank you!</h1>",
    `<p>${escapeHtml(reason)}</p>`,
    renderProgress(state),
    "</section>",
  ].join("");
}

export function render(state: ViewState): string {
  switch (state.phase) {
    case "welcome":
      return renderWelcome();
    case "tutorial":
      return renderTutorial(state);
    case "practice":
    case "labeling":
      return renderLabeling(state);
    case "done":
      return renderDone(state);
  }
}
