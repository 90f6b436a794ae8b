"""Decompose a revision pair into changed lines and contiguous changed segments.

Lines are aligned with a longest-common-subsequence over the newline-split
texts.  Within an aligned changed line pair, a token-level LCS (tokens are
maximal non-whitespace runs; the whitespace runs between them take part in
the match so reconstruction is byte-exact) yields maximal changed runs.
Adjacent changed runs separated only by matching whitespace merge into one
segment, so a segment is a maximal run of changed words with its interior
whitespace.

Applying a line's segments to its old text reproduces the new text exactly;
this is the invariant everything downstream relies on.  All offsets are
code-point offsets into the owning line.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .wikitext import SentenceSpan, is_markup_only, split_sentences


@dataclass(frozen=True)
class Segment:
    """A contiguous changed run inside one line; either side may be empty."""

    inserted: str
    deleted: str
    old_offset: int
    new_offset: int

    def __post_init__(self) -> None:
        if not self.inserted and not self.deleted:
            raise ValueError("segment must insert or delete something")

    @property
    def old_end(self) -> int:
        return self.old_offset + len(self.deleted)

    @property
    def new_end(self) -> int:
        return self.new_offset + len(self.inserted)


@dataclass(frozen=True)
class LineChange:
    old_line: str
    new_line: str
    segments: tuple[Segment, ...]
    paragraph_index: int
    context_before: str = ""
    context_after: str = ""
    old_line_no: Optional[int] = None
    new_line_no: Optional[int] = None


@dataclass(frozen=True)
class EditDiff:
    old_rev_id: Optional[int]
    new_rev_id: Optional[int]
    comment: str
    lines: tuple[LineChange, ...]
    changed_paragraph_count: int


@dataclass(frozen=True)
class ChangedSentence:
    """An original sentence overlapped by at least one segment."""

    original: str
    revised: str
    segments: tuple[Segment, ...]
    line_ref: LineChange
    start: int = 0
    end: int = 0


@dataclass(frozen=True)
class SentenceAlignment:
    changed: tuple[ChangedSentence, ...]
    new_sentence_segments: tuple[Segment, ...]


# --- LCS --------------------------------------------------------------------


def lcs_pairs(a: Sequence[str], b: Sequence[str]) -> list[tuple[int, int]]:
    """Indices of one longest common subsequence of ``a`` and ``b``.

    Ties in the backtrace break on element content, which makes the result
    mirror-symmetric: ``lcs_pairs(b, a)`` is the transposed pair list.
    """
    lo = 0
    hi_a, hi_b = len(a), len(b)
    while lo < hi_a and lo < hi_b and a[lo] == b[lo]:
        lo += 1
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    head = [(i, i) for i in range(lo)]
    tail = [(hi_a + k, hi_b + k) for k in range(len(a) - hi_a)]
    am = a[lo:hi_a]
    bm = b[lo:hi_b]
    n, m = len(am), len(bm)
    if n == 0 or m == 0:
        return head + tail
    prev = [0] * (m + 1)
    rows = [prev]
    for i in range(1, n + 1):
        cur = [0] * (m + 1)
        ai = am[i - 1]
        for j in range(1, m + 1):
            if ai == bm[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                up = prev[j]
                left = cur[j - 1]
                cur[j] = up if up >= left else left
        rows.append(cur)
        prev = cur
    mid: list[tuple[int, int]] = []
    i, j = n, m
    while i > 0 and j > 0:
        if am[i - 1] == bm[j - 1]:
            mid.append((lo + i - 1, lo + j - 1))
            i -= 1
            j -= 1
        elif rows[i - 1][j] > rows[i][j - 1]:
            i -= 1
        elif rows[i - 1][j] < rows[i][j - 1]:
            j -= 1
        elif am[i - 1] > bm[j - 1]:
            i -= 1
        else:
            j -= 1
    mid.reverse()
    return head + mid + tail


# --- token-level line diff ---------------------------------------------------

_TokenList = list[tuple[str, int, int]]


def _tokenize(line: str) -> _TokenList:
    """Alternating non-whitespace and whitespace runs; they tile the line."""
    out: _TokenList = []
    i = 0
    n = len(line)
    while i < n:
        j = i
        if line[i].isspace():
            while j < n and line[j].isspace():
                j += 1
        else:
            while j < n and not line[j].isspace():
                j += 1
        out.append((line[i:j], i, j))
        i = j
    return out


def diff_line_pair(old_line: str, new_line: str) -> tuple[Segment, ...]:
    """Maximal changed segments turning ``old_line`` into ``new_line``."""
    if old_line == new_line:
        return ()
    ta = _tokenize(old_line)
    tb = _tokenize(new_line)
    matches = lcs_pairs([t[0] for t in ta], [t[0] for t in tb])
    # raw changed spans between consecutive matched tokens
    raw: list[tuple[int, int, int, int]] = []  # old_s, old_e, new_s, new_e
    sep_has_word: list[bool] = []  # non-ws matched token between raw[k-1] and raw[k]?
    word_since_last = True
    prev_a = prev_b = 0  # token indices one past the previous match
    for ai, bi in matches + [(len(ta), len(tb))]:
        if ai > prev_a or bi > prev_b:
            if ai > prev_a:
                old_s, old_e = ta[prev_a][1], ta[ai - 1][2]
            else:  # nothing unmatched on the old side: anchor at the gap
                old_s = old_e = ta[prev_a - 1][2] if prev_a > 0 else 0
            if bi > prev_b:
                new_s, new_e = tb[prev_b][1], tb[bi - 1][2]
            else:
                new_s = new_e = tb[prev_b - 1][2] if prev_b > 0 else 0
            raw.append((old_s, old_e, new_s, new_e))
            sep_has_word.append(word_since_last)
            word_since_last = False
        if ai < len(ta) and ta[ai][0].strip():
            word_since_last = True
        prev_a, prev_b = ai + 1, bi + 1
    # merge runs separated only by matched whitespace tokens
    merged: list[tuple[int, int, int, int]] = []
    for k, span in enumerate(raw):
        if merged and not sep_has_word[k]:
            po_s, _po_e, pn_s, _pn_e = merged[-1]
            merged[-1] = (po_s, span[1], pn_s, span[3])
        else:
            merged.append(span)
    segments = []
    for old_s, old_e, new_s, new_e in merged:
        deleted = old_line[old_s:old_e]
        inserted = new_line[new_s:new_e]
        if deleted == "" and inserted == "":
            continue
        segments.append(Segment(inserted=inserted, deleted=deleted, old_offset=old_s, new_offset=new_s))
    return tuple(segments)


def apply_segments(old_line: str, segments: Sequence[Segment]) -> str:
    """Replay a line's segments over its old text."""
    parts = []
    pos = 0
    for seg in sorted(segments, key=lambda s: s.old_offset):
        parts.append(old_line[pos : seg.old_offset])
        parts.append(seg.inserted)
        pos = seg.old_offset + len(seg.deleted)
    parts.append(old_line[pos:])
    return "".join(parts)


# --- revision-level diff ------------------------------------------------------


def _paragraph_indices(lines: Sequence[str]) -> list[int]:
    """Paragraph ordinal per line; blank separator lines inherit the last one."""
    out = []
    para = -1
    in_para = False
    for line in lines:
        if line.strip():
            if not in_para:
                para += 1
                in_para = True
        else:
            in_para = False
        out.append(max(para, 0))
    return out


def diff_revisions(
    old_text: str,
    new_text: str,
    comment: str = "",
    old_rev_id: Optional[int] = None,
    new_rev_id: Optional[int] = None,
) -> EditDiff:
    """Full decomposition of a revision pair into changed lines and segments."""
    old_lines = old_text.split("\n")
    new_lines = new_text.split("\n")
    matches = lcs_pairs(old_lines, new_lines)
    para_old = _paragraph_indices(old_lines)
    para_new = _paragraph_indices(new_lines)
    changes: list[LineChange] = []
    prev_i = prev_j = 0
    for mi, mj in matches + [(len(old_lines), len(new_lines))]:
        if mi > prev_i or mj > prev_j:
            ctx_before = ""
            if prev_i > 0:
                ctx_before = old_lines[prev_i - 1]
            elif prev_j > 0:
                ctx_before = new_lines[prev_j - 1]
            ctx_after = ""
            if mi < len(old_lines):
                ctx_after = old_lines[mi]
            elif mj < len(new_lines):
                ctx_after = new_lines[mj]
            block = max(mi - prev_i, mj - prev_j)
            for k in range(block):
                oi = prev_i + k if prev_i + k < mi else None
                nj = prev_j + k if prev_j + k < mj else None
                ol = old_lines[oi] if oi is not None else ""
                nl = new_lines[nj] if nj is not None else ""
                if ol == nl:
                    continue
                segs = diff_line_pair(ol, nl)
                para = para_old[oi] if oi is not None else para_new[nj]
                changes.append(
                    LineChange(
                        old_line=ol,
                        new_line=nl,
                        segments=segs,
                        paragraph_index=para,
                        context_before=ctx_before,
                        context_after=ctx_after,
                        old_line_no=oi,
                        new_line_no=nj,
                    )
                )
        prev_i, prev_j = mi + 1, mj + 1
    distinct = {lc.paragraph_index for lc in changes}
    return EditDiff(
        old_rev_id=old_rev_id,
        new_rev_id=new_rev_id,
        comment=comment,
        lines=tuple(changes),
        changed_paragraph_count=len(distinct),
    )


def count_changed_paragraphs(diff: EditDiff) -> int:
    return len({lc.paragraph_index for lc in diff.lines})


# --- sentence alignment -------------------------------------------------------


def _map_old_pos(p: int, segments: Sequence[Segment]) -> int:
    """Map an old-line offset to its new-line counterpart."""
    shift = 0
    for seg in segments:
        if p <= seg.old_offset:
            break
        if p >= seg.old_end:
            shift += len(seg.inserted) - len(seg.deleted)
        else:
            return seg.new_end
    return p + shift


def _revised_text(span: SentenceSpan, attached: Sequence[Segment], old_line: str) -> str:
    parts = []
    pos = span.start
    for seg in sorted(attached, key=lambda s: s.old_offset):
        cs = max(seg.old_offset, span.start)
        ce = min(seg.old_end, span.end)
        if cs > pos:
            parts.append(old_line[pos:cs])
        if seg.old_offset >= span.start:
            # insertions credited to the sentence the segment starts in
            parts.append(seg.inserted)
        pos = max(pos, ce)
    parts.append(old_line[pos : span.end])
    return "".join(parts)


def align_sentences(line_change: LineChange) -> SentenceAlignment:
    """Attach segments to the old line's sentences.

    Replacements and deletions attach to every sentence they overlap.  A pure
    insertion attaches to the sentence it falls strictly inside; at a sentence
    boundary it attaches to the neighbouring sentence only when it is
    markup-only (trailing references, maintenance templates), because a prose
    insertion between sentences is a new-sentence addition and is reported
    separately instead.
    """
    spans = split_sentences(line_change.old_line)
    attached: dict[int, list[Segment]] = {}
    new_sentences: list[Segment] = []
    for seg in line_change.segments:
        if seg.deleted:
            # replacements and deletions attach to every overlapped sentence;
            # ones touching only inter-sentence whitespace are ignored
            for idx, span in enumerate(spans):
                if seg.old_offset < span.end and seg.old_end > span.start:
                    attached.setdefault(idx, []).append(seg)
            continue
        p = seg.old_offset
        interior = None
        for idx, span in enumerate(spans):
            if span.start < p < span.end:
                interior = idx
                break
        if interior is not None:
            attached.setdefault(interior, []).append(seg)
            continue
        if is_markup_only(seg.inserted):
            before = [idx for idx, s in enumerate(spans) if s.end <= p]
            after = [idx for idx, s in enumerate(spans) if s.start >= p]
            if before:
                attached.setdefault(before[-1], []).append(seg)
                continue
            if after:
                attached.setdefault(after[0], []).append(seg)
                continue
        new_sentences.append(seg)
    changed = []
    for idx in sorted(attached):
        span = spans[idx]
        segs = tuple(sorted(attached[idx], key=lambda s: (s.old_offset, s.new_offset)))
        changed.append(
            ChangedSentence(
                original=span.text,
                revised=_revised_text(span, segs, line_change.old_line),
                segments=segs,
                line_ref=line_change,
                start=span.start,
                end=span.end,
            )
        )
    return SentenceAlignment(changed=tuple(changed), new_sentence_segments=tuple(new_sentences))


# --- JSON payloads ------------------------------------------------------------


def segment_to_payload(seg: Segment) -> dict:
    return {
        "inserted": seg.inserted,
        "deleted": seg.deleted,
        "old_offset": seg.old_offset,
        "new_offset": seg.new_offset,
    }


def line_to_payload(lc: LineChange) -> dict:
    return {
        "old_line": lc.old_line,
        "new_line": lc.new_line,
        "segments": [segment_to_payload(s) for s in lc.segments],
        "paragraph_index": lc.paragraph_index,
        "context_before": lc.context_before,
        "context_after": lc.context_after,
        "old_line_no": lc.old_line_no,
        "new_line_no": lc.new_line_no,
    }


def diff_to_payload(diff: EditDiff) -> dict:
    return {
        "old_rev_id": diff.old_rev_id,
        "new_rev_id": diff.new_rev_id,
        "comment": diff.comment,
        "changed_paragraph_count": diff.changed_paragraph_count,
        "lines": [line_to_payload(lc) for lc in diff.lines],
    }


def diff_from_payload(data: dict) -> EditDiff:
    lines = []
    for ld in data.get("lines", []):
        segs = tuple(
            Segment(
                inserted=sd["inserted"],
                deleted=sd["deleted"],
                old_offset=sd["old_offset"],
                new_offset=sd["new_offset"],
            )
            for sd in ld.get("segments", [])
        )
        lines.append(
            LineChange(
                old_line=ld["old_line"],
                new_line=ld["new_line"],
                segments=segs,
                paragraph_index=ld.get("paragraph_index", 0),
                context_before=ld.get("context_before", ""),
                context_after=ld.get("context_after", ""),
                old_line_no=ld.get("old_line_no"),
                new_line_no=ld.get("new_line_no"),
            )
        )
    return EditDiff(
        old_rev_id=data.get("old_rev_id"),
        new_rev_id=data.get("new_rev_id"),
        comment=data.get("comment", ""),
        lines=tuple(lines),
        changed_paragraph_count=data.get("changed_paragraph_count", len({l.paragraph_index for l in lines})),
    )
