"""Rule conjunctions that label an edit diff with its semantic intent.

Three categories are implemented:

* Citation: some segment completely adds citation markup (the opener is in
  the inserted text and absent from that segment's deleted text, so
  modifying or removing an existing citation never counts).
* Point-of-view: the edit touches exactly one paragraph and exactly one
  line, its comment signals a point-of-view fix, and no segment inserts or
  deletes citation, template, wikilink, infobox-parameter, or multiline
  content.
* Clarification: a segment inside an existing sentence inserts at most 10
  words and deletes at most 5 (and does something), carries more than bare
  markup, and its line is free of citation/template/wikilink/infobox/
  multiline insertions or deletions.  New-sentence additions never qualify.

A detector is only applied to a segment side that actually has text; an
empty inserted or deleted side trips nothing.  Clarification limits apply
per segment, not summed per sentence.  Every clause evaluated lands in the
verdict trace so labeling decisions can be audited.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from . import wikitext
from .diffing import ChangedSentence, EditDiff, Segment, align_sentences, count_changed_paragraphs
from .wikitext import DEFAULT, comment_matches_pov, is_markup_only


class Category(str, Enum):
    CITATION = "citation"
    POINT_OF_VIEW = "point_of_view"
    CLARIFICATION = "clarification"


CLARIFICATION_MAX_INSERTED_WORDS = 10
CLARIFICATION_MAX_DELETED_WORDS = 5


@dataclass
class RuleVerdict:
    diff_ref: str
    labels: set[Category] = field(default_factory=set)
    positive_sentences: list[tuple[ChangedSentence, Category]] = field(default_factory=list)
    trace: list[tuple[str, bool]] = field(default_factory=list)


def _side_matches(detector: Callable[[str, str], bool], seg: Segment, mode: str) -> bool:
    """Apply a detector to the non-empty sides of a segment."""
    if seg.inserted and detector(seg.inserted, mode):
        return True
    if seg.deleted and detector(seg.deleted, mode):
        return True
    return False


def _multiline_side(seg: Segment) -> bool:
    return ("\n" in seg.inserted) or ("\n" in seg.deleted)


_NEGATIVE_CLAUSES: list[tuple[str, Callable[[Segment, str], bool]]] = [
    ("not_citation_inserted_or_deleted", lambda seg, mode: _side_matches(wikitext.detect_citation, seg, mode)),
    ("not_template_inserted_or_deleted", lambda seg, mode: _side_matches(wikitext.detect_template, seg, mode)),
    ("not_wikilink_inserted_or_deleted", lambda seg, mode: _side_matches(wikitext.detect_wikilink, seg, mode)),
    ("not_infobox_inserted_or_deleted", lambda seg, mode: _side_matches(wikitext.detect_infobox_param, seg, mode)),
    ("not_multiline_inserted_or_deleted", lambda seg, mode: _multiline_side(seg)),
]


def _citation_added(seg: Segment, mode: str) -> bool:
    """Complete addition: an opener kind present in inserted, absent from deleted."""
    ref_pattern, cite_pattern = _citation_openers(mode)
    ins, dele = seg.inserted, seg.deleted
    if ref_pattern.search(ins) and not ref_pattern.search(dele):
        return True
    if cite_pattern.search(ins) and not cite_pattern.search(dele):
        return True
    return False


_OPENERS = {
    wikitext.STRICT: (re.compile(r"<ref>"), re.compile(r"\{\{Cite\}\}")),
    wikitext.DEFAULT: (re.compile(r"<ref\b"), re.compile(r"\{\{\s*cite\b", re.IGNORECASE)),
}


def _citation_openers(mode: str):
    try:
        return _OPENERS[mode]
    except KeyError:
        raise ValueError(f"unknown regex mode {mode!r}") from None


def _segment_markup_only(seg: Segment) -> bool:
    ins_ok = (not seg.inserted) or is_markup_only(seg.inserted)
    del_ok = (not seg.deleted) or is_markup_only(seg.deleted)
    return ins_ok and del_ok


def _sentence_all_markup(sentence: ChangedSentence) -> bool:
    return all(_segment_markup_only(seg) for seg in sentence.segments)


def classify_citation(diff: EditDiff, mode: str = DEFAULT) -> tuple[bool, list[ChangedSentence], list[tuple[str, bool]]]:
    trace: list[tuple[str, bool]] = []
    any_inserted = any(
        seg.inserted and wikitext.detect_citation(seg.inserted, mode)
        for lc in diff.lines
        for seg in lc.segments
    )
    trace.append(("citation.is_citation_inserted", any_inserted))
    positives: list[ChangedSentence] = []
    fired = False
    for lc in diff.lines:
        added_segs = [seg for seg in lc.segments if seg.inserted and _citation_added(seg, mode)]
        if not added_segs:
            continue
        fired = True
        alignment = align_sentences(lc)
        added = set(map(id, added_segs))
        for sentence in alignment.changed:
            if any(id(seg) in added for seg in sentence.segments):
                positives.append(sentence)
    trace.append(("citation.complete_addition", fired))
    return fired, positives, trace


def classify_pov(diff: EditDiff, mode: str = DEFAULT) -> tuple[bool, list[ChangedSentence], list[tuple[str, bool]]]:
    trace: list[tuple[str, bool]] = []
    para_ok = count_changed_paragraphs(diff) == 1
    trace.append(("pov.para_changes_eq_1", para_ok))
    single_line = len(diff.lines) == 1
    trace.append(("pov.single_changed_line", single_line))
    comment_ok = comment_matches_pov(diff.comment, mode)
    trace.append(("pov.comment_matches", comment_ok))
    segments = [seg for lc in diff.lines for seg in lc.segments]
    negatives_ok = True
    for name, tripped in _NEGATIVE_CLAUSES:
        clause_ok = not any(tripped(seg, mode) for seg in segments)
        trace.append((f"pov.{name}", clause_ok))
        negatives_ok = negatives_ok and clause_ok
    fired = para_ok and single_line and comment_ok and negatives_ok
    positives: list[ChangedSentence] = []
    if fired:
        for lc in diff.lines:
            alignment = align_sentences(lc)
            for sentence in alignment.changed:
                if not _sentence_all_markup(sentence):
                    positives.append(sentence)
    return fired, positives, trace


def classify_clarification(diff: EditDiff, mode: str = DEFAULT) -> tuple[bool, list[ChangedSentence], list[tuple[str, bool]]]:
    trace: list[tuple[str, bool]] = []
    positives: list[ChangedSentence] = []
    for li, lc in enumerate(diff.lines):
        line_ok = True
        for name, tripped in _NEGATIVE_CLAUSES:
            clause_ok = not any(tripped(seg, mode) for seg in lc.segments)
            trace.append((f"clarification.line{li}.{name}", clause_ok))
            line_ok = line_ok and clause_ok
        if not line_ok:
            continue
        alignment = align_sentences(lc)
        for si, sentence in enumerate(alignment.changed):
            qualifying = False
            for sj, seg in enumerate(sentence.segments):
                ins_words = len(seg.inserted.split())
                del_words = len(seg.deleted.split())
                ins_ok = ins_words <= CLARIFICATION_MAX_INSERTED_WORDS
                del_ok = del_words <= CLARIFICATION_MAX_DELETED_WORDS
                nonempty = ins_words + del_words > 0
                prose = not _segment_markup_only(seg)
                trace.append((f"clarification.line{li}.s{si}.seg{sj}.inserted_words_le_10", ins_ok))
                trace.append((f"clarification.line{li}.s{si}.seg{sj}.deleted_words_le_5", del_ok))
                trace.append((f"clarification.line{li}.s{si}.seg{sj}.changes_words", nonempty))
                trace.append((f"clarification.line{li}.s{si}.seg{sj}.not_markup_only", prose))
                if ins_ok and del_ok and nonempty and prose:
                    qualifying = True
            if qualifying:
                positives.append(sentence)
        trace.append((f"clarification.line{li}.new_sentences_skipped", bool(alignment.new_sentence_segments)))
    fired = bool(positives)
    trace.append(("clarification.any_qualifying_sentence", fired))
    return fired, positives, trace


def label_edit(diff: EditDiff, mode: str = DEFAULT, diff_ref: Optional[str] = None) -> RuleVerdict:
    """Run all three category rules over a diff and collect the union verdict."""
    if diff_ref is None:
        diff_ref = f"{diff.old_rev_id}:{diff.new_rev_id}"
    verdict = RuleVerdict(diff_ref=diff_ref)
    for category, classify in (
        (Category.CITATION, classify_citation),
        (Category.POINT_OF_VIEW, classify_pov),
        (Category.CLARIFICATION, classify_clarification),
    ):
        fired, positives, trace = classify(diff, mode)
        verdict.trace.extend(trace)
        if fired:
            verdict.labels.add(category)
            verdict.positive_sentences.extend((s, category) for s in positives)
    return verdict
