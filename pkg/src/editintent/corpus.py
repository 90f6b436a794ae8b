"""Labeled sentence corpora: positives from rule verdicts, negatives from
Featured Articles, balanced 70/10/20 splits, and the JSONL exchange format.

Splits are page-disjoint: no page contributes sentences to two splits, which
prevents near-duplicate leakage across train/validation/test.  Sizes follow
floor-then-distribute-remainder over the requested ratios, and each split is
kept as close to 1:1 positive:negative as its size parity allows (an
odd-sized split is off by one, unavoidably).  The packing is exact whenever
no single page carries more records than the smallest split target, which
holds for real page-granular corpora; otherwise it degrades to best effort.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from datetime import timedelta
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Optional, Sequence

from . import reverts as reverts_mod
from .diffing import EditDiff, diff_revisions
from .revisions import Revision
from .rules import Category, RuleVerdict, label_edit
from .wikitext import DEFAULT, detect_citation, is_markup_only, normalize_section_title, split_sentences, strip_markup

POSITIVE = "positive"
NEGATIVE = "negative"

CORPUS_MAGIC = "editintent-corpus"
CORPUS_VERSION = 1


class CorpusError(Exception):
    pass


@dataclass(frozen=True)
class LabeledSentence:
    text: str
    category: Category
    polarity: str
    page_id: int
    rev_id: int
    section_title: str
    char_len: int
    word_len: int

    @classmethod
    def make(
        cls,
        text: str,
        category: Category,
        polarity: str,
        page_id: int,
        rev_id: int,
        section_title: str = "",
    ) -> "LabeledSentence":
        if not text:
            raise CorpusError("labeled sentence text must be non-empty")
        if polarity not in (POSITIVE, NEGATIVE):
            raise CorpusError(f"bad polarity {polarity!r}")
        return cls(
            text=text,
            category=Category(category),
            polarity=polarity,
            page_id=page_id,
            rev_id=rev_id,
            section_title=section_title,
            char_len=len(text),
            word_len=len(text.split()),
        )


@dataclass
class CorpusSplit:
    train: list[LabeledSentence]
    validation: list[LabeledSentence]
    test: list[LabeledSentence]
    seed: int

    def all_records(self) -> list[LabeledSentence]:
        return self.train + self.validation + self.test


@dataclass
class ExtractionStats:
    diffs: int = 0
    skipped_reverts: int = 0
    positives: int = 0
    deduplicated: int = 0
    dropped_conflicts: int = 0


# --- section attribution ------------------------------------------------------

_HEADING_LINE = re.compile(r"^\s*(=+)\s*(.*?)\s*=+\s*$")


def _section_by_line(text: str) -> list[str]:
    """Section title in effect for each line; empty string for the lead."""
    out = []
    current = ""
    for line in text.split("\n"):
        m = _HEADING_LINE.match(line)
        if m:
            current = m.group(2)
        out.append(current)
    return out


# --- positives ----------------------------------------------------------------


def iter_page_verdicts(
    revisions: Sequence[Revision],
    *,
    mode: str = DEFAULT,
    filter_reverts: bool = True,
    exclude_reverting: bool = True,
    window: int = reverts_mod.DEFAULT_WINDOW,
    horizon: timedelta = reverts_mod.DEFAULT_HORIZON,
    stats: Optional[ExtractionStats] = None,
) -> Iterator[tuple[EditDiff, RuleVerdict]]:
    """Label every consecutive revision pair of one page, skipping reverts.

    A pair is skipped when its newer revision was reverted (or is itself a
    revert, unless ``exclude_reverting`` is off).
    """
    stats = stats if stats is not None else ExtractionStats()
    ordered = sorted(revisions, key=lambda r: r.sort_key)
    statuses = None
    if filter_reverts and len(ordered) > 1:
        statuses = reverts_mod.detect_reverts(ordered, window=window, horizon=horizon)
    for prev, cur in zip(ordered, ordered[1:]):
        if statuses is not None:
            status = statuses[cur.rev_id].status
            if status is reverts_mod.Status.REVERTED or (
                exclude_reverting and status is reverts_mod.Status.REVERTING
            ):
                stats.skipped_reverts += 1
                continue
        diff = diff_revisions(
            prev.text,
            cur.text,
            comment=cur.comment,
            old_rev_id=prev.rev_id,
            new_rev_id=cur.rev_id,
        )
        stats.diffs += 1
        yield diff, label_edit(diff, mode=mode, diff_ref=f"{cur.page_id}:{cur.rev_id}")


def extract_positive_sentences(
    revisions: Sequence[Revision],
    *,
    mode: str = DEFAULT,
    filter_reverts: bool = True,
    exclude_reverting: bool = True,
    window: int = reverts_mod.DEFAULT_WINDOW,
    horizon: timedelta = reverts_mod.DEFAULT_HORIZON,
    stats: Optional[ExtractionStats] = None,
) -> list[LabeledSentence]:
    """Positive examples from one page's history, deduplicated per category."""
    stats = stats if stats is not None else ExtractionStats()
    ordered = sorted(revisions, key=lambda r: r.sort_key)
    seen: set[tuple[Category, str]] = set()
    out: list[LabeledSentence] = []
    section_cache: dict[int, list[str]] = {}
    by_rev = {r.rev_id: r for r in ordered}
    for diff, verdict in iter_page_verdicts(
        ordered,
        mode=mode,
        filter_reverts=filter_reverts,
        exclude_reverting=exclude_reverting,
        window=window,
        horizon=horizon,
        stats=stats,
    ):
        if not verdict.positive_sentences:
            continue
        old_rev = by_rev.get(diff.old_rev_id)
        sections = None
        if old_rev is not None:
            if diff.old_rev_id not in section_cache:
                section_cache[diff.old_rev_id] = _section_by_line(old_rev.text)
            sections = section_cache[diff.old_rev_id]
        page_id = old_rev.page_id if old_rev is not None else 0
        for sentence, category in verdict.positive_sentences:
            text = strip_markup(sentence.original)
            if not text:
                continue
            key = (category, text)
            if key in seen:
                stats.deduplicated += 1
                continue
            seen.add(key)
            section = ""
            line_no = sentence.line_ref.old_line_no
            if sections is not None and line_no is not None and line_no < len(sections):
                section = normalize_section_title(sections[line_no])
            out.append(
                LabeledSentence.make(
                    text=text,
                    category=category,
                    polarity=POSITIVE,
                    page_id=page_id,
                    rev_id=diff.new_rev_id if diff.new_rev_id is not None else 0,
                    section_title=section,
                )
            )
            stats.positives += 1
    return out


# --- negatives ------------------------------------------------------------------

_NON_PROSE_PREFIXES = ("{|", "|", "!", "#REDIRECT")


def extract_negative_sentences(
    revision: Revision,
    category: Category,
    *,
    mode: str = DEFAULT,
) -> list[LabeledSentence]:
    """Negative examples from one Featured Article revision.

    For the citation category only sentences carrying no citation markup
    qualify; the other categories take every body sentence.
    """
    if revision.quality_class != "FA":
        raise CorpusError(
            f"negative examples come from Featured Articles only; "
            f"revision {revision.rev_id} has class {revision.quality_class!r}"
        )
    category = Category(category)
    sections = _section_by_line(revision.text)
    out: list[LabeledSentence] = []
    for line_no, line in enumerate(revision.text.split("\n")):
        if not line.strip():
            continue
        if _HEADING_LINE.match(line):
            continue
        if line.lstrip().startswith(_NON_PROSE_PREFIXES):
            continue
        if is_markup_only(line):
            continue
        for span in split_sentences(line):
            if category is Category.CITATION and detect_citation(span.text, mode):
                continue
            text = strip_markup(span.text)
            if not text:
                continue
            out.append(
                LabeledSentence.make(
                    text=text,
                    category=category,
                    polarity=NEGATIVE,
                    page_id=revision.page_id,
                    rev_id=revision.rev_id,
                    section_title=normalize_section_title(sections[line_no]),
                )
            )
    return out


# --- splits ----------------------------------------------------------------------

SPLIT_NAMES = ("train", "validation", "test")
DEFAULT_RATIOS = (0.7, 0.1, 0.2)


def _split_sizes(n: int, ratios: Sequence[float]) -> list[int]:
    exact = [Fraction(str(r)) * n for r in ratios]
    floors = [int(e) for e in exact]
    remainder = n - sum(floors)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - floors[i]), i))
    sizes = list(floors)
    for i in range(remainder):
        sizes[order[i % len(sizes)]] += 1
    return sizes


def build_splits(
    positives: Sequence[LabeledSentence],
    negatives: Sequence[LabeledSentence],
    seed: int,
    *,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    stats: Optional[ExtractionStats] = None,
) -> CorpusSplit:
    """Balance to 1:1, then partition into page-disjoint 70/10/20 splits."""
    stats = stats if stats is not None else ExtractionStats()
    if not positives or not negatives:
        raise CorpusError("both positives and negatives are required")
    # a sentence text never carries both polarities: positive wins
    positive_keys = {(r.category, r.text) for r in positives}
    kept_negatives = []
    for r in negatives:
        if (r.category, r.text) in positive_keys:
            stats.dropped_conflicts += 1
        else:
            kept_negatives.append(r)
    negatives = kept_negatives
    if not negatives:
        raise CorpusError("no negatives left after conflict resolution")
    rng = random.Random(seed)
    pos = list(positives)
    neg = list(negatives)
    if len(pos) > len(neg):
        keep = sorted(rng.sample(range(len(pos)), len(neg)))
        pos = [pos[i] for i in keep]
    elif len(neg) > len(pos):
        keep = sorted(rng.sample(range(len(neg)), len(pos)))
        neg = [neg[i] for i in keep]
    records = pos + neg
    n = len(records)
    sizes = _split_sizes(n, ratios)
    pos_total = len(pos)
    pos_targets = [s // 2 for s in sizes]
    leftover = pos_total - sum(pos_targets)
    for i in range(len(sizes)):
        if leftover <= 0:
            break
        if sizes[i] % 2 == 1:
            pos_targets[i] += 1
            leftover -= 1
    neg_targets = [s - p for s, p in zip(sizes, pos_targets)]

    by_page: dict[int, list[LabeledSentence]] = {}
    for r in records:
        by_page.setdefault(r.page_id, []).append(r)
    pages = sorted(by_page)
    rng.shuffle(pages)

    rem_pos = list(pos_targets)
    rem_neg = list(neg_targets)
    assignment: list[list[LabeledSentence]] = [[], [], []]
    for page in pages:
        recs = by_page[page]
        np_ = sum(1 for r in recs if r.polarity == POSITIVE)
        nn = len(recs) - np_
        fits = [i for i in range(3) if rem_pos[i] >= np_ and rem_neg[i] >= nn]
        pool = fits if fits else list(range(3))
        target = max(pool, key=lambda i: (rem_pos[i] + rem_neg[i], -i))
        assignment[target].extend(recs)
        rem_pos[target] -= np_
        rem_neg[target] -= nn
    for bucket in assignment:
        rng.shuffle(bucket)
    return CorpusSplit(train=assignment[0], validation=assignment[1], test=assignment[2], seed=seed)


# --- JSONL exchange ----------------------------------------------------------------


def record_to_json(record: LabeledSentence, split: str) -> dict:
    return {
        "split": split,
        "text": record.text,
        "category": record.category.value,
        "polarity": record.polarity,
        "page_id": record.page_id,
        "rev_id": record.rev_id,
        "section_title": record.section_title,
        "char_len": record.char_len,
        "word_len": record.word_len,
    }


def record_from_json(obj: dict) -> LabeledSentence:
    return LabeledSentence(
        text=obj["text"],
        category=Category(obj["category"]),
        polarity=obj["polarity"],
        page_id=obj["page_id"],
        rev_id=obj["rev_id"],
        section_title=obj.get("section_title", ""),
        char_len=obj["char_len"],
        word_len=obj["word_len"],
    )


def export_corpus(split: CorpusSplit, path: str | Path) -> None:
    """Write a split as JSONL: a version header line, then one record per line."""
    with open(path, "w", encoding="utf-8") as fp:
        header = {"magic": CORPUS_MAGIC, "version": CORPUS_VERSION, "seed": split.seed}
        fp.write(json.dumps(header, sort_keys=True) + "\n")
        for name in SPLIT_NAMES:
            for record in getattr(split, name):
                fp.write(json.dumps(record_to_json(record, name), sort_keys=True, ensure_ascii=False) + "\n")


def import_corpus(path: str | Path) -> CorpusSplit:
    split = CorpusSplit(train=[], validation=[], test=[], seed=0)
    with open(path, encoding="utf-8") as fp:
        for line_no, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"corrupt corpus line {line_no}: {exc.msg}") from exc
            if line_no == 1:
                if obj.get("magic") != CORPUS_MAGIC:
                    raise CorpusError(f"not a corpus file: {path}")
                if obj.get("version") != CORPUS_VERSION:
                    raise CorpusError(f"unsupported corpus version {obj.get('version')}")
                split.seed = obj.get("seed", 0)
                continue
            try:
                name = obj["split"]
                record = record_from_json(obj)
            except (KeyError, ValueError) as exc:
                raise CorpusError(f"corrupt corpus line {line_no}: {exc}") from exc
            if name not in SPLIT_NAMES:
                raise CorpusError(f"corrupt corpus line {line_no}: unknown split {name!r}")
            getattr(split, name).append(record)
    return split
