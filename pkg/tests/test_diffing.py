import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIG3_NEW, FIG3_OLD
from editintent.diffing import (
    EditDiff,
    LineChange,
    Segment,
    align_sentences,
    apply_segments,
    count_changed_paragraphs,
    diff_from_payload,
    diff_line_pair,
    diff_revisions,
    diff_to_payload,
    lcs_pairs,
)

TOKENS = ["a", "bb", "ccc", "dddd", "x", "<ref>r</ref>", "{{t}}", "end."]


def random_text(rng, max_lines=4, max_tokens=8):
    lines = []
    for _ in range(rng.randrange(0, max_lines + 1)):
        lines.append(" ".join(rng.choice(TOKENS) for _ in range(rng.randrange(0, max_tokens))))
    return "\n".join(lines)


class TestLcs:
    def test_trivial(self):
        assert lcs_pairs(["a", "b"], ["a", "b"]) == [(0, 0), (1, 1)]

    def test_classic(self):
        pairs = lcs_pairs(list("ABCBDAB"), list("BDCABA"))
        assert len(pairs) == 4  # known LCS length

    def test_mirror_symmetry(self):
        rng = random.Random(5)
        for _ in range(500):
            a = [rng.choice("abc") for _ in range(rng.randrange(0, 10))]
            b = [rng.choice("abc") for _ in range(rng.randrange(0, 10))]
            fwd = lcs_pairs(a, b)
            rev = lcs_pairs(b, a)
            assert fwd == [(i, j) for j, i in rev]


class TestDiffLinePair:
    def test_single_replacement(self):
        segs = diff_line_pair("A B C", "A X C")
        assert len(segs) == 1
        assert (segs[0].deleted, segs[0].inserted) == ("B", "X")

    def test_fig3_segment(self):
        segs = diff_line_pair(FIG3_OLD, FIG3_NEW)
        assert len(segs) == 1
        assert segs[0].deleted == "it"
        assert segs[0].inserted == "Tourette's"

    def test_adjacent_changed_words_merge(self):
        segs = diff_line_pair("x it is y", "x Tourette's was y")
        assert [(s.deleted, s.inserted) for s in segs] == [("it is", "Tourette's was")]

    def test_identical(self):
        assert diff_line_pair("same", "same") == ()

    def test_pure_insertion_line(self):
        segs = diff_line_pair("", "entirely new")
        assert len(segs) == 1
        assert segs[0].deleted == "" and segs[0].inserted == "entirely new"

    def test_whitespace_only_change(self):
        segs = diff_line_pair("a b", "a  b")
        assert len(segs) == 1
        assert apply_segments("a b", segs) == "a  b"

    def test_maximality_matched_word_separates(self):
        segs = diff_line_pair("p q r", "x q z")
        assert len(segs) == 2  # q stays matched between the two changes


class TestDiffRevisions:
    def test_identical_texts(self):
        assert diff_revisions("x\ny", "x\ny").lines == ()

    def test_one_line_change(self):
        diff = diff_revisions("A B C", "A X C")
        assert len(diff.lines) == 1
        assert diff.changed_paragraph_count == 1

    def test_unchanged_lines_excluded(self):
        diff = diff_revisions("keep\nold middle\nkeep2", "keep\nnew middle\nkeep2")
        assert len(diff.lines) == 1
        assert diff.lines[0].old_line == "old middle"
        assert diff.lines[0].context_before == "keep"
        assert diff.lines[0].context_after == "keep2"

    def test_two_paragraphs(self):
        old = "first par line.\n\nsecond par line."
        new = "first par edited.\n\nsecond par edited."
        diff = diff_revisions(old, new)
        assert count_changed_paragraphs(diff) == 2
        assert diff.changed_paragraph_count == 2

    def test_two_lines_one_paragraph(self):
        old = "line one here.\nline two here."
        new = "line one edited.\nline two edited."
        diff = diff_revisions(old, new)
        assert len(diff.lines) == 2
        assert count_changed_paragraphs(diff) == 1

    def test_empty_diff_paragraphs(self):
        assert count_changed_paragraphs(diff_revisions("a", "a")) == 0

    def test_pure_insertion_paragraph_from_new(self):
        diff = diff_revisions("", "brand new line")
        assert len(diff.lines) == 1
        assert diff.lines[0].old_line == ""

    def test_reconstruction_random(self):
        rng = random.Random(99)
        for _ in range(2000):
            old = random_text(rng)
            new = random_text(rng)
            diff = diff_revisions(old, new)
            for lc in diff.lines:
                assert apply_segments(lc.old_line, lc.segments) == lc.new_line

    def test_swap_symmetry_random(self):
        rng = random.Random(100)
        for _ in range(1000):
            old = random_text(rng)
            new = random_text(rng)
            fwd = [
                (s.inserted, s.deleted) for lc in diff_revisions(old, new).lines for s in lc.segments
            ]
            rev = [
                (s.deleted, s.inserted) for lc in diff_revisions(new, old).lines for s in lc.segments
            ]
            assert fwd == rev

    @settings(max_examples=200)
    @given(st.text(alphabet="ab \n.", max_size=40), st.text(alphabet="ab \n.", max_size=40))
    def test_reconstruction_property(self, old, new):
        for lc in diff_revisions(old, new).lines:
            assert apply_segments(lc.old_line, lc.segments) == lc.new_line

    def test_segments_never_both_empty(self):
        rng = random.Random(101)
        for _ in range(500):
            diff = diff_revisions(random_text(rng), random_text(rng))
            for lc in diff.lines:
                assert lc.segments, lc
                for seg in lc.segments:
                    assert seg.inserted or seg.deleted


class TestAlignSentences:
    def test_segment_in_second_sentence(self):
        diff = diff_revisions(
            "First fact stands. The fast dog ran.",
            "First fact stands. The slow dog ran.",
        )
        alignment = align_sentences(diff.lines[0])
        assert len(alignment.changed) == 1
        assert alignment.changed[0].original == "The fast dog ran."
        assert alignment.changed[0].revised == "The slow dog ran."

    def test_new_trailing_sentence_not_attached(self):
        diff = diff_revisions("First fact.", "First fact. An entirely new statement appears.")
        alignment = align_sentences(diff.lines[0])
        assert alignment.changed == ()
        assert len(alignment.new_sentence_segments) == 1

    def test_whole_line_replaced(self):
        diff = diff_revisions(
            "Sentence one here. Sentence two here.",
            "Completely different words now appear everywhere in this line.",
        )
        alignment = align_sentences(diff.lines[0])
        assert len(alignment.changed) == 2

    def test_trailing_citation_attaches(self):
        diff = diff_revisions(
            "First fact. Second fact.",
            "First fact.<ref>NYT</ref> Second fact.",
        )
        alignment = align_sentences(diff.lines[0])
        assert len(alignment.changed) == 1
        assert alignment.changed[0].original == "First fact."

    def test_interior_insertion_attaches(self):
        diff = diff_revisions("The dog ran far.", "The dog quickly ran far.")
        alignment = align_sentences(diff.lines[0])
        assert len(alignment.changed) == 1
        assert alignment.changed[0].revised == "The dog quickly ran far."


class TestPayload:
    def test_round_trip(self):
        diff = diff_revisions("a b\n\nc d.", "a x\n\nc d set.", comment="why", old_rev_id=3, new_rev_id=4)
        again = diff_from_payload(diff_to_payload(diff))
        assert again == diff

    def test_stable_field_names(self):
        payload = diff_to_payload(diff_revisions("a", "b", comment="c"))
        assert set(payload) == {
            "old_rev_id",
            "new_rev_id",
            "comment",
            "changed_paragraph_count",
            "lines",
        }
        assert set(payload["lines"][0]) == {
            "old_line",
            "new_line",
            "segments",
            "paragraph_index",
            "context_before",
            "context_after",
            "old_line_no",
            "new_line_no",
        }


def test_segment_requires_content():
    with pytest.raises(ValueError):
        Segment(inserted="", deleted="", old_offset=0, new_offset=0)
