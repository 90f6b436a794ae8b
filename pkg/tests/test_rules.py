import dataclasses

import pytest

from conftest import FIG3_NEW, FIG3_OLD, FIG3_STRIPPED
from editintent.diffing import diff_revisions
from editintent.rules import (
    Category,
    classify_citation,
    classify_clarification,
    classify_pov,
    label_edit,
)
from editintent.wikitext import DEFAULT, STRICT, strip_markup


def make_diff(old, new, comment=""):
    return diff_revisions(old, new, comment=comment, old_rev_id=1, new_rev_id=2)


class TestCitation:
    def test_ref_at_sentence_end(self):
        diff = make_diff("The sky is blue.", "The sky is blue.<ref>NYT</ref>")
        fired, positives, _ = classify_citation(diff)
        assert fired
        assert [p.original for p in positives] == ["The sky is blue."]

    def test_removal_not_citation(self):
        diff = make_diff("The sky is blue.<ref>old</ref>", "The sky is blue.")
        fired, _, _ = classify_citation(diff)
        assert not fired

    def test_prose_only(self):
        diff = make_diff("An old wording here.", "A new wording here.")
        assert not classify_citation(diff)[0]

    def test_modification_excluded(self):
        diff = make_diff(
            "Fact.<ref>http://a.example</ref>",
            "Fact.<ref>http://b.example</ref>",
        )
        assert not classify_citation(diff)[0]

    def test_cite_template(self):
        diff = make_diff("Stated plainly.", "Stated plainly.{{Cite}}")
        fired, positives, _ = classify_citation(diff, STRICT)
        assert fired and positives

    def test_new_sentence_with_ref_fires_without_positives(self):
        diff = make_diff("Known fact.", "Known fact.\nAnother claim.<ref>x</ref>")
        fired, positives, _ = classify_citation(diff)
        assert fired
        assert positives == []


class TestPov:
    GOOD_OLD = "Critics widely regarded it as the single greatest and most important film ever made."
    GOOD_NEW = "Critics regarded the film."

    def test_full_conjunction(self):
        diff = make_diff(self.GOOD_OLD, self.GOOD_NEW, comment="rm POV wording")
        fired, positives, _ = classify_pov(diff)
        assert fired
        assert positives and positives[0].original == self.GOOD_OLD

    def test_comment_clause_fails(self):
        diff = make_diff(self.GOOD_OLD, self.GOOD_NEW, comment="copyedit")
        assert not classify_pov(diff)[0]

    def test_citation_inserted_blocks(self):
        diff = make_diff("Too strong claim here.", "Weaker claim here.<ref>x</ref>", comment="POV")
        assert not classify_pov(diff)[0]

    def test_two_paragraphs_block(self):
        old = "First paragraph is very biased.\n\nSecond paragraph is very biased."
        new = "First paragraph is fine.\n\nSecond paragraph is fine."
        diff = make_diff(old, new, comment="POV")
        assert not classify_pov(diff)[0]

    def test_two_lines_one_paragraph_block(self):
        old = "Utterly the greatest thing on the first line ever written down.\nUtterly the greatest thing on the second line ever written down."
        new = "A thing on the first line written down.\nA thing on the second line written down."
        diff = make_diff(old, new, comment="POV")
        assert not classify_pov(diff)[0]

    def test_pointy_comment(self):
        diff = make_diff(self.GOOD_OLD, self.GOOD_NEW, comment="removed pointy phrasing")
        assert classify_pov(diff)[0]

    def test_poverty_strict_vs_default(self):
        diff = make_diff(self.GOOD_OLD, self.GOOD_NEW, comment="poverty statistics cleanup")
        assert classify_pov(diff, STRICT)[0]
        assert not classify_pov(diff, DEFAULT)[0]

    def test_markup_only_sentence_skipped(self):
        # the first sentence's only segment is bare punctuation
        old = "A dash - sits in this sentence. The greatest claim ever stated remains."
        new = "A dash -- sits in this sentence. The claim remains."
        diff = make_diff(old, new, comment="POV")
        fired, positives, _ = classify_pov(diff)
        assert fired
        assert [p.original for p in positives] == ["The greatest claim ever stated remains."]


class TestClarification:
    def test_fig3(self):
        diff = make_diff(FIG3_OLD, FIG3_NEW, comment="clarify")
        fired, positives, _ = classify_clarification(diff)
        assert fired
        assert strip_markup(positives[0].original) == FIG3_STRIPPED

    def test_eleven_word_insertion_blocked(self):
        words = " ".join(f"w{i}" for i in range(11))
        diff = make_diff("A base sentence stands.", f"A base {words} sentence stands.")
        assert not classify_clarification(diff)[0]

    def test_ten_word_insertion_ok(self):
        words = " ".join(f"w{i}" for i in range(10))
        diff = make_diff("A base sentence stands.", f"A base {words} sentence stands.")
        assert classify_clarification(diff)[0]

    def test_six_word_deletion_blocked(self):
        diff = make_diff("Keep one two three four five six end.", "Keep end.")
        assert not classify_clarification(diff)[0]

    def test_five_word_deletion_ok(self):
        diff = make_diff("Keep one two three four five end.", "Keep end.")
        assert classify_clarification(diff)[0]

    def test_wikilink_only_insertion_blocked(self):
        diff = make_diff("He lives in the city.", "He lives in the [[Paris]] city.")
        assert not classify_clarification(diff)[0]

    def test_new_sentence_skipped(self):
        diff = make_diff("First fact.", "First fact. Entirely new information appears here.")
        assert not classify_clarification(diff)[0]

    def test_whitespace_only_segment_blocked(self):
        diff = make_diff("a b", "a  b")
        assert not classify_clarification(diff)[0]

    def test_per_line_scope(self):
        # a citation on one line does not block a clarification on another
        old = "The result was big.\n\nOther paragraph stands."
        new = "The result was quite big.\n\nOther paragraph stands.<ref>x</ref>"
        diff = make_diff(old, new)
        fired, positives, _ = classify_clarification(diff)
        assert fired
        assert [p.original for p in positives] == ["The result was big."]


class TestLabelEdit:
    def test_multi_category(self):
        old = "The result was big.\n\nOther paragraph stands."
        new = "The result was quite big.\n\nOther paragraph stands.<ref>x</ref>"
        verdict = label_edit(make_diff(old, new))
        assert verdict.labels == {Category.CITATION, Category.CLARIFICATION}

    def test_empty_diff(self):
        verdict = label_edit(make_diff("same text", "same text"))
        assert verdict.labels == set()
        assert verdict.positive_sentences == []

    def test_fig3_with_unrelated_changes_discarded(self):
        old = "Intro line about the disorder.\n" + FIG3_OLD
        new = (
            "Intro line about the disorder and eleven completely new words of extra "
            "information appended for this test.\n" + FIG3_NEW
        )
        verdict = label_edit(make_diff(old, new, comment="clarify"))
        assert verdict.labels == {Category.CLARIFICATION}
        assert len(verdict.positive_sentences) == 1
        sentence, category = verdict.positive_sentences[0]
        assert category is Category.CLARIFICATION
        assert strip_markup(sentence.original) == FIG3_STRIPPED

    def test_determinism(self):
        diff = make_diff(FIG3_OLD, FIG3_NEW, comment="clarify")
        v1 = label_edit(diff)
        v2 = label_edit(diff)
        assert v1.labels == v2.labels
        assert v1.trace == v2.trace
        assert [(s.original, c) for s, c in v1.positive_sentences] == [
            (s.original, c) for s, c in v2.positive_sentences
        ]

    def test_positives_come_from_old_revision(self):
        old = "The old wording stays on record."
        new = "The new wording stays on record."
        verdict = label_edit(make_diff(old, new))
        for sentence, _ in verdict.positive_sentences:
            assert sentence.original in old
            assert sentence.original not in new

    def test_trace_covers_all_rule_families(self):
        verdict = label_edit(make_diff(FIG3_OLD, FIG3_NEW, comment="x"))
        names = {name for name, _ in verdict.trace}
        assert any(n.startswith("citation.") for n in names)
        assert any(n.startswith("pov.") for n in names)
        assert any(n.startswith("clarification.") for n in names)


class TestMonotoneGating:
    """Flipping a single negative clause must remove the label."""

    def base_pov(self):
        return make_diff(
            "This was plainly the most overhyped and overrated idea ever promoted.",
            "This idea was promoted.",
            comment="POV",
        )

    def mutate_segment(self, diff, **changes):
        line = diff.lines[0]
        seg = dataclasses.replace(line.segments[0], **changes)
        new_line = dataclasses.replace(line, segments=(seg,) + line.segments[1:])
        return dataclasses.replace(diff, lines=(new_line,) + diff.lines[1:])

    def test_base_fires(self):
        assert classify_pov(self.base_pov())[0]

    @pytest.mark.parametrize(
        "inserted",
        ["<ref>x</ref>", "{{fact}}", "[[Paris]]", "height = 180", "a\nb"],
        ids=["citation", "template", "wikilink", "infobox", "multiline"],
    )
    def test_each_negative_clause_blocks(self, inserted):
        diff = self.mutate_segment(self.base_pov(), inserted=inserted)
        assert not classify_pov(diff)[0]

    def test_clarification_negative_clauses(self):
        base = make_diff("The result was big.", "The result was quite big.")
        assert classify_clarification(base)[0]
        for inserted in ["<ref>x</ref>", "{{fact}}", "[[Paris]]", "height = 180", "a\nb"]:
            diff = self.mutate_segment(base, inserted=inserted)
            assert not classify_clarification(diff)[0], inserted
