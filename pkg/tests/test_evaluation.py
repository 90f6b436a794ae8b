import random
from datetime import datetime, timezone
from fractions import Fraction

import pytest

from editintent.evaluation import (
    AnnotationRecord,
    CategoryMetrics,
    StratificationError,
    aggregate_ground_truth,
    category_matrix,
    format_metrics_table,
    krippendorff_alpha,
    metrics_report,
    record_from_json,
    record_to_json,
    roc_auc,
    rule_precision_recall,
    stratified_sample,
)
from editintent.rules import Category

NOW = datetime(2021, 3, 1, tzinfo=timezone.utc)


def record(diff_id, annotator, cats=(), none=False):
    return AnnotationRecord(
        diff_id=diff_id,
        annotator_id=annotator,
        categories=frozenset(cats),
        none_flag=none,
        comment=None,
        submitted_at=NOW,
    )


class TestAnnotationRecord:
    def test_none_flag_excludes_categories(self):
        with pytest.raises(ValueError):
            record("d", "a", cats={Category.CITATION}, none=True)

    def test_requires_choice(self):
        with pytest.raises(ValueError):
            record("d", "a")

    def test_json_round_trip(self):
        rec = record("d1", "ann", cats={Category.CITATION, Category.CLARIFICATION})
        assert record_from_json(record_to_json(rec)) == rec


class TestGroundTruth:
    def test_union_rule(self):
        records = [
            record("d", "a", cats={Category.CITATION}),
            record("d", "b", none=True),
            record("d", "c", cats={Category.POINT_OF_VIEW}),
        ]
        truth = aggregate_ground_truth(records)
        assert truth["d"] == {Category.CITATION, Category.POINT_OF_VIEW}

    def test_all_none_is_retained_empty(self):
        records = [record("d", a, none=True) for a in "abc"]
        truth = aggregate_ground_truth(records)
        assert truth["d"] == frozenset()

    def test_two_annotators_excluded(self):
        records = [record("d", "a", none=True), record("d", "b", none=True)]
        assert aggregate_ground_truth(records) == {}

    def test_duplicate_annotation_rejected(self):
        records = [record("d", "a", none=True), record("d", "a", none=True)]
        with pytest.raises(ValueError):
            aggregate_ground_truth(records)


class TestPrecisionRecall:
    def test_published_citation_cell(self):
        # tp=47 fp=3 fn=49 reproduces the reported 0.94 / ~0.49 citation scores
        truth, verdicts = {}, {}
        i = 0
        for _ in range(47):
            truth[f"d{i}"] = {Category.CITATION}
            verdicts[f"d{i}"] = {Category.CITATION}
            i += 1
        for _ in range(49):
            truth[f"d{i}"] = {Category.CITATION}
            verdicts[f"d{i}"] = set()
            i += 1
        for _ in range(3):
            truth[f"d{i}"] = frozenset()
            verdicts[f"d{i}"] = {Category.CITATION}
            i += 1
        metrics = rule_precision_recall(verdicts, truth)[Category.CITATION]
        assert abs(metrics.precision - 0.94) < 0.005
        assert abs(metrics.recall - 0.49) < 0.005

    def test_perfect(self):
        truth = {"a": frozenset({Category.CITATION}), "b": frozenset()}
        metrics = rule_precision_recall(truth, truth)[Category.CITATION]
        assert metrics.precision == metrics.recall == metrics.f1 == 1.0

    def test_rules_fire_on_nothing(self):
        truth = {"a": frozenset({Category.CITATION}), "b": frozenset({Category.CITATION})}
        metrics = rule_precision_recall({}, truth)[Category.CITATION]
        assert metrics.recall == 0.0
        assert metrics.precision is None
        assert metrics.f1 is None

    def test_counts_identity(self):
        rng = random.Random(0)
        truth, verdicts = {}, {}
        for i in range(200):
            truth[f"d{i}"] = frozenset({Category.CITATION} if rng.random() < 0.4 else set())
            verdicts[f"d{i}"] = {Category.CITATION} if rng.random() < 0.3 else set()
        m = rule_precision_recall(verdicts, truth)[Category.CITATION]
        gt_pos = sum(1 for v in truth.values() if Category.CITATION in v)
        assert m.tp + m.fn == gt_pos
        assert m.tp + m.fp + m.fn + m.tn == len(truth)


class TestKrippendorff:
    def test_perfect_agreement(self):
        assert krippendorff_alpha([[1, 1, None], [0, 0, 0], [1, 1, 1]]) == 1.0

    def test_hand_computed_fixture_one(self):
        # coincidence-matrix hand computation gives exactly 8/15
        matrix = [[1, 1, 1], [0, 0, None], [1, 0, 1], [0, None, None]]
        assert abs(krippendorff_alpha(matrix) - Fraction(8, 15)) < 1e-9

    def test_hand_computed_fixture_two(self):
        # exactly 7/72
        matrix = [[1, 1, 0, 0], [1, 1, 1, 0], [0, 0, None, None], [1, 0, None, None], [1, 1, None, None]]
        assert abs(krippendorff_alpha(matrix) - Fraction(7, 72)) < 1e-9

    def test_matches_exact_rational_reference(self):
        # independent implementation with exact arithmetic
        def alpha_exact(matrix):
            units = [[v for v in row if v is not None] for row in matrix]
            units = [u for u in units if len(u) >= 2]
            co = {}
            for u in units:
                m = len(u)
                for i, a in enumerate(u):
                    for j, b in enumerate(u):
                        if i != j:
                            co[(a, b)] = co.get((a, b), Fraction(0)) + Fraction(1, m - 1)
            marg = {}
            for (a, _b), v in co.items():
                marg[a] = marg.get(a, Fraction(0)) + v
            n = sum(marg.values())
            off = sum(v for (a, b), v in co.items() if a != b)
            expected = n * n - sum(v * v for v in marg.values())
            if expected == 0:
                return Fraction(1)
            return 1 - (n - 1) * off / expected

        rng = random.Random(23)
        for _ in range(60):
            rows = rng.randrange(2, 8)
            cols = rng.randrange(2, 6)
            matrix = [
                [rng.choice([0, 1, None, 1, 0]) for _ in range(cols)] for _ in range(rows)
            ]
            usable = [r for r in matrix if sum(v is not None for v in r) >= 2]
            if len(usable) < 2:
                continue
            assert abs(krippendorff_alpha(matrix) - float(alpha_exact(matrix))) < 1e-9

    def test_random_labels_near_zero(self):
        rng = random.Random(5)
        matrix = [[rng.randrange(2) for _ in range(3)] for _ in range(1000)]
        assert abs(krippendorff_alpha(matrix)) < 0.1

    def test_too_few_items(self):
        with pytest.raises(ValueError):
            krippendorff_alpha([[1, 1], [0, None]])

    def test_invariant_to_row_and_column_permutation(self):
        rng = random.Random(8)
        matrix = [[rng.choice([0, 1, None]) for _ in range(4)] for _ in range(12)]
        matrix[0] = [1, 1, 0, None]
        matrix[1] = [0, 1, None, 1]
        base = krippendorff_alpha(matrix)
        rows = list(matrix)
        rng.shuffle(rows)
        cols = list(range(4))
        rng.shuffle(cols)
        permuted = [[row[c] for c in cols] for row in rows]
        assert abs(krippendorff_alpha(permuted) - base) < 1e-12

    def test_category_matrix_shape(self):
        records = [
            record("d1", "a", cats={Category.CITATION}),
            record("d1", "b", none=True),
            record("d2", "a", cats={Category.CLARIFICATION}),
        ]
        matrix = category_matrix(records, Category.CITATION)
        assert matrix == [[1, 0], [0, None]]


class TestRocAuc:
    def test_perfectly_separated(self):
        assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_all_equal_scores(self):
        assert roc_auc([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1]) == 0.5

    def test_matches_pairwise_oracle(self):
        rng = random.Random(31)
        for _ in range(50):
            n = rng.randrange(4, 25)
            labels = [rng.randrange(2) for _ in range(n)]
            if not any(labels):
                labels[0] = 1
            if all(labels):
                labels[-1] = 0
            scores = [rng.choice([0.1, 0.25, 0.5, 0.75, 0.9]) for _ in range(n)]
            pos = [s for s, y in zip(scores, labels) if y]
            neg = [s for s, y in zip(scores, labels) if not y]
            expected = sum(
                1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg
            ) / (len(pos) * len(neg))
            assert abs(roc_auc(scores, labels) - expected) < 1e-9

    def test_flip_identity_tie_free(self):
        rng = random.Random(32)
        scores = rng.sample(range(1000), 30)
        labels = [rng.randrange(2) for _ in range(30)]
        labels[0], labels[1] = 1, 0
        flipped = [1 - y for y in labels]
        assert abs(roc_auc(scores, labels) + roc_auc(scores, flipped) - 1.0) < 1e-12

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            roc_auc([0.1, 0.9], [1, 1])


class TestStratifiedSample:
    def make_pool(self, n=100000, seed=3):
        rng = random.Random(seed)
        pool = {}
        for i in range(n):
            labels = set()
            if rng.random() < 0.10:
                labels.add(Category.POINT_OF_VIEW)
            if rng.random() < 0.18:
                labels.add(Category.CLARIFICATION)
            if rng.random() < 0.12:
                labels.add(Category.CITATION)
            pool[f"diff{i:06d}"] = labels
        return pool

    def test_composition(self):
        result = stratified_sample(self.make_pool(), seed=5)
        assert len(result.diff_ids) == 1000
        assert len(set(result.diff_ids)) == 1000
        assert len(result.strata["point_of_view"]) == 100
        assert len(result.strata["clarification"]) == 100
        assert len(result.strata["remainder"]) == 800
        pool = self.make_pool()
        assert all(Category.POINT_OF_VIEW in pool[d] for d in result.strata["point_of_view"])

    def test_seed_determinism(self):
        pool = self.make_pool(5000)
        quotas = {Category.POINT_OF_VIEW: 20, Category.CLARIFICATION: 20}
        a = stratified_sample(pool, quotas, remainder=100, seed=7)
        b = stratified_sample(pool, quotas, remainder=100, seed=7)
        assert a.diff_ids == b.diff_ids

    def test_shortfall_error_names_count(self):
        pool = {f"d{i}": {Category.POINT_OF_VIEW} if i < 50 else set() for i in range(1000)}
        with pytest.raises(StratificationError) as err:
            stratified_sample(pool, {Category.POINT_OF_VIEW: 100, Category.CLARIFICATION: 0}, remainder=10)
        assert "100" in str(err.value) and "50" in str(err.value)

    def test_backfill_mode(self):
        pool = {f"d{i}": {Category.POINT_OF_VIEW} if i < 50 else set() for i in range(1000)}
        result = stratified_sample(
            pool, {Category.POINT_OF_VIEW: 100, Category.CLARIFICATION: 0}, remainder=10, backfill=True
        )
        assert len(result.strata["point_of_view"]) == 50
        assert len(result.strata["remainder"]) == 60
        assert len(result.diff_ids) == 110


class TestReport:
    def test_report_shape_and_table(self):
        records = []
        for d in ("d1", "d2", "d3"):
            for a in ("x", "y", "z"):
                records.append(record(d, a, cats={Category.CITATION}))
        verdicts = {"d1": {Category.CITATION}, "d2": set(), "d3": {Category.CITATION}}
        report = metrics_report(records, verdicts, pool_size=10)
        assert report["coverage"]["labeled_3plus"] == 3
        assert report["krippendorff_alpha"]["citation"] == 1.0
        table = format_metrics_table(report)
        assert "citation" in table and "3 of 10" in table
