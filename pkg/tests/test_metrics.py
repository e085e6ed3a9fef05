"""Ranking metrics, token F1, and the binary evaluation protocol."""

from __future__ import annotations

from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diva.errors import MissingLabels, NotAPermutation
from diva.evalbench.metrics import (
    binary_eval,
    item_precision_at_1,
    kendall_tau,
    precision_at_1,
    token_f1,
)
from diva.textnorm import answer_tokens, normalize_answer


def brute_force_tau(predicted, gold) -> float:
    """Direct pair count over the formula, written independently."""
    items = list(predicted)
    k = len(items)
    agree = 0
    for i in range(k):
        for j in range(i + 1, k):
            a, b = items[i], items[j]
            pred_order = predicted.index(a) < predicted.index(b)
            gold_order = gold.index(a) < gold.index(b)
            agree += 1 if pred_order == gold_order else -1
    return agree / (k * (k - 1) / 2)


class TestKendallTau:
    def test_exhaustive_three_item_orders(self):
        values = set()
        perms = list(permutations(["x", "y", "z"]))
        count = 0
        for predicted in perms:
            for gold in perms:
                got = kendall_tau(list(predicted), list(gold))
                assert got == pytest.approx(brute_force_tau(list(predicted), list(gold)))
                values.add(round(got, 9))
                count += 1
        assert count == 36
        assert values == {-1.0, round(-1 / 3, 9), round(1 / 3, 9), 1.0}

    def test_two_items(self):
        assert kendall_tau(["a", "b"], ["a", "b"]) == 1.0
        assert kendall_tau(["a", "b"], ["b", "a"]) == -1.0

    def test_identity_and_reversal(self):
        for k in range(2, 7):
            order = [f"i{n}" for n in range(k)]
            assert kendall_tau(order, order) == 1.0
            assert kendall_tau(order, order[::-1]) == -1.0

    @pytest.mark.parametrize(
        "predicted,gold",
        [
            (["a"], ["a"]),                     # too short
            ([], []),                           # empty
            (["a", "a"], ["a", "a"]),           # duplicates
            (["a", "b"], ["a", "c"]),           # different item sets
            (["a", "b"], ["a", "b", "c"]),      # different lengths
        ],
    )
    def test_not_a_permutation(self, predicted, gold):
        with pytest.raises(NotAPermutation):
            kendall_tau(predicted, gold)

    @settings(max_examples=80, deadline=None)
    @given(st.permutations(list(range(5))), st.permutations(list(range(5))))
    def test_properties(self, predicted, gold):
        tau = kendall_tau(predicted, gold)
        assert -1.0 <= tau <= 1.0
        assert tau == pytest.approx(kendall_tau(gold, predicted))
        assert kendall_tau(predicted, predicted) == 1.0
        assert tau == pytest.approx(brute_force_tau(list(predicted), list(gold)))


class TestPrecisionAt1:
    def test_unique_max_wins(self):
        assert item_precision_at_1({"a": 0.9, "b": 0.1}, "a") == 1.0
        assert item_precision_at_1({"a": 0.9, "b": 0.1}, "b") == 0.0

    def test_tie_at_top_counts_as_miss(self):
        assert item_precision_at_1({"a": 0.5, "b": 0.5}, "a") == 0.0
        assert item_precision_at_1({"a": 0.5, "b": 0.5, "c": 0.1}, "b") == 0.0

    def test_mean_over_items(self):
        items = [
            ({"a": 1.0, "b": 0.0}, "a"),
            ({"a": 1.0, "b": 2.0}, "a"),
            ({"a": 3.0, "b": 0.0}, "a"),
            ({"a": 1.0, "b": 1.0}, "a"),
        ]
        assert precision_at_1(items) == 0.5

    def test_empty_rejected(self):
        with pytest.raises(MissingLabels):
            precision_at_1([])


class TestNormalization:
    def test_articles_punctuation_case_whitespace(self):
        assert normalize_answer("The  Rialto   Bridge!") == "rialto bridge"
        assert normalize_answer("A   Mount-Everest, an  apple") == "mounteverest apple"
        assert answer_tokens("the a an") == []
        assert answer_tokens("The Rialto Bridge") == ["rialto", "bridge"]


class TestTokenF1:
    def test_documented_trio(self):
        # Exact match modulo articles/punctuation/case -> 1.0.
        assert token_f1("the Rialto Bridge", "Rialto Bridge") == 1.0
        # Disjoint answers -> 0.0.
        assert token_f1("Colin Firth", "George VI") == 0.0
        # Identical strings -> 1.0.
        assert token_f1("Dis Pater", "Dis Pater") == 1.0

    def test_partial_overlap_value(self):
        # pred tokens {mount, everest, which, rises}; gold {mount, everest}:
        # precision 1/2, recall 1 -> F1 = 2/3.
        got = token_f1("Mount Everest, which rises", "Mount Everest")
        assert got == pytest.approx(2 / 3)

    def test_multiset_counting(self):
        # Duplicates are matched at most per-occurrence.
        got = token_f1("very very good", "very good")
        assert got == pytest.approx(0.8)

    def test_empty_cases(self):
        assert token_f1("", "") == 1.0
        assert token_f1("the", "a") == 1.0  # both normalize to nothing
        assert token_f1("", "Mars") == 0.0
        assert token_f1("the", "Mars") == 0.0
        assert token_f1("Mars", "") == 0.0

    _texts = st.text(
        alphabet="ab cdTHE.,!", min_size=0, max_size=40
    )

    @settings(max_examples=300, deadline=None)
    @given(_texts, _texts)
    def test_bounds_and_symmetry(self, a, b):
        f1 = token_f1(a, b)
        assert 0.0 <= f1 <= 1.0
        assert f1 == pytest.approx(token_f1(b, a))
        assert token_f1(a, a) == 1.0


class TestBinaryEval:
    def test_hand_computed_example(self):
        items = [
            [("correct", 0.9), ("incorrect", 0.2), ("incorrect", 0.5)],
            [("correct", 0.1), ("correct", 0.6), ("incorrect", 0.4)],
        ]
        acc, f1 = binary_eval(items)
        assert acc == pytest.approx(0.75)  # 3 of 4 (correct, incorrect) pairs
        assert f1 == pytest.approx(0.8)    # tp=2, fp=0, fn=1

    def test_perfect_separation(self):
        items = [[("correct", 1.0), ("incorrect", 0.0)]] * 3
        assert binary_eval(items) == (1.0, 1.0)

    def test_total_inversion(self):
        items = [[("correct", 0.0), ("incorrect", 1.0)]]
        assert binary_eval(items) == (0.0, 0.0)

    def test_ties_lose(self):
        acc, f1 = binary_eval([[("correct", 0.5), ("incorrect", 0.5)]])
        assert acc == 0.0 and f1 == 0.0

    def test_empty_items_rejected(self):
        with pytest.raises(MissingLabels):
            binary_eval([])

    def test_unknown_label_rejected(self):
        with pytest.raises(MissingLabels):
            binary_eval([[("correct", 1.0), ("intermediate", 0.0)]])

    def test_single_class_item_rejected(self):
        with pytest.raises(MissingLabels):
            binary_eval([[("correct", 1.0), ("correct", 0.5)]])

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.lists(st.integers(0, 100), min_size=1, max_size=3),
                st.lists(st.integers(0, 100), min_size=1, max_size=3),
            ),
            min_size=1,
            max_size=5,
        )
    )
    def test_outputs_bounded(self, raw_items):
        items = [
            [("correct", float(s)) for s in goods] + [("incorrect", float(s)) for s in bads]
            for goods, bads in raw_items
        ]
        acc, f1 = binary_eval(items)
        assert 0.0 <= acc <= 1.0
        assert 0.0 <= f1 <= 1.0
