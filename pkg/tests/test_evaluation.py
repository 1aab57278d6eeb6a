"""Measurement core: normalization, edit distance, WER/CER, pooling."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asrcorrect.evaluation import (
    Alignment,
    Category,
    DEFAULT_PROFILE,
    EditOp,
    EmptyReferenceError,
    NormalizationProfile,
    cer,
    corpus_rates,
    edit_distance,
    normalize,
    render_gloss,
    render_triple,
    score_utterance,
    wer,
    word_edit_distance,
)

from conftest import EXAMPLE_1, EXAMPLE_2, EXAMPLE_4, brute_force_distance


class TestNormalize:
    def test_lowercase_and_punctuation(self):
        assert normalize("Damn your impertinence, sir!") == "damn your impertinence sir"

    def test_empty(self):
        assert normalize("") == ""

    def test_intra_word_apostrophe_kept(self):
        assert normalize("fedosya's") == "fedosya's"

    def test_detached_apostrophe_dropped(self):
        assert normalize("'quoted'") == "quoted"

    def test_hyphen_splits_words(self):
        assert normalize("twenty-five") == "twenty five"

    def test_whitespace_collapsed(self):
        assert normalize("  a \t b\n\nc ") == "a b c"

    def test_profile_toggles(self):
        keep_case = NormalizationProfile(lowercase=False)
        assert normalize("Hello, World", keep_case) == "Hello World"
        keep_punct = NormalizationProfile(strip_punctuation=False)
        assert normalize("Hello, world", keep_punct) == "hello, world"

    def test_deterministic_and_idempotent(self):
        text = "It's a  Mixed-CASE, string!!"
        once = normalize(text)
        assert normalize(once) == once


class TestWordEditDistance:
    def test_identical(self):
        words = "a b c".split()
        distance, alignment = word_edit_distance(words, words)
        assert distance == 0
        assert all(step.op is EditOp.MATCH for step in alignment.steps)

    def test_example_4_asr(self):
        ref, asr, _ = EXAMPLE_4
        distance, _ = word_edit_distance(ref.split(), asr.split())
        assert distance == 4

    def test_example_1_sub_plus_insert(self):
        ref, asr, _ = EXAMPLE_1
        distance, alignment = word_edit_distance(ref.split(), asr.split())
        assert distance == 2
        ops = [step.op for step in alignment.steps if step.op is not EditOp.MATCH]
        assert sorted(op.value for op in ops) == ["insert", "substitute"]

    def test_empty_sides(self):
        distance, alignment = word_edit_distance([], "a b".split())
        assert distance == 2
        assert all(step.op is EditOp.INSERT for step in alignment.steps)
        distance, alignment = word_edit_distance("a b".split(), [])
        assert distance == 2
        assert all(step.op is EditOp.DELETE for step in alignment.steps)

    def test_alignment_reconstructs_both_sequences(self):
        rng = random.Random(7)
        vocab = "abcde"
        for _ in range(300):
            ref = [rng.choice(vocab) for _ in range(rng.randint(0, 8))]
            hyp = [rng.choice(vocab) for _ in range(rng.randint(0, 8))]
            distance, alignment = word_edit_distance(ref, hyp)
            assert alignment.ref_units() == ref
            assert alignment.hyp_units() == hyp
            assert alignment.distance == distance

    def test_matches_brute_force_oracle(self):
        rng = random.Random(42)
        vocab = "abcde"
        for _ in range(400):
            ref = [rng.choice(vocab) for _ in range(rng.randint(0, 8))]
            hyp = [rng.choice(vocab) for _ in range(rng.randint(0, 8))]
            distance, _ = word_edit_distance(ref, hyp)
            assert distance == brute_force_distance(ref, hyp)

    @given(
        st.lists(st.sampled_from("abcde"), max_size=8),
        st.lists(st.sampled_from("abcde"), max_size=8),
        st.lists(st.sampled_from("abcde"), max_size=8),
    )
    @settings(max_examples=200, deadline=None)
    def test_metric_properties(self, x, y, z):
        dxy, _ = word_edit_distance(x, y)
        dyx, _ = word_edit_distance(y, x)
        dxz, _ = word_edit_distance(x, z)
        dzy, _ = word_edit_distance(z, y)
        assert dxy == dyx
        assert word_edit_distance(x, x)[0] == 0
        assert dxy <= dxz + dzy


class TestCharDistance:
    def test_agrees_with_word_level_dp(self):
        rng = random.Random(3)
        for _ in range(200):
            a = "".join(rng.choice("abc ") for _ in range(rng.randint(0, 12)))
            b = "".join(rng.choice("abc ") for _ in range(rng.randint(0, 12)))
            distance, _ = word_edit_distance(list(a), list(b))
            assert edit_distance(a, b) == distance

    def test_empty(self):
        assert edit_distance("", "") == 0
        assert edit_distance("abc", "") == 3
        assert edit_distance("", "abc") == 3


class TestRates:
    def test_example_4_wer(self):
        ref, asr, llm = EXAMPLE_4
        assert wer(ref, asr) == pytest.approx(0.5714, abs=1e-4)
        assert wer(ref, llm) == pytest.approx(0.2857, abs=1e-4)

    def test_example_4_cer(self):
        ref, asr, llm = EXAMPLE_4
        assert cer(ref, asr) == pytest.approx(0.2500, abs=1e-4)
        assert cer(ref, llm) == pytest.approx(0.2750, abs=1e-4)

    def test_identity_is_zero(self):
        ref = EXAMPLE_2[0]
        assert wer(ref, ref) == 0.0
        assert cer(ref, ref) == 0.0

    def test_wer_above_one(self):
        # 1 substitution + 3 insertions against a 1-word reference
        assert wer("one", "two words here now") == 4.0

    def test_empty_reference_rejected(self):
        with pytest.raises(EmptyReferenceError):
            wer("...", "hello")
        with pytest.raises(EmptyReferenceError):
            cer("", "hello")

    def test_normalization_applied_to_both_sides(self):
        assert wer("HELLO WORLD", "hello, world!") == 0.0


class TestScoreReport:
    def test_categories(self):
        improved = score_utterance("a", "x y z", "x q z", "x y z")
        worsened = score_utterance("b", "x y z", "x y z", "x q z")
        unchanged = score_utterance("c", "x y z", "x q z", "x p z")
        assert improved.category is Category.IMPROVED
        assert worsened.category is Category.WORSENED
        assert unchanged.category is Category.NO_CHANGE

    def test_example_4_divergence_fields(self):
        ref, asr, llm = EXAMPLE_4
        report = score_utterance("ex4", ref, asr, llm)
        assert report.wer_after < report.wer_before
        assert report.cer_after > report.cer_before

    def test_corpus_pooling(self):
        r1 = score_utterance("a", "w1 w2 w3 w4 w5", "w1 w2 w3 w4 bad", "w1 w2 w3 w4 bad")
        r2 = score_utterance("b", "v1 v2 v3 v4 v5", "v1 v2 v3 v4 v5", "v1 v2 v3 v4 v5")
        rates = corpus_rates([r1, r2])
        assert rates.wer_before == pytest.approx(0.10)
        assert rates.wer_after == pytest.approx(0.10)
        assert rates.wer_relative_change == pytest.approx(0.0)

    def test_pooling_invariant_under_reordering(self):
        rng = random.Random(11)
        reports = []
        for index in range(30):
            ref = " ".join(rng.choice("abcde") for _ in range(rng.randint(1, 8)))
            hyp = " ".join(rng.choice("abcde") for _ in range(rng.randint(1, 8)))
            reports.append(score_utterance(str(index), ref, hyp, hyp))
        shuffled = reports[:]
        rng.shuffle(shuffled)
        assert corpus_rates(reports) == corpus_rates(shuffled)

    def test_relative_change_matches_reported_value(self):
        # 8.51 -> 6.65 must print as -21.9
        change = (6.65 - 8.51) / 8.51
        assert f"{change * 100:+.1f}" == "-21.9"


class TestGloss:
    def test_two_row_gloss_marks_gaps(self):
        ref, asr, _ = EXAMPLE_1
        _, alignment = word_edit_distance(ref.split(), asr.split())
        gloss = render_gloss(alignment)
        ref_row, hyp_row = gloss.splitlines()
        assert "***" in ref_row
        assert "see" in hyp_row and "her" in hyp_row

    def test_triple_layout_for_example_1(self):
        ref, asr, llm = EXAMPLE_1
        report = score_utterance("ex1", ref, asr, llm)
        gloss = render_triple(report.alignment_before, report.alignment_after)
        rows = gloss.splitlines()
        assert rows[0].startswith("REF:")
        assert rows[1].startswith("ASR:")
        assert rows[2].startswith("LLM:")
        assert "***" in rows[0]  # the inserted "see" has no reference word
        assert "***" in rows[2]  # nor a corrected word

    def test_triple_requires_matching_reference(self):
        _, a1 = word_edit_distance(["a", "b"], ["a", "b"])
        _, a2 = word_edit_distance(["a", "c"], ["a", "c"])
        with pytest.raises(ValueError):
            render_triple(a1, a2)
