"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

from __future__ import annotations

import json
import random
import time
from pathlib import Path

import pytest

from asrcorrect.analysis import (
    DEFAULT_SWEEP_GRID,
    run_experiment,
    sweep_thresholds,
)
from asrcorrect.cli import main
from asrcorrect.evaluation import (
    cer,
    format_relative_change,
    wer,
    word_edit_distance,
)
from asrcorrect.filtering import FilterStrategy, StrategyKind
from asrcorrect.llm_client import (
    BackendConfig,
    BackendKind,
    HttpChatBackend,
    IdentityBackend,
    OracleBackend,
    ReplayBackend,
    ScriptedBackend,
    request_fingerprint,
)
from asrcorrect.noise import NoiseConfig, generate_corpus, scripted_replies
from asrcorrect.prompting import (
    PromptId,
    TEMPLATES,
    build_prompt,
    get_template,
    render_fixture,
)
from asrcorrect.types import Corpus

from conftest import (
    EXAMPLE_1,
    EXAMPLE_2,
    EXAMPLE_4,
    brute_force_distance,
    uniform_utterance,
)

ROOT = Path(__file__).resolve().parent.parent
REPLAY = Path(__file__).resolve().parent / "data" / "replay_fixture"


def report(number: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] criterion {number}: {name}{suffix}")
    assert ok, f"criterion {number} ({name}) failed{suffix}"


def sim_corpus(n=200, seed=17, clean=(0.95, 0.04), corrupted=(0.4, 0.15)):
    refs = [
        f"plain sentence number {i} containing several ordinary words" for i in range(n)
    ]
    return generate_corpus(
        refs,
        NoiseConfig(
            substitution_rate=0.10,
            confidence_clean=clean,
            confidence_corrupted=corrupted,
            seed=seed,
        ),
    )


def test_criterion_1_example_4_exactness():
    started = time.monotonic()
    ref, asr, llm = EXAMPLE_4
    values = (
        wer(ref, asr) * 100,
        wer(ref, llm) * 100,
        cer(ref, asr) * 100,
        cer(ref, llm) * 100,
    )
    expected = (57.14, 28.57, 25.00, 27.50)
    elapsed = time.monotonic() - started
    ok = all(abs(v - e) <= 0.01 for v, e in zip(values, expected)) and elapsed < 0.5
    report(
        1,
        "example-4 exactness",
        ok,
        f"WER {values[0]:.2f}->{values[1]:.2f} CER {values[2]:.2f}->{values[3]:.2f} "
        f"in {elapsed * 1000:.1f}ms",
    )


def test_criterion_2_edit_distance_oracle_equivalence():
    started = time.monotonic()
    rng = random.Random(2024)
    vocab = "abcde"
    ok = True
    for _ in range(1000):
        ref = [rng.choice(vocab) for _ in range(rng.randint(0, 8))]
        hyp = [rng.choice(vocab) for _ in range(rng.randint(0, 8))]
        distance, alignment = word_edit_distance(ref, hyp)
        if distance != brute_force_distance(ref, hyp):
            ok = False
            break
        if alignment.ref_units() != ref or alignment.hyp_units() != hyp:
            ok = False
            break
        if alignment.distance != distance:
            ok = False
            break
    elapsed = time.monotonic() - started
    ok = ok and elapsed < 10.0
    report(2, "edit-distance oracle equivalence", ok, f"1000 pairs in {elapsed:.2f}s")


def test_criterion_3_example_1_2_corrections():
    ref1, asr1, llm1 = EXAMPLE_1
    ref2, asr2, llm2 = EXAMPLE_2
    oracle_distance = brute_force_distance(ref1.split(), asr1.split())
    ok = (
        oracle_distance == 2
        and len(ref1.split()) == 6
        and wer(ref1, asr1) > wer(ref1, llm1)
        and wer(ref2, asr2) > wer(ref2, llm2)
    )
    report(
        3,
        "example-1/2 corrections",
        ok,
        f"ex1 distance {oracle_distance}/6, "
        f"ex1 WER {wer(ref1, asr1):.3f}->{wer(ref1, llm1):.3f}, "
        f"ex2 WER {wer(ref2, asr2):.3f}->{wer(ref2, llm2):.3f}",
    )


def test_criterion_4_filtering_boundary_and_monotonicity():
    started = time.monotonic()
    corpus = sim_corpus(200)
    template = get_template("4")

    zero = run_experiment(
        corpus,
        FilterStrategy(kind=StrategyKind.LOWEST_WORD, threshold=0.0),
        template,
        OracleBackend(),
    )
    boundary_ok = (
        zero.corrected_fraction == 0.0
        and zero.rates.wer_after == zero.rates.wer_before
        and all(o.final_text == o.utterance.hypothesis_text for o in zero.outcomes)
    )

    monotone_ok = True
    for kind in StrategyKind:
        sweep_template = get_template("4w" if kind is StrategyKind.SPECIFIC_WORDS else "4")
        sweep = sweep_thresholds(
            corpus, kind, list(DEFAULT_SWEEP_GRID), sweep_template, IdentityBackend()
        )
        fractions = sweep.corrected_fraction_at_threshold
        if any(a > b for a, b in zip(fractions, fractions[1:])):
            monotone_ok = False
    elapsed = time.monotonic() - started
    ok = boundary_ok and monotone_ok and elapsed < 5.0
    report(
        4,
        "filtering boundary + monotonicity",
        ok,
        f"200 utterances, 3 strategies in {elapsed:.2f}s",
    )


def test_criterion_5_sweep_composition_equivalence():
    corpus = sim_corpus(60, seed=23)
    replies = scripted_replies(corpus, damage_clean_rate=0.0, seed=23)
    grid = [0.0, 0.25, 0.5, 0.7, 0.95, 1.0]

    ok = True
    for kind in (StrategyKind.SENTENCE_LEVEL, StrategyKind.LOWEST_WORD):
        backend = ScriptedBackend(replies)
        sweep = sweep_thresholds(corpus, kind, grid, get_template("4"), backend)
        calls_ok = backend.calls <= len(corpus)
        for threshold, wer_value, fraction in zip(
            sweep.thresholds, sweep.wer_at_threshold, sweep.corrected_fraction_at_threshold
        ):
            independent = run_experiment(
                corpus,
                FilterStrategy(kind=kind, threshold=threshold),
                get_template("4"),
                ScriptedBackend(replies),
            )
            if (
                independent.rates.wer_after != wer_value
                or independent.corrected_fraction != fraction
            ):
                ok = False
        ok = ok and calls_ok

    # specific-words: equivalence holds too, with one call per distinct list
    backend = ScriptedBackend(replies)
    sweep = sweep_thresholds(
        corpus, StrategyKind.SPECIFIC_WORDS, grid, get_template("4w"), backend
    )
    for threshold, wer_value in zip(sweep.thresholds, sweep.wer_at_threshold):
        independent = run_experiment(
            corpus,
            FilterStrategy(kind=StrategyKind.SPECIFIC_WORDS, threshold=threshold),
            get_template("4w"),
            ScriptedBackend(replies),
        )
        if independent.rates.wer_after != wer_value:
            ok = False

    report(5, "sweep composition equivalence", ok)


def test_criterion_6_oracle_bound_and_identity_breakdown():
    corpus = sim_corpus(80, seed=31)
    send_all = FilterStrategy(kind=StrategyKind.LOWEST_WORD, threshold=1.01)
    template = get_template("4")

    oracle = run_experiment(corpus, send_all, template, OracleBackend())
    identity = run_experiment(corpus, send_all, template, IdentityBackend())
    ok = (
        oracle.rates.wer_after == 0.0
        and identity.no_change_pct == 100.0
        and identity.improved_pct == 0.0
        and identity.worsened_pct == 0.0
    )
    report(
        6,
        "oracle bound + identity breakdown",
        ok,
        f"oracle after-WER {oracle.rates.wer_after}, identity no-change "
        f"{identity.no_change_pct}%",
    )


def test_criterion_7_relative_change_arithmetic():
    change = (6.65 - 8.51) / 8.51
    printed = format_relative_change(change)
    ok = printed == "(-21.9)" and abs(change * 100 - (-21.9)) <= 0.05
    report(7, "relative-change arithmetic", ok, f"8.51 -> 6.65 prints {printed}")


def test_criterion_8_prompt_fixtures():
    fixture_names = {
        PromptId.P1: "P1.txt",
        PromptId.P2: "P2.txt",
        PromptId.P3: "P3.txt",
        PromptId.P4: "P4.txt",
        PromptId.P5: "P5.txt",
        PromptId.P4_SPECIFIC_WORDS: "P4_specific_words.txt",
    }
    ok = True
    for prompt_id, name in fixture_names.items():
        path = ROOT / "prompts" / name
        if not path.exists():
            ok = False
            continue
        if render_fixture(TEMPLATES[prompt_id]) != path.read_text(encoding="utf-8"):
            ok = False

    all_text = "".join(
        (ROOT / "prompts" / name).read_text(encoding="utf-8")
        for name in fixture_names.values()
        if (ROOT / "prompts" / name).exists()
    )
    ok = ok and "why not allow your silver tufts to luxuriate in a natural manner?" in all_text
    ok = ok and "Meanwhile, how fared did it with the flowers?" in all_text
    ok = ok and "keys: text and low_confidence_words" in all_text
    report(8, "prompt fixtures byte-match", ok, "6 templates")


def test_criterion_9_cache_determinism(tmp_path, monkeypatch):
    # two consecutive replay runs produce byte-identical report.json
    outputs = []
    for run in ("one", "two"):
        out = tmp_path / run
        code = main(
            [
                "correct", "--corpus", str(REPLAY / "manifest.jsonl"),
                "--backend", "replay", "--cache-dir", str(REPLAY / "cache"),
                "--model", "fixture-model", "--strategy", "lowest-word",
                "--threshold", "0.7", "--prompt", "4", "--out", str(out),
            ]
        )
        assert code == 0
        outputs.append((out / "report.json").read_bytes())
    bytes_ok = outputs[0] == outputs[1]

    # replay backend performs no live calls by construction
    replay_backend = ReplayBackend(REPLAY / "cache", "fixture-model")

    # an http backend with a fully warmed cache must observe zero live calls:
    # the endpoint is unreachable, so any attempted call would surface as an error
    monkeypatch.setenv("ACCEPT_KEY", "k")
    utt = uniform_utterance("ex1", EXAMPLE_1[1], 0.40, reference=EXAMPLE_1[0])
    request = build_prompt(get_template("4"), utt)
    config = BackendConfig(
        kind=BackendKind.HTTP_CHAT,
        model_name="warmed",
        endpoint_url="http://127.0.0.1:1/v1/chat/completions",
        api_key_env="ACCEPT_KEY",
        max_retries=0,
        cache_dir=tmp_path / "warmed-cache",
    )
    backend = HttpChatBackend(config)
    assert backend.cache is not None
    backend.cache.put(
        request_fingerprint(request, "warmed"), request, "warmed", "their fingers sear me like fire"
    )
    from asrcorrect.llm_client import correct as do_correct

    record = do_correct(request, backend, utt)
    counter_ok = (
        backend.live_calls == 0
        and replay_backend.live_calls == 0
        and record.error is None
        and record.from_cache
    )
    report(
        9,
        "cache determinism",
        bytes_ok and counter_ok,
        f"report.json identical={bytes_ok}, live calls={backend.live_calls}",
    )


def test_criterion_10_simulated_end_to_end_demo():
    # overlapping-enough distributions that the filter sends a few clean
    # sentences too, so the demo is not a degenerate zero-WER case
    corpus = sim_corpus(200, seed=77, clean=(0.8, 0.15), corrupted=(0.4, 0.2))
    replies = scripted_replies(corpus, damage_clean_rate=0.10, seed=77)
    template = get_template("4")

    def run_at(threshold: float) -> float:
        backend = ScriptedBackend(replies)
        result = run_experiment(
            corpus,
            FilterStrategy(kind=StrategyKind.LOWEST_WORD, threshold=threshold),
            template,
            backend,
        )
        return result.rates.wer_after

    wer_no_correction = run_at(0.0)
    wer_filtered = run_at(0.7)
    wer_correct_everything = run_at(1.01)

    ok = wer_filtered < wer_no_correction and wer_filtered < wer_correct_everything
    report(
        10,
        "simulated end-to-end trade-off",
        ok,
        f"none {100 * wer_no_correction:.2f}% | filtered {100 * wer_filtered:.2f}% | "
        f"all {100 * wer_correct_everything:.2f}%",
    )

    # the full-scale anchor numbers are documentation: the README must keep
    # the values and the regeneration commands
    readme = (ROOT / "README.md").read_text(encoding="utf-8")
    assert "8.13" in readme and "5.63" in readme
    assert "--backend http" in readme
