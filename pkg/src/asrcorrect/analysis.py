"""Experiment orchestration: run corrections over a corpus, sweep
thresholds, break results down by outcome, and write report artifacts.

A sweep never re-asks the backend for the same request: for the
sentence-level and lowest-word strategies each utterance is corrected at
most once (the send sets at lower thresholds are subsets of the send set
at the maximal threshold); for specific-words, each distinct
low-confidence word list triggers exactly one call.  Per-threshold
results are composed by choosing the corrected or the original text per
decision, which equals running the thresholds independently whenever the
backend is deterministic.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .confidence import ConfidenceProfile, build_profile
from .evaluation import (
    Category,
    CorpusRates,
    NormalizationProfile,
    DEFAULT_PROFILE,
    EmptyReferenceError,
    ScoreReport,
    corpus_rates,
    format_relative_change,
    render_triple,
    score_utterance,
)
from .filtering import FilterDecision, FilterStrategy, StrategyKind, corrected_fraction, decide
from .llm_client import Backend, CorrectionRecord, correct
from .prompting import ChatRequest, PromptTemplate, build_prompt
from .types import Corpus, Utterance

logger = logging.getLogger(__name__)

# 0.0 .. 1.0 in steps of 0.05; covers the named operating points 0.5/0.7/0.95
DEFAULT_SWEEP_GRID: tuple[float, ...] = tuple(round(i * 0.05, 2) for i in range(21))


@dataclass(frozen=True)
class UtteranceOutcome:
    """Everything that happened to one utterance during an experiment."""

    utterance: Utterance
    profile: ConfidenceProfile
    decision: FilterDecision
    record: CorrectionRecord | None
    final_text: str
    score: ScoreReport | None
    skip_reason: str | None = None


@dataclass(frozen=True)
class ExperimentReport:
    corpus_name: str
    asr_label: str
    llm_label: str
    prompt_id: str
    strategy: FilterStrategy
    rates: CorpusRates
    corrected_fraction: float
    improved_pct: float
    worsened_pct: float
    no_change_pct: float
    divergent_ids: tuple[str, ...]
    n_utterances: int
    n_scored: int
    n_backend_errors: int
    outcomes: tuple[UtteranceOutcome, ...]

    @property
    def scored_reports(self) -> list[ScoreReport]:
        return [o.score for o in self.outcomes if o.score is not None]


@dataclass(frozen=True)
class SweepResult:
    strategy_kind: StrategyKind
    thresholds: tuple[float, ...]
    wer_at_threshold: tuple[float, ...]
    corrected_fraction_at_threshold: tuple[float, ...]


def categorize(reports: list[ScoreReport]) -> tuple[float, float, float]:
    """Percentages of utterances (improved, worsened, no change), two
    decimals, by strict per-utterance WER comparison."""
    if not reports:
        raise ValueError("categorize of an empty report list")
    total = len(reports)
    improved = sum(1 for r in reports if r.category is Category.IMPROVED)
    worsened = sum(1 for r in reports if r.category is Category.WORSENED)
    no_change = total - improved - worsened
    return (
        round(100.0 * improved / total, 2),
        round(100.0 * worsened / total, 2),
        round(100.0 * no_change / total, 2),
    )


def find_divergences(reports: list[ScoreReport]) -> list[str]:
    """Utterances where WER and CER moved in opposite directions."""
    out = []
    for report in reports:
        word_delta = report.word_distance_after - report.word_distance_before
        char_delta = report.char_distance_after - report.char_distance_before
        if word_delta != 0 and char_delta != 0 and (word_delta > 0) != (char_delta > 0):
            out.append(report.utterance_id)
    return out


def _correct_many(
    items: list[tuple[Utterance, ChatRequest]],
    backend: Backend,
    jobs: int,
) -> list[CorrectionRecord]:
    """Correct a batch, preserving input order regardless of completion order."""
    if jobs <= 1 or len(items) <= 1:
        return [correct(request, backend, utt) for utt, request in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda pair: correct(pair[1], backend, pair[0]), items))


def _score_or_skip(
    utt: Utterance,
    final_text: str,
    norm: NormalizationProfile,
) -> tuple[ScoreReport | None, str | None]:
    if utt.reference_text is None:
        return None, "no_reference"
    try:
        report = score_utterance(utt.id, utt.reference_text, utt.hypothesis_text, final_text, norm)
    except EmptyReferenceError:
        logger.warning("utterance %s: reference empty after normalization, skipped", utt.id)
        return None, "empty_reference"
    return report, None


def run_experiment(
    corpus: Corpus,
    strategy: FilterStrategy,
    template: PromptTemplate,
    backend: Backend,
    norm: NormalizationProfile = DEFAULT_PROFILE,
    jobs: int = 1,
    asr_label: str = "asr",
) -> ExperimentReport:
    """Filter, correct, and score a whole corpus.

    Backend failures never abort the run; the affected utterances fall
    back to their original hypothesis and are counted as errors.
    """
    profiles = [build_profile(utt) for utt in corpus]
    decisions = [decide(profile, strategy) for profile in profiles]

    to_send = [
        (utt, build_prompt(template, utt, decision))
        for utt, decision in zip(corpus, decisions)
        if decision.send_to_llm
    ]
    records = _correct_many(to_send, backend, jobs)
    record_by_id = {record.utterance_id: record for record in records}

    outcomes: list[UtteranceOutcome] = []
    for utt, profile, decision in zip(corpus, profiles, decisions):
        record = record_by_id.get(utt.id)
        final_text = record.corrected_text if record is not None else utt.hypothesis_text
        score, skip_reason = _score_or_skip(utt, final_text, norm)
        outcomes.append(
            UtteranceOutcome(
                utterance=utt,
                profile=profile,
                decision=decision,
                record=record,
                final_text=final_text,
                score=score,
                skip_reason=skip_reason,
            )
        )

    scored = [o.score for o in outcomes if o.score is not None]
    if not scored:
        raise EmptyReferenceError("corpus has no scoreable references")
    improved_pct, worsened_pct, no_change_pct = categorize(scored)

    return ExperimentReport(
        corpus_name=corpus.name,
        asr_label=asr_label,
        llm_label=backend.label,
        prompt_id=template.id.value,
        strategy=strategy,
        rates=corpus_rates(scored),
        corrected_fraction=corrected_fraction(decisions),
        improved_pct=improved_pct,
        worsened_pct=worsened_pct,
        no_change_pct=no_change_pct,
        divergent_ids=tuple(find_divergences(scored)),
        n_utterances=len(corpus),
        n_scored=len(scored),
        n_backend_errors=sum(1 for r in records if r.error is not None),
        outcomes=tuple(outcomes),
    )


def sweep_thresholds(
    corpus: Corpus,
    kind: StrategyKind,
    thresholds: list[float] | tuple[float, ...],
    template: PromptTemplate,
    backend: Backend,
    norm: NormalizationProfile = DEFAULT_PROFILE,
    jobs: int = 1,
) -> SweepResult:
    """Trace corpus WER and corrected fraction across a threshold grid.

    ``thresholds`` must be sorted ascending.
    """
    thresholds = tuple(thresholds)
    if list(thresholds) != sorted(thresholds):
        raise ValueError("thresholds must be sorted ascending")
    if not thresholds:
        raise ValueError("empty threshold grid")

    profiles = [build_profile(utt) for utt in corpus]

    # correction results per utterance, keyed by the word list the
    # payload would carry (always () for the non-specific strategies)
    corrected: dict[tuple[str, tuple[str, ...]], str] = {}
    pending: list[tuple[Utterance, FilterDecision]] = []
    seen: set[tuple[str, tuple[str, ...]]] = set()
    for threshold in thresholds if kind is StrategyKind.SPECIFIC_WORDS else thresholds[-1:]:
        strategy = FilterStrategy(kind=kind, threshold=threshold)
        for utt, profile in zip(corpus, profiles):
            decision = decide(profile, strategy)
            if not decision.send_to_llm:
                continue
            key = (utt.id, decision.low_confidence_words)
            if key in seen:
                continue
            seen.add(key)
            pending.append((utt, decision))

    requests = [(utt, build_prompt(template, utt, decision)) for utt, decision in pending]
    records = _correct_many(requests, backend, jobs)
    for (utt, decision), record in zip(pending, records):
        corrected[(utt.id, decision.low_confidence_words)] = record.corrected_text

    # pre-score the original and every corrected variant once
    before_scores: dict[str, ScoreReport] = {}
    variant_scores: dict[tuple[str, tuple[str, ...]], ScoreReport] = {}
    for utt in corpus:
        score, _ = _score_or_skip(utt, utt.hypothesis_text, norm)
        if score is not None:
            before_scores[utt.id] = score
    for (utt_id, words), text in corrected.items():
        utt = corpus.get(utt_id)
        assert utt is not None
        score, _ = _score_or_skip(utt, text, norm)
        if score is not None:
            variant_scores[(utt_id, words)] = score

    wer_points: list[float] = []
    fraction_points: list[float] = []
    for threshold in thresholds:
        strategy = FilterStrategy(kind=kind, threshold=threshold)
        decisions = [decide(profile, strategy) for profile in profiles]
        chosen: list[ScoreReport] = []
        for utt, decision in zip(corpus, decisions):
            if decision.send_to_llm:
                report = variant_scores.get((utt.id, decision.low_confidence_words))
                if report is None:
                    report = before_scores.get(utt.id)
            else:
                report = before_scores.get(utt.id)
            if report is not None:
                chosen.append(report)
        if not chosen:
            raise EmptyReferenceError("corpus has no scoreable references")
        rates = corpus_rates(chosen)
        wer_points.append(rates.wer_after)
        fraction_points.append(corrected_fraction(decisions))

    return SweepResult(
        strategy_kind=kind,
        thresholds=thresholds,
        wer_at_threshold=tuple(wer_points),
        corrected_fraction_at_threshold=tuple(fraction_points),
    )


def _report_summary(report: ExperimentReport) -> dict:
    rates = report.rates
    return {
        "corpus": report.corpus_name,
        "asr": report.asr_label,
        "llm": report.llm_label,
        "prompt": report.prompt_id,
        "strategy": report.strategy.kind.value,
        "threshold": report.strategy.threshold,
        "n_utterances": report.n_utterances,
        "n_scored": report.n_scored,
        "n_backend_errors": report.n_backend_errors,
        "n_cache_hits": sum(
            1 for o in report.outcomes if o.record is not None and o.record.from_cache
        ),
        "corrected_fraction": report.corrected_fraction,
        "wer_before": rates.wer_before,
        "wer_after": rates.wer_after,
        "wer_relative_change": rates.wer_relative_change,
        "cer_before": rates.cer_before,
        "cer_after": rates.cer_after,
        "cer_relative_change": rates.cer_relative_change,
        "improved_pct": report.improved_pct,
        "worsened_pct": report.worsened_pct,
        "no_change_pct": report.no_change_pct,
        "improved_fraction_exact": _category_fraction(report, Category.IMPROVED),
        "worsened_fraction_exact": _category_fraction(report, Category.WORSENED),
        "no_change_fraction_exact": _category_fraction(report, Category.NO_CHANGE),
        "divergent_ids": list(report.divergent_ids),
    }


def _category_fraction(report: ExperimentReport, category: Category) -> float:
    scored = report.scored_reports
    return sum(1 for r in scored if r.category is category) / len(scored)


def _outcome_row(outcome: UtteranceOutcome) -> dict:
    row: dict = {
        "id": outcome.utterance.id,
        "reference": outcome.utterance.reference_text,
        "hypothesis": outcome.utterance.hypothesis_text,
        "sent": outcome.decision.send_to_llm,
        "trigger_value": outcome.decision.trigger_value,
        "low_confidence_words": list(outcome.decision.low_confidence_words),
        "corrected": outcome.record.corrected_text if outcome.record else None,
        "final": outcome.final_text,
        "backend_error": outcome.record.error if outcome.record else None,
        "skip_reason": outcome.skip_reason,
    }
    score = outcome.score
    if score is not None:
        row.update(
            {
                "wer_before": score.wer_before,
                "wer_after": score.wer_after,
                "cer_before": score.cer_before,
                "cer_after": score.cer_after,
                "category": score.category.value,
            }
        )
    return row


def format_tables(report: ExperimentReport) -> str:
    """Aligned plain-text tables: rates, outcome breakdown, volume."""
    rates = report.rates
    lines = [
        f"experiment: corpus={report.corpus_name} asr={report.asr_label} "
        f"llm={report.llm_label} prompt={report.prompt_id} "
        f"strategy={report.strategy.kind.value} threshold={report.strategy.threshold:g}",
        "",
        "metric   before    after    rel.",
        f"WER     {100 * rates.wer_before:7.2f}  {100 * rates.wer_after:7.2f}  "
        f"{format_relative_change(rates.wer_relative_change)}",
        f"CER     {100 * rates.cer_before:7.2f}  {100 * rates.cer_after:7.2f}  "
        f"{format_relative_change(rates.cer_relative_change)}",
        "",
        "outcome     improved  worsened  no change",
        f"% of utts   {report.improved_pct:8.2f}  {report.worsened_pct:8.2f}  "
        f"{report.no_change_pct:9.2f}",
        "",
        f"corrected: {100 * report.corrected_fraction:.1f}% of {report.n_utterances} "
        f"utterances passed to the corrector",
        f"scored:    {report.n_scored} utterances with usable references",
        f"errors:    {report.n_backend_errors} backend failures (fell back to ASR text)",
    ]
    if report.divergent_ids:
        lines.append("")
        lines.append(
            "WER/CER divergences (opposite direction): " + ", ".join(report.divergent_ids)
        )
    return "\n".join(lines) + "\n"


def format_triples(report: ExperimentReport) -> str:
    """Gloss-style REF/ASR/LLM rows for every utterance the corrector changed."""
    blocks = []
    for outcome in report.outcomes:
        if outcome.score is None or outcome.final_text == outcome.utterance.hypothesis_text:
            continue
        gloss = render_triple(outcome.score.alignment_before, outcome.score.alignment_after)
        blocks.append(f"# {outcome.utterance.id}\n{gloss}")
    return "\n\n".join(blocks) + ("\n" if blocks else "")


_CSV_COLUMNS = (
    "id", "sent", "trigger_value", "wer_before", "wer_after",
    "cer_before", "cer_after", "category",
)


def write_report_dir(
    report: ExperimentReport,
    out_dir: str | Path,
    sweep: SweepResult | None = None,
) -> Path:
    """Write report.json, tables.txt, per_utterance.{jsonl,csv},
    triples.txt, and (when a sweep was run) sweep.csv under *out_dir*."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    (out_dir / "report.json").write_text(
        json.dumps(_report_summary(report), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    (out_dir / "tables.txt").write_text(format_tables(report), encoding="utf-8")
    rows = [_outcome_row(outcome) for outcome in report.outcomes]
    with (out_dir / "per_utterance.jsonl").open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
    with (out_dir / "per_utterance.csv").open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_CSV_COLUMNS)
        for row in rows:
            writer.writerow([row.get(col, "") for col in _CSV_COLUMNS])
    (out_dir / "triples.txt").write_text(format_triples(report), encoding="utf-8")
    if sweep is not None:
        write_sweep_csv(sweep, out_dir / "sweep.csv")
    return out_dir


def write_sweep_csv(sweep: SweepResult, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["threshold", "wer", "corrected_fraction"])
        for threshold, wer_value, fraction in zip(
            sweep.thresholds, sweep.wer_at_threshold, sweep.corrected_fraction_at_threshold
        ):
            writer.writerow([f"{threshold:g}", f"{wer_value:.6f}", f"{fraction:.6f}"])
