"""Confidence-based filtering: which utterances go to the LLM.

Three strategies share one rule shape, "confidence strictly below the
threshold triggers correction":

* sentence: compare the sentence-level confidence;
* lowest-word: compare the minimum word confidence;
* specific-words: collect every word below the threshold and send the
  utterance only when that list is non-empty.

Confidences equal to the threshold are kept.  Thresholds above 1.0 are
legal and mean "send everything".
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .confidence import ConfidenceProfile

# default thresholds, one per strategy, from the reference experiments
DEFAULT_THRESHOLDS = {
    "sentence": 0.95,
    "lowest-word": 0.7,
    "specific-words": 0.5,
}


class StrategyKind(enum.Enum):
    SENTENCE_LEVEL = "sentence"
    LOWEST_WORD = "lowest-word"
    SPECIFIC_WORDS = "specific-words"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class FilterStrategy:
    kind: StrategyKind
    threshold: float

    def __post_init__(self) -> None:
        if self.threshold < 0.0:
            raise ValueError(f"threshold {self.threshold} must be >= 0")

    @classmethod
    def default(cls, kind: StrategyKind) -> "FilterStrategy":
        return cls(kind=kind, threshold=DEFAULT_THRESHOLDS[kind.value])


@dataclass(frozen=True)
class FilterDecision:
    utterance_id: str
    send_to_llm: bool
    trigger_value: float
    low_confidence_words: tuple[str, ...] = field(default_factory=tuple)


def _dedupe_keep_order(words: list[str]) -> tuple[str, ...]:
    seen: set[str] = set()
    out: list[str] = []
    for word in words:
        if word not in seen:
            seen.add(word)
            out.append(word)
    return tuple(out)


def decide(profile: ConfidenceProfile, strategy: FilterStrategy) -> FilterDecision:
    """Apply one strategy to one confidence profile."""
    threshold = strategy.threshold
    if strategy.kind is StrategyKind.SENTENCE_LEVEL:
        trigger = profile.sentence_confidence
        return FilterDecision(
            utterance_id=profile.utterance_id,
            send_to_llm=trigger < threshold,
            trigger_value=trigger,
        )

    lowest = profile.lowest_word_confidence
    if strategy.kind is StrategyKind.LOWEST_WORD:
        return FilterDecision(
            utterance_id=profile.utterance_id,
            send_to_llm=lowest < threshold,
            trigger_value=lowest,
        )

    low_words = _dedupe_keep_order(
        [
            text
            for text, conf in zip(profile.word_texts, profile.word_confidences)
            if conf < threshold
        ]
    )
    return FilterDecision(
        utterance_id=profile.utterance_id,
        send_to_llm=bool(low_words),
        trigger_value=lowest,
        low_confidence_words=low_words,
    )


def corrected_fraction(decisions: list[FilterDecision]) -> float:
    """Fraction of utterances sent to the LLM."""
    if not decisions:
        raise ValueError("corrected_fraction of an empty decision list")
    sent = sum(1 for d in decisions if d.send_to_llm)
    return sent / len(decisions)
