"""Word- and sentence-level confidence values derived from token scores.

Word confidence is the arithmetic mean of the word's non-punctuation
token confidences; sentence confidence is the mean over all
non-punctuation tokens of the utterance.  Punctuation never contributes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .types import Utterance, WordScore


class NoScoreableContent(ValueError):
    """Raised when nothing but punctuation (or nothing at all) is present."""


@dataclass(frozen=True)
class ConfidenceProfile:
    """Per-word and per-sentence confidence for one utterance.

    ``word_texts`` runs parallel to ``word_confidences`` and carries the
    surface forms needed by the specific-words filtering strategy.
    Punctuation-only words are excluded from both lists.
    """

    utterance_id: str
    word_texts: tuple[str, ...]
    word_confidences: tuple[float, ...]
    sentence_confidence: float
    lowest_word_confidence: float


def _scoreable_tokens(word: WordScore) -> list[float]:
    return [t.confidence for t in word.tokens if not t.is_punctuation]


def word_confidence(word: WordScore) -> float:
    """Mean confidence of the word's non-punctuation tokens.

    Falls back to the precomputed word confidence when no tokens are
    attached.  Raises NoScoreableContent for punctuation-only words.
    """
    if not word.tokens:
        if word.is_punctuation:
            raise NoScoreableContent(f"word {word.text!r} is punctuation only")
        return word.confidence
    confidences = _scoreable_tokens(word)
    if not confidences:
        raise NoScoreableContent(f"word {word.text!r} has only punctuation tokens")
    return sum(confidences) / len(confidences)


def sentence_confidence(utt: Utterance) -> float:
    """Mean confidence over all non-punctuation tokens of the utterance.

    When some word carries no token detail the mean of word confidences
    is used instead (documented fallback for word-level-only inputs).
    """
    words = [w for w in utt.words if not w.is_punctuation]
    if any(not w.tokens for w in words):
        confidences = [w.confidence for w in words]
    else:
        confidences = [c for w in words for c in _scoreable_tokens(w)]
    if not confidences:
        raise NoScoreableContent(f"utterance {utt.id!r} has no scoreable content")
    return sum(confidences) / len(confidences)


def build_profile(utt: Utterance) -> ConfidenceProfile:
    """Assemble the confidence profile used by the filtering strategies.

    Utterances with no scoreable content get confidence 0 everywhere so
    that they are always sent for correction.
    """
    texts: list[str] = []
    confidences: list[float] = []
    for word in utt.words:
        try:
            conf = word_confidence(word)
        except NoScoreableContent:
            continue
        texts.append(word.text)
        confidences.append(conf)

    if not confidences:
        return ConfidenceProfile(
            utterance_id=utt.id,
            word_texts=(),
            word_confidences=(),
            sentence_confidence=0.0,
            lowest_word_confidence=0.0,
        )

    return ConfidenceProfile(
        utterance_id=utt.id,
        word_texts=tuple(texts),
        word_confidences=tuple(confidences),
        sentence_confidence=sentence_confidence(utt),
        lowest_word_confidence=min(confidences),
    )
