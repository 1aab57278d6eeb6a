"""Core data model shared by the whole pipeline.

An :class:`Utterance` is one ASR hypothesis with per-word confidence
scores and, optionally, its reference transcript.  Word confidences may
be backed by real subword token scores or by a single synthetic token
when the input only carried word-level values.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field, replace


def is_punctuation_text(text: str) -> bool:
    """True if *text*, after trimming whitespace, is non-empty and consists
    only of Unicode punctuation characters."""
    stripped = text.strip()
    if not stripped:
        return False
    return all(unicodedata.category(ch).startswith("P") for ch in stripped)


@dataclass(frozen=True)
class TokenScore:
    """One decoder token with its confidence."""

    text: str
    confidence: float
    is_punctuation: bool = False

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("token text must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"token confidence {self.confidence!r} outside [0, 1]")


@dataclass(frozen=True)
class WordScore:
    """One word with its confidence and the tokens that formed it."""

    text: str
    confidence: float
    tokens: tuple[TokenScore, ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"word confidence {self.confidence!r} outside [0, 1]")

    @property
    def is_punctuation(self) -> bool:
        return is_punctuation_text(self.text)


def make_word(text: str, confidence: float) -> WordScore:
    """Build a WordScore backed by a single synthetic token.

    Used when the input format only provides word-level confidences.
    """
    token = TokenScore(
        text=text,
        confidence=confidence,
        is_punctuation=is_punctuation_text(text),
    )
    return WordScore(text=text, confidence=confidence, tokens=(token,))


@dataclass(frozen=True)
class Utterance:
    """One hypothesis, its word scores, and an optional reference."""

    id: str
    words: tuple[WordScore, ...] = ()
    reference_text: str | None = None

    @property
    def hypothesis_text(self) -> str:
        return " ".join(w.text for w in self.words)

    @property
    def has_reference(self) -> bool:
        return self.reference_text is not None

    def with_reference(self, reference: str | None) -> "Utterance":
        return replace(self, reference_text=reference)


@dataclass(frozen=True)
class Corpus:
    """An ordered collection of utterances with distinct IDs."""

    name: str
    utterances: tuple[Utterance, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for utt in self.utterances:
            if utt.id in seen:
                raise ValueError(f"duplicate utterance id {utt.id!r} in corpus")
            seen.add(utt.id)

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def get(self, utterance_id: str) -> Utterance | None:
        for utt in self.utterances:
            if utt.id == utterance_id:
                return utt
        return None
