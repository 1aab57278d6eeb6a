"""Synthetic hypothesis corpora with controlled error rates and
confidence scores correlated with the injected errors.

Lets the whole pipeline run end to end with no ASR model and no API:
corrupted words draw their confidence from a low distribution, clean
words from a high one, so confidence-based filtering has a real signal
to find.  Everything is deterministic under a fixed seed; each utterance
derives its own RNG from (seed, index) so generation order and
parallelism cannot change the output.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass

from .types import Corpus, Utterance, make_word


@dataclass(frozen=True)
class NoiseConfig:
    substitution_rate: float = 0.0
    deletion_rate: float = 0.0
    insertion_rate: float = 0.0
    confidence_clean: tuple[float, float] = (0.95, 0.04)
    confidence_corrupted: tuple[float, float] = (0.40, 0.15)
    seed: int = 0

    def __post_init__(self) -> None:
        rates = (self.substitution_rate, self.deletion_rate, self.insertion_rate)
        if any(rate < 0 for rate in rates):
            raise ValueError("error rates must be >= 0")
        if sum(rates) > 1.0:
            raise ValueError(f"error rates sum to {sum(rates)} > 1")
        for mean, spread in (self.confidence_clean, self.confidence_corrupted):
            if not 0.0 <= mean <= 1.0:
                raise ValueError(f"confidence mean {mean} outside [0, 1]")
            if spread < 0:
                raise ValueError(f"confidence spread {spread} must be >= 0")


def _sample_confidence(rng: random.Random, mean_spread: tuple[float, float]) -> float:
    mean, spread = mean_spread
    if spread == 0:
        return mean
    value = rng.triangular(mean - spread, mean + spread, mean)
    return min(1.0, max(0.0, value))


def _perturb_word(word: str, rng: random.Random) -> str:
    """Cheap typo model: guaranteed to differ from the input."""
    letters = string.ascii_lowercase
    for _ in range(8):
        kind = rng.randrange(4)
        chars = list(word)
        if kind == 0 and len(chars) >= 2:  # swap adjacent
            index = rng.randrange(len(chars) - 1)
            chars[index], chars[index + 1] = chars[index + 1], chars[index]
        elif kind == 1:  # replace one character
            index = rng.randrange(len(chars))
            chars[index] = rng.choice(letters)
        elif kind == 2 and len(chars) >= 2:  # drop one character
            del chars[rng.randrange(len(chars))]
        else:  # duplicate one character
            index = rng.randrange(len(chars))
            chars.insert(index, chars[index])
        candidate = "".join(chars)
        if candidate != word:
            return candidate
    return word + rng.choice(letters)


def _substitute_word(
    word: str,
    rng: random.Random,
    vocabulary: list[str],
    confusions: dict[str, list[str]] | None,
) -> str:
    if confusions and word in confusions and confusions[word]:
        return rng.choice(confusions[word])
    alternatives = [w for w in vocabulary if w != word]
    if alternatives and rng.random() < 0.5:
        return rng.choice(alternatives)
    return _perturb_word(word, rng)


def corrupt(
    reference: str,
    config: NoiseConfig,
    utterance_id: str = "sim-0",
    rng: random.Random | None = None,
    vocabulary: list[str] | None = None,
    confusions: dict[str, list[str]] | None = None,
) -> Utterance:
    """Corrupt one reference into a scored hypothesis.

    Per word, a single mutually exclusive event is drawn: substitution,
    deletion, or insertion of a word after it.  Corrupted and inserted
    words sample their confidence from the corrupted distribution, clean
    words from the clean one.
    """
    if not reference.strip():
        raise ValueError("reference must be non-empty")
    if rng is None:
        rng = random.Random(f"{config.seed}/{utterance_id}")
    ref_words = reference.split()
    if vocabulary is None:
        vocabulary = sorted(set(ref_words))

    words = []
    for ref_word in ref_words:
        roll = rng.random()
        if roll < config.substitution_rate:
            replacement = _substitute_word(ref_word, rng, vocabulary, confusions)
            words.append(make_word(replacement, _sample_confidence(rng, config.confidence_corrupted)))
        elif roll < config.substitution_rate + config.deletion_rate:
            continue
        elif roll < config.substitution_rate + config.deletion_rate + config.insertion_rate:
            words.append(make_word(ref_word, _sample_confidence(rng, config.confidence_clean)))
            inserted = rng.choice(vocabulary) if vocabulary else _perturb_word(ref_word, rng)
            words.append(make_word(inserted, _sample_confidence(rng, config.confidence_corrupted)))
        else:
            words.append(make_word(ref_word, _sample_confidence(rng, config.confidence_clean)))

    return Utterance(id=utterance_id, words=tuple(words), reference_text=reference)


def generate_corpus(
    references: list[str],
    config: NoiseConfig,
    name: str = "simulated",
    confusions: dict[str, list[str]] | None = None,
) -> Corpus:
    """One corrupted utterance per reference, deterministic under the seed."""
    vocabulary = sorted({word for ref in references for word in ref.split()})
    utterances = []
    for index, reference in enumerate(references):
        utterance_id = f"sim-{config.seed}-{index:05d}"
        rng = random.Random(f"{config.seed}/{index}")
        utterances.append(
            corrupt(
                reference,
                config,
                utterance_id=utterance_id,
                rng=rng,
                vocabulary=vocabulary,
                confusions=confusions,
            )
        )
    return Corpus(name=name, utterances=tuple(utterances))


def scripted_replies(
    corpus: Corpus,
    damage_clean_rate: float = 0.1,
    seed: int = 0,
) -> dict[str, str]:
    """Build a canned reply map simulating a partially competent corrector.

    Corrupted utterances (hypothesis differs from reference) are fixed
    perfectly; clean utterances are damaged with probability
    *damage_clean_rate* (one word perturbed), otherwise echoed.  Used to
    demonstrate the core trade-off: correcting everything hurts clean
    transcripts, filtering protects them.
    """
    replies: dict[str, str] = {}
    for index, utt in enumerate(corpus):
        rng = random.Random(f"replies/{seed}/{index}")
        reference = utt.reference_text
        hypothesis = utt.hypothesis_text
        if reference is not None and hypothesis != reference:
            replies[utt.id] = reference
        elif rng.random() < damage_clean_rate:
            words = hypothesis.split()
            if words:
                index_to_break = rng.randrange(len(words))
                words[index_to_break] = _perturb_word(words[index_to_break], rng)
            replies[utt.id] = " ".join(words)
        else:
            replies[utt.id] = hypothesis
    return replies
