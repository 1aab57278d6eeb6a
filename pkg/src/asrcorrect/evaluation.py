"""Text normalization, edit-distance alignment, and WER/CER.

WER is (substitutions + insertions + deletions) / reference word count
from a minimal word-level alignment.  CER is the same ratio over the
characters of the normalized strings, inter-word spaces included: a
one-word substitution that rewrites many characters moves CER much more
than WER, and vice versa.

Corpus-level rates pool edit distances over the whole corpus (total
errors / total reference units) rather than averaging per-utterance
rates.
"""

from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass

_APOSTROPHES = ("'", "’")


class EmptyReferenceError(ValueError):
    """The normalized reference is empty; the rate is undefined."""


@dataclass(frozen=True)
class NormalizationProfile:
    """Deterministic text cleanup applied to both sides before scoring."""

    lowercase: bool = True
    strip_punctuation: bool = True
    collapse_whitespace: bool = True


DEFAULT_PROFILE = NormalizationProfile()


def _is_punct_char(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize(text: str, profile: NormalizationProfile = DEFAULT_PROFILE) -> str:
    """Normalize one string for scoring.

    With the default profile: lowercase, drop punctuation except
    apostrophes flanked by letters (clitics like "fedosya's" survive),
    and collapse whitespace runs to single spaces.
    """
    if profile.lowercase:
        text = text.lower()
    if profile.strip_punctuation:
        chars = []
        for index, ch in enumerate(text):
            if not _is_punct_char(ch):
                chars.append(ch)
                continue
            if ch in _APOSTROPHES:
                before = text[index - 1] if index > 0 else ""
                after = text[index + 1] if index + 1 < len(text) else ""
                if before.isalpha() and after.isalpha():
                    chars.append("'")
                    continue
            chars.append(" ")
        text = "".join(chars)
    if profile.collapse_whitespace:
        text = " ".join(text.split())
    return text


class EditOp(enum.Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    INSERT = "insert"
    DELETE = "delete"


@dataclass(frozen=True)
class AlignmentStep:
    op: EditOp
    ref_unit: str | None
    hyp_unit: str | None


@dataclass(frozen=True)
class Alignment:
    steps: tuple[AlignmentStep, ...]

    @property
    def distance(self) -> int:
        return sum(1 for s in self.steps if s.op is not EditOp.MATCH)

    def ref_units(self) -> list[str]:
        return [s.ref_unit for s in self.steps if s.op is not EditOp.INSERT]

    def hyp_units(self) -> list[str]:
        return [s.hyp_unit for s in self.steps if s.op is not EditOp.DELETE]


def word_edit_distance(
    ref_words: list[str], hyp_words: list[str]
) -> tuple[int, Alignment]:
    """Minimal unit-cost edit distance with a witnessing alignment.

    Backtrace tie-breaking prefers Match over Substitute over Delete
    over Insert, so equal-cost alignments are produced deterministically.
    """
    m, n = len(ref_words), len(hyp_words)
    # dp[i][j] = distance between ref[:i] and hyp[:j]
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        dp[i][0] = i
    for j in range(1, n + 1):
        dp[0][j] = j
    for i in range(1, m + 1):
        row, prev = dp[i], dp[i - 1]
        ref_word = ref_words[i - 1]
        for j in range(1, n + 1):
            diag = prev[j - 1] + (0 if ref_word == hyp_words[j - 1] else 1)
            row[j] = min(diag, prev[j] + 1, row[j - 1] + 1)

    steps: list[AlignmentStep] = []
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            same = ref_words[i - 1] == hyp_words[j - 1]
            if same and dp[i][j] == dp[i - 1][j - 1]:
                steps.append(AlignmentStep(EditOp.MATCH, ref_words[i - 1], hyp_words[j - 1]))
                i, j = i - 1, j - 1
                continue
            if not same and dp[i][j] == dp[i - 1][j - 1] + 1:
                steps.append(
                    AlignmentStep(EditOp.SUBSTITUTE, ref_words[i - 1], hyp_words[j - 1])
                )
                i, j = i - 1, j - 1
                continue
        if i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            steps.append(AlignmentStep(EditOp.DELETE, ref_words[i - 1], None))
            i -= 1
            continue
        steps.append(AlignmentStep(EditOp.INSERT, None, hyp_words[j - 1]))
        j -= 1

    steps.reverse()
    return dp[m][n], Alignment(steps=tuple(steps))


def edit_distance(ref_units: list[str] | str, hyp_units: list[str] | str) -> int:
    """Distance only, two DP rows; used for character sequences."""
    m, n = len(ref_units), len(hyp_units)
    if m == 0:
        return n
    if n == 0:
        return m
    prev = list(range(n + 1))
    for i in range(1, m + 1):
        current = [i] + [0] * n
        ref_unit = ref_units[i - 1]
        for j in range(1, n + 1):
            current[j] = min(
                prev[j - 1] + (0 if ref_unit == hyp_units[j - 1] else 1),
                prev[j] + 1,
                current[j - 1] + 1,
            )
        prev = current
    return prev[n]


def wer(ref: str, hyp: str, profile: NormalizationProfile = DEFAULT_PROFILE) -> float:
    """Word error rate of *hyp* against *ref* after normalization."""
    ref_words = normalize(ref, profile).split()
    hyp_words = normalize(hyp, profile).split()
    if not ref_words:
        raise EmptyReferenceError("reference is empty after normalization")
    distance, _ = word_edit_distance(ref_words, hyp_words)
    return distance / len(ref_words)


def cer(ref: str, hyp: str, profile: NormalizationProfile = DEFAULT_PROFILE) -> float:
    """Character error rate, spaces included, after normalization."""
    ref_norm = normalize(ref, profile)
    hyp_norm = normalize(hyp, profile)
    if not ref_norm:
        raise EmptyReferenceError("reference is empty after normalization")
    return edit_distance(ref_norm, hyp_norm) / len(ref_norm)


class Category(enum.Enum):
    IMPROVED = "improved"
    WORSENED = "worsened"
    NO_CHANGE = "no_change"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class ScoreReport:
    """Before/after scores for one utterance.

    Raw distances and reference sizes are kept so corpus rates can be
    pooled exactly; the categorization compares integer word distances,
    which is equivalent to comparing WERs over the shared denominator.
    """

    utterance_id: str
    ref_word_count: int
    ref_char_count: int
    word_distance_before: int
    word_distance_after: int
    char_distance_before: int
    char_distance_after: int
    alignment_before: Alignment
    alignment_after: Alignment

    @property
    def wer_before(self) -> float:
        return self.word_distance_before / self.ref_word_count

    @property
    def wer_after(self) -> float:
        return self.word_distance_after / self.ref_word_count

    @property
    def cer_before(self) -> float:
        return self.char_distance_before / self.ref_char_count

    @property
    def cer_after(self) -> float:
        return self.char_distance_after / self.ref_char_count

    @property
    def category(self) -> Category:
        if self.word_distance_after < self.word_distance_before:
            return Category.IMPROVED
        if self.word_distance_after > self.word_distance_before:
            return Category.WORSENED
        return Category.NO_CHANGE


def score_utterance(
    utterance_id: str,
    ref: str,
    hyp_before: str,
    hyp_after: str,
    profile: NormalizationProfile = DEFAULT_PROFILE,
) -> ScoreReport:
    """Score the original and corrected hypotheses against one reference."""
    ref_norm = normalize(ref, profile)
    if not ref_norm:
        raise EmptyReferenceError(
            f"utterance {utterance_id!r}: reference empty after normalization"
        )
    ref_words = ref_norm.split()
    before_norm = normalize(hyp_before, profile)
    after_norm = normalize(hyp_after, profile)

    dist_before, align_before = word_edit_distance(ref_words, before_norm.split())
    dist_after, align_after = word_edit_distance(ref_words, after_norm.split())
    return ScoreReport(
        utterance_id=utterance_id,
        ref_word_count=len(ref_words),
        ref_char_count=len(ref_norm),
        word_distance_before=dist_before,
        word_distance_after=dist_after,
        char_distance_before=edit_distance(ref_norm, before_norm),
        char_distance_after=edit_distance(ref_norm, after_norm),
        alignment_before=align_before,
        alignment_after=align_after,
    )


def _relative_change(before: float, after: float) -> float | None:
    if before == 0:
        return None
    return (after - before) / before


@dataclass(frozen=True)
class CorpusRates:
    """Pooled corpus rates: total edit distance over total reference size."""

    wer_before: float
    wer_after: float
    cer_before: float
    cer_after: float
    total_ref_words: int
    total_ref_chars: int

    @property
    def wer_relative_change(self) -> float | None:
        return _relative_change(self.wer_before, self.wer_after)

    @property
    def cer_relative_change(self) -> float | None:
        return _relative_change(self.cer_before, self.cer_after)


def corpus_rates(reports: list[ScoreReport]) -> CorpusRates:
    """Pool per-utterance distances into corpus WER/CER before and after."""
    total_words = sum(r.ref_word_count for r in reports)
    total_chars = sum(r.ref_char_count for r in reports)
    if total_words == 0:
        raise EmptyReferenceError("no reference words to score against")
    return CorpusRates(
        wer_before=sum(r.word_distance_before for r in reports) / total_words,
        wer_after=sum(r.word_distance_after for r in reports) / total_words,
        cer_before=sum(r.char_distance_before for r in reports) / total_chars,
        cer_after=sum(r.char_distance_after for r in reports) / total_chars,
        total_ref_words=total_words,
        total_ref_chars=total_chars,
    )


def format_relative_change(value: float | None) -> str:
    if value is None:
        return "(n/a)"
    return f"({value * 100:+.1f})"


_GAP = "***"


def render_gloss(alignment: Alignment, labels: tuple[str, str] = ("REF", "HYP")) -> str:
    """Two aligned rows in the conventional gloss layout, gaps as ***."""
    ref_cells = [s.ref_unit if s.ref_unit is not None else _GAP for s in alignment.steps]
    hyp_cells = [s.hyp_unit if s.hyp_unit is not None else _GAP for s in alignment.steps]
    widths = [max(len(a), len(b)) for a, b in zip(ref_cells, hyp_cells)]
    label_width = max(len(label) for label in labels)
    rows = []
    for label, cells in zip(labels, (ref_cells, hyp_cells)):
        padded = " ".join(cell.ljust(width) for cell, width in zip(cells, widths))
        rows.append(f"{label.ljust(label_width)}: {padded.rstrip()}")
    return "\n".join(rows)


def render_triple(
    before: Alignment,
    after: Alignment,
    labels: tuple[str, str, str] = ("REF", "ASR", "LLM"),
) -> str:
    """Three aligned rows (reference, original, corrected), gaps as ***.

    Both alignments must share the same reference sequence; their
    columns are merged on reference positions, with inserted words from
    either hypothesis getting their own column.
    """
    if before.ref_units() != after.ref_units():
        raise ValueError("alignments disagree on the reference sequence")

    columns: list[tuple[str, str, str]] = []
    steps_a, steps_b = list(before.steps), list(after.steps)
    ia = ib = 0
    while ia < len(steps_a) or ib < len(steps_b):
        a_ins = ia < len(steps_a) and steps_a[ia].op is EditOp.INSERT
        b_ins = ib < len(steps_b) and steps_b[ib].op is EditOp.INSERT
        if a_ins or b_ins:
            columns.append(
                (
                    _GAP,
                    steps_a[ia].hyp_unit if a_ins else _GAP,
                    steps_b[ib].hyp_unit if b_ins else _GAP,
                )
            )
            ia += 1 if a_ins else 0
            ib += 1 if b_ins else 0
            continue
        step_a, step_b = steps_a[ia], steps_b[ib]
        columns.append(
            (
                step_a.ref_unit or _GAP,
                step_a.hyp_unit if step_a.hyp_unit is not None else _GAP,
                step_b.hyp_unit if step_b.hyp_unit is not None else _GAP,
            )
        )
        ia += 1
        ib += 1

    widths = [max(len(a), len(b), len(c)) for a, b, c in columns]
    label_width = max(len(label) for label in labels)
    rows = []
    for row_index, label in enumerate(labels):
        cells = [column[row_index] for column in columns]
        padded = " ".join(cell.ljust(width) for cell, width in zip(cells, widths))
        rows.append(f"{label.ljust(label_width)}: {padded.rstrip()}")
    return "\n".join(rows)
