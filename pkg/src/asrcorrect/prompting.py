"""Chat prompt construction for the correction task.

Six templates are provided.  The base system text explains the task,
the JSON input format, and the output constraints; variants add a
phonetic-similarity instruction, a grammar instruction, or both.  The
specific-words variant swaps the input-format sentences for a schema
with a ``low_confidence_words`` key.  Few-shot example pairs are
delivered as alternating user/assistant turns after the system message.

Every template is frozen byte-for-byte by fixture files under
``prompts/`` at the repository root.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass

from .filtering import FilterDecision
from .types import Utterance


class UnusableReplyError(ValueError):
    """The model reply was empty after sanitization."""


class PromptId(enum.Enum):
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    P4 = "P4"
    P5 = "P5"
    P4_SPECIFIC_WORDS = "P4_SpecificWords"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class PromptTemplate:
    id: PromptId
    system_text: str
    examples: tuple[tuple[str, str], ...]

    @property
    def wants_word_list(self) -> bool:
        return self.id is PromptId.P4_SPECIFIC_WORDS


_ROLE_SENTENCE = "You are a helpful assistant that corrects ASR errors."
_INPUT_SENTENCE = (
    "You will be presented with an ASR transcription in json format with key: "
    "text and your task is to correct any errors in it."
)
_PHONETIC_SENTENCE = (
    "If you come across errors in ASR transcription, make corrections that "
    "closely match the original transcription acoustically or phonetically."
)
_GRAMMAR_SENTENCE = (
    "If you encounter grammatical errors, provide a corrected version adhering "
    "to proper grammar."
)
_OUTPUT_SENTENCES = (
    "Provide the most probable corrected transcription in string format.",
    "Do not change the case, for example, lower case or upper case, in the "
    "transcription.",
    "Do not output any additional text that is not the corrected transcription.",
    "Do not write any explanatory text that is not the corrected transcription.",
)
_WORD_LIST_SENTENCES = (
    "You will be presented with an ASR transcription in json format with keys: "
    "text and low_confidence_words, where the text is the ASR transcription and "
    "low_confidence_words contains the list of words in the transcription with "
    "low confidence scores.",
    "Your task is to correct any errors in the transcription.",
    "If you come across errors in ASR transcription, make sure that you correct "
    "only words from within the low_confidence_words list and your corrections "
    "should closely match the original transcription acoustically or "
    "phonetically.",
)

_EXAMPLE_1 = (
    "Why not allow your silver tuff to luxuriate in a natural manner?",
    "why not allow your silver tufts to luxuriate in a natural manner?",
)
_EXAMPLE_2 = (
    "Meanwhile, how fair did it with the flowers?",
    "Meanwhile, how fared did it with the flowers?",
)


def _system(*middle: str) -> str:
    return " ".join((_ROLE_SENTENCE, *middle, *_OUTPUT_SENTENCES))


TEMPLATES: dict[PromptId, PromptTemplate] = {
    PromptId.P1: PromptTemplate(
        id=PromptId.P1,
        system_text=_system(_INPUT_SENTENCE),
        examples=(_EXAMPLE_1,),
    ),
    PromptId.P2: PromptTemplate(
        id=PromptId.P2,
        system_text=_system(_INPUT_SENTENCE),
        examples=(_EXAMPLE_1, _EXAMPLE_2),
    ),
    PromptId.P3: PromptTemplate(
        id=PromptId.P3,
        system_text=_system(_INPUT_SENTENCE, _GRAMMAR_SENTENCE),
        examples=(_EXAMPLE_1, _EXAMPLE_2),
    ),
    PromptId.P4: PromptTemplate(
        id=PromptId.P4,
        system_text=_system(_INPUT_SENTENCE, _PHONETIC_SENTENCE),
        examples=(_EXAMPLE_1, _EXAMPLE_2),
    ),
    PromptId.P5: PromptTemplate(
        id=PromptId.P5,
        system_text=_system(_INPUT_SENTENCE, _PHONETIC_SENTENCE, _GRAMMAR_SENTENCE),
        examples=(_EXAMPLE_1, _EXAMPLE_2),
    ),
    PromptId.P4_SPECIFIC_WORDS: PromptTemplate(
        id=PromptId.P4_SPECIFIC_WORDS,
        system_text=_system(*_WORD_LIST_SENTENCES),
        examples=(_EXAMPLE_1, _EXAMPLE_2),
    ),
}

# CLI spellings for each template
_ALIASES = {
    "1": PromptId.P1,
    "2": PromptId.P2,
    "3": PromptId.P3,
    "4": PromptId.P4,
    "5": PromptId.P5,
    "4w": PromptId.P4_SPECIFIC_WORDS,
}


def get_template(key: str | PromptId) -> PromptTemplate:
    """Look up a template by PromptId, its value, or a CLI alias (1..5, 4w)."""
    if isinstance(key, PromptId):
        return TEMPLATES[key]
    if key in _ALIASES:
        return TEMPLATES[_ALIASES[key]]
    for prompt_id in PromptId:
        if key in (prompt_id.value, prompt_id.name):
            return TEMPLATES[prompt_id]
    raise KeyError(f"unknown prompt template {key!r}")


@dataclass(frozen=True)
class ChatRequest:
    """A fully rendered chat payload: system message plus alternating
    user/assistant turns, the last turn being the actual utterance."""

    system: str
    turns: tuple[tuple[str, str], ...]
    payload_text: str

    def messages(self) -> list[dict[str, str]]:
        """Wire-format message list (system first)."""
        out = [{"role": "system", "content": self.system}]
        out.extend({"role": role, "content": content} for role, content in self.turns)
        return out


def _wrap_text(text: str) -> str:
    return json.dumps({"text": text}, ensure_ascii=False)


def build_prompt(
    template: PromptTemplate,
    utt: Utterance,
    decision: FilterDecision | None = None,
) -> ChatRequest:
    """Render the chat request for one utterance.

    Example inputs are JSON-wrapped exactly like the final payload.  For
    the specific-words template the payload carries the low-confidence
    word list from the filter decision.
    """
    turns: list[tuple[str, str]] = []
    for example_input, example_output in template.examples:
        turns.append(("user", _wrap_text(example_input)))
        turns.append(("assistant", example_output))

    if template.wants_word_list:
        if decision is None or not decision.low_confidence_words:
            raise ValueError(
                "specific-words template requires a decision with a non-empty word list"
            )
        payload = json.dumps(
            {
                "text": utt.hypothesis_text,
                "low_confidence_words": list(decision.low_confidence_words),
            },
            ensure_ascii=False,
        )
    else:
        payload = _wrap_text(utt.hypothesis_text)

    turns.append(("user", payload))
    return ChatRequest(system=template.system_text, turns=tuple(turns), payload_text=payload)


_LABEL_RE = re.compile(r"^(corrected( transcription)?|output)\s*:\s*", re.IGNORECASE)
_QUOTE_PAIRS = {'"': '"', "'": "'", "“": "”", "‘": "’"}


def _sanitize_once(text: str) -> str:
    text = text.strip()

    if text.startswith("```"):
        lines = text.splitlines()
        if lines and lines[-1].strip() == "```" and len(lines) >= 2:
            text = "\n".join(lines[1:-1]).strip()
        else:
            text = text[3:].strip()

    text = _LABEL_RE.sub("", text).strip()

    if len(text) >= 2 and text[0] in _QUOTE_PAIRS and text[-1] == _QUOTE_PAIRS[text[0]]:
        text = text[1:-1].strip()

    if text.startswith("{"):
        try:
            payload = json.loads(text)
        except json.JSONDecodeError:
            payload = None
        if isinstance(payload, dict) and isinstance(payload.get("text"), str):
            text = payload["text"]

    return text


def sanitize_response(raw: str) -> str:
    """Strip wrappers an LLM may add around the corrected transcription.

    Removes code fences, surrounding quotes, a leading "corrected:" or
    "output:" label, and unwraps a JSON ``{"text": ...}`` echo.  Runs to
    a fixed point, so the function is idempotent.  Raises
    UnusableReplyError when nothing remains.
    """
    text = raw
    for _ in range(8):
        cleaned = _sanitize_once(text)
        if cleaned == text:
            break
        text = cleaned
    text = text.strip()
    if not text:
        raise UnusableReplyError("reply empty after sanitization")
    return text


def render_fixture(template: PromptTemplate) -> str:
    """Render a template in the reviewable fixture layout stored under
    ``prompts/``: the system text followed by the raw example pairs."""
    parts = ["[system]", template.system_text]
    for index, (example_input, example_output) in enumerate(template.examples, start=1):
        parts.append(f"[example {index} input]")
        parts.append(example_input)
        parts.append(f"[example {index} output]")
        parts.append(example_output)
    return "\n\n".join(parts) + "\n"
