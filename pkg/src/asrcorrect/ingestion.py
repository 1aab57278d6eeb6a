"""Parsers for ASR output files, reference transcripts, and the internal
JSON-lines manifest.

Two hypothesis formats are accepted:

* whisper-timestamped style JSON: one utterance per file, with
  ``{"text": ..., "segments": [{"words": [{"text", "confidence"}, ...],
  "confidence": ...}, ...]}``.  The utterance ID defaults to the file stem.
* internal manifest: JSON lines, one utterance per line, each
  ``{"id": str, "words": [[text, confidence], ...], "reference": str|null}``.

References use the LibriSpeech ``.trans.txt`` convention:
``<ID> <TRANSCRIPT>`` per line.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterable, Iterator

from .types import Corpus, Utterance, WordScore, make_word

logger = logging.getLogger(__name__)

# segment confidence is informational; warn when it disagrees this much
# with the mean of its word confidences
_SEGMENT_CONFIDENCE_SLACK = 0.25


class IngestError(ValueError):
    """Malformed input file (bad JSON, schema violation, bad confidence)."""


def _require_confidence(raw: object, where: str) -> float:
    if raw is None:
        raise IngestError(f"missing confidence field in {where}")
    try:
        value = float(raw)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise IngestError(f"non-numeric confidence {raw!r} in {where}") from None
    if not 0.0 <= value <= 1.0:
        raise IngestError(f"confidence {value} outside [0, 1] in {where}")
    return value


def _words_from_segments(segments: list, where: str) -> list[WordScore]:
    words: list[WordScore] = []
    for seg_index, segment in enumerate(segments):
        if not isinstance(segment, dict):
            raise IngestError(f"segment {seg_index} is not an object in {where}")
        raw_words = segment.get("words", [])
        if not isinstance(raw_words, list):
            raise IngestError(f"segment {seg_index} 'words' is not a list in {where}")
        seg_confs: list[float] = []
        for word_index, raw in enumerate(raw_words):
            if not isinstance(raw, dict):
                raise IngestError(
                    f"word {word_index} of segment {seg_index} is not an object in {where}"
                )
            text = str(raw.get("text", "")).strip()
            if not text:
                continue
            conf = _require_confidence(
                raw.get("confidence"),
                f"word {word_index} ({text!r}) of segment {seg_index} of {where}",
            )
            seg_confs.append(conf)
            words.append(make_word(text, conf))
        seg_conf = segment.get("confidence")
        if seg_conf is not None and seg_confs:
            mean = sum(seg_confs) / len(seg_confs)
            if abs(float(seg_conf) - mean) > _SEGMENT_CONFIDENCE_SLACK:
                logger.warning(
                    "segment %d of %s: stated confidence %.3f far from word mean %.3f",
                    seg_index, where, float(seg_conf), mean,
                )
    return words


def _utterance_from_manifest_record(record: dict, where: str) -> Utterance:
    if "id" not in record:
        raise IngestError(f"missing 'id' in {where}")
    raw_words = record.get("words")
    if not isinstance(raw_words, list):
        raise IngestError(f"missing or invalid 'words' list in {where}")
    words = []
    for index, pair in enumerate(raw_words):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise IngestError(f"word {index} is not a [text, confidence] pair in {where}")
        text = str(pair[0]).strip()
        if not text:
            continue
        conf = _require_confidence(pair[1], f"word {index} ({text!r}) of {where}")
        words.append(make_word(text, conf))
    reference = record.get("reference")
    if reference is not None:
        reference = str(reference)
    return Utterance(id=str(record["id"]), words=tuple(words), reference_text=reference)


def iter_manifest_records(path: str | Path) -> Iterator[dict]:
    """Yield raw manifest records, skipping blank lines.

    Raises IngestError with the line number on malformed JSON.
    """
    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(
                    f"{path}:{lineno}: invalid JSON at offset {exc.pos}: {exc.msg}"
                ) from exc
            if not isinstance(record, dict):
                raise IngestError(f"{path}:{lineno}: record is not an object")
            yield record


def parse_asr_file(path: str | Path) -> list[Utterance]:
    """Parse one ASR output file into utterances (without references).

    Whisper-style files produce a single utterance whose ID is the file
    stem; manifest files produce one utterance per line.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        return []

    # A whisper-style file is one JSON document; the manifest is one
    # document per line.  Try the whole file first, fall back to lines.
    whole_error: json.JSONDecodeError | None = None
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        whole_error = exc
        payload = None

    if isinstance(payload, dict) and "segments" in payload:
        segments = payload["segments"]
        if not isinstance(segments, list):
            raise IngestError(f"{path}: 'segments' is not a list")
        words = _words_from_segments(segments, str(path))
        return [Utterance(id=path.stem, words=tuple(words))]
    if isinstance(payload, dict):
        return [_utterance_from_manifest_record(payload, f"{path} record 1")]
    if payload is not None:
        raise IngestError(f"{path}: top-level JSON must be an object")

    try:
        return [
            _utterance_from_manifest_record(record, f"{path} record {i}")
            for i, record in enumerate(iter_manifest_records(path), start=1)
        ]
    except IngestError:
        # a file whose individual lines are JSON fragments is a broken
        # single-document file; report the whole-file parse position
        first_line = text.strip().splitlines()[0]
        try:
            json.loads(first_line)
        except json.JSONDecodeError:
            assert whole_error is not None
            raise IngestError(
                f"{path}: invalid JSON at offset {whole_error.pos}: {whole_error.msg}"
            ) from whole_error
        raise


def parse_reference_file(path: str | Path) -> dict[str, str]:
    """Parse a ``.trans.txt`` file into an ID -> transcript map."""
    path = Path(path)
    references: dict[str, str] = {}
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if " " not in line:
                raise IngestError(f"{path}:{lineno}: no space separator")
            utt_id, transcript = line.split(" ", 1)
            if utt_id in references:
                raise IngestError(f"{path}:{lineno}: duplicate ID {utt_id!r}")
            references[utt_id] = transcript
    return references


def join_corpus(
    hypotheses: Iterable[Utterance],
    references: dict[str, str],
    name: str = "corpus",
) -> Corpus:
    """Attach references to hypotheses by utterance ID.

    Hypotheses without a reference are kept (flagged by a None
    reference); references without a hypothesis are reported via the
    logger.  Mismatches are never fatal.
    """
    joined: list[Utterance] = []
    matched: set[str] = set()
    for utt in hypotheses:
        reference = references.get(utt.id)
        if reference is not None:
            matched.add(utt.id)
            joined.append(utt.with_reference(reference))
        else:
            joined.append(utt)

    unreferenced = [u.id for u in joined if not u.has_reference]
    if unreferenced:
        logger.warning(
            "%d utterance(s) without a reference (e.g. %s)",
            len(unreferenced), ", ".join(unreferenced[:5]),
        )
    orphans = sorted(set(references) - matched)
    if orphans:
        logger.warning(
            "%d reference(s) without a hypothesis (e.g. %s)",
            len(orphans), ", ".join(orphans[:5]),
        )
    return Corpus(name=name, utterances=tuple(joined))


def manifest_record(utt: Utterance, corrected: str | None = None) -> dict:
    record: dict = {
        "id": utt.id,
        "words": [[w.text, w.confidence] for w in utt.words],
        "reference": utt.reference_text,
    }
    if corrected is not None:
        record["corrected"] = corrected
    return record


def write_manifest(corpus: Corpus, path: str | Path) -> None:
    """Serialize a corpus to the internal JSON-lines manifest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for utt in corpus:
            handle.write(json.dumps(manifest_record(utt), ensure_ascii=False) + "\n")


def read_manifest(path: str | Path, name: str | None = None) -> Corpus:
    """Parse an internal manifest back into a corpus."""
    path = Path(path)
    utterances = [
        _utterance_from_manifest_record(record, f"{path} record {i}")
        for i, record in enumerate(iter_manifest_records(path), start=1)
    ]
    return Corpus(name=name or path.stem, utterances=tuple(utterances))
