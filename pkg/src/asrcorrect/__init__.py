"""Confidence-filtered LLM post-correction of ASR transcripts.

Pipeline: parse ASR output with word confidences, decide per utterance
(or per word) whether a correction model should see it, prompt the
model, sanitize its reply, and score the result with the built-in
WER/CER engine.
"""

from .analysis import (
    DEFAULT_SWEEP_GRID,
    ExperimentReport,
    SweepResult,
    categorize,
    find_divergences,
    run_experiment,
    sweep_thresholds,
    write_report_dir,
)
from .confidence import (
    ConfidenceProfile,
    NoScoreableContent,
    build_profile,
    sentence_confidence,
    word_confidence,
)
from .evaluation import (
    DEFAULT_PROFILE,
    Alignment,
    Category,
    CorpusRates,
    EmptyReferenceError,
    NormalizationProfile,
    ScoreReport,
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
from .filtering import (
    DEFAULT_THRESHOLDS,
    FilterDecision,
    FilterStrategy,
    StrategyKind,
    corrected_fraction,
    decide,
)
from .ingestion import (
    IngestError,
    join_corpus,
    parse_asr_file,
    parse_reference_file,
    read_manifest,
    write_manifest,
)
from .llm_client import (
    Backend,
    BackendConfig,
    BackendKind,
    CacheStats,
    CorrectionRecord,
    correct,
    make_backend,
    request_fingerprint,
    warm_cache,
)
from .noise import NoiseConfig, corrupt, generate_corpus, scripted_replies
from .prompting import (
    ChatRequest,
    PromptId,
    PromptTemplate,
    TEMPLATES,
    UnusableReplyError,
    build_prompt,
    get_template,
    sanitize_response,
)
from .types import Corpus, TokenScore, Utterance, WordScore, make_word

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "Backend",
    "BackendConfig",
    "BackendKind",
    "CacheStats",
    "Category",
    "ChatRequest",
    "ConfidenceProfile",
    "CorpusRates",
    "Corpus",
    "CorrectionRecord",
    "DEFAULT_PROFILE",
    "DEFAULT_SWEEP_GRID",
    "DEFAULT_THRESHOLDS",
    "EmptyReferenceError",
    "ExperimentReport",
    "FilterDecision",
    "FilterStrategy",
    "IngestError",
    "NoScoreableContent",
    "NoiseConfig",
    "NormalizationProfile",
    "PromptId",
    "PromptTemplate",
    "ScoreReport",
    "StrategyKind",
    "SweepResult",
    "TEMPLATES",
    "TokenScore",
    "UnusableReplyError",
    "Utterance",
    "WordScore",
    "build_profile",
    "build_prompt",
    "categorize",
    "cer",
    "corpus_rates",
    "correct",
    "corrected_fraction",
    "corrupt",
    "decide",
    "edit_distance",
    "find_divergences",
    "generate_corpus",
    "get_template",
    "join_corpus",
    "make_backend",
    "make_word",
    "normalize",
    "parse_asr_file",
    "parse_reference_file",
    "read_manifest",
    "render_gloss",
    "render_triple",
    "request_fingerprint",
    "run_experiment",
    "sanitize_response",
    "score_utterance",
    "scripted_replies",
    "sentence_confidence",
    "sweep_thresholds",
    "warm_cache",
    "wer",
    "word_confidence",
    "word_edit_distance",
    "write_manifest",
    "write_report_dir",
]
