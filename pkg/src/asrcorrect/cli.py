"""Command-line interface.

Subcommands: ingest, simulate, correct, sweep, score, warm-cache.  Every
run can be driven by a JSON config file (--config) with individual flags
taking precedence, so experiment manifests can live in the repo.

Exit codes: 0 success, 1 internal error, 2 input/config error, 3 backend
exhaustion (every request failed).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis, ingestion, noise
from .evaluation import (
    DEFAULT_PROFILE,
    EmptyReferenceError,
    NormalizationProfile,
    corpus_rates,
    format_relative_change,
    score_utterance,
)
from .filtering import DEFAULT_THRESHOLDS, FilterStrategy, StrategyKind, decide
from .confidence import build_profile
from .llm_client import (
    BackendConfig,
    BackendKind,
    ConfigError,
    make_backend,
    warm_cache,
)
from .prompting import build_prompt, get_template
from .types import Corpus

logger = logging.getLogger(__name__)

_STRATEGY_CHOICES = [kind.value for kind in StrategyKind]
_BACKEND_CHOICES = [kind.value for kind in BackendKind]
_PROMPT_CHOICES = ["1", "2", "3", "4", "5", "4w"]
_DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"


class CliError(ValueError):
    """User-facing input or configuration problem (exit code 2)."""


@dataclass
class RunConfig:
    """Merged view of config file and CLI flags for one run."""

    corpus: str | None = None
    refs: list[str] = field(default_factory=list)
    strategy: str = "lowest-word"
    threshold: float | None = None
    prompt: str | None = None
    backend: str = "identity"
    model: str = "gpt-3.5-turbo-0125"
    endpoint: str = _DEFAULT_ENDPOINT
    api_key_env: str = "OPENAI_API_KEY"
    cache_dir: str | None = None
    scripted_map: str | None = None
    out: str | None = None
    jobs: int = 4
    seed: int = 0
    timeout: float = 30.0
    max_retries: int = 3
    asr_label: str = "asr"
    normalization: dict = field(default_factory=dict)

    _KEYS = (
        "corpus", "refs", "strategy", "threshold", "prompt", "backend", "model",
        "endpoint", "api_key_env", "cache_dir", "scripted_map", "out", "jobs",
        "seed", "timeout", "max_retries", "asr_label", "normalization",
    )

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        config = cls()
        if getattr(args, "config", None):
            path = Path(args.config)
            if not path.exists():
                raise CliError(f"config file not found: {path}")
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise CliError(f"invalid config JSON: {exc}") from exc
            unknown = set(data) - set(cls._KEYS)
            if unknown:
                raise CliError(f"unknown config keys: {', '.join(sorted(unknown))}")
            for key, value in data.items():
                setattr(config, key, value)
        for key in cls._KEYS:
            value = getattr(args, key.replace("-", "_"), None)
            if value is not None and value != []:
                setattr(config, key, value)
        return config

    def resolved_strategy(self) -> FilterStrategy:
        kind = StrategyKind(self.strategy)
        threshold = self.threshold
        if threshold is None:
            threshold = DEFAULT_THRESHOLDS[kind.value]
        return FilterStrategy(kind=kind, threshold=float(threshold))

    def resolved_prompt(self) -> str:
        if self.prompt is not None:
            return self.prompt
        return "4w" if self.strategy == "specific-words" else "4"

    def norm_profile(self) -> NormalizationProfile:
        if not self.normalization:
            return DEFAULT_PROFILE
        return NormalizationProfile(
            lowercase=self.normalization.get("lowercase", True),
            strip_punctuation=self.normalization.get("strip_punctuation", True),
            collapse_whitespace=self.normalization.get("collapse_whitespace", True),
        )

    def backend_config(self) -> BackendConfig:
        kind = BackendKind(self.backend)
        scripted = None
        if kind is BackendKind.SCRIPTED:
            if not self.scripted_map:
                raise CliError("scripted backend requires --scripted-map FILE")
            path = Path(self.scripted_map)
            if not path.exists():
                raise CliError(f"scripted map not found: {path}")
            scripted = json.loads(path.read_text(encoding="utf-8"))
        return BackendConfig(
            kind=kind,
            model_name=self.model,
            endpoint_url=self.endpoint,
            api_key_env=self.api_key_env,
            timeout=float(self.timeout),
            max_retries=int(self.max_retries),
            cache_dir=self.cache_dir,
            max_in_flight=int(self.jobs),
            scripted_replies=scripted,
        )


def _load_corpus(config: RunConfig) -> Corpus:
    if not config.corpus:
        raise CliError("--corpus is required")
    path = Path(config.corpus)
    if not path.exists():
        raise CliError(f"corpus not found: {path}")
    corpus = ingestion.read_manifest(path)
    if config.refs:
        references: dict[str, str] = {}
        for ref_path in config.refs:
            for utt_id, text in ingestion.parse_reference_file(ref_path).items():
                if utt_id in references:
                    raise CliError(f"duplicate reference ID across files: {utt_id}")
                references[utt_id] = text
        corpus = ingestion.join_corpus(list(corpus), references, name=corpus.name)
    return corpus


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--corpus", help="internal manifest (JSON lines)")
    parser.add_argument("--refs", action="append", help="reference .trans.txt (repeatable)")
    parser.add_argument("--strategy", choices=_STRATEGY_CHOICES)
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--prompt", choices=_PROMPT_CHOICES)
    parser.add_argument("--backend", choices=_BACKEND_CHOICES)
    parser.add_argument("--model")
    parser.add_argument("--endpoint")
    parser.add_argument("--api-key-env", dest="api_key_env")
    parser.add_argument("--cache-dir", dest="cache_dir")
    parser.add_argument("--scripted-map", dest="scripted_map", help="JSON id->reply map")
    parser.add_argument("--out")
    parser.add_argument("--jobs", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--asr-label", dest="asr_label")


def cmd_ingest(args: argparse.Namespace) -> int:
    asr_paths: list[Path] = []
    for raw in args.asr:
        path = Path(raw)
        if path.is_dir():
            asr_paths.extend(sorted(path.glob("*.json")))
        elif path.exists():
            asr_paths.append(path)
        else:
            raise CliError(f"ASR input not found: {path}")
    if not asr_paths:
        raise CliError("no ASR input files")

    hypotheses = []
    for path in asr_paths:
        hypotheses.extend(ingestion.parse_asr_file(path))

    references: dict[str, str] = {}
    for raw in args.refs or []:
        path = Path(raw)
        if not path.exists():
            raise CliError(f"reference file not found: {path}")
        for utt_id, text in ingestion.parse_reference_file(path).items():
            if utt_id in references:
                raise CliError(f"duplicate reference ID across files: {utt_id}")
            references[utt_id] = text

    corpus = ingestion.join_corpus(hypotheses, references, name=args.name)
    ingestion.write_manifest(corpus, args.out)
    print(f"wrote {len(corpus)} utterances to {args.out}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    path = Path(args.refs)
    if not path.exists():
        raise CliError(f"reference file not found: {path}")
    if args.format == "trans":
        references = list(ingestion.parse_reference_file(path).values())
    else:
        references = [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    config = noise.NoiseConfig(
        substitution_rate=args.sub_rate,
        deletion_rate=args.del_rate,
        insertion_rate=args.ins_rate,
        confidence_clean=(args.clean_mean, args.clean_spread),
        confidence_corrupted=(args.corrupt_mean, args.corrupt_spread),
        seed=args.seed,
    )
    corpus = noise.generate_corpus(references, config, name=args.name)
    ingestion.write_manifest(corpus, args.out)
    print(f"wrote {len(corpus)} simulated utterances to {args.out}")
    return 0


def _dry_run(corpus: Corpus, strategy: FilterStrategy, template, out) -> int:
    sent = 0
    for utt in corpus:
        profile = build_profile(utt)
        decision = decide(profile, strategy)
        line = f"{utt.id}\tsend={decision.send_to_llm}\ttrigger={decision.trigger_value:.4f}"
        if decision.low_confidence_words:
            line += "\twords=" + ",".join(decision.low_confidence_words)
        print(line, file=out)
        if decision.send_to_llm:
            sent += 1
            request = build_prompt(template, utt, decision)
            print(json.dumps(request.messages(), ensure_ascii=False, indent=2), file=out)
    print(f"# would send {sent} of {len(corpus)} utterances", file=out)
    return 0


def cmd_correct(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    corpus = _load_corpus(config)
    strategy = config.resolved_strategy()
    template = get_template(config.resolved_prompt())

    if strategy.kind is not StrategyKind.SPECIFIC_WORDS and template.wants_word_list:
        raise CliError("prompt 4w requires --strategy specific-words")
    if strategy.kind is StrategyKind.SPECIFIC_WORDS and not template.wants_word_list:
        logger.warning("specific-words strategy without prompt 4w: word list not sent")

    if args.dry_run:
        return _dry_run(corpus, strategy, template, sys.stdout)

    backend = make_backend(config.backend_config())
    report = analysis.run_experiment(
        corpus,
        strategy,
        template,
        backend,
        norm=config.norm_profile(),
        jobs=int(config.jobs),
        asr_label=config.asr_label,
    )
    print(analysis.format_tables(report), end="")
    if config.out:
        analysis.write_report_dir(report, config.out)
        print(f"report written to {config.out}")

    sent = sum(1 for o in report.outcomes if o.decision.send_to_llm)
    if sent > 0 and report.n_backend_errors == sent:
        print("error: every backend request failed", file=sys.stderr)
        return 3
    return 0


def _parse_grid(args: argparse.Namespace) -> list[float]:
    if args.thresholds:
        try:
            values = [float(v) for v in args.thresholds.split(",") if v.strip()]
        except ValueError as exc:
            raise CliError(f"bad --thresholds: {exc}") from exc
        if not values:
            raise CliError("empty --thresholds")
        return sorted(values)
    return list(analysis.DEFAULT_SWEEP_GRID)


def cmd_sweep(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    corpus = _load_corpus(config)
    kind = StrategyKind(config.strategy)
    template = get_template(config.resolved_prompt())
    if kind is not StrategyKind.SPECIFIC_WORDS and template.wants_word_list:
        raise CliError("prompt 4w requires --strategy specific-words")
    grid = _parse_grid(args)

    backend = make_backend(config.backend_config())
    sweep = analysis.sweep_thresholds(
        corpus, kind, grid, template, backend,
        norm=config.norm_profile(), jobs=int(config.jobs),
    )
    for threshold, wer_value, fraction in zip(
        sweep.thresholds, sweep.wer_at_threshold, sweep.corrected_fraction_at_threshold
    ):
        print(f"threshold {threshold:g}: WER {100 * wer_value:.2f}%  corrected {100 * fraction:.1f}%")
    if config.out:
        out_dir = Path(config.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        analysis.write_sweep_csv(sweep, out_dir / "sweep.csv")
        print(f"sweep written to {out_dir / 'sweep.csv'}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    if not config.corpus:
        raise CliError("--corpus is required")
    path = Path(config.corpus)
    if not path.exists():
        raise CliError(f"corpus not found: {path}")

    norm = config.norm_profile()
    reports = []
    n_missing_corrected = 0
    for index, record in enumerate(ingestion.iter_manifest_records(path), start=1):
        reference = record.get("reference")
        if reference is None:
            continue
        if "words" in record:
            hypothesis = " ".join(str(pair[0]) for pair in record["words"])
        else:
            hypothesis = str(record.get("hypothesis", ""))
        corrected = record.get("corrected")
        if corrected is None:
            corrected = hypothesis
            n_missing_corrected += 1
        try:
            reports.append(
                score_utterance(
                    str(record.get("id", f"record-{index}")),
                    str(reference), hypothesis, str(corrected), norm,
                )
            )
        except EmptyReferenceError:
            logger.warning("record %d: reference empty after normalization, skipped", index)
    if not reports:
        raise CliError("no scoreable records (need reference plus words/corrected)")
    if n_missing_corrected:
        logger.warning("%d record(s) without 'corrected'; scored as unchanged", n_missing_corrected)

    rates = corpus_rates(reports)
    improved, worsened, no_change = analysis.categorize(reports)
    print(
        f"WER {100 * rates.wer_before:.2f} -> {100 * rates.wer_after:.2f} "
        f"{format_relative_change(rates.wer_relative_change)}"
    )
    print(
        f"CER {100 * rates.cer_before:.2f} -> {100 * rates.cer_after:.2f} "
        f"{format_relative_change(rates.cer_relative_change)}"
    )
    print(f"improved {improved:.2f}%  worsened {worsened:.2f}%  no change {no_change:.2f}%")

    if config.out:
        out_dir = Path(config.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        summary = {
            "corpus": path.stem,
            "n_scored": len(reports),
            "wer_before": rates.wer_before,
            "wer_after": rates.wer_after,
            "wer_relative_change": rates.wer_relative_change,
            "cer_before": rates.cer_before,
            "cer_after": rates.cer_after,
            "cer_relative_change": rates.cer_relative_change,
            "improved_pct": improved,
            "worsened_pct": worsened,
            "no_change_pct": no_change,
            "divergent_ids": analysis.find_divergences(reports),
        }
        (out_dir / "report.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"report written to {out_dir}")
    return 0


def cmd_warm_cache(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    if BackendKind(config.backend) is not BackendKind.HTTP_CHAT:
        raise CliError("warm-cache requires --backend http")
    if not config.cache_dir:
        raise CliError("warm-cache requires --cache-dir")
    corpus = _load_corpus(config)
    template = get_template(config.resolved_prompt())
    kind = StrategyKind(config.strategy)

    requests = []
    seen = set()
    thresholds: list[float]
    if kind is StrategyKind.SPECIFIC_WORDS:
        thresholds = _parse_grid(args)
    else:
        thresholds = [config.threshold if config.threshold is not None else 1.01]
    for threshold in thresholds:
        strategy = FilterStrategy(kind=kind, threshold=threshold)
        for utt in corpus:
            decision = decide(build_profile(utt), strategy)
            if not decision.send_to_llm:
                continue
            key = (utt.id, decision.low_confidence_words)
            if key in seen:
                continue
            seen.add(key)
            requests.append(build_prompt(template, utt, decision))

    stats = warm_cache(requests, config.backend_config())
    print(f"hits {stats.hits}  misses {stats.misses}  failures {stats.failures}")
    return 3 if stats.misses > 0 and stats.failures == stats.misses else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asrcorrect",
        description="Confidence-filtered LLM post-correction of ASR transcripts",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="parse ASR output + references into a manifest")
    p_ingest.add_argument("--asr", action="append", required=True,
                          help="ASR JSON file, manifest, or directory of .json files (repeatable)")
    p_ingest.add_argument("--refs", action="append", help="reference .trans.txt (repeatable)")
    p_ingest.add_argument("--out", required=True, help="output manifest path")
    p_ingest.add_argument("--name", default="corpus")
    p_ingest.set_defaults(func=cmd_ingest)

    p_sim = sub.add_parser("simulate", help="generate a synthetic noisy corpus")
    p_sim.add_argument("--refs", required=True, help="reference text file")
    p_sim.add_argument("--format", choices=["lines", "trans"], default="lines")
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--name", default="simulated")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--sub-rate", type=float, default=0.1, dest="sub_rate")
    p_sim.add_argument("--del-rate", type=float, default=0.0, dest="del_rate")
    p_sim.add_argument("--ins-rate", type=float, default=0.0, dest="ins_rate")
    p_sim.add_argument("--clean-mean", type=float, default=0.95, dest="clean_mean")
    p_sim.add_argument("--clean-spread", type=float, default=0.04, dest="clean_spread")
    p_sim.add_argument("--corrupt-mean", type=float, default=0.40, dest="corrupt_mean")
    p_sim.add_argument("--corrupt-spread", type=float, default=0.15, dest="corrupt_spread")
    p_sim.set_defaults(func=cmd_simulate)

    p_correct = sub.add_parser("correct", help="filter, correct, score, and report")
    _add_run_flags(p_correct)
    p_correct.add_argument("--dry-run", action="store_true",
                           help="print decisions and exact prompts, no backend traffic")
    p_correct.set_defaults(func=cmd_correct)

    p_sweep = sub.add_parser("sweep", help="trace WER over a threshold grid")
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--thresholds", help="comma-separated grid (default 0..1 step 0.05)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_score = sub.add_parser("score", help="score a manifest carrying corrected text")
    _add_run_flags(p_score)
    p_score.set_defaults(func=cmd_score)

    p_warm = sub.add_parser("warm-cache", help="answer and cache prompts for later replay")
    _add_run_flags(p_warm)
    p_warm.add_argument("--thresholds", help="grid for specific-words warming")
    p_warm.set_defaults(func=cmd_warm_cache)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (CliError, ConfigError, ingestion.IngestError, EmptyReferenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:  # pragma: no cover - safety net
        logger.exception("internal error")
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
