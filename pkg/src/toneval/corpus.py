"""Reading paired transcript files and evaluating them in parallel."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import anyio
from anyio import to_thread

from toneval.config import INPUT_FORMATS
from toneval.metrics import (
    CorpusReport,
    EvalOptions,
    UtteranceReport,
    aggregate_corpus,
    evaluate_utterance,
)
from toneval.profiles import LanguageProfile
from toneval.segmenter import SegmentationError

logger = logging.getLogger(__name__)


class CorpusError(Exception):
    """Transcript files are unreadable, malformed or do not pair up."""

    pass


@dataclass(frozen=True)
class UtterancePair:
    """A reference transcript and its ASR hypothesis."""

    utterance_id: str
    reference: str
    hypothesis: str


def _read_text(path: Path) -> str:
    # utf-8-sig drops a leading byte-order mark
    try:
        return path.read_text(encoding="utf-8-sig")
    except FileNotFoundError as e:
        raise CorpusError(f"File not found: {path}") from e
    except (OSError, UnicodeDecodeError) as e:
        raise CorpusError(f"Cannot read {path}: {e}") from e


def read_lines(path: Path) -> list[str]:
    return _read_text(path).splitlines()


def read_keyed_tsv(path: Path) -> dict[str, str]:
    """Read ``id<TAB>text`` lines; a bare id means an empty transcript.

    A line with no tab but several fields is rejected.
    """
    entries: dict[str, str] = {}
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        key, tab, text = line.partition("\t")
        key = key.strip()
        if not tab and len(key.split()) > 1:
            raise CorpusError(f"{path}:{lineno}: expected id<TAB>text, found no tab")
        if not key:
            raise CorpusError(f"{path}:{lineno}: missing utterance id")
        if key in entries:
            raise CorpusError(f"{path}:{lineno}: duplicate utterance id {key!r}")
        entries[key] = text
    return entries


def read_corpus(ref_path: Path, hyp_path: Path, input_format: str = "lines") -> list[UtterancePair]:
    """Pair reference and hypothesis transcripts.

    ``lines``: line i of one file pairs with line i of the other; ids are
    1-based line numbers and the files must have the same number of lines.

    ``keyed-tsv``: pairs by id, in reference order. Every hypothesis id must
    exist in the reference; reference ids missing from the hypothesis get an
    empty hypothesis.
    """
    if input_format not in INPUT_FORMATS:
        raise CorpusError(
            f"Unknown input format: {input_format!r} (expected {', '.join(INPUT_FORMATS)})"
        )

    if input_format == "lines":
        refs = read_lines(ref_path)
        hyps = read_lines(hyp_path)
        if len(refs) != len(hyps):
            raise CorpusError(
                f"Line count mismatch: {ref_path} has {len(refs)} lines, "
                f"{hyp_path} has {len(hyps)}"
            )
        return [
            UtterancePair(str(i), ref, hyp) for i, (ref, hyp) in enumerate(zip(refs, hyps), start=1)
        ]

    ref_entries = read_keyed_tsv(ref_path)
    hyp_entries = read_keyed_tsv(hyp_path)
    unknown = [key for key in hyp_entries if key not in ref_entries]
    if unknown:
        shown = ", ".join(repr(k) for k in unknown[:5])
        raise CorpusError(f"Hypothesis ids not in reference: {shown}")
    missing = [key for key in ref_entries if key not in hyp_entries]
    if missing:
        logger.warning("%d reference utterances have no hypothesis; scored as empty", len(missing))
    return [UtterancePair(key, text, hyp_entries.get(key, "")) for key, text in ref_entries.items()]


def _evaluate_pair(
    pair: UtterancePair, profile: LanguageProfile, options: EvalOptions
) -> UtteranceReport:
    return evaluate_utterance(
        pair.reference, pair.hypothesis, profile, options, utterance_id=pair.utterance_id
    )


def _wrap_failure(pair: UtterancePair, error: BaseException) -> BaseException:
    if isinstance(error, SegmentationError):
        return CorpusError(f"Utterance {pair.utterance_id}: {error}")
    return error


async def evaluate_pairs_async(
    pairs: Sequence[UtterancePair],
    profile: LanguageProfile,
    options: EvalOptions,
    workers: int = 4,
) -> list[UtteranceReport]:
    """Evaluate pairs on a bounded pool of worker threads.

    Results keep input order whatever the completion order. When several
    utterances fail, the error of the earliest one is raised.
    """
    limiter = anyio.CapacityLimiter(max(workers, 1))
    results: list[UtteranceReport | None] = [None] * len(pairs)
    failures: dict[int, BaseException] = {}

    async def _run(index: int, pair: UtterancePair) -> None:
        try:
            results[index] = await to_thread.run_sync(
                partial(_evaluate_pair, pair, profile, options), limiter=limiter
            )
        except Exception as e:
            failures[index] = e

    async with anyio.create_task_group() as tg:
        for index, pair in enumerate(pairs):
            tg.start_soon(_run, index, pair)

    if failures:
        first = min(failures)
        error = failures[first]
        wrapped = _wrap_failure(pairs[first], error)
        if wrapped is error:
            raise error
        raise wrapped from error

    return [r for r in results if r is not None]


def evaluate_pairs(
    pairs: Sequence[UtterancePair],
    profile: LanguageProfile,
    options: EvalOptions,
    workers: int = 1,
) -> list[UtteranceReport]:
    """Evaluate pairs in input order; more than one worker runs them in threads."""
    if workers <= 1:
        reports = []
        for pair in pairs:
            try:
                reports.append(_evaluate_pair(pair, profile, options))
            except SegmentationError as e:
                raise _wrap_failure(pair, e) from e
        return reports
    return anyio.run(evaluate_pairs_async, pairs, profile, options, workers)


def evaluate_corpus(
    pairs: Sequence[UtterancePair],
    profile: LanguageProfile,
    options: EvalOptions,
    workers: int = 1,
    retain: bool = True,
) -> CorpusReport:
    """Evaluate every pair and micro-average the results."""
    logger.debug("Evaluating %d utterances with %d workers", len(pairs), workers)
    reports = evaluate_pairs(pairs, profile, options, workers)
    return aggregate_corpus(
        reports, min_support=options.min_support, retain=retain, indel_cost=options.indel_cost
    )
