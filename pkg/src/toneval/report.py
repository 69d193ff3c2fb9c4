"""Word-level error classification and report rendering (json, tsv, pretty)."""

from __future__ import annotations

import io
import json
import unicodedata
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Any

from rich.cells import cell_len
from rich.console import Console
from rich.table import Table
from rich.text import Text

from toneval.alignment import Alignment, EditOp, OpKind, nw_align
from toneval.metrics import CorpusReport, MetricCounts, Rates, UtteranceReport, WorstEntries
from toneval.profiles import LanguageProfile
from toneval.segmenter import NormalizedUtterance, Segment

SCHEMA_VERSION = 1
TSV_HEADER = ("id", "wer", "cer", "fer", "ter", "worst_f", "worst_t")
MISSING = "NA"


class ReportError(Exception):
    """Report cannot be rendered as requested."""

    pass


class WordCategory(str, Enum):
    """How a hypothesis word relates to its reference word."""

    CORRECT = "correct"
    TONE_ONLY = "tone-error-only"
    FEATURAL = "featural-error"
    MIXED = "mixed"
    DELETION = "deletion"
    INSERTION = "insertion"

    @property
    def tag(self) -> str:
        return _TAGS[self]


_TAGS = {
    WordCategory.CORRECT: "ok",
    WordCategory.TONE_ONLY: "tone",
    WordCategory.FEATURAL: "feat",
    WordCategory.MIXED: "mixed",
    WordCategory.DELETION: "del",
    WordCategory.INSERTION: "ins",
}

CATEGORY_STYLES = {
    WordCategory.CORRECT: "green",
    WordCategory.TONE_ONLY: "yellow",
    WordCategory.FEATURAL: "cyan",
    WordCategory.MIXED: "magenta",
    WordCategory.DELETION: "red",
    WordCategory.INSERTION: "red",
}


@dataclass(frozen=True)
class WordClassification:
    """One column of the word alignment with its error category."""

    category: WordCategory
    ref_word: str | None
    hyp_word: str | None
    ref_index: int | None = None
    hyp_index: int | None = None


def _classify_pair(
    ref_segments: Sequence[Segment],
    hyp_segments: Sequence[Segment],
    profile: LanguageProfile,
    indel_cost: float,
) -> WordCategory:
    """Category of a substituted word pair from the segment alignment inside it."""
    tone_indices = set(profile.tone_dimension_indices)
    inner = nw_align(
        [s.vector for s in ref_segments], [s.vector for s in hyp_segments], indel_cost
    )
    tonal = featural = indel = False
    for op in inner.ops:
        if op.kind in (OpKind.DELETE, OpKind.INSERT):
            indel = True
            continue
        ref = ref_segments[op.ref_index]  # type: ignore[index]
        hyp = hyp_segments[op.hyp_index]  # type: ignore[index]
        if ref.tone != hyp.tone:
            tonal = True
        for index, (r, h) in enumerate(zip(ref.vector, hyp.vector, strict=True)):
            if index not in tone_indices and (r != 0 or h != 0) and r != h:
                featural = True
                break
        if (ref.is_unknown or hyp.is_unknown) and ref.text != hyp.text:
            featural = True

    if indel or (tonal and featural):
        return WordCategory.MIXED
    if tonal:
        return WordCategory.TONE_ONLY
    # Spelling differences invisible to the features still make the word wrong
    return WordCategory.FEATURAL


def classify_words(
    word_alignment: Alignment,
    reference: NormalizedUtterance,
    hypothesis: NormalizedUtterance,
    profile: LanguageProfile,
    indel_cost: float = 1.0,
) -> list[WordClassification]:
    """Assign every word-alignment column exactly one category."""
    result: list[WordClassification] = []
    for op in word_alignment.ops:
        ref_word = reference.words[op.ref_index] if op.ref_index is not None else None
        hyp_word = hypothesis.words[op.hyp_index] if op.hyp_index is not None else None
        if op.kind == OpKind.MATCH:
            category = WordCategory.CORRECT
        elif op.kind == OpKind.DELETE:
            category = WordCategory.DELETION
        elif op.kind == OpKind.INSERT:
            category = WordCategory.INSERTION
        else:
            category = _classify_pair(
                reference.segments[op.ref_index],  # type: ignore[index]
                hypothesis.segments[op.hyp_index],  # type: ignore[index]
                profile,
                indel_cost,
            )
        result.append(WordClassification(category, ref_word, hyp_word, op.ref_index, op.hyp_index))
    return result


def category_counts(reports: Sequence[UtteranceReport]) -> dict[WordCategory, int]:
    counter: Counter[WordCategory] = Counter()
    for report in reports:
        counter.update(c.category for c in report.word_classifications)
    return {category: counter.get(category, 0) for category in WordCategory}


def _nfc(text: str | None) -> str | None:
    return unicodedata.normalize("NFC", text) if text is not None else None


# ---------------------------------------------------------------------------
# json
# ---------------------------------------------------------------------------


def _counts_json(counts: MetricCounts) -> dict[str, Any]:
    return {
        "wer_errors": counts.wer_errors,
        "wer_ref_words": counts.wer_ref_words,
        "wer_substitutions": counts.wer_substitutions,
        "wer_deletions": counts.wer_deletions,
        "wer_insertions": counts.wer_insertions,
        "cer_errors": counts.cer_errors,
        "cer_ref_chars": counts.cer_ref_chars,
        "fer_cost": counts.fer_cost,
        "fer_ref_segments": counts.fer_ref_segments,
        "ter_errors": counts.ter_errors,
        "ter_ref_tonebearing": counts.ter_ref_tonebearing,
        "ter_insertions": counts.ter_insertions,
        "ter_tone_cost": counts.ter_tone_cost,
    }


def _rates_json(rates: Rates) -> dict[str, float | None]:
    return {
        "wer": rates.wer,
        "cer": rates.cer,
        "fer": rates.fer,
        "ter": rates.ter,
        "ter_tone_distance": rates.ter_tone_distance,
    }


def _breakdown_json(
    counts: MetricCounts, worst: WorstEntries, profile: LanguageProfile
) -> dict[str, Any]:
    per_feature = {}
    for dim in profile.dimensions:
        if dim.category == "padding":
            continue
        count = counts.per_dimension.get(dim.index)
        if count is None:
            continue
        per_feature[dim.abbr] = {
            "index": dim.index,
            "errors": count.errors,
            "ref_active": count.ref_active,
            "rate": count.rate,
        }
    per_tone = {
        tone.value: {"errors": c.errors, "ref_count": c.ref_count, "rate": c.rate}
        for tone, c in counts.per_tone_category.items()
    }
    return {
        "worst_feature": worst.feature,
        "worst_feature_rate": worst.feature_rate,
        "worst_tone": worst.tone.value if worst.tone else None,
        "worst_tone_rate": worst.tone_rate,
        "per_feature": per_feature,
        "per_tone": per_tone,
    }


def _ops_json(alignment: Alignment) -> list[dict[str, Any]]:
    return [_op_json(op) for op in alignment.ops]


def _op_json(op: EditOp) -> dict[str, Any]:
    return {"op": op.kind.value, "ref": op.ref_index, "hyp": op.hyp_index, "cost": op.cost}


def _utterance_json(report: UtteranceReport) -> dict[str, Any]:
    return {
        "id": report.utterance_id,
        "reference": _nfc(report.reference.text),
        "hypothesis": _nfc(report.hypothesis.text),
        "empty_reference": report.empty_reference,
        "ter_applicable": report.tonal,
        "counts": _counts_json(report.counts),
        "rates": _rates_json(report.rates),
        **_breakdown_json(report.counts, report.worst, report.profile),
        "words": [
            {"ref": _nfc(c.ref_word), "hyp": _nfc(c.hyp_word), "category": c.category.value}
            for c in report.word_classifications
        ],
        "reference_segments": [
            [seg.describe() for seg in word] for word in report.reference.segments
        ],
        "hypothesis_segments": [
            [seg.describe() for seg in word] for word in report.hypothesis.segments
        ],
        "word_alignment": _ops_json(report.word_alignment),
        "feature_alignment": _ops_json(report.feature_alignment),
        "diagnostics": [
            str(d) for d in (*report.reference.diagnostics, *report.hypothesis.diagnostics)
        ],
    }


def to_json(report: UtteranceReport | CorpusReport) -> dict[str, Any]:
    """Versioned JSON document; floats keep full precision."""
    if isinstance(report, UtteranceReport):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "utterance",
            "language": report.profile.language_id,
            **_utterance_json(report),
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "corpus",
        "language": report.profile.language_id,
        "options": {"indel_cost": report.indel_cost, "min_support": report.min_support},
        "aggregate": {
            "utterances": report.utterance_count,
            "ter_applicable": report.tonal,
            "counts": _counts_json(report.counts),
            "rates": _rates_json(report.rates),
            **_breakdown_json(report.counts, report.worst, report.profile),
            "word_categories": (
                {c.value: n for c, n in category_counts(report.utterances).items()}
                if report.utterances
                else None
            ),
        },
        "per_utterance": [_utterance_json(u) for u in report.utterances],
    }


# ---------------------------------------------------------------------------
# tsv
# ---------------------------------------------------------------------------


def _fmt(rate: float | None) -> str:
    return MISSING if rate is None else f"{rate:.4f}"


def _tsv_row(row_id: str, rates: Rates, worst: WorstEntries) -> str:
    return "\t".join(
        (
            row_id,
            _fmt(rates.wer),
            _fmt(rates.cer),
            _fmt(rates.fer),
            _fmt(rates.ter),
            worst.feature or MISSING,
            worst.tone.value if worst.tone else MISSING,
        )
    )


def to_tsv(report: UtteranceReport | CorpusReport) -> str:
    lines = ["\t".join(TSV_HEADER)]
    if isinstance(report, UtteranceReport):
        lines.append(_tsv_row(report.utterance_id, report.rates, report.worst))
    else:
        lines.extend(_tsv_row(u.utterance_id, u.rates, u.worst) for u in report.utterances)
        lines.append(_tsv_row("TOTAL", report.rates, report.worst))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# pretty
# ---------------------------------------------------------------------------


def _aligned_lines(report: UtteranceReport, color: bool) -> tuple[Text, Text]:
    """REF/HYP lines with each column padded to the wider of its two words."""
    ref_line = Text("REF: ")
    hyp_line = Text("HYP: ")
    for item in report.word_classifications:
        ref = _nfc(item.ref_word) or "*" * max(cell_len(_nfc(item.hyp_word) or "*"), 1)
        hyp = _nfc(item.hyp_word) or "*" * max(cell_len(ref), 1)
        if not color:
            hyp = f"{hyp}[{item.category.tag}]"
        width = max(cell_len(ref), cell_len(hyp))
        style = CATEGORY_STYLES[item.category] if color else ""
        ref_line.append(ref + " " * (width - cell_len(ref)) + " ")
        hyp_line.append(hyp, style=style)
        hyp_line.append(" " * (width - cell_len(hyp)) + " ")
    ref_line.rstrip()
    hyp_line.rstrip()
    return ref_line, hyp_line


def _summary_line(rates: Rates, counts: MetricCounts, tonal: bool) -> str:
    parts = [
        f"WER {_fmt(rates.wer)} ({counts.wer_errors}/{counts.wer_ref_words})",
        f"CER {_fmt(rates.cer)} ({counts.cer_errors}/{counts.cer_ref_chars})",
        f"FER {_fmt(rates.fer)} ({counts.fer_cost:.2f}/{counts.fer_ref_segments})",
    ]
    if tonal:
        parts.append(
            f"TER {_fmt(rates.ter)} ({counts.ter_errors}/{counts.ter_ref_tonebearing})"
        )
    else:
        parts.append("TER n/a")
    return "  ".join(parts)


def _worst_line(worst: WorstEntries) -> str:
    feature = f"{worst.feature} ({_fmt(worst.feature_rate)})" if worst.feature else MISSING
    tone = f"{worst.tone.value} ({_fmt(worst.tone_rate)})" if worst.tone else MISSING
    return f"worst feature: {feature}  worst tone: {tone}"


def _print_utterance(console: Console, report: UtteranceReport, color: bool) -> None:
    title = f"[{report.utterance_id}] " if report.utterance_id else ""
    console.print(Text(title + _summary_line(report.rates, report.counts, report.tonal)))
    ref_line, hyp_line = _aligned_lines(report, color)
    console.print(ref_line, soft_wrap=True)
    console.print(hyp_line, soft_wrap=True)
    console.print(Text(_worst_line(report.worst)))


def _feature_table(report: CorpusReport) -> Table:
    table = Table(show_header=True, header_style="bold", box=None)
    table.add_column("feature")
    table.add_column("ref", justify="right")
    table.add_column("errors", justify="right")
    table.add_column("rate", justify="right")
    for dim in report.profile.dimensions:
        count = report.counts.per_dimension.get(dim.index)
        if dim.category == "padding" or count is None or count.ref_active == 0:
            continue
        table.add_row(dim.abbr, str(count.ref_active), str(count.errors), _fmt(count.rate))
    for tone, tone_count in report.counts.per_tone_category.items():
        if tone_count.ref_count:
            table.add_row(
                f"tone:{tone.value}",
                str(tone_count.ref_count),
                str(tone_count.errors),
                _fmt(tone_count.rate),
            )
    return table


def to_pretty(report: UtteranceReport | CorpusReport, color: bool = False) -> str:
    """Human-readable report; word tags are written inline when color is off."""
    console = Console(
        file=io.StringIO(),
        record=True,
        width=120,
        force_terminal=color,
        no_color=not color,
        color_system="standard" if color else None,
        highlight=False,
    )
    if isinstance(report, UtteranceReport):
        _print_utterance(console, report, color)
    else:
        for utterance in report.utterances:
            _print_utterance(console, utterance, color)
            console.print()
        console.print(
            Text(f"{report.profile.language_id}: {report.utterance_count} utterances")
        )
        console.print(Text(_summary_line(report.rates, report.counts, report.tonal)))
        console.print(Text(_worst_line(report.worst)))
        if report.utterances:
            counts = category_counts(report.utterances)
            console.print(
                Text("words: " + "  ".join(f"{c.value} {n}" for c, n in counts.items()))
            )
        console.print(_feature_table(report))
    return console.export_text(styles=color)


def render(report: UtteranceReport | CorpusReport, fmt: str, color: bool = False) -> str:
    """Render a report as ``json``, ``tsv`` or ``pretty`` text."""
    if fmt == "json":
        return json.dumps(to_json(report), ensure_ascii=False, indent=2) + "\n"
    if fmt == "tsv":
        return to_tsv(report)
    if fmt == "pretty":
        return to_pretty(report, color=color)
    raise ReportError(f"Unknown output format: {fmt!r} (expected json, tsv or pretty)")
