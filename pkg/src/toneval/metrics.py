"""WER, CER, feature error rate (FER) and tone error rate (TER).

Every rate is kept as a numerator and a denominator so that utterances can be
micro-averaged into corpus figures. A zero denominator gives an undefined rate
(``None``), never 0.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from toneval.alignment import Alignment, OpKind, levenshtein_align, masked_distance, nw_align
from toneval.profiles import NUM_DIMENSIONS, FeatureVector, LanguageProfile, ToneCategory
from toneval.segmenter import Lexicon, NormalizedUtterance, Segment, segment_utterance

if TYPE_CHECKING:
    from toneval.report import WordClassification

logger = logging.getLogger(__name__)


class EvaluationError(Exception):
    """Reports cannot be evaluated or combined."""

    pass


def ratio(numerator: float, denominator: int) -> float | None:
    return None if denominator == 0 else numerator / denominator


@dataclass
class DimensionCount:
    """Errors touching one feature dimension against its reference support."""

    errors: int = 0
    ref_active: int = 0

    @property
    def rate(self) -> float | None:
        return ratio(self.errors, self.ref_active)


@dataclass
class ToneCount:
    """Misrecognized reference segments of one tone category."""

    errors: int = 0
    ref_count: int = 0

    @property
    def rate(self) -> float | None:
        return ratio(self.errors, self.ref_count)


@dataclass
class MetricCounts:
    """Numerators and denominators behind every reported rate."""

    wer_errors: int = 0
    wer_ref_words: int = 0
    wer_substitutions: int = 0
    wer_deletions: int = 0
    wer_insertions: int = 0
    cer_errors: int = 0
    cer_ref_chars: int = 0
    fer_cost: float = 0.0
    fer_ref_segments: int = 0
    ter_errors: int = 0
    ter_ref_tonebearing: int = 0
    ter_insertions: int = 0
    ter_tone_cost: float = 0.0
    per_dimension: dict[int, DimensionCount] = field(default_factory=dict)
    per_tone_category: dict[ToneCategory, ToneCount] = field(default_factory=dict)

    def merge(self, other: MetricCounts) -> MetricCounts:
        """Sum of two count sets (micro-averaging)."""
        per_dimension = {
            index: DimensionCount(
                self.per_dimension.get(index, DimensionCount()).errors
                + other.per_dimension.get(index, DimensionCount()).errors,
                self.per_dimension.get(index, DimensionCount()).ref_active
                + other.per_dimension.get(index, DimensionCount()).ref_active,
            )
            for index in sorted(set(self.per_dimension) | set(other.per_dimension))
        }
        per_tone = {}
        for tone in [*self.per_tone_category, *other.per_tone_category]:
            if tone in per_tone:
                continue
            a = self.per_tone_category.get(tone, ToneCount())
            b = other.per_tone_category.get(tone, ToneCount())
            per_tone[tone] = ToneCount(a.errors + b.errors, a.ref_count + b.ref_count)

        return MetricCounts(
            wer_errors=self.wer_errors + other.wer_errors,
            wer_ref_words=self.wer_ref_words + other.wer_ref_words,
            wer_substitutions=self.wer_substitutions + other.wer_substitutions,
            wer_deletions=self.wer_deletions + other.wer_deletions,
            wer_insertions=self.wer_insertions + other.wer_insertions,
            cer_errors=self.cer_errors + other.cer_errors,
            cer_ref_chars=self.cer_ref_chars + other.cer_ref_chars,
            fer_cost=self.fer_cost + other.fer_cost,
            fer_ref_segments=self.fer_ref_segments + other.fer_ref_segments,
            ter_errors=self.ter_errors + other.ter_errors,
            ter_ref_tonebearing=self.ter_ref_tonebearing + other.ter_ref_tonebearing,
            ter_insertions=self.ter_insertions + other.ter_insertions,
            ter_tone_cost=self.ter_tone_cost + other.ter_tone_cost,
            per_dimension=per_dimension,
            per_tone_category=per_tone,
        )


@dataclass(frozen=True)
class Rates:
    """Headline rates; ``None`` marks an undefined or not-applicable rate."""

    wer: float | None
    cer: float | None
    fer: float | None
    ter: float | None
    ter_tone_distance: float | None = None

    @classmethod
    def from_counts(cls, counts: MetricCounts, tonal: bool) -> Rates:
        return cls(
            wer=ratio(counts.wer_errors, counts.wer_ref_words),
            cer=ratio(counts.cer_errors, counts.cer_ref_chars),
            fer=ratio(counts.fer_cost, counts.fer_ref_segments),
            ter=ratio(counts.ter_errors, counts.ter_ref_tonebearing) if tonal else None,
            ter_tone_distance=(
                ratio(counts.ter_tone_cost, counts.ter_ref_tonebearing) if tonal else None
            ),
        )


@dataclass(frozen=True)
class WorstEntries:
    """Worst non-tone feature and worst tone category."""

    feature: str | None = None
    feature_rate: float | None = None
    tone: ToneCategory | None = None
    tone_rate: float | None = None


@dataclass(frozen=True)
class EditResult:
    """Outcome of a unit-cost (word or character) comparison."""

    errors: int
    ref_count: int
    alignment: Alignment

    @property
    def rate(self) -> float | None:
        return ratio(self.errors, self.ref_count)


@dataclass(frozen=True)
class FerResult:
    cost: float
    ref_count: int
    alignment: Alignment

    @property
    def rate(self) -> float | None:
        return ratio(self.cost, self.ref_count)


@dataclass(frozen=True)
class TerResult:
    errors: int
    ref_count: int
    insertions: int
    tone_cost: float
    per_tone: dict[ToneCategory, ToneCount]
    applicable: bool = True

    @property
    def rate(self) -> float | None:
        return ratio(self.errors, self.ref_count) if self.applicable else None

    @property
    def tone_distance(self) -> float | None:
        return ratio(self.tone_cost, self.ref_count) if self.applicable else None


@dataclass(frozen=True)
class EvalOptions:
    """Knobs shared by every utterance of a run."""

    indel_cost: float = 1.0
    strict: bool = False
    lexicon: Lexicon | None = None
    min_support: int = 5


@dataclass
class UtteranceReport:
    """All metrics for one reference/hypothesis pair."""

    utterance_id: str
    profile: LanguageProfile
    reference: NormalizedUtterance
    hypothesis: NormalizedUtterance
    counts: MetricCounts
    rates: Rates
    worst: WorstEntries
    word_alignment: Alignment
    feature_alignment: Alignment
    word_classifications: list[WordClassification] = field(default_factory=list)

    @property
    def empty_reference(self) -> bool:
        return not self.reference.words

    @property
    def tonal(self) -> bool:
        return self.profile.tone_rules.is_tonal()


@dataclass
class CorpusReport:
    """Micro-averaged figures over many utterances."""

    profile: LanguageProfile
    counts: MetricCounts
    rates: Rates
    worst: WorstEntries
    utterance_count: int
    utterances: list[UtteranceReport] = field(default_factory=list)
    indel_cost: float = 1.0
    min_support: int = 5

    @property
    def tonal(self) -> bool:
        return self.profile.tone_rules.is_tonal()


def wer(ref_words: Sequence[str], hyp_words: Sequence[str]) -> EditResult:
    """Word error rate: (S + D + I) / N; may exceed 1."""
    alignment = levenshtein_align(ref_words, hyp_words)
    return EditResult(alignment.errors, len(ref_words), alignment)


def cer(ref_units: Sequence[str], hyp_units: Sequence[str]) -> EditResult:
    """Character error rate over character units (spaces included)."""
    alignment = levenshtein_align(ref_units, hyp_units)
    return EditResult(alignment.errors, len(ref_units), alignment)


def fer(
    ref_segments: Sequence[Segment], hyp_segments: Sequence[Segment], indel_cost: float = 1.0
) -> FerResult:
    """Feature error rate: feature-alignment cost over reference segment count."""
    alignment = nw_align(
        [s.vector for s in ref_segments], [s.vector for s in hyp_segments], indel_cost
    )
    return FerResult(alignment.total_cost, len(ref_segments), alignment)


def _tone_distance(ref: FeatureVector, hyp: FeatureVector, tone_indices: Sequence[int]) -> float:
    return masked_distance(
        FeatureVector(tuple(ref[i] for i in tone_indices)),
        FeatureVector(tuple(hyp[i] for i in tone_indices)),
    )


def ter(
    feature_alignment: Alignment,
    ref_segments: Sequence[Segment],
    hyp_segments: Sequence[Segment],
    profile: LanguageProfile,
) -> TerResult:
    """Tone error rate over tone-bearing reference segments.

    A reference tone is wrong when its segment is deleted or aligned to a
    segment without tone or with another tone. Tone-bearing insertions are
    counted separately and stay out of the headline rate.
    """
    if not profile.tone_rules.is_tonal():
        return TerResult(0, 0, 0, 0.0, {}, applicable=False)

    tone_indices = profile.tone_dimension_indices
    per_tone = {tone: ToneCount() for tone in profile.tone_rules.categories}
    errors = ref_count = insertions = 0
    tone_cost = 0.0
    for op in feature_alignment.ops:
        if op.kind == OpKind.INSERT:
            if hyp_segments[op.hyp_index].is_tone_bearing:  # type: ignore[index]
                insertions += 1
            continue
        ref = ref_segments[op.ref_index]  # type: ignore[index]
        if not ref.is_tone_bearing:
            continue
        bucket = per_tone.setdefault(ref.tone, ToneCount())
        bucket.ref_count += 1
        ref_count += 1
        if op.kind == OpKind.DELETE:
            wrong, cost = True, 1.0
        else:
            hyp = hyp_segments[op.hyp_index]  # type: ignore[index]
            wrong = hyp.tone != ref.tone
            cost = _tone_distance(ref.vector, hyp.vector, tone_indices)
        tone_cost += cost
        if wrong:
            bucket.errors += 1
            errors += 1

    return TerResult(errors, ref_count, insertions, tone_cost, per_tone)


def per_feature_fer(
    feature_alignment: Alignment,
    ref_segments: Sequence[Segment],
    hyp_segments: Sequence[Segment],
) -> dict[int, DimensionCount]:
    """Per-dimension error counts against reference support.

    A dimension errs in a substitution when it is active in either vector and
    the values differ, in a deletion when active in the reference segment, and
    in an insertion when active in the hypothesis segment.
    """
    counts = {index: DimensionCount() for index in range(NUM_DIMENSIONS)}
    for seg in ref_segments:
        for index, value in enumerate(seg.vector):
            if value != 0:
                counts[index].ref_active += 1

    for op in feature_alignment.ops:
        if op.kind == OpKind.MATCH:
            continue
        ref = ref_segments[op.ref_index].vector if op.ref_index is not None else None
        hyp = hyp_segments[op.hyp_index].vector if op.hyp_index is not None else None
        for index in range(NUM_DIMENSIONS):
            r = ref[index] if ref is not None else 0
            h = hyp[index] if hyp is not None else 0
            if (r != 0 or h != 0) and r != h:
                counts[index].errors += 1
    return counts


def worst_entries(
    per_feature: Mapping[int, DimensionCount],
    per_tone: Mapping[ToneCategory, ToneCount],
    profile: LanguageProfile,
    min_support: int = 1,
) -> WorstEntries:
    """Highest-rate non-tone feature (with enough support) and tone category."""
    excluded = {d.index for d in profile.dimensions if d.is_tone or d.category == "padding"}
    worst_index: int | None = None
    worst_feature_rate: float | None = None
    for index in sorted(per_feature):
        count = per_feature[index]
        if index in excluded or count.ref_active < max(min_support, 1):
            continue
        rate = count.rate
        if rate is not None and (worst_feature_rate is None or rate > worst_feature_rate):
            worst_index, worst_feature_rate = index, rate

    order = {tone: i for i, tone in enumerate(profile.tone_rules.categories)}
    worst_tone: ToneCategory | None = None
    worst_tone_rate: float | None = None
    for tone in sorted(per_tone, key=lambda t: order.get(t, len(order))):
        rate = per_tone[tone].rate
        if rate is not None and (worst_tone_rate is None or rate > worst_tone_rate):
            worst_tone, worst_tone_rate = tone, rate

    return WorstEntries(
        feature=profile.abbr(worst_index) if worst_index is not None else None,
        feature_rate=worst_feature_rate,
        tone=worst_tone,
        tone_rate=worst_tone_rate,
    )


def evaluate_utterance(
    ref_raw: str,
    hyp_raw: str,
    profile: LanguageProfile,
    options: EvalOptions | None = None,
    utterance_id: str = "",
) -> UtteranceReport:
    """Segment, align and score one reference/hypothesis pair."""
    # Deferred import: report builds on the types defined here
    from toneval.report import classify_words

    options = options or EvalOptions()
    reference = segment_utterance(ref_raw, profile, options.strict, options.lexicon)
    hypothesis = segment_utterance(hyp_raw, profile, options.strict, options.lexicon)
    if not reference.words:
        logger.debug("Utterance %s has an empty reference", utterance_id or "?")

    words = wer(reference.words, hypothesis.words)
    chars = cer(reference.char_units, hypothesis.char_units)
    ref_segments = reference.flat_segments
    hyp_segments = hypothesis.flat_segments
    features = fer(ref_segments, hyp_segments, options.indel_cost)
    tones = ter(features.alignment, ref_segments, hyp_segments, profile)
    per_dimension = per_feature_fer(features.alignment, ref_segments, hyp_segments)

    counts = MetricCounts(
        wer_errors=words.errors,
        wer_ref_words=words.ref_count,
        wer_substitutions=words.alignment.count(OpKind.SUBSTITUTE),
        wer_deletions=words.alignment.count(OpKind.DELETE),
        wer_insertions=words.alignment.count(OpKind.INSERT),
        cer_errors=chars.errors,
        cer_ref_chars=chars.ref_count,
        fer_cost=features.cost,
        fer_ref_segments=features.ref_count,
        ter_errors=tones.errors,
        ter_ref_tonebearing=tones.ref_count,
        ter_insertions=tones.insertions,
        ter_tone_cost=tones.tone_cost,
        per_dimension=per_dimension,
        per_tone_category=tones.per_tone,
    )
    tonal = profile.tone_rules.is_tonal()

    return UtteranceReport(
        utterance_id=utterance_id,
        profile=profile,
        reference=reference,
        hypothesis=hypothesis,
        counts=counts,
        rates=Rates.from_counts(counts, tonal),
        worst=worst_entries(per_dimension, tones.per_tone, profile, min_support=1),
        word_alignment=words.alignment,
        feature_alignment=features.alignment,
        word_classifications=classify_words(
            words.alignment, reference, hypothesis, profile, options.indel_cost
        ),
    )


def aggregate_corpus(
    reports: Sequence[UtteranceReport],
    min_support: int = 5,
    retain: bool = True,
    indel_cost: float = 1.0,
) -> CorpusReport:
    """Micro-average utterance reports: sum numerators and denominators, then divide."""
    if not reports:
        raise EvaluationError("Cannot aggregate an empty corpus")
    profile = reports[0].profile
    mixed = {r.profile.language_id for r in reports} - {profile.language_id}
    if mixed:
        raise EvaluationError(
            f"Reports mix profiles: {profile.language_id}, {', '.join(sorted(mixed))}"
        )

    counts = MetricCounts()
    for report in reports:
        counts = counts.merge(report.counts)
    tonal = profile.tone_rules.is_tonal()

    return CorpusReport(
        profile=profile,
        counts=counts,
        rates=Rates.from_counts(counts, tonal),
        worst=worst_entries(
            counts.per_dimension, counts.per_tone_category, profile, min_support=min_support
        ),
        utterance_count=len(reports),
        utterances=list(reports) if retain else [],
        indel_cost=indel_cost,
        min_support=min_support,
    )
