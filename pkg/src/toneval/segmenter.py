"""Transcript normalization and rule-based grapheme-to-segment conversion."""

from __future__ import annotations

import logging
import unicodedata
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from toneval.profiles import (
    Diagnostic,
    FeatureVector,
    InputMode,
    LanguageProfile,
    ToneCategory,
    canonical_label,
    realized_vector,
)

logger = logging.getLogger(__name__)

UNKNOWN = "<unk>"

Lexicon = Mapping[str, tuple[str, ...]]


class SegmentationError(Exception):
    """A character is outside the profile inventory (strict mode)."""

    def __init__(self, word: str, offset: int, char: str, language_id: str = "") -> None:
        self.word = word
        self.offset = offset
        self.char = char
        shown = unicodedata.normalize("NFC", char)
        lang = f" {language_id}" if language_id else ""
        super().__init__(
            f"Character {shown!r} (U+{ord(char[0]):04X}) at offset {offset} of "
            f"{unicodedata.normalize('NFC', word)!r} is not in the{lang} inventory"
        )


class LexiconError(Exception):
    """Pronunciation lexicon is unreadable or malformed."""

    pass


@dataclass(frozen=True)
class Segment:
    """One phonological unit of a word."""

    label: str
    tone: ToneCategory
    vector: FeatureVector
    source_span: tuple[int, int]
    text: str
    tone_marks: str = ""

    @property
    def is_unknown(self) -> bool:
        return self.label == UNKNOWN

    @property
    def is_tone_bearing(self) -> bool:
        return self.tone != ToneCategory.NONE

    @property
    def surface(self) -> str:
        """Orthographic text the segment was read from."""
        return self.text

    def describe(self) -> str:
        label = f"{UNKNOWN}({self.text})" if self.is_unknown else self.label
        label = unicodedata.normalize("NFC", label)
        return f"{label}+{self.tone.value}" if self.is_tone_bearing else label


@dataclass(frozen=True)
class NormalizedUtterance:
    """A transcript in the three views the metrics need."""

    text: str
    words: tuple[str, ...]
    char_units: tuple[str, ...]
    segments: tuple[tuple[Segment, ...], ...]
    diagnostics: tuple[Diagnostic, ...] = field(default=(), compare=False)

    @property
    def flat_segments(self) -> list[Segment]:
        return [seg for word in self.segments for seg in word]


def normalize_text(raw: str, profile: LanguageProfile) -> str:
    """Canonical decomposition, case folding, stripping and whitespace collapse.

    NFD also puts combining marks in canonical order, so a dot below always
    precedes a tone mark.
    """
    text = unicodedata.normalize("NFD", raw)
    if profile.normalization.lowercase:
        text = unicodedata.normalize("NFD", text.lower())
    if profile.normalization.strip:
        text = text.translate({ord(ch): None for ch in profile.normalization.strip})
    return " ".join(text.split())


def _unit_spans(text: str) -> list[tuple[int, int]]:
    """Offsets of base characters together with their trailing combining marks."""
    spans: list[tuple[int, int]] = []
    start = 0
    for i, ch in enumerate(text):
        if i > start and not unicodedata.combining(ch):
            spans.append((start, i))
            start = i
    if text:
        spans.append((start, len(text)))
    return spans


def char_units(normalized: str) -> list[str]:
    """Character units for CER: one base character plus its combining marks."""
    return [normalized[s:e] for s, e in _unit_spans(normalized)]


def _unknown(text: str, span: tuple[int, int], tone_marks: str = "") -> Segment:
    return Segment(
        label=UNKNOWN,
        tone=ToneCategory.NONE,
        vector=FeatureVector.zeros(),
        source_span=span,
        text=text,
        tone_marks=tone_marks,
    )


def _resolve_tone(profile: LanguageProfile, label: str, marks: str) -> ToneCategory:
    rules = profile.tone_rules
    explicit = next((rules.diacritics[m] for m in marks if m in rules.diacritics), None)
    if profile.is_tone_bearing(label):
        return explicit or rules.default_tone
    # Orthography only reveals a syllabic nasal through its tone mark
    if explicit is not None and profile.is_nasal(label):
        return explicit
    return ToneCategory.NONE


def _token_label(token: str, profile: LanguageProfile) -> str | None:
    """Phoneme token to table label; stress digits are dropped unless listed (AH0)."""
    for candidate in dict.fromkeys((token, token.upper())):
        key = canonical_label(candidate)
        if key in profile.base_table:
            return key
        stripped = key.rstrip("0123456789")
        if stripped and stripped in profile.base_table:
            return stripped
    return None


def _token_segment(token: str, profile: LanguageProfile, span: tuple[int, int]) -> Segment:
    label = _token_label(token, profile)
    if label is None:
        return _unknown(token, span)
    return Segment(
        label=label,
        tone=ToneCategory.NONE,
        vector=realized_vector(profile, label),
        source_span=span,
        text=token,
    )


def segment_word(word: str, profile: LanguageProfile, strict: bool = False) -> list[Segment]:
    """Split a normalized word into segments by greedy longest match.

    Tone marks are set aside before matching and become the segment's tone;
    unmarked tone-bearing segments take the profile's default tone.
    """
    if profile.input_mode == InputMode.PHONEMIC:
        segment = _token_segment(word, profile, (0, len(word)))
        if strict and segment.is_unknown:
            raise SegmentationError(word, 0, word, profile.language_id)
        return [segment]

    tone_marks = profile.tone_rules.diacritics
    units = []
    for start, end in _unit_spans(word):
        text = word[start:end]
        core = "".join(ch for ch in text if ch not in tone_marks)
        marks = "".join(ch for ch in text if ch in tone_marks)
        units.append((start, end, core, marks))

    max_units = profile.max_label_units
    segments: list[Segment] = []
    i = 0
    while i < len(units):
        # A tone mark ends a label: only its last unit may carry one.
        reach = min(max_units, len(units) - i)
        for k in range(reach):
            if units[i + k][3]:
                reach = k + 1
                break
        width = 0
        for k in range(reach, 0, -1):
            if "".join(u[2] for u in units[i : i + k]) in profile.base_table:
                width = k
                break

        start, end = units[i][0], units[i + max(width, 1) - 1][1]
        marks = "".join(u[3] for u in units[i : i + max(width, 1)])
        if width == 0:
            if strict:
                raise SegmentationError(word, start, word[start:end], profile.language_id)
            logger.debug("Unknown unit %r in %r", word[start:end], word)
            segments.append(_unknown(word[start:end], (start, end), marks))
            i += 1
            continue

        label = "".join(u[2] for u in units[i : i + width])
        tone = _resolve_tone(profile, label, marks)
        segments.append(
            Segment(
                label=label,
                tone=tone,
                vector=realized_vector(profile, label, tone),
                source_span=(start, end),
                text=word[start:end],
                tone_marks=marks,
            )
        )
        i += width
    return segments


def load_lexicon(path: Path) -> dict[str, tuple[str, ...]]:
    """Read a ``word<TAB>TOKEN TOKEN ...`` pronunciation lexicon.

    Blank lines and lines starting with ``#`` are skipped. When a word has
    several pronunciations the first one is used.
    """
    try:
        content = path.read_text(encoding="utf-8-sig")
    except (OSError, UnicodeDecodeError) as e:
        raise LexiconError(f"Cannot read lexicon {path}: {e}") from e

    lexicon: dict[str, tuple[str, ...]] = {}
    for lineno, line in enumerate(content.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        word, tab, pron = line.partition("\t")
        tokens = tuple(pron.split())
        if not tab or not word.strip() or not tokens:
            raise LexiconError(f"{path}:{lineno}: expected 'word<TAB>TOKEN TOKEN ...'")
        key = unicodedata.normalize("NFD", word.strip())
        if key in lexicon:
            logger.debug("%s:%d: duplicate entry for %r ignored", path, lineno, word)
            continue
        lexicon[key] = tokens
    logger.debug("Loaded %d lexicon entries from %s", len(lexicon), path)
    return lexicon


def phonemize_with_lexicon(
    words: Sequence[str], lexicon: Lexicon, profile: LanguageProfile
) -> tuple[list[list[Segment]], list[Diagnostic]]:
    """Look words up in a pronunciation lexicon and turn their tokens into segments.

    Out-of-lexicon words become a single UNKNOWN segment plus a warning.
    """
    if profile.input_mode != InputMode.PHONEMIC:
        raise ValueError(f"Profile {profile.language_id} does not take phoneme tokens")

    result: list[list[Segment]] = []
    diagnostics: list[Diagnostic] = []
    for position, word in enumerate(words):
        span = (0, len(word))
        tokens = lexicon.get(word)
        if tokens is None:
            tokens = lexicon.get(word.lower())
        if tokens is None:
            diagnostics.append(
                Diagnostic(f"word {position} ({word!r})", "not in lexicon", severity="warning")
            )
            logger.warning("Word %r not in lexicon", word)
            result.append([_unknown(word, span)])
            continue

        segments = [_token_segment(token, profile, span) for token in tokens]
        for seg in segments:
            if seg.is_unknown:
                diagnostics.append(
                    Diagnostic(
                        f"word {position} ({word!r})",
                        f"lexicon token {seg.text!r} is not in the {profile.language_id} inventory",
                        severity="warning",
                    )
                )
        result.append(segments)
    return result, diagnostics


def segment_utterance(
    raw: str,
    profile: LanguageProfile,
    strict: bool = False,
    lexicon: Lexicon | None = None,
) -> NormalizedUtterance:
    """Normalize a transcript and produce its words, character units and segments.

    With a lexicon (phoneme-token profiles only) the words are orthographic and
    their segments come from the lexicon; otherwise each word is segmented by
    the profile's rules.
    """
    text = normalize_text(raw, profile)
    words = tuple(text.split(" ")) if text else ()

    diagnostics: list[Diagnostic] = []
    if lexicon is not None and profile.input_mode == InputMode.PHONEMIC:
        per_word, diagnostics = phonemize_with_lexicon(words, lexicon, profile)
    else:
        per_word = [segment_word(word, profile, strict=strict) for word in words]

    return NormalizedUtterance(
        text=text,
        words=words,
        char_units=tuple(char_units(text)),
        segments=tuple(tuple(segs) for segs in per_word),
        diagnostics=tuple(diagnostics),
    )
