"""Language profiles: feature dimensions, segment matrices and tone rules.

A profile is a TOML document. Bundled profiles live in ``toneval/data``; user
profiles are looked up by name in configured directories and in the user
profile directory, or loaded from an explicit path. Layout::

    language_id = "uneme"
    input_mode = "orthographic"          # or "phonemic-tokens"
    dimensions = [ { index = 0, abbr = "SYL", long_name = "SYLLABIC",
                     category = "major-class", is_tone = false }, ... ]   # 24 rows
    segments = [ { label = "gb", vector = [-1, 1, ...] }, ... ]          # 24 ints each

    [normalization]
    lowercase = true
    strip = ".,;:!?"

    [tone_rules]
    default_tone = "downstep"
    diacritics = { "U+0301" = "high", "U+0300" = "low" }
    tone_dims = { high = 21, low = 22, downstep = 23 }

Tone dimensions are always 0 in the segment table; tones are applied when a
segment is realized (see :func:`realized_vector`).
"""

from __future__ import annotations

import json
import logging
import sys
import unicodedata
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib  # type: ignore[import-not-found]

from toneval.paths import get_user_profiles_dir

logger = logging.getLogger(__name__)

NUM_DIMENSIONS = 24
TERNARY_VALUES = frozenset({-1, 0, 1})
BUILTIN_PROFILES = ("uneme", "yoruba", "english")
DIMENSION_CATEGORIES = (
    "major-class",
    "laryngeal",
    "place",
    "manner",
    "vowel",
    "suprasegmental",
    "padding",
)


class ToneCategory(str, Enum):
    """Lexical tone carried by a segment."""

    HIGH = "high"
    LOW = "low"
    MID = "mid"
    DOWNSTEP = "downstep"
    NONE = "none"


class InputMode(str, Enum):
    """How transcripts for a profile are written."""

    ORTHOGRAPHIC = "orthographic"
    PHONEMIC = "phonemic-tokens"


@dataclass(frozen=True)
class Diagnostic:
    """A problem found while reading or validating data."""

    location: str
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.location}: {self.message}"


class ProfileError(Exception):
    """Profile could not be resolved, read or validated."""

    def __init__(self, message: str, diagnostics: Sequence[Diagnostic] = ()) -> None:
        super().__init__(message)
        self.diagnostics = list(diagnostics)


@dataclass(frozen=True)
class FeatureDimension:
    """One named slot of the 24-dimensional feature space."""

    index: int
    abbr: str
    long_name: str
    category: str
    is_tone: bool = False


@dataclass(frozen=True)
class FeatureVector:
    """Ternary articulatory description of a segment (+1 present, -1 absent, 0 n/a)."""

    values: tuple[int, ...]

    @classmethod
    def zeros(cls) -> FeatureVector:
        return cls((0,) * NUM_DIMENSIONS)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    def __getitem__(self, index: int) -> int:
        return self.values[index]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.int8)

    def is_zero(self) -> bool:
        return not any(self.values)

    def signs(self) -> str:
        """Compact rendering in the style of the appendix matrices: ``+ - 0``."""
        return " ".join({1: "+", -1: "-", 0: "0"}.get(v, str(v)) for v in self.values)


@dataclass(frozen=True)
class ToneRules:
    """Orthographic tone marks and the dimensions tones are written to."""

    diacritics: Mapping[str, ToneCategory] = field(default_factory=dict)
    default_tone: ToneCategory = ToneCategory.NONE
    tone_dims: Mapping[ToneCategory, int] = field(default_factory=dict)

    @property
    def categories(self) -> tuple[ToneCategory, ...]:
        """Tone categories the profile can produce, in tone-dimension order."""
        return tuple(sorted(self.tone_dims, key=lambda c: self.tone_dims[c]))

    def is_tonal(self) -> bool:
        return bool(self.tone_dims)


@dataclass(frozen=True)
class Normalization:
    """Text clean-up applied before segmentation."""

    lowercase: bool = True
    strip: str = ""


@dataclass(frozen=True)
class LanguageProfile:
    """Everything needed to turn a transcript of one language into feature vectors."""

    language_id: str
    dimensions: tuple[FeatureDimension, ...]
    base_table: Mapping[str, FeatureVector]
    tone_rules: ToneRules = field(default_factory=ToneRules)
    normalization: Normalization = field(default_factory=Normalization)
    input_mode: InputMode = InputMode.ORTHOGRAPHIC
    source: str = field(default="", compare=False)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.base_table)

    @property
    def tone_dimension_indices(self) -> tuple[int, ...]:
        return tuple(d.index for d in self.dimensions if d.is_tone)

    @property
    def max_label_units(self) -> int:
        """Longest label, in base characters (digraphs count 2)."""
        return max((_count_bases(label) for label in self.base_table), default=1)

    def dimension_by_abbr(self, abbr: str) -> FeatureDimension | None:
        return next((d for d in self.dimensions if d.abbr == abbr), None)

    def abbr(self, index: int) -> str:
        return next((d.abbr for d in self.dimensions if d.index == index), str(index))

    def _base_value(self, label: str, abbr: str) -> int:
        dim = self.dimension_by_abbr(abbr)
        vector = self.base_table.get(label)
        if dim is None or vector is None or dim.index >= len(vector):
            return 0
        return vector[dim.index]

    def is_tone_bearing(self, label: str) -> bool:
        """Syllabic segments carry tone under a tonal profile."""
        return self.tone_rules.is_tonal() and self._base_value(label, "SYL") == 1

    def is_nasal(self, label: str) -> bool:
        """Nasal consonants may become syllabic when written with a tone mark."""
        return self._base_value(label, "NAS") == 1 and self._base_value(label, "SYL") != 1


def _count_bases(text: str) -> int:
    return sum(1 for ch in text if not unicodedata.combining(ch))


def canonical_label(label: str) -> str:
    """Labels are compared in canonical decomposed form (ẹ == e + U+0323)."""
    return unicodedata.normalize("NFD", label)


def realized_vector(
    profile: LanguageProfile, label: str, tone: ToneCategory = ToneCategory.NONE
) -> FeatureVector:
    """Base vector of `label` with the tone dimensions rewritten for `tone`.

    The assigned tone's dimension becomes +1 and every other tone dimension the
    profile defines becomes -1. With no tone the base row is returned as is.
    """
    key = canonical_label(label)
    base = profile.base_table.get(key)
    if base is None:
        raise ProfileError(f"Unknown segment '{label}' for profile {profile.language_id}")
    if tone == ToneCategory.NONE:
        return base
    if tone not in profile.tone_rules.tone_dims:
        raise ProfileError(
            f"Tone '{tone.value}' is not defined by profile {profile.language_id}"
        )

    values = list(base.values)
    for category, index in profile.tone_rules.tone_dims.items():
        values[index] = 1 if category == tone else -1
    return FeatureVector(tuple(values))


# --- parsing -----------------------------------------------------------------


def _parse_tone(value: Any, location: str, diagnostics: list[Diagnostic]) -> ToneCategory | None:
    try:
        return ToneCategory(str(value).lower())
    except ValueError:
        names = ", ".join(t.value for t in ToneCategory)
        diagnostics.append(Diagnostic(location, f"unknown tone category {value!r} ({names})"))
        return None


def _parse_codepoint(key: str, location: str, diagnostics: list[Diagnostic]) -> str | None:
    """Accept "U+0301" style keys or the literal combining character."""
    text = key.strip()
    if text.upper().startswith("U+"):
        try:
            return chr(int(text[2:], 16))
        except ValueError:
            pass
    elif len(text) == 1:
        return text
    diagnostics.append(Diagnostic(location, f"invalid diacritic codepoint {key!r}"))
    return None


def _parse_dimensions(rows: Any, diagnostics: list[Diagnostic]) -> tuple[FeatureDimension, ...]:
    if not isinstance(rows, list):
        diagnostics.append(Diagnostic("dimensions", "must be an array of tables"))
        return ()

    dimensions = []
    for i, row in enumerate(rows):
        location = f"dimensions[{i}]"
        if not isinstance(row, dict):
            diagnostics.append(Diagnostic(location, "must be a table"))
            continue
        missing = [k for k in ("index", "abbr") if k not in row]
        if missing:
            diagnostics.append(Diagnostic(location, f"missing field(s): {', '.join(missing)}"))
            continue
        index = row["index"]
        if not isinstance(index, int) or isinstance(index, bool):
            diagnostics.append(
                Diagnostic(f"{location}.index", f"must be an integer, got {index!r}")
            )
            continue
        dimensions.append(
            FeatureDimension(
                index=index,
                abbr=str(row["abbr"]),
                long_name=str(row.get("long_name", row["abbr"])),
                category=str(row.get("category", "")),
                is_tone=bool(row.get("is_tone", False)),
            )
        )
    return tuple(dimensions)


def _parse_segments(rows: Any, diagnostics: list[Diagnostic]) -> dict[str, FeatureVector]:
    if not isinstance(rows, list):
        diagnostics.append(Diagnostic("segments", "must be an array of tables"))
        return {}

    table: dict[str, FeatureVector] = {}
    first_seen: dict[str, int] = {}
    for i, row in enumerate(rows):
        location = f"segments[{i}]"
        if not isinstance(row, dict) or "label" not in row or "vector" not in row:
            diagnostics.append(Diagnostic(location, "must be a table with label and vector"))
            continue
        label = canonical_label(str(row["label"]))
        location = f"segments[{i}] ({unicodedata.normalize('NFC', label)!r})"
        if not label or any(ch.isspace() for ch in label):
            diagnostics.append(Diagnostic(location, "label must be non-empty without whitespace"))
            continue
        if label in first_seen:
            diagnostics.append(
                Diagnostic(
                    location,
                    f"duplicate segment label (first defined at segments[{first_seen[label]}])",
                )
            )
            continue
        vector = row["vector"]
        if not isinstance(vector, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in vector
        ):
            diagnostics.append(Diagnostic(f"{location}.vector", "must be an array of integers"))
            continue
        first_seen[label] = i
        table[label] = FeatureVector(tuple(vector))
    return table


def parse_profile(
    data: Mapping[str, Any], source: str = ""
) -> tuple[LanguageProfile, list[Diagnostic]]:
    """Build a profile from a decoded TOML document.

    Structural problems are returned as diagnostics alongside a best-effort
    profile; invariant checks are left to :func:`validate_profile`.
    """
    diagnostics: list[Diagnostic] = []

    language_id = data.get("language_id")
    if not isinstance(language_id, str) or not language_id:
        diagnostics.append(Diagnostic("language_id", "missing or not a string"))
        language_id = Path(source).stem if source else "unknown"

    try:
        input_mode = InputMode(data.get("input_mode", InputMode.ORTHOGRAPHIC.value))
    except ValueError:
        modes = ", ".join(m.value for m in InputMode)
        diagnostics.append(Diagnostic("input_mode", f"must be one of: {modes}"))
        input_mode = InputMode.ORTHOGRAPHIC

    dimensions = _parse_dimensions(data.get("dimensions", []), diagnostics)
    base_table = _parse_segments(data.get("segments", []), diagnostics)

    norm_data = data.get("normalization", {})
    normalization = Normalization(
        lowercase=bool(norm_data.get("lowercase", True)),
        strip=str(norm_data.get("strip", "")),
    )

    tone_data = data.get("tone_rules", {})
    diacritics: dict[str, ToneCategory] = {}
    for key, value in tone_data.get("diacritics", {}).items():
        location = f"tone_rules.diacritics.{key}"
        mark = _parse_codepoint(key, location, diagnostics)
        tone = _parse_tone(value, location, diagnostics)
        if mark is not None and tone is not None:
            diacritics[mark] = tone
    tone_dims: dict[ToneCategory, int] = {}
    for key, value in tone_data.get("tone_dims", {}).items():
        location = f"tone_rules.tone_dims.{key}"
        tone = _parse_tone(key, location, diagnostics)
        if not isinstance(value, int) or isinstance(value, bool):
            diagnostics.append(Diagnostic(location, f"must be a dimension index, got {value!r}"))
        elif tone is not None:
            tone_dims[tone] = value
    default_tone = (
        _parse_tone(tone_data.get("default_tone", "none"), "tone_rules.default_tone", diagnostics)
        or ToneCategory.NONE
    )

    profile = LanguageProfile(
        language_id=language_id,
        dimensions=dimensions,
        base_table=MappingProxyType(base_table),
        tone_rules=ToneRules(
            diacritics=MappingProxyType(diacritics),
            default_tone=default_tone,
            tone_dims=MappingProxyType(tone_dims),
        ),
        normalization=normalization,
        input_mode=input_mode,
        source=source,
    )
    return profile, diagnostics


def validate_profile(profile: LanguageProfile) -> list[Diagnostic]:
    """Check every profile invariant; an empty list means the profile is sound."""
    diagnostics: list[Diagnostic] = []

    if len(profile.dimensions) != NUM_DIMENSIONS:
        diagnostics.append(
            Diagnostic(
                "dimensions",
                f"expected {NUM_DIMENSIONS} dimensions, found {len(profile.dimensions)}",
            )
        )
    seen_indices: set[int] = set()
    for i, dim in enumerate(profile.dimensions):
        location = f"dimensions[{i}] ({dim.abbr})"
        if not 0 <= dim.index < NUM_DIMENSIONS:
            diagnostics.append(Diagnostic(location, f"index {dim.index} out of range 0..23"))
        if dim.index in seen_indices:
            diagnostics.append(Diagnostic(location, f"duplicate dimension index {dim.index}"))
        seen_indices.add(dim.index)
        if dim.category not in DIMENSION_CATEGORIES:
            diagnostics.append(Diagnostic(location, f"unknown category {dim.category!r}"))
        if dim.is_tone and dim.category != "suprasegmental":
            diagnostics.append(Diagnostic(location, "tone dimensions must be suprasegmental"))

    tone_indices = set(profile.tone_dimension_indices)
    padding = {d.index for d in profile.dimensions if d.category == "padding"}
    for label, vector in profile.base_table.items():
        location = f"segments[{unicodedata.normalize('NFC', label)!r}]"
        if len(vector) != NUM_DIMENSIONS:
            diagnostics.append(
                Diagnostic(location, f"vector has {len(vector)} values, expected {NUM_DIMENSIONS}")
            )
        bad = [(i, v) for i, v in enumerate(vector) if v not in TERNARY_VALUES]
        for i, v in bad:
            diagnostics.append(Diagnostic(f"{location}[{i}]", f"value {v} is not in {{-1, 0, +1}}"))
        for i in sorted(tone_indices | padding):
            if i < len(vector) and vector[i] != 0:
                kind = "tone" if i in tone_indices else "padding"
                diagnostics.append(
                    Diagnostic(f"{location}[{i}]", f"{kind} dimension must be 0 in the base table")
                )

    rules = profile.tone_rules
    for tone, index in rules.tone_dims.items():
        location = f"tone_rules.tone_dims.{tone.value}"
        if tone == ToneCategory.NONE:
            diagnostics.append(Diagnostic(location, "'none' cannot own a dimension"))
        elif index not in tone_indices:
            diagnostics.append(
                Diagnostic(location, f"dimension {index} is not marked is_tone = true")
            )
    named = {t for t in rules.diacritics.values()}
    if rules.default_tone != ToneCategory.NONE:
        named.add(rules.default_tone)
    for tone in sorted(named - set(rules.tone_dims), key=lambda t: t.value):
        diagnostics.append(
            Diagnostic("tone_rules", f"tone '{tone.value}' has no entry in tone_dims")
        )
    for mark in rules.diacritics:
        if not unicodedata.combining(mark):
            diagnostics.append(
                Diagnostic(
                    f"tone_rules.diacritics.U+{ord(mark):04X}",
                    "tone marks must be combining characters",
                )
            )

    return diagnostics


# --- loading -----------------------------------------------------------------


def _read_profile_file(path: Path) -> tuple[LanguageProfile | None, list[Diagnostic]]:
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except OSError as e:
        raise ProfileError(f"Cannot read profile {path}: {e.strerror or e}") from e
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as e:
        return None, [Diagnostic(str(path), f"invalid TOML: {e}")]
    return parse_profile(data, source=str(path))


def check_profile_file(path: Path) -> list[Diagnostic]:
    """All diagnostics for a profile file: syntax, structure and invariants."""
    profile, diagnostics = _read_profile_file(path)
    if profile is not None:
        diagnostics.extend(validate_profile(profile))
    return diagnostics


def load_profile_file(path: Path) -> LanguageProfile:
    """Load and validate a profile file; raise with every diagnostic on failure."""
    profile, diagnostics = _read_profile_file(path)
    if profile is not None:
        diagnostics.extend(validate_profile(profile))
    errors = [d for d in diagnostics if d.severity == "error"]
    if profile is None or errors:
        raise ProfileError(f"Invalid profile {path} ({len(errors)} problem(s))", errors)
    logger.debug("Loaded profile %s from %s", profile.language_id, path)
    return profile


@lru_cache(maxsize=None)
def load_builtin(name: str) -> LanguageProfile:
    """Load a bundled profile. Profiles are immutable, so loads are shared."""
    if name not in BUILTIN_PROFILES:
        raise ProfileError(
            f"Unknown builtin profile '{name}' (builtins: {', '.join(BUILTIN_PROFILES)})"
        )
    resource = resources.files("toneval") / "data" / f"{name}.toml"
    with resources.as_file(resource) as path:
        return load_profile_file(Path(path))


def load_profile(source: str | Path, search_dirs: Sequence[Path] = ()) -> LanguageProfile:
    """Resolve `source` to a validated profile.

    Accepts a builtin name, the name of a ``<name>.toml`` file in `search_dirs`
    or the user profile directory, or a path to a profile file.
    """
    text = str(source)
    looks_like_path = isinstance(source, Path) or text.endswith(".toml") or "/" in text
    if not looks_like_path:
        if text in BUILTIN_PROFILES:
            return load_builtin(text)
        for directory in [*search_dirs, get_user_profiles_dir()]:
            candidate = directory.expanduser() / f"{text}.toml"
            if candidate.is_file():
                logger.debug("Resolved profile %s to %s", text, candidate)
                return load_profile_file(candidate)
        raise ProfileError(
            f"Unknown profile '{text}' (builtins: {', '.join(BUILTIN_PROFILES)}; "
            "or pass a path to a .toml profile)"
        )
    return load_profile_file(Path(text).expanduser())


def list_profiles(search_dirs: Sequence[Path] = ()) -> list[tuple[str, str]]:
    """(name, source) for every profile reachable by name."""
    found: list[tuple[str, str]] = [(name, "builtin") for name in BUILTIN_PROFILES]
    seen = set(BUILTIN_PROFILES)
    for directory in [*search_dirs, get_user_profiles_dir()]:
        directory = directory.expanduser()
        if not directory.is_dir():
            continue
        for path in sorted(directory.glob("*.toml")):
            if path.stem not in seen:
                seen.add(path.stem)
                found.append((path.stem, str(path)))
    return found


# --- serialisation -----------------------------------------------------------


def _toml_str(value: str) -> str:
    return json.dumps(value, ensure_ascii=False)


def dump_profile(profile: LanguageProfile) -> str:
    """Serialise a profile in the bundled TOML layout (reloads to an equal profile)."""
    lines = [
        f"language_id = {_toml_str(profile.language_id)}",
        f"input_mode = {_toml_str(profile.input_mode.value)}",
        "",
        "dimensions = [",
    ]
    for dim in profile.dimensions:
        lines.append(
            f"    {{ index = {dim.index}, abbr = {_toml_str(dim.abbr)}, "
            f"long_name = {_toml_str(dim.long_name)}, category = {_toml_str(dim.category)}, "
            f"is_tone = {str(dim.is_tone).lower()} }},"
        )
    lines += ["]", "", "segments = ["]
    for label, vector in profile.base_table.items():
        values = ", ".join(f"{v:2d}" for v in vector)
        nfc = unicodedata.normalize("NFC", label)
        lines.append(f"    {{ label = {_toml_str(nfc)}, vector = [{values}] }},")
    lines += ["]", ""]

    norm = profile.normalization
    lines += [
        "[normalization]",
        f"lowercase = {str(norm.lowercase).lower()}",
        f"strip = {_toml_str(norm.strip)}",
        "",
    ]

    rules = profile.tone_rules
    diacritics = ", ".join(
        f'"U+{ord(mark):04X}" = {_toml_str(tone.value)}' for mark, tone in rules.diacritics.items()
    )
    tone_dims = ", ".join(f"{tone.value} = {index}" for tone, index in rules.tone_dims.items())
    lines += [
        "[tone_rules]",
        f"default_tone = {_toml_str(rules.default_tone.value)}",
        f"diacritics = {{ {diacritics} }}" if diacritics else "diacritics = {}",
        f"tone_dims = {{ {tone_dims} }}" if tone_dims else "tone_dims = {}",
        "",
    ]
    return "\n".join(lines)
