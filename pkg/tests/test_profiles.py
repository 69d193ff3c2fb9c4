"""Tests for language profiles."""

import sys
import unicodedata
from importlib import resources
from pathlib import Path

import pytest

from toneval.alignment import masked_distance
from toneval.profiles import (
    BUILTIN_PROFILES,
    NUM_DIMENSIONS,
    FeatureVector,
    InputMode,
    ProfileError,
    ToneCategory,
    check_profile_file,
    dump_profile,
    list_profiles,
    load_builtin,
    load_profile,
    load_profile_file,
    realized_vector,
    validate_profile,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _builtin_path(name: str) -> Path:
    return Path(str(resources.files("toneval") / "data" / f"{name}.toml"))


def _write_profile(tmp_path: Path, text: str, name: str = "custom.toml") -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


@pytest.mark.parametrize(
    ("name", "rows"),
    [("uneme", 32), ("yoruba", 25), ("english", 40)],
)
def test_builtin_row_counts(name, rows):
    """Bundled segment tables have the expected number of rows."""
    profile = load_builtin(name)

    assert len(profile.base_table) == rows
    assert len(profile.dimensions) == NUM_DIMENSIONS


@pytest.mark.parametrize("name", BUILTIN_PROFILES)
def test_builtin_profiles_validate_cleanly(name):
    """Every bundled profile satisfies all invariants."""
    assert validate_profile(load_builtin(name)) == []
    assert check_profile_file(_builtin_path(name)) == []


def test_uneme_tone_rules():
    """Uneme: acute is High, grave is Low, unmarked defaults to downstep."""
    rules = load_builtin("uneme").tone_rules

    assert rules.diacritics["\u0301"] == ToneCategory.HIGH
    assert rules.diacritics["\u0300"] == ToneCategory.LOW
    assert rules.default_tone == ToneCategory.DOWNSTEP
    assert rules.categories == (ToneCategory.HIGH, ToneCategory.LOW, ToneCategory.DOWNSTEP)


def test_yoruba_tone_rules():
    """Yoruba: unmarked vowels are Mid; a macron marks Mid explicitly."""
    rules = load_builtin("yoruba").tone_rules

    assert rules.default_tone == ToneCategory.MID
    assert rules.diacritics["\u0304"] == ToneCategory.MID
    assert set(rules.tone_dims) == {ToneCategory.HIGH, ToneCategory.LOW, ToneCategory.MID}


def test_english_has_no_tone():
    """English is a phoneme-token profile without tone dimensions."""
    profile = load_builtin("english")

    assert profile.input_mode == InputMode.PHONEMIC
    assert not profile.tone_rules.is_tonal()
    assert profile.tone_dimension_indices == ()
    assert "AH0" in profile.base_table


def test_labels_are_canonically_decomposed():
    """Precomposed and decomposed spellings resolve to the same row."""
    profile = load_builtin("yoruba")

    assert unicodedata.normalize("NFD", "ẹ") in profile.base_table
    assert realized_vector(profile, "\u1eb9") == realized_vector(profile, "e\u0323")


def test_realized_vector_sets_tone_dimensions():
    """The assigned tone dimension is +1, other tone dimensions -1."""
    profile = load_builtin("uneme")
    high = realized_vector(profile, "a", ToneCategory.HIGH)

    assert high[21] == 1
    assert high[22] == -1
    assert high[23] == -1
    # Non-tone dimensions keep the base values
    assert high.values[:21] == profile.base_table["a"].values[:21]


def test_realized_vector_without_tone_is_base_row():
    """No tone leaves the tone dimensions at 0."""
    profile = load_builtin("uneme")

    assert realized_vector(profile, "b") == profile.base_table["b"]


def test_realized_vector_unknown_label():
    """Unknown labels raise."""
    with pytest.raises(ProfileError, match="Unknown segment"):
        realized_vector(load_builtin("uneme"), "q")


def test_realized_vector_undefined_tone():
    """A tone the profile does not define raises."""
    with pytest.raises(ProfileError, match="not defined"):
        realized_vector(load_builtin("uneme"), "a", ToneCategory.MID)


def test_uneme_b_versus_p():
    """b and p differ only in voicing: 1 of 13 active dimensions."""
    profile = load_builtin("uneme")

    assert masked_distance(realized_vector(profile, "b"), realized_vector(profile, "p")) == 1 / 13


def test_yoruba_high_versus_low_a():
    """Same vowel, different tone: two tone dimensions flip out of 13 active."""
    profile = load_builtin("yoruba")
    high = realized_vector(profile, "a", ToneCategory.HIGH)
    low = realized_vector(profile, "a", ToneCategory.LOW)

    assert masked_distance(high, low) == 2 / 13


def test_tone_bearing_and_nasal_predicates():
    """Vowels bear tone; nasals are candidates for syllabic use."""
    profile = load_builtin("yoruba")

    assert profile.is_tone_bearing("a")
    assert not profile.is_tone_bearing("b")
    assert profile.is_nasal("n")
    assert not profile.is_nasal("a")
    assert not load_builtin("english").is_tone_bearing("AA")


def test_feature_vector_signs():
    """Vectors render as + - 0."""
    vector = FeatureVector((1, -1, 0) + (0,) * 21)

    assert vector.signs().split()[:3] == ["+", "-", "0"]
    assert FeatureVector.zeros().is_zero()


def test_dump_profile_round_trip(tmp_path):
    """A dumped profile reloads to an equal profile."""
    for name in BUILTIN_PROFILES:
        profile = load_builtin(name)
        path = _write_profile(tmp_path, dump_profile(profile), f"{name}.toml")

        reloaded = load_profile_file(path)

        assert reloaded == profile


def test_load_profile_by_path(tmp_path):
    """A path-like source loads that file."""
    path = _write_profile(tmp_path, dump_profile(load_builtin("uneme")), "mine.toml")

    assert load_profile(str(path)).language_id == "uneme"


def test_load_profile_from_search_dir(tmp_path):
    """A name that is not builtin is looked up in the search directories."""
    text = dump_profile(load_builtin("yoruba")).replace(
        'language_id = "yoruba"', 'language_id = "yoruba-test"'
    )
    _write_profile(tmp_path, text, "yoruba-test.toml")

    profile = load_profile("yoruba-test", search_dirs=[tmp_path])

    assert profile.language_id == "yoruba-test"
    assert ("yoruba-test", str(tmp_path / "yoruba-test.toml")) in list_profiles([tmp_path])


def test_load_profile_unknown_name(tmp_path, monkeypatch):
    """Unknown names raise with the list of builtins."""
    monkeypatch.setenv("TONEVAL_CONFIG_DIR", str(tmp_path))

    with pytest.raises(ProfileError, match="builtins"):
        load_profile("klingon")


def test_short_vector_is_reported(tmp_path):
    """A 23-value vector yields a length diagnostic."""
    text = dump_profile(load_builtin("uneme"))
    data = tomllib.loads(text)
    short = data["segments"][1]["vector"][:-1]
    bad = text.replace(
        "vector = [" + ", ".join(f"{v:2d}" for v in data["segments"][1]["vector"]) + "]",
        "vector = [" + ", ".join(str(v) for v in short) + "]",
    )
    path = _write_profile(tmp_path, bad)

    diagnostics = check_profile_file(path)

    assert any("23 values" in d.message for d in diagnostics)
    with pytest.raises(ProfileError) as exc_info:
        load_profile_file(path)
    assert exc_info.value.diagnostics


def test_duplicate_label_is_reported(tmp_path):
    """A label that appears twice yields a uniqueness diagnostic."""
    text = dump_profile(load_builtin("uneme"))
    bad = text.replace('{ label = "p",', '{ label = "b",')
    path = _write_profile(tmp_path, bad)

    diagnostics = check_profile_file(path)

    assert any("duplicate segment label" in d.message for d in diagnostics)


def test_non_ternary_value_is_reported(tmp_path):
    """Values outside {-1, 0, +1} are rejected."""
    text = dump_profile(load_builtin("uneme"))
    data = tomllib.loads(text)
    row = data["segments"][0]["vector"]
    original = "vector = [" + ", ".join(f"{v:2d}" for v in row) + "]"
    bad = text.replace(original, "vector = [" + ", ".join(["2"] + [str(v) for v in row[1:]]) + "]")
    path = _write_profile(tmp_path, bad)

    assert any("not in" in d.message for d in check_profile_file(path))


def test_nonzero_tone_dimension_is_reported():
    """Base rows must leave tone dimensions at 0."""
    profile = load_builtin("uneme")
    row = list(profile.base_table["a"].values)
    row[21] = 1
    broken = type(profile)(
        language_id=profile.language_id,
        dimensions=profile.dimensions,
        base_table={**profile.base_table, "a": FeatureVector(tuple(row))},
        tone_rules=profile.tone_rules,
        normalization=profile.normalization,
    )

    diagnostics = validate_profile(broken)

    assert any("tone dimension must be 0" in d.message for d in diagnostics)


def test_invalid_toml_is_a_diagnostic(tmp_path):
    """Syntax errors are reported, not raised."""
    path = _write_profile(tmp_path, "language_id = [unclosed")

    diagnostics = check_profile_file(path)

    assert len(diagnostics) == 1
    assert "invalid TOML" in diagnostics[0].message


def test_unreadable_profile_raises(tmp_path):
    """A missing file raises ProfileError."""
    with pytest.raises(ProfileError, match="Cannot read"):
        check_profile_file(tmp_path / "missing.toml")


def test_uneme_gb_is_labial_velar():
    """The gb digraph is one voiced labial-velar stop."""
    profile = load_builtin("uneme")
    gb = profile.base_table["gb"]

    for abbr in ("LAB", "DOR", "LBV", "VOI", "STP"):
        dim = profile.dimension_by_abbr(abbr)
        assert dim is not None
        assert gb[dim.index] == 1


GOLDEN_DIR = Path(__file__).parent / "data"
SIGN_VALUES = {"+": 1, "-": -1, "0": 0}


def _golden_rows(name: str) -> list[tuple[str, FeatureVector]]:
    rows = []
    for line in (GOLDEN_DIR / f"{name}_rows.tsv").read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        label, signs = line.split("\t")
        rows.append((label, FeatureVector(tuple(SIGN_VALUES[s] for s in signs))))
    return rows


@pytest.mark.parametrize(("name", "count"), [("uneme", 32), ("yoruba", 25), ("english", 40)])
def test_builtin_rows_match_golden_tables(name, count):
    """Every bundled row equals the published feature matrix, cell for cell."""
    profile = load_builtin(name)
    rows = _golden_rows(name)

    assert len(rows) == count
    assert {unicodedata.normalize("NFD", label) for label, _ in rows} == set(profile.labels)
    for label, expected in rows:
        assert realized_vector(profile, label, ToneCategory.NONE) == expected, label
