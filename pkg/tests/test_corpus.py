"""Tests for transcript pairing and corpus evaluation."""

import pytest

from toneval.corpus import (
    CorpusError,
    UtterancePair,
    evaluate_corpus,
    evaluate_pairs,
    evaluate_pairs_async,
    read_corpus,
)
from toneval.metrics import EvalOptions
from toneval.profiles import load_builtin
from toneval.report import render

REFS = [
    "è kwágù mariki ọ́mọ́ kirì ọ̀ọ́furinì ọremọ̀nì",
    "ọ́mọ́ kirì",
    "ba ka",
    "gbà",
    "",
    "mariki",
]
HYPS = [
    "ekwá gù marekí ọ́mọ́ kerè òọ́fúri nọremọ̀rì",
    "ọ́mọ́ kirì",
    "pa",
    "gba",
    "ba",
    "mareki ka",
]


@pytest.fixture
def uneme():
    return load_builtin("uneme")


@pytest.fixture
def pairs():
    return [UtterancePair(str(i), r, h) for i, (r, h) in enumerate(zip(REFS, HYPS), start=1)]


def _write(path, lines):
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
    return path


def test_read_lines_pairs_by_position(tmp_path):
    """Line i of each file forms utterance i."""
    ref = _write(tmp_path / "ref.txt", ["ba", "ka"])
    hyp = _write(tmp_path / "hyp.txt", ["pa", "ka"])

    result = read_corpus(ref, hyp)

    assert result == [UtterancePair("1", "ba", "pa"), UtterancePair("2", "ka", "ka")]


def test_read_lines_strips_byte_order_mark(tmp_path):
    """A leading BOM is not part of the first transcript."""
    ref = tmp_path / "ref.txt"
    ref.write_bytes("\ufeffba\n".encode())
    hyp = _write(tmp_path / "hyp.txt", ["ba"])

    assert read_corpus(ref, hyp)[0].reference == "ba"


def test_read_lines_count_mismatch(tmp_path):
    """Files with different line counts are rejected."""
    ref = _write(tmp_path / "ref.txt", ["ba", "ka"])
    hyp = _write(tmp_path / "hyp.txt", ["ba"])

    with pytest.raises(CorpusError, match="Line count mismatch"):
        read_corpus(ref, hyp)


def test_read_missing_file(tmp_path):
    hyp = _write(tmp_path / "hyp.txt", ["ba"])

    with pytest.raises(CorpusError, match="File not found"):
        read_corpus(tmp_path / "nope.txt", hyp)


def test_read_keyed_tsv_fills_missing_hypotheses(tmp_path, caplog):
    """Reference order is kept; ids without a hypothesis score against empty text."""
    ref = _write(tmp_path / "ref.tsv", ["u2\tka", "u1\tba", "u3\tgbà"])
    hyp = _write(tmp_path / "hyp.tsv", ["u1\tpa", "u2\tka"])

    result = read_corpus(ref, hyp, "keyed-tsv")

    assert [p.utterance_id for p in result] == ["u2", "u1", "u3"]
    assert result[1].hypothesis == "pa"
    assert result[2].hypothesis == ""
    assert "no hypothesis" in caplog.text


def test_read_keyed_tsv_bare_id_is_empty(tmp_path):
    ref = _write(tmp_path / "ref.tsv", ["u1\tba"])
    hyp = _write(tmp_path / "hyp.tsv", ["u1"])

    assert read_corpus(ref, hyp, "keyed-tsv")[0].hypothesis == ""


def test_read_keyed_tsv_rejects_space_separated_line(tmp_path):
    """An id and text joined by spaces instead of a tab is an error, not an empty transcript."""
    ref = _write(tmp_path / "ref.tsv", ["u1\tba"])
    hyp = _write(tmp_path / "hyp.tsv", ["u1 ba ka"])

    with pytest.raises(CorpusError, match=r"hyp.tsv:1: .*no tab"):
        read_corpus(ref, hyp, "keyed-tsv")


def test_read_keyed_tsv_duplicate_id(tmp_path):
    ref = _write(tmp_path / "ref.tsv", ["u1\tba", "u1\tka"])
    hyp = _write(tmp_path / "hyp.tsv", ["u1\tba"])

    with pytest.raises(CorpusError, match="duplicate utterance id"):
        read_corpus(ref, hyp, "keyed-tsv")


def test_read_keyed_tsv_unknown_hypothesis_id(tmp_path):
    """A hypothesis id with no reference is an error."""
    ref = _write(tmp_path / "ref.tsv", ["u1\tba"])
    hyp = _write(tmp_path / "hyp.tsv", ["u1\tba", "u9\tka"])

    with pytest.raises(CorpusError, match="u9"):
        read_corpus(ref, hyp, "keyed-tsv")


def test_read_unknown_format(tmp_path):
    ref = _write(tmp_path / "ref.txt", ["ba"])

    with pytest.raises(CorpusError, match="Unknown input format"):
        read_corpus(ref, ref, "csv")


def test_threaded_matches_sequential(uneme, pairs):
    """Worker count never changes the reports or their order."""
    options = EvalOptions()

    sequential = evaluate_pairs(pairs, uneme, options, workers=1)
    threaded = evaluate_pairs(pairs, uneme, options, workers=4)

    assert [r.utterance_id for r in threaded] == [p.utterance_id for p in pairs]
    assert [r.counts for r in threaded] == [r.counts for r in sequential]


async def test_evaluate_pairs_async(uneme, pairs):
    """The async entry point keeps input order."""
    reports = await evaluate_pairs_async(pairs, uneme, EvalOptions(), workers=3)

    assert [r.utterance_id for r in reports] == [p.utterance_id for p in pairs]
    assert reports[1].rates.wer == 0.0


@pytest.mark.parametrize("workers", [1, 4])
def test_strict_failure_names_earliest_utterance(uneme, workers):
    """With several bad utterances, the first one in input order is reported."""
    bad = [
        UtterancePair("1", "ba", "ba"),
        UtterancePair("2", "qa", "ba"),
        UtterancePair("3", "ba", "xa"),
    ]

    with pytest.raises(CorpusError, match="Utterance 2"):
        evaluate_pairs(bad, uneme, EvalOptions(strict=True), workers=workers)


def test_corpus_json_is_identical_across_worker_counts(uneme, pairs):
    """Rendered output is byte-identical for any worker count."""
    options = EvalOptions(min_support=1)

    one = render(evaluate_corpus(pairs, uneme, options, workers=1), "json")
    eight = render(evaluate_corpus(pairs, uneme, options, workers=8), "json")

    assert one == eight


def test_evaluate_corpus_passes_options(uneme, pairs):
    """Corpus reports record the indel cost and min support used."""
    report = evaluate_corpus(pairs, uneme, EvalOptions(indel_cost=0.5, min_support=2), retain=False)

    assert report.indel_cost == 0.5
    assert report.min_support == 2
    assert report.utterance_count == len(pairs)
    assert report.utterances == []
