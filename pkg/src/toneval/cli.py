"""Main CLI entry point for toneval."""

from __future__ import annotations

import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Annotated, NoReturn, TypeVar

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table
from rich.text import Text

from toneval import __version__
from toneval.config import (
    INPUT_FORMATS,
    OUTPUT_FORMATS,
    Config,
    ConfigError,
    generate_example_config,
    load_config,
)
from toneval.corpus import CorpusError, evaluate_corpus, read_corpus
from toneval.metrics import EvalOptions, EvaluationError
from toneval.paths import PROJECT_CONFIG_NAME, ensure_config_dir
from toneval.profiles import (
    InputMode,
    LanguageProfile,
    ProfileError,
    check_profile_file,
    dump_profile,
    list_profiles,
    load_profile,
)
from toneval.report import ReportError, render
from toneval.segmenter import (
    Lexicon,
    LexiconError,
    SegmentationError,
    load_lexicon,
    segment_utterance,
)

app = typer.Typer(
    name="toneval",
    help="Phonologically informed ASR evaluation: WER, CER, feature and tone error rates",
    no_args_is_help=True,
)
profile_app = typer.Typer(help="Inspect and validate language profiles", no_args_is_help=True)
app.add_typer(profile_app, name="profile")

console = Console()
err_console = Console(stderr=True)

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Every error a command turns into a one-line message and exit status 1
USER_ERRORS = (
    ConfigError,
    CorpusError,
    EvaluationError,
    LexiconError,
    ProfileError,
    ReportError,
    SegmentationError,
)


def version_callback(value: bool) -> None:
    if value:
        console.print(f"toneval {__version__}")
        raise typer.Exit()


def _setup_logging(verbose: bool) -> None:
    handler = RichHandler(console=err_console, show_path=False, show_time=False)
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[handler],
        force=True,
    )


def _fail(message: str) -> NoReturn:
    err_console.print(f"[red]{escape(message)}[/red]")
    raise typer.Exit(1)


def _load_config(config_path: Path | None) -> Config:
    try:
        return load_config(path=config_path)
    except ConfigError as e:
        _fail(str(e))


@dataclass
class RunConfig:
    """Everything one `toneval eval` run needs, after config and flags are merged."""

    profile_source: str
    ref_path: Path
    hyp_path: Path
    input_format: str = "lines"
    output_format: str = "tsv"
    indel_cost: float = 1.0
    strict: bool = False
    lexicon_path: Path | None = None
    per_utterance: bool = False
    min_support: int = 5
    worker_count: int = 1
    color: bool = False
    search_dirs: list[Path] = field(default_factory=list)

    def validate(self) -> None:
        """Raise ConfigError on the first invalid setting."""
        if self.indel_cost <= 0:
            raise ConfigError(f"--indel-cost must be positive, got {self.indel_cost}")
        if self.worker_count < 1:
            raise ConfigError(f"--workers must be at least 1, got {self.worker_count}")
        if self.min_support < 1:
            raise ConfigError(f"--min-support must be at least 1, got {self.min_support}")
        if self.input_format not in INPUT_FORMATS:
            raise ConfigError(
                f"Unknown input format {self.input_format!r} "
                f"(expected {', '.join(INPUT_FORMATS)})"
            )
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(
                f"Unknown output format {self.output_format!r} "
                f"(expected {', '.join(OUTPUT_FORMATS)})"
            )


def _resolve_profile(
    source: str, search_dirs: list[Path], lexicon_path: Path | None
) -> tuple[LanguageProfile, Lexicon | None]:
    """Load the profile and, when given, the lexicon it is used with."""
    profile = load_profile(source, search_dirs)
    if lexicon_path is None:
        return profile, None
    if profile.input_mode != InputMode.PHONEMIC:
        raise ConfigError(
            "--lexicon only applies to phoneme-token profiles; "
            f"{profile.language_id} is orthographic"
        )
    return profile, load_lexicon(lexicon_path)


def run_eval(run: RunConfig) -> str:
    """Evaluate a corpus and return the rendered report."""
    run.validate()
    profile, lexicon = _resolve_profile(run.profile_source, run.search_dirs, run.lexicon_path)
    pairs = read_corpus(run.ref_path, run.hyp_path, run.input_format)
    options = EvalOptions(
        indel_cost=run.indel_cost,
        strict=run.strict,
        lexicon=lexicon,
        min_support=run.min_support,
    )
    report = evaluate_corpus(
        pairs, profile, options, workers=run.worker_count, retain=run.per_utterance
    )
    return render(report, run.output_format, color=run.color)


def _auto_color() -> bool:
    return sys.stdout.isatty() and "NO_COLOR" not in os.environ


@app.callback()
def main(
    version: Annotated[
        bool | None,
        typer.Option("--version", "-V", callback=version_callback, is_eager=True),
    ] = None,
    verbose: Annotated[
        bool,
        typer.Option("--verbose", "-v", help="Show debug logging on stderr"),
    ] = False,
) -> None:
    """toneval - phonological error rates for ASR transcripts."""
    _setup_logging(verbose)


LangOption = Annotated[
    str | None,
    typer.Option(
        "--lang", "-l", help="Builtin profile (uneme, yoruba, english), profile name or .toml path"
    ),
]

ConfigOption = Annotated[
    Path | None,
    typer.Option("--config", "-c", help="Path to config file"),
]

LexiconOption = Annotated[
    Path | None,
    typer.Option(
        "--lexicon", help="word<TAB>TOKENS pronunciation lexicon (phoneme-token profiles)"
    ),
]


@app.command(name="eval")
def eval_cmd(
    ref: Annotated[Path, typer.Option("--ref", "-r", help="Reference transcripts")],
    hyp: Annotated[Path, typer.Option("--hyp", help="Hypothesis transcripts")],
    lang: LangOption = None,
    input_format: Annotated[
        str | None,
        typer.Option("--input-format", help="lines or keyed-tsv"),
    ] = None,
    output_format: Annotated[
        str | None,
        typer.Option("--format", "-f", help="json, tsv or pretty"),
    ] = None,
    indel_cost: Annotated[
        float | None,
        typer.Option("--indel-cost", help="Insertion/deletion cost of the feature alignment"),
    ] = None,
    strict: Annotated[
        bool | None,
        typer.Option("--strict/--lenient", help="Fail on characters outside the inventory"),
    ] = None,
    lexicon: LexiconOption = None,
    per_utterance: Annotated[
        bool | None,
        typer.Option("--per-utterance/--no-per-utterance", help="Report every utterance too"),
    ] = None,
    min_support: Annotated[
        int | None,
        typer.Option("--min-support", help="Minimum reference support for the worst feature"),
    ] = None,
    workers: Annotated[
        int | None,
        typer.Option("--workers", "-j", help="Utterances evaluated in parallel"),
    ] = None,
    color: Annotated[
        bool | None,
        typer.Option("--color/--no-color", help="Colorize pretty output (default: auto)"),
    ] = None,
    config_path: ConfigOption = None,
) -> None:
    """Score hypothesis transcripts against references.

    Prints WER, CER, FER and TER (micro-averaged over the corpus), plus the
    worst feature and worst tone category.
    """
    config = _load_config(config_path)
    defaults = config.eval

    def pick(value: T | None, default: T) -> T:
        return default if value is None else value

    use_color = pick(color, defaults.color)
    run = RunConfig(
        profile_source=pick(lang, defaults.lang),
        ref_path=ref,
        hyp_path=hyp,
        input_format=pick(input_format, defaults.input_format),
        output_format=pick(output_format, defaults.format),
        indel_cost=pick(indel_cost, defaults.indel_cost),
        strict=pick(strict, defaults.strict),
        lexicon_path=pick(lexicon, defaults.lexicon),
        per_utterance=pick(per_utterance, defaults.per_utterance),
        min_support=pick(min_support, defaults.min_support),
        worker_count=pick(workers, defaults.workers),
        color=_auto_color() if use_color is None else use_color,
        search_dirs=config.profiles.paths,
    )

    try:
        output = run_eval(run)
    except USER_ERRORS as e:
        _fail(str(e))
    print(output, end="")


def _segment_table(
    text: str, profile: LanguageProfile, strict: bool, lexicon: Lexicon | None
) -> list[Table]:
    utterance = segment_utterance(text, profile, strict=strict, lexicon=lexicon)
    tables = []
    for word, segments in zip(utterance.words, utterance.segments, strict=True):
        table = Table(title=Text(word), title_justify="left", show_header=False, box=None)
        table.add_column("segment")
        table.add_column("vector")
        for seg in segments:
            style = "yellow" if seg.is_unknown else ""
            table.add_row(Text(seg.describe(), style=style), seg.vector.signs())
        tables.append(table)
    for diagnostic in utterance.diagnostics:
        err_console.print(f"[yellow]{escape(str(diagnostic))}[/yellow]")
    return tables


@app.command()
def segment(
    text: Annotated[
        str | None,
        typer.Argument(help="Transcript to segment"),
    ] = None,
    file: Annotated[
        Path | None,
        typer.Option("--file", help="Segment every line of a file"),
    ] = None,
    lang: LangOption = None,
    strict: Annotated[
        bool,
        typer.Option("--strict", help="Fail on characters outside the inventory"),
    ] = False,
    lexicon: LexiconOption = None,
    config_path: ConfigOption = None,
) -> None:
    """Show the segments, tones and feature vectors of a transcript."""
    config = _load_config(config_path)
    try:
        profile, lex = _resolve_profile(
            lang or config.eval.lang, config.profiles.paths, lexicon or config.eval.lexicon
        )
        if file is not None:
            try:
                lines = file.read_text(encoding="utf-8-sig").splitlines()
            except OSError as e:
                raise CorpusError(f"Cannot read {file}: {e}") from e
        else:
            lines = [text or ""]
        for line in lines:
            for table in _segment_table(line, profile, strict, lex):
                console.print(table)
    except USER_ERRORS as e:
        _fail(str(e))


@profile_app.command("validate")
def profile_validate(
    path: Annotated[Path, typer.Argument(help="Profile .toml file")],
) -> None:
    """Check a profile file; exit status 1 if anything is wrong."""
    try:
        diagnostics = check_profile_file(path)
    except ProfileError as e:
        _fail(str(e))

    if not diagnostics:
        console.print(f"[green]{escape(str(path))}: ok[/green]")
        return
    for diagnostic in diagnostics:
        color = "red" if diagnostic.severity == "error" else "yellow"
        console.print(f"[{color}]{escape(str(diagnostic))}[/{color}]")
    raise typer.Exit(1)


@profile_app.command("show")
def profile_show(
    name: Annotated[str, typer.Argument(help="Profile name or path")],
    config_path: ConfigOption = None,
) -> None:
    """Print a profile in TOML form."""
    config = _load_config(config_path)
    try:
        profile = load_profile(name, config.profiles.paths)
    except ProfileError as e:
        _fail(str(e))
    print(dump_profile(profile), end="")


@profile_app.command("list")
def profile_list(config_path: ConfigOption = None) -> None:
    """List every profile reachable by name."""
    config = _load_config(config_path)

    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Profile")
    table.add_column("Segments", justify="right")
    table.add_column("Tones")
    table.add_column("Source", style="dim")

    for name, source in list_profiles(config.profiles.paths):
        try:
            profile = load_profile(name, config.profiles.paths)
        except ProfileError:
            table.add_row(name, "[red]invalid[/red]", "", escape(source))
            continue
        tones = ", ".join(t.value for t in profile.tone_rules.categories) or "-"
        table.add_row(name, str(len(profile.base_table)), tones, escape(source))

    console.print(table)


@app.command()
def init(
    path: Annotated[
        Path | None,
        typer.Argument(help="Directory to initialize (default: current)"),
    ] = None,
    global_config: Annotated[
        bool,
        typer.Option("--global", "-g", help="Initialize global config instead"),
    ] = False,
) -> None:
    """Write an example configuration file.

    Without --global: creates .toneval.toml in the directory.
    With --global: creates the global config (respects XDG_CONFIG_HOME).
    """
    if global_config:
        config_file = ensure_config_dir() / "config.toml"
    else:
        config_file = (path or Path.cwd()).resolve() / PROJECT_CONFIG_NAME

    if config_file.exists():
        console.print(f"[yellow]Config file already exists: {config_file}[/yellow]")
        if not typer.confirm("Overwrite?"):
            raise typer.Exit()

    config_file.write_text(generate_example_config(), encoding="utf-8")
    console.print(f"[green]Created {config_file}[/green]")
    console.print()
    console.print("[bold]Next steps:[/bold]")
    console.print("  1. Review and edit the config file as needed")
    console.print("  2. Run [cyan]toneval eval --ref ref.txt --hyp hyp.txt[/cyan]")


if __name__ == "__main__":
    app()
