"""Command-line interface for glyphshift."""

import logging
from pathlib import Path
from typing import NoReturn

import typer
from rich.console import Console
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TextColumn,
    TimeElapsedColumn,
)
from rich.table import Table

from ..core.engine import DEFAULT_TARGET_DOMAIN, GlyphshiftEngine
from ..core.loader import (
    TYPEFACE_ENV_PREFIX,
    DatasetLoader,
    load_config,
    load_settings,
    load_style_images,
)
from ..core.renderer import render_word
from ..evaluation.metrics import evaluate_files
from ..integrations.font_integration import BUNDLED_FONTS, DEFAULT_FONT
from ..models.config import RendererConfig, TypefaceConfig
from ..models.corpus import TextCorpus
from ..models.report import LossReport
from ..training.checkpoint import (
    load_typeface_classifier,
    read_checkpoint_summary,
    save_typeface_checkpoint,
)
from ..training.trainer import Trainer
from ..training.typeface_training import (
    FontDataset,
    synthesize_font_dataset,
    train_typeface_classifier,
)
from ..utils.logging import level_for_flags, setup_logging
from ..utils.serialization import SerializationHelpers

# Setup console (Rich is the primary UI library)
console = Console()
app = typer.Typer(
    name="glyphshift", help="Weakly supervised scene text generation", no_args_is_help=True
)
logger = logging.getLogger(__name__)

loader = DatasetLoader()


def _progress() -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    )


def _fail(message: str, error: Exception) -> NoReturn:
    console.print(f"[bold red]{message}:[/bold red] {error}", highlight=False)
    raise typer.Exit(1) from None


@app.command()
def render(
    text: str = typer.Option(..., "--text", "-t", help="Text to render"),
    out: Path = typer.Option(..., "--out", "-o", help="Output PNG file"),
    font: str = typer.Option(DEFAULT_FONT, "--font", "-f", help="Font name or path"),
    height: int = typer.Option(64, "--height", help="Canvas height in pixels"),
    verbose: bool = typer.Option(
        False, "--verbose", "-v", help="Enable verbose output"
    ),
    debug: bool = typer.Option(
        False, "--debug", "-d", help="Enable debug logging output"
    ),
):
    """Render a content image (standard font on a grey canvas)."""
    setup_logging(level_for_flags(verbose, debug))
    try:
        config = RendererConfig(height=height, font=font)
        grey = config.background
        image = render_word(text, height, font, background=(grey, grey, grey), config=config)
        SerializationHelpers.save_png(image.pixels, out)
    except Exception as e:
        _fail("Render failed", e)
    console.print(f"[green]✓[/green] {image.width}x{image.height} image written to {out}")


@app.command("make-font-data")
def make_font_data(
    fonts: list[str] = typer.Option(..., "--fonts", help="Font names or paths (repeat)"),
    texts: Path = typer.Option(..., "--texts", help="Text corpus, one string per line"),
    per_font: int = typer.Option(200, "--per-font", help="Words rendered per font"),
    out: Path = typer.Option(..., "--out", "-o", help="Output dataset directory"),
    seed: int = typer.Option(0, "--seed", help="Random seed"),
    verbose: bool = typer.Option(
        False, "--verbose", "-v", help="Enable verbose output"
    ),
    debug: bool = typer.Option(
        False, "--debug", "-d", help="Enable debug logging output"
    ),
):
    """Render a synthetic font classification dataset."""
    setup_logging(level_for_flags(verbose, debug))
    try:
        corpus = TextCorpus.from_file(texts)
        with console.status("Rendering font dataset..."):
            dataset = synthesize_font_dataset(fonts, corpus, per_font, out, seed=seed)
    except Exception as e:
        _fail("Font dataset generation failed", e)
    console.print(
        f"[bold green]✓[/bold green] {len(dataset)} images in {len(fonts)} fonts written to {out}"
    )


@app.command("train-typeface")
def train_typeface(
    data: Path = typer.Option(..., "--data", help="Font dataset directory"),
    out: Path = typer.Option(..., "--out", "-o", help="Output checkpoint file"),
    epochs: int | None = typer.Option(None, "--epochs", help="Training epochs"),
    config_file: Path | None = typer.Option(None, "--config", "-c", help="Typeface config file"),
    verbose: bool = typer.Option(
        False, "--verbose", "-v", help="Enable verbose output"
    ),
    debug: bool = typer.Option(
        False, "--debug", "-d", help="Enable debug logging output"
    ),
):
    """Train the typeface classifier used by the style alignment loss."""
    setup_logging(level_for_flags(verbose, debug))
    try:
        config = load_settings(TypefaceConfig, config_file, TYPEFACE_ENV_PREFIX)
        if epochs is not None:
            config = config.model_copy(update={"epochs": epochs})
        font_data = FontDataset.from_labeled(loader.load_dataset(data), config.height)
        with _progress() as progress:
            task = progress.add_task("Training typeface classifier", total=config.epochs)
            result = train_typeface_classifier(
                font_data, config, on_epoch=lambda _: progress.advance(task)
            )
        metrics = result.history[-1] if result.history else {}
        save_typeface_checkpoint(result.classifier, font_data.class_names, out, metrics)
    except Exception as e:
        _fail("Typeface training failed", e)

    table = Table(title="Typeface classifier")
    table.add_column("Epoch", style="cyan")
    table.add_column("Train loss")
    table.add_column("Val accuracy", style="green")
    for record in result.history:
        accuracy = record.get("val_accuracy")
        table.add_row(
            str(int(record["epoch"])),
            f"{record['train_loss']:.4f}",
            "-" if accuracy is None else f"{accuracy:.2%}",
        )
    console.print(table)
    console.print(f"[bold green]✓[/bold green] Classifier saved to {out}")


@app.command()
def train(
    config_file: Path | None = typer.Option(None, "--config", "-c", help="Training config file"),
    data: Path = typer.Option(..., "--data", help="Labeled style image dataset"),
    typeface_ckpt: Path | None = typer.Option(
        None, "--typeface-ckpt", help="Frozen typeface classifier checkpoint"
    ),
    out: Path = typer.Option(..., "--out", "-o", help="Checkpoint directory"),
    resume: Path | None = typer.Option(None, "--resume", help="Checkpoint to resume from"),
    max_steps: int | None = typer.Option(None, "--max-steps", help="Stop after this many steps"),
    verbose: bool = typer.Option(
        False, "--verbose", "-v", help="Enable verbose output"
    ),
    debug: bool = typer.Option(
        False, "--debug", "-d", help="Enable debug logging output"
    ),
):
    """Train the generator and discriminator."""
    setup_logging(level_for_flags(verbose, debug))
    try:
        config = load_config(config_file)
        if max_steps is not None:
            config = config.model_copy(update={"max_steps": max_steps})
        if config.ablation.typeface_loss and typeface_ckpt is None:
            raise ValueError("--typeface-ckpt is required unless ablation.typeface_loss is false")
        classifier = (
            load_typeface_classifier(typeface_ckpt)
            if typeface_ckpt is not None and config.ablation.typeface_loss
            else None
        )
        dataset = loader.load_dataset(data)
        if resume is not None:
            trainer = Trainer.resume(resume, config, dataset, classifier, out)
        else:
            trainer = Trainer(config, dataset, classifier, out)

        last: LossReport | None = None
        with _progress() as progress:
            task = progress.add_task("Training", total=trainer.total_steps, completed=trainer.step)

            def on_step(report: LossReport) -> None:
                nonlocal last
                last = report
                progress.update(
                    task,
                    advance=1,
                    description=f"Training (img {report.img:.3f}, G {report.total_g:.3f})",
                )

            written = trainer.fit(callback=on_step)
    except Exception as e:
        _fail("Training failed", e)

    if last is not None:
        console.print(
            f"Final step {last.step}: total_g={last.total_g:.4f} "
            f"total_d={last.total_d:.4f} img={last.img:.4f}"
        )
    console.print(f"[bold green]✓[/bold green] {len(written)} checkpoint(s) written to {out}")


@app.command()
def generate(
    ckpt: Path = typer.Option(..., "--ckpt", help="Generator checkpoint"),
    styles: Path = typer.Option(..., "--styles", help="Style image directory"),
    texts: Path = typer.Option(..., "--texts", help="Text corpus, one string per line"),
    n: int = typer.Option(..., "--n", help="Number of images to generate"),
    seed: int = typer.Option(0, "--seed", help="Random seed"),
    out: Path = typer.Option(..., "--out", "-o", help="Output dataset directory"),
    domain: int = typer.Option(
        DEFAULT_TARGET_DOMAIN, "--domain", help="Domain id of the generated text"
    ),
    verbose: bool = typer.Option(
        False, "--verbose", "-v", help="Enable verbose output"
    ),
    debug: bool = typer.Option(
        False, "--debug", "-d", help="Enable debug logging output"
    ),
):
    """Generate a labeled dataset by replacing text in style images."""
    setup_logging(level_for_flags(verbose, debug))
    try:
        engine = GlyphshiftEngine(ckpt)
        corpus = TextCorpus.from_file(texts)
        style_images = load_style_images(styles)
        with _progress() as progress:
            task = progress.add_task("Generating", total=n)
            dataset = engine.generate_dataset(
                style_images,
                corpus,
                n,
                out,
                seed=seed,
                target_domain=domain,
                on_progress=lambda done: progress.update(task, completed=done),
            )
    except Exception as e:
        _fail("Generation failed", e)
    console.print(f"[bold green]✓[/bold green] {len(dataset)} images written to {out}")


@app.command()
def evaluate(
    pred: Path = typer.Option(..., "--pred", help="Predictions TSV (filename, text)"),
    gt: Path = typer.Option(..., "--gt", help="Ground truth TSV (filename, text)"),
    verbose: bool = typer.Option(
        False, "--verbose", "-v", help="Enable verbose output"
    ),
    debug: bool = typer.Option(
        False, "--debug", "-d", help="Enable debug logging output"
    ),
):
    """Word accuracy and normalized edit distance of recognizer predictions."""
    setup_logging(level_for_flags(verbose, debug))
    try:
        report = evaluate_files(pred, gt)
    except Exception as e:
        _fail("Evaluation failed", e)
    typer.echo(report.to_line())


@app.command()
def inspect(
    ckpt: Path = typer.Option(..., "--ckpt", help="Checkpoint file"),
    verbose: bool = typer.Option(
        False, "--verbose", "-v", help="Enable verbose output"
    ),
    debug: bool = typer.Option(
        False, "--debug", "-d", help="Enable debug logging output"
    ),
):
    """Show the header and parameter counts of a checkpoint."""
    setup_logging(level_for_flags(verbose, debug))
    try:
        summary = read_checkpoint_summary(ckpt)
    except Exception as e:
        _fail("Cannot read checkpoint", e)

    table = Table(title=f"Checkpoint {ckpt.name}")
    table.add_column("Field", style="cyan")
    table.add_column("Value")
    for key, value in summary.items():
        if key in ("parameters", "metrics"):
            continue
        table.add_row(key, str(value))
    for name, count in summary["parameters"].items():
        table.add_row(f"parameters.{name}", f"{count:,}")
    for name, value in summary.get("metrics", {}).items():
        table.add_row(f"metrics.{name}", f"{value:.4f}")
    console.print(table)


@app.command("fonts")
def list_fonts():
    """List the bundled font names."""
    table = Table(title="Bundled fonts")
    table.add_column("Name", style="cyan")
    table.add_column("File")
    for name, filename in BUNDLED_FONTS.items():
        table.add_row(name, filename)
    console.print(table)


def main():
    """Main entry point for the CLI."""
    app()


if __name__ == "__main__":
    main()
