"""
Tests for the glyphshift command-line interface.

This module tests the CLI commands, focusing on:
- Rendering content images
- Evaluation output and exit codes
- Checkpoint inspection and font listing
- Short training and generation runs
"""

import pytest
import torch
from PIL import Image
from typer.testing import CliRunner

from glyphshift.core.loader import load_dataset
from glyphshift.networks.typeface import TypefaceClassifier
from glyphshift.training.checkpoint import save_typeface_checkpoint
from glyphshift.ui.cli import app

runner = CliRunner()


@pytest.fixture
def typeface_ckpt(temp_dir):
    torch.manual_seed(0)
    classifier = TypefaceClassifier(2, width_mult=0.125, embedding_dim=16)
    return save_typeface_checkpoint(
        classifier, ["sans", "serif"], temp_dir / "typeface.pt", {"val_accuracy": 0.75}
    )


@pytest.fixture
def micro_config(temp_dir):
    path = temp_dir / "micro.yaml"
    path.write_text(
        "epochs: 1\nbatch_size: 2\nseed: 0\nablation.typeface_loss: false\n",
        encoding="utf-8",
    )
    return path


class TestRenderCommand:
    """Test the render command."""

    def test_writes_png(self, temp_dir):
        """Test that a content image is written with the requested height."""
        out = temp_dir / "hello.png"
        result = runner.invoke(app, ["render", "--text", "hello", "--out", str(out)])

        assert result.exit_code == 0, result.output
        with Image.open(out) as image:
            assert image.height == 64
            assert image.width % 4 == 0
            assert image.getpixel((0, 0)) == (127, 127, 127)

    def test_missing_glyph(self, temp_dir):
        """Test that unrenderable text exits with status 1."""
        result = runner.invoke(app, ["render", "-t", "漢", "-o", str(temp_dir / "x.png")])

        assert result.exit_code == 1
        assert "Render failed" in result.output

    def test_unknown_font(self, temp_dir):
        """Test that an unknown font exits with status 1."""
        result = runner.invoke(
            app, ["render", "-t", "a", "-o", str(temp_dir / "x.png"), "--font", "no-such-font"]
        )
        assert result.exit_code == 1


class TestEvaluateCommand:
    """Test the evaluate command."""

    def test_report_line(self, temp_dir):
        """Test that the metrics are printed as one key=value line."""
        pred = temp_dir / "pred.tsv"
        gt = temp_dir / "gt.tsv"
        pred.write_text("a.png\thello\nb.png\twrld\n", encoding="utf-8")
        gt.write_text("a.png\thello\t0\nb.png\tworld\t1\n", encoding="utf-8")

        result = runner.invoke(app, ["evaluate", "--pred", str(pred), "--gt", str(gt)])

        assert result.exit_code == 0, result.output
        assert result.output.strip() == "accuracy=0.500000 mean_norm_ed=0.900000 n=2"

    def test_missing_file(self, temp_dir):
        """Test that a missing prediction file exits with status 1."""
        gt = temp_dir / "gt.tsv"
        gt.write_text("a.png\thello\n", encoding="utf-8")
        result = runner.invoke(
            app, ["evaluate", "--pred", str(temp_dir / "absent.tsv"), "--gt", str(gt)]
        )
        assert result.exit_code == 1
        assert "Evaluation failed" in result.output


class TestInspectCommands:
    """Test checkpoint inspection and font listing."""

    def test_inspect_typeface(self, typeface_ckpt):
        """Test that the typeface header, parameters and metrics are shown."""
        result = runner.invoke(app, ["inspect", "--ckpt", str(typeface_ckpt)])

        assert result.exit_code == 0, result.output
        assert "typeface" in result.output
        assert "parameters.classifier" in result.output
        assert "0.7500" in result.output

    def test_inspect_missing(self, temp_dir):
        """Test that a missing checkpoint exits with status 1."""
        result = runner.invoke(app, ["inspect", "--ckpt", str(temp_dir / "absent.pt")])
        assert result.exit_code == 1

    def test_fonts(self):
        """Test that the bundled fonts are listed."""
        result = runner.invoke(app, ["fonts"])

        assert result.exit_code == 0
        assert "dejavu-sans" in result.output
        assert "dejavu-serif" in result.output


class TestTrainingCommands:
    """Test training and generation from the command line."""

    def test_typeface_checkpoint_required(self, small_dataset_dir, temp_dir):
        """Test that the full objective needs a typeface classifier."""
        result = runner.invoke(
            app,
            ["train", "--data", str(small_dataset_dir), "--out", str(temp_dir / "run")],
            env={"GLYPHSHIFT_ABLATION__TYPEFACE_LOSS": "true"},
        )
        assert result.exit_code == 1
        assert "--typeface-ckpt" in result.output

    def test_train_then_generate(self, small_dataset_dir, micro_config, temp_dir):
        """Test a one-step run followed by dataset generation from its checkpoint."""
        run_dir = temp_dir / "run"
        result = runner.invoke(
            app,
            [
                "train",
                "--config", str(micro_config),
                "--data", str(small_dataset_dir),
                "--out", str(run_dir),
                "--max-steps", "1",
            ],
        )
        assert result.exit_code == 0, result.output
        assert (run_dir / "last.pt").is_file()
        assert (run_dir / "train_log.jsonl").read_text(encoding="utf-8").count("\n") == 1

        texts = temp_dir / "texts.txt"
        texts.write_text("alpha\nbeta\n", encoding="utf-8")
        out = temp_dir / "generated"
        result = runner.invoke(
            app,
            [
                "generate",
                "--ckpt", str(run_dir / "last.pt"),
                "--styles", str(small_dataset_dir),
                "--texts", str(texts),
                "--n", "2",
                "--out", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        dataset = load_dataset(out)
        assert len(dataset) == 2
        assert set(dataset.texts()) <= {"alpha", "beta"}
