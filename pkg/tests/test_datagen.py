"""
Tests for labeled dataset I/O and dataset generation.

This module tests dataset handling, focusing on:
- Manifest parsing, escaping and validation errors
- Style image folders
- Text replacement with a trained generator checkpoint
- Generating labeled datasets that load back
"""

import numpy as np
import pytest
from conftest import random_image, style_word, tiny_train_config
from PIL import Image

from glyphshift.core.engine import GlyphshiftEngine
from glyphshift.core.loader import (
    DatasetLoader,
    load_dataset,
    load_style_images,
    prepare_output_dir,
    write_manifest,
)
from glyphshift.exceptions import (
    CheckpointMismatch,
    DanglingReference,
    EmptyCorpus,
    GenerationExhausted,
    InvalidDomain,
    MalformedLine,
    ManifestMissing,
    OutputNotEmpty,
    OutputUnwritable,
)
from glyphshift.models.config import GeneratorConfig
from glyphshift.models.corpus import TextCorpus
from glyphshift.models.dataset import IMAGES_DIR, MANIFEST_NAME, DatasetRecord
from glyphshift.training.checkpoint import Checkpoint, save_checkpoint
from glyphshift.training.trainer import build_models


def untrained_checkpoint() -> Checkpoint:
    config = tiny_train_config()
    models = build_models(config)
    return Checkpoint(
        fingerprint=config.fingerprint(),
        config=config.model_dump(mode="json"),
        step=0,
        epoch=0,
        model_states=models.state_dicts(),
    )


@pytest.fixture(scope="module")
def engine():
    return GlyphshiftEngine(untrained_checkpoint(), tiny_train_config())


@pytest.fixture
def styles():
    return [("a.png", style_word("hello")), ("b.png", random_image(90, seed=3))]


def write_raw_manifest(root, content: bytes):
    (root / IMAGES_DIR).mkdir(parents=True, exist_ok=True)
    (root / MANIFEST_NAME).write_bytes(content)
    return root


class TestManifest:
    """Test labels.tsv parsing."""

    def test_order_and_fields(self, dataset_builder):
        """Test that records keep manifest order with text and domain."""
        root = (
            dataset_builder()
            .with_image(random_image(40), "zeta", domain=1, filename="z.png")
            .with_image(random_image(40, seed=1), "alpha", domain=0, filename="a.png")
            .build()
        )
        dataset = load_dataset(root)

        assert [r.filename for r in dataset] == ["z.png", "a.png"]
        assert dataset.texts() == ["zeta", "alpha"]
        assert dataset.class_ids() == [0, 1]
        np.testing.assert_array_equal(dataset.load_image(1), random_image(40, seed=1))

    def test_escaped_text_survives(self, dataset_builder):
        """Test that tabs, newlines and backslashes in labels are preserved."""
        text = "a\tb\nc\\d\re"
        root = dataset_builder().with_image(random_image(40), text).build()

        line = (root / MANIFEST_NAME).read_text(encoding="utf-8")
        assert line.count("\t") == 2
        assert line.count("\n") == 1
        assert load_dataset(root).texts() == [text]

    def test_unicode_text(self, dataset_builder):
        """Test that non-ASCII labels are read back as UTF-8."""
        root = dataset_builder().with_image(random_image(40), "café straße").build()
        assert load_dataset(root).texts() == ["café straße"]

    def test_missing_manifest(self, temp_dir):
        """Test that a directory without labels.tsv is rejected."""
        with pytest.raises(ManifestMissing):
            load_dataset(temp_dir)

    def test_dangling_reference(self, temp_dir):
        """Test that a manifest line without its image is rejected."""
        prepare_output_dir(temp_dir)
        write_manifest(temp_dir, [DatasetRecord("missing.png", "text", 0)])

        with pytest.raises(DanglingReference) as exc_info:
            load_dataset(temp_dir)
        assert exc_info.value.filename == "missing.png"

    @pytest.mark.parametrize(
        "content",
        [
            b"a.png\thello\n",
            b"a.png\thello\t0\textra\n",
            b"a.png\tbad\\qescape\t0\n",
            b"a.png\thello\tone\n",
            b"a.png\thello\t-1\n",
            b"sub/a.png\thello\t0\n",
            b"\thello\t0\n",
            b"a.png\t\xff\xfe\t0\n",
            b"a.png\thello\t0\na.png\tworld\t1\n",
        ],
    )
    def test_malformed_lines(self, temp_dir, content):
        """Test that unparsable or inconsistent lines raise MalformedLine."""
        write_raw_manifest(temp_dir, content)
        with pytest.raises(MalformedLine):
            load_dataset(temp_dir)

    def test_malformed_line_number(self, temp_dir):
        """Test that the error names the offending line."""
        write_raw_manifest(temp_dir, b"a.png\thello\t0\nb.png\thello\n")
        with pytest.raises(MalformedLine) as exc_info:
            load_dataset(temp_dir)
        assert exc_info.value.line_no == 2

    def test_empty_manifest(self, temp_dir):
        """Test that an empty manifest is an empty dataset."""
        write_raw_manifest(temp_dir, b"")
        assert len(load_dataset(temp_dir)) == 0

    def test_loader_cache(self, small_dataset_dir):
        """Test that the loader caches handles unless the cache is bypassed."""
        loader = DatasetLoader()
        first = loader.load_dataset(small_dataset_dir)

        assert loader.load_dataset(small_dataset_dir) is first
        assert loader.load_dataset(small_dataset_dir, use_cache=False) is not first

    def test_output_must_be_empty(self, temp_dir):
        """Test that an images folder with files is refused only when asked."""
        prepare_output_dir(temp_dir, require_empty=True)
        (temp_dir / IMAGES_DIR / "0000000.png").write_bytes(b"x")

        assert prepare_output_dir(temp_dir) == temp_dir
        with pytest.raises(OutputNotEmpty):
            prepare_output_dir(temp_dir, require_empty=True)

    def test_unwritable_output(self, temp_dir):
        """Test that an output directory below a regular file is rejected."""
        blocker = temp_dir / "file"
        blocker.write_text("x", encoding="utf-8")
        with pytest.raises(OutputUnwritable):
            prepare_output_dir(blocker / "out")


class TestStyleImages:
    """Test style image folders."""

    def test_plain_folder(self, temp_dir):
        """Test that images load in filename order and other files are skipped."""
        Image.fromarray(random_image(40, seed=2)).save(temp_dir / "b.png")
        Image.fromarray(random_image(50, seed=1)).save(temp_dir / "a.png")
        (temp_dir / "notes.txt").write_text("ignore me", encoding="utf-8")
        (temp_dir / "broken.png").write_bytes(b"not a png")

        images = load_style_images(temp_dir)

        assert [name for name, _ in images] == ["a.png", "b.png"]
        np.testing.assert_array_equal(images[0][1], random_image(50, seed=1))

    def test_dataset_folder(self, small_dataset_dir):
        """Test that a labeled dataset is read in manifest order."""
        images = load_style_images(small_dataset_dir)
        assert [name for name, _ in images] == [r.filename for r in load_dataset(small_dataset_dir)]

    def test_missing_folder(self, temp_dir):
        """Test that a missing folder raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_style_images(temp_dir / "absent")


class TestReplaceText:
    """Test single-image text replacement."""

    def test_output_geometry(self, engine):
        """Test that the output has the content image's size and pixel range."""
        output = engine.replace_text(random_image(90), "hello", domain=1)
        content = engine.renderer.render("hello", 1)

        assert output.text == "hello"
        assert output.pixels.shape == (3, 64, content.width)
        assert np.all(np.abs(output.pixels) <= 1.0)

    def test_style_height_is_normalized(self, engine):
        """Test that taller style images are resized before encoding."""
        output = engine.replace_text(random_image(180, height=128), "hi")
        assert output.height == 64

    def test_deterministic(self, engine):
        """Test that the engine is a pure function of its inputs."""
        style = style_word("world")
        first = engine.replace_text(style, "scene")
        second = engine.replace_text(style, "scene")
        np.testing.assert_array_equal(first.pixels, second.pixels)

    def test_from_saved_checkpoint(self, temp_dir):
        """Test that an engine can be built from a checkpoint file and its stored config."""
        path = save_checkpoint(untrained_checkpoint(), temp_dir / "last.pt")
        engine = GlyphshiftEngine(path)

        assert engine.num_domains == 2
        assert engine.replace_text(random_image(40), "ab").width >= 32

    def test_config_mismatch(self):
        """Test that a checkpoint for another network is refused."""
        other = tiny_train_config(generator=GeneratorConfig(style_dim=64))
        with pytest.raises(CheckpointMismatch):
            GlyphshiftEngine(untrained_checkpoint(), other)


class TestGenerateDataset:
    """Test labeled dataset generation."""

    def test_writes_loadable_dataset(self, engine, styles, temp_dir):
        """Test that n images with a matching manifest are written and load back."""
        corpus = TextCorpus(entries=["alpha", "beta", "gamma"])
        progress = []
        dataset = engine.generate_dataset(
            styles, corpus, 5, temp_dir / "out", seed=1, on_progress=progress.append
        )

        assert len(dataset) == 5
        assert [r.filename for r in dataset] == [f"{i:07d}.png" for i in range(5)]
        assert all(r.domain == 1 for r in dataset)
        assert set(dataset.texts()) <= set(corpus.entries)
        assert progress == [1, 2, 3, 4, 5]
        reloaded = load_dataset(temp_dir / "out")
        assert reloaded.texts() == dataset.texts()
        assert reloaded.load_image(0).shape[0] == 64

    def test_seeded(self, engine, styles, temp_dir):
        """Test that the same seed draws the same texts and pixels."""
        corpus = TextCorpus(entries=["alpha", "beta", "gamma", "delta"])
        first = engine.generate_dataset(styles, corpus, 4, temp_dir / "a", seed=9)
        second = engine.generate_dataset(styles, corpus, 4, temp_dir / "b", seed=9)

        assert first.texts() == second.texts()
        np.testing.assert_array_equal(first.load_image(3), second.load_image(3))

    def test_zero_samples(self, engine, styles, temp_dir):
        """Test that n = 0 writes an empty manifest."""
        dataset = engine.generate_dataset(styles, TextCorpus(entries=["a"]), 0, temp_dir)
        assert len(dataset) == 0
        assert (temp_dir / MANIFEST_NAME).read_bytes() == b""

    def test_rerun_into_used_directory(self, engine, styles, temp_dir):
        """Test that a second, smaller run cannot leave unreferenced images behind."""
        corpus = TextCorpus(entries=["alpha", "beta"])
        engine.generate_dataset(styles, corpus, 3, temp_dir / "out", seed=1)

        with pytest.raises(OutputNotEmpty):
            engine.generate_dataset(styles, corpus, 1, temp_dir / "out", seed=2)

        dataset = load_dataset(temp_dir / "out")
        referenced = {record.filename for record in dataset}
        on_disk = {path.name for path in (temp_dir / "out" / IMAGES_DIR).iterdir()}
        assert len(dataset) == 3
        assert referenced == on_disk

    def test_unrenderable_texts_are_replaced(self, engine, styles, temp_dir):
        """Test that texts with missing glyphs are skipped without shrinking the dataset."""
        corpus = TextCorpus(entries=["漢字", "ok"])
        dataset = engine.generate_dataset(styles, corpus, 3, temp_dir, seed=0)

        assert dataset.texts() == ["ok", "ok", "ok"]

    def test_exhausted(self, engine, styles, temp_dir):
        """Test that a corpus nothing of which renders gives up."""
        with pytest.raises(GenerationExhausted):
            engine.generate_dataset(styles, TextCorpus(entries=["漢"]), 1, temp_dir)

    def test_invalid_arguments(self, engine, styles, temp_dir):
        """Test that bad domains, counts and empty inputs are rejected."""
        corpus = TextCorpus(entries=["a"])
        with pytest.raises(InvalidDomain):
            engine.generate_dataset(styles, corpus, 1, temp_dir, target_domain=2)
        with pytest.raises(ValueError):
            engine.generate_dataset(styles, corpus, -1, temp_dir)
        with pytest.raises(EmptyCorpus):
            engine.generate_dataset([], corpus, 1, temp_dir)
        with pytest.raises(EmptyCorpus):
            engine.generate_dataset(styles, TextCorpus(), 1, temp_dir)
