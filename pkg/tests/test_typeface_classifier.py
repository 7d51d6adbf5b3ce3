"""
Tests for the typeface classifier and its training.

This module tests the font classifier, focusing on:
- Feature taps and the embedding
- Font probabilities
- The frozen-weights contract
- Synthetic font dataset rendering
- Classifier training on a small set of bundled fonts
"""

import random

import numpy as np
import pytest
import torch
from conftest import WORDS, random_image

from glyphshift.core.loader import load_dataset
from glyphshift.exceptions import (
    FrozenModuleError,
    InsufficientClasses,
    OutputNotEmpty,
    ShapeError,
)
from glyphshift.models.config import TypefaceConfig
from glyphshift.models.corpus import TextCorpus
from glyphshift.networks.typeface import (
    NUM_TAPS,
    TypefaceClassifier,
    classify_font,
    extract_features,
)
from glyphshift.training.typeface_training import (
    CLASSES_NAME,
    MIN_CONTRAST,
    FontDataset,
    font_loader,
    random_colors,
    synthesize_font_dataset,
    train_typeface_classifier,
)

TOY_FONTS = ["dejavu-sans", "dejavu-serif", "dejavu-sans-mono", "stix-bold", "dejavu-serif-italic"]
TOY_WORDS = WORDS + [
    "river", "stone", "light", "paper", "north", "green", "metal", "cloud",
    "table", "train", "quiet", "brave", "night", "sugar", "plant", "voice",
]


def classifier(num_classes: int = 3) -> TypefaceClassifier:
    torch.manual_seed(0)
    return TypefaceClassifier(num_classes, width_mult=0.125, embedding_dim=16).eval()


def batch(n: int = 2, width: int = 48, seed: int = 0) -> torch.Tensor:
    generator = torch.Generator().manual_seed(seed)
    return torch.rand(n, 3, 64, width, generator=generator) * 2 - 1


class TestFeatures:
    """Test feature extraction."""

    def test_five_layer_maps(self):
        """Test that one map is tapped per VGG block, shallow to deep."""
        features = extract_features(classifier(), batch())

        assert NUM_TAPS == 5
        assert len(features.layer_maps) == 5
        channels = [m.shape[1] for m in features.layer_maps]
        heights = [m.shape[2] for m in features.layer_maps]
        assert channels == [8, 16, 32, 64, 64]
        assert heights == [64, 32, 16, 8, 4]

    def test_embedding(self):
        """Test that the embedding is a finite, spatially pooled vector."""
        features = classifier().extract_features(batch(3))

        assert features.embedding.shape == (3, 16)
        assert torch.isfinite(features.embedding).all()

    def test_deterministic(self):
        """Test that the same image gives identical features."""
        model = classifier()
        images = batch()
        first, second = model.extract_features(images), model.extract_features(images)

        for a, b in zip(first.layer_maps, second.layer_maps, strict=True):
            assert torch.equal(a, b)
        assert torch.equal(first.embedding, second.embedding)

    @pytest.mark.parametrize("shape", [(1, 3, 32, 48), (1, 1, 64, 48), (1, 3, 64, 16)])
    def test_invalid_input(self, shape):
        """Test that wrong height, channels or too narrow images are rejected."""
        with pytest.raises(ShapeError):
            classifier()(torch.zeros(shape))

    def test_needs_two_classes(self):
        """Test that a one-class classifier cannot be built."""
        with pytest.raises(ValueError):
            TypefaceClassifier(1)


class TestClassifyFont:
    """Test font probabilities."""

    def test_distribution(self):
        """Test that probabilities are nonnegative and sum to one."""
        probabilities = classify_font(classifier(4), batch(3))

        assert probabilities.shape == (3, 4)
        assert (probabilities >= 0).all()
        torch.testing.assert_close(probabilities.sum(dim=1), torch.ones(3), atol=1e-5, rtol=0)

    def test_uniform_noise(self):
        """Test that extreme noise still gives a valid distribution."""
        noise = torch.randint(0, 2, (2, 3, 64, 64)).float() * 2 - 1
        probabilities = classifier().classify_font(noise)

        assert not torch.isnan(probabilities).any()
        assert not probabilities.requires_grad


class TestFrozenContract:
    """Test that a frozen classifier cannot change."""

    def test_freeze_disables_gradients(self):
        """Test that freezing stops weight gradients but keeps input gradients."""
        model = classifier().freeze()
        images = batch().requires_grad_(True)
        features = model.extract_features(images)
        features.embedding.sum().backward()

        assert model.frozen
        assert all(not p.requires_grad for p in model.parameters())
        assert images.grad is not None and images.grad.abs().sum().item() > 0

    def test_train_mode_is_ignored(self):
        """Test that a frozen classifier stays in evaluation mode."""
        model = classifier().freeze()
        model.train()

        assert not model.training
        assert all(not m.training for m in model.modules())

    def test_reload_rejected(self):
        """Test that loading new weights into a frozen classifier fails."""
        model = classifier()
        state = {k: v.clone() for k, v in model.state_dict().items()}
        model.freeze()

        with pytest.raises(FrozenModuleError):
            model.load_state_dict(state)

    def test_batch_norm_statistics_unchanged(self):
        """Test that running a frozen classifier leaves its buffers untouched."""
        model = classifier().freeze()
        before = {k: v.clone() for k, v in model.state_dict().items()}
        model.train()
        model(batch(4))

        for key, value in model.state_dict().items():
            assert torch.equal(value, before[key]), key


class TestFontDataset:
    """Test font datasets."""

    def test_single_class_rejected(self):
        """Test that a dataset needs at least two classes."""
        images = [random_image(48), random_image(48, seed=1)]
        with pytest.raises(InsufficientClasses):
            FontDataset(images=images, labels=[0, 0])

    def test_labels_in_range(self):
        """Test that labels must index the class names."""
        images = [random_image(48), random_image(48, seed=1)]
        with pytest.raises(ValueError):
            FontDataset(images=images, labels=[0, 2], class_names=["a", "b"])

    def test_default_class_names(self):
        """Test that class names default to the label ids."""
        images = [random_image(48, seed=i) for i in range(3)]
        data = FontDataset(images=images, labels=[0, 1, 2])

        assert data.class_names == ["0", "1", "2"]
        assert data.class_count == 3
        assert len(data) == 3

    def test_loader_batches(self):
        """Test that the loader resizes each batch to its average width."""
        images = [random_image(40, seed=0), random_image(80, seed=1), random_image(48, seed=2)]
        data = FontDataset(images=images, labels=[0, 1, 0])

        batches = list(font_loader(data, [0, 1, 2], batch_size=2, height=64, shuffle=False))

        assert [tuple(images.shape) for images, _ in batches] == [(2, 3, 64, 60), (1, 3, 64, 48)]
        assert [labels.tolist() for _, labels in batches] == [[0, 1], [0]]
        assert all(images.dtype == torch.float32 for images, _ in batches)

    def test_random_colors_contrast(self):
        """Test that glyph and background colours differ enough in luminance."""
        rng = random.Random(0)
        for _ in range(200):
            background, glyph = random_colors(rng)
            lum = [0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2] for c in (background, glyph)]
            assert abs(lum[0] - lum[1]) >= MIN_CONTRAST or glyph in ((0, 0, 0), (255, 255, 255))


class TestSynthesizeFontDataset:
    """Test synthetic font dataset rendering."""

    def test_writes_manifest_and_classes(self, temp_dir):
        """Test that every font gets its images, class id and name."""
        corpus = TextCorpus(entries=TOY_WORDS)
        dataset = synthesize_font_dataset(TOY_FONTS[:3], corpus, 4, temp_dir / "fonts", seed=1)

        assert len(dataset) == 12
        assert [record.domain for record in dataset] == [0] * 4 + [1] * 4 + [2] * 4
        assert dataset.class_ids() == [0, 1, 2]
        assert all(text in TOY_WORDS for text in dataset.texts())
        names = (temp_dir / "fonts" / CLASSES_NAME).read_text(encoding="utf-8").splitlines()
        assert names == TOY_FONTS[:3]

        data = FontDataset.from_labeled(dataset)
        assert data.class_names == TOY_FONTS[:3]
        assert all(image.shape[0] == 64 and image.dtype == np.uint8 for image in data.images)

    def test_deterministic(self, temp_dir):
        """Test that the same seed renders the same dataset."""
        corpus = TextCorpus(entries=TOY_WORDS)
        first = synthesize_font_dataset(TOY_FONTS[:2], corpus, 3, temp_dir / "a", seed=5)
        second = synthesize_font_dataset(TOY_FONTS[:2], corpus, 3, temp_dir / "b", seed=5)

        assert first.texts() == second.texts()
        for i in range(len(first)):
            np.testing.assert_array_equal(first.load_image(i), second.load_image(i))

    def test_single_font_rejected(self, temp_dir):
        """Test that one font (or a repeated font) is not enough."""
        corpus = TextCorpus(entries=TOY_WORDS)
        with pytest.raises(InsufficientClasses):
            synthesize_font_dataset(["dejavu-sans", "dejavu-sans"], corpus, 2, temp_dir / "x")

    def test_rerun_into_used_directory(self, temp_dir):
        """Test that rendering into a directory with earlier images is refused."""
        corpus = TextCorpus(entries=TOY_WORDS)
        synthesize_font_dataset(TOY_FONTS[:2], corpus, 2, temp_dir / "fonts")

        with pytest.raises(OutputNotEmpty):
            synthesize_font_dataset(TOY_FONTS[:2], corpus, 1, temp_dir / "fonts")
        assert len(load_dataset(temp_dir / "fonts")) == 4


class TestTypefaceTraining:
    """Test classifier training."""

    def test_short_run(self, temp_dir):
        """Test that one epoch returns a frozen classifier and a history record."""
        corpus = TextCorpus(entries=TOY_WORDS)
        dataset = synthesize_font_dataset(TOY_FONTS[:2], corpus, 6, temp_dir / "fonts")
        data = FontDataset.from_labeled(dataset)
        config = TypefaceConfig(width_mult=0.125, embedding_dim=16, batch_size=4, epochs=1)

        result = train_typeface_classifier(data, config)

        assert result.classifier.frozen
        assert result.classifier.class_names == TOY_FONTS[:2]
        assert len(result.history) == 1
        assert result.history[0]["epoch"] == 1.0
        assert np.isfinite(result.history[0]["train_loss"])
        assert 0.0 <= result.val_accuracy <= 1.0

    def test_epoch_callback(self, temp_dir):
        """Test that the callback sees every epoch record."""
        images = [random_image(48, seed=i) for i in range(8)]
        data = FontDataset(images=images, labels=[0, 1] * 4)
        config = TypefaceConfig(width_mult=0.125, embedding_dim=8, batch_size=4, epochs=2)
        seen = []

        result = train_typeface_classifier(data, config, on_epoch=seen.append)
        assert seen == result.history
        assert [record["epoch"] for record in seen] == [1.0, 2.0]

    @pytest.mark.slow
    def test_toy_font_set_accuracy(self, temp_dir):
        """Test that five bundled fonts are told apart with at least 90% validation accuracy."""
        corpus = TextCorpus(entries=TOY_WORDS)
        dataset = synthesize_font_dataset(TOY_FONTS, corpus, 200, temp_dir / "fonts", seed=0)
        data = FontDataset.from_labeled(dataset)
        config = TypefaceConfig(width_mult=0.25, embedding_dim=64, batch_size=32, epochs=10)

        result = train_typeface_classifier(data, config)

        assert result.val_accuracy >= 0.9
        sample = torch.from_numpy(
            np.stack([(data.images[0].astype(np.float32) / 127.5 - 1.0).transpose(2, 0, 1)])
        )
        assert result.classifier.classify_font(sample).argmax(dim=1).item() == data.labels[0]
