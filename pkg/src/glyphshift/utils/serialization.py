"""Serialization utilities for glyphshift."""

import json
import logging
from collections.abc import Iterable
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from PIL import Image

logger = logging.getLogger(__name__)

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


class SerializationHelpers:
    """Helper functions for serializing and deserializing glyphshift data."""

    @staticmethod
    def to_json(data: Any, pretty: bool = True) -> str:
        """Convert data to JSON string."""
        try:
            if pretty:
                return json.dumps(data, indent=2, default=str, ensure_ascii=False)
            else:
                return json.dumps(data, default=str, ensure_ascii=False)
        except Exception as e:
            logger.error(f"JSON serialization error: {e}")
            raise ValueError(f"Failed to serialize to JSON: {e}") from e

    @staticmethod
    def from_yaml(yaml_str: str) -> Any:
        """Parse YAML string to data."""
        try:
            return yaml.safe_load(yaml_str)
        except yaml.YAMLError as e:
            logger.error(f"YAML parsing error: {e}")
            raise ValueError(f"Failed to parse YAML: {e}") from e

    @staticmethod
    def load_from_file(file_path: str | Path) -> Any:
        """Load data from a JSON or YAML file."""
        file_path = Path(file_path)

        if not file_path.exists():
            raise FileNotFoundError(f"File not found: {file_path}")

        with open(file_path, encoding="utf-8") as f:
            content = f.read()

        if file_path.suffix.lower() == ".json":
            try:
                return json.loads(content)
            except json.JSONDecodeError as e:
                raise ValueError(f"Failed to parse JSON: {e}") from e
        # YAML is a superset of the flat key: value format, so it is the default
        return SerializationHelpers.from_yaml(content)

    @staticmethod
    def append_json_line(record: dict[str, Any], file_path: str | Path) -> None:
        """Append one record to a line-delimited JSON file."""
        with open(file_path, "a", encoding="utf-8") as f:
            f.write(SerializationHelpers.to_json(record, pretty=False) + "\n")

    @staticmethod
    def flatten_dict(
        data: dict[str, Any], separator: str = ".", prefix: str = ""
    ) -> dict[str, Any]:
        """Flatten a nested dictionary using dot notation."""
        result = {}

        for key, value in data.items():
            new_key = f"{prefix}{separator}{key}" if prefix else str(key)

            if isinstance(value, dict) and value:
                result.update(
                    SerializationHelpers.flatten_dict(value, separator, new_key)
                )
            else:
                result[new_key] = value

        return result

    @staticmethod
    def unflatten_dict(data: dict[str, Any], separator: str = ".") -> dict[str, Any]:
        """Unflatten a dictionary from dot notation."""
        result: dict[str, Any] = {}

        for key, value in data.items():
            parts = str(key).split(separator)
            current = result

            for part in parts[:-1]:
                if part not in current:
                    current[part] = {}
                elif not isinstance(current[part], dict):
                    raise ValueError(f"Key '{key}' conflicts with scalar '{part}'")
                current = current[part]

            current[parts[-1]] = value

        return result

    @staticmethod
    def escape_field(text: str) -> str:
        """Escape backslashes, tabs and line breaks for a TSV field."""
        return "".join(_ESCAPES.get(ch, ch) for ch in text)

    @staticmethod
    def unescape_field(text: str) -> str:
        """Inverse of :meth:`escape_field`."""
        out = []
        chars = iter(text)
        for ch in chars:
            if ch != "\\":
                out.append(ch)
                continue
            nxt = next(chars, None)
            if nxt is None or nxt not in _UNESCAPES:
                raise ValueError(f"Invalid escape sequence in field {text!r}")
            out.append(_UNESCAPES[nxt])
        return "".join(out)

    @staticmethod
    def write_tsv(rows: Iterable[Iterable[Any]], file_path: str | Path) -> None:
        """Write escaped, tab-separated rows as UTF-8."""
        with open(file_path, "w", encoding="utf-8", newline="\n") as f:
            for row in rows:
                fields = [SerializationHelpers.escape_field(str(value)) for value in row]
                f.write("\t".join(fields) + "\n")

    @staticmethod
    def to_uint8(pixels: np.ndarray) -> np.ndarray:
        """Map a 3xHxW array in [-1, 1] to HxWx3 uint8 with round-half-even."""
        scaled = np.rint((np.asarray(pixels, dtype=np.float64) + 1.0) * 127.5)
        return np.clip(scaled, 0, 255).astype(np.uint8).transpose(1, 2, 0)

    @staticmethod
    def from_uint8(image: np.ndarray) -> np.ndarray:
        """Map an HxWx3 uint8 image to a 3xHxW float32 array in [-1, 1]."""
        pixels = np.asarray(image, dtype=np.float32).transpose(2, 0, 1)
        return pixels / np.float32(127.5) - np.float32(1.0)

    @staticmethod
    def save_png(pixels: np.ndarray, file_path: str | Path) -> None:
        """Save a 3xHxW array in [-1, 1] as an 8-bit RGB PNG."""
        file_path = Path(file_path)
        file_path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(SerializationHelpers.to_uint8(pixels)).save(
            file_path, format="PNG"
        )
        logger.debug(f"Image saved to {file_path}")
