"""Text corpus definition."""

from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class TextCorpus:
    """A list of non-empty strings and the character set they use."""

    entries: list[str] = field(default_factory=list)
    charset: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if any(not entry for entry in self.entries):
            raise ValueError("TextCorpus entries must be non-empty")
        used = frozenset("".join(self.entries))
        if not self.charset:
            self.charset = used
        elif not used <= self.charset:
            missing = "".join(sorted(used - self.charset))
            raise ValueError(f"Corpus characters outside charset: {missing!r}")

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "TextCorpus":
        """Build a corpus from lines, dropping line endings and blank lines."""
        entries = [line.rstrip("\r\n") for line in lines]
        return cls(entries=[entry for entry in entries if entry.strip()])

    @classmethod
    def from_file(cls, path: str | Path) -> "TextCorpus":
        """Read one UTF-8 string per line."""
        with open(path, encoding="utf-8") as f:
            return cls.from_lines(f)
