"""Plain ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored. Keys may repeat (``marker``,
``segment``); the parser keeps every occurrence with its line number.
"""

from __future__ import annotations

import os
from typing import Iterator, NamedTuple

from .errors import InvalidConfig


class Entry(NamedTuple):
    key: str
    value: str
    line: int


def parse_text(text: str) -> list[Entry]:
    entries = []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {n}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        entries.append(Entry(key.strip().lower(), value.strip(), n))
    return entries


def parse_file(path: str | os.PathLike) -> list[Entry]:
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read())


def to_float(entry: Entry) -> float:
    try:
        return float(entry.value)
    except ValueError:
        raise InvalidConfig(entry.key, f"line {entry.line}: not a number: {entry.value!r}") from None


def to_int(entry: Entry) -> int:
    try:
        return int(entry.value)
    except ValueError:
        raise InvalidConfig(entry.key, f"line {entry.line}: not an integer: {entry.value!r}") from None


def keyword_args(entry: Entry, tokens: list[str]) -> Iterator[tuple[str, float]]:
    """Parse ``name=number`` tokens of a compound value such as a segment."""
    for tok in tokens:
        if "=" not in tok:
            raise InvalidConfig(entry.key, f"line {entry.line}: expected name=value, got {tok!r}")
        name, val = tok.split("=", 1)
        try:
            yield name.strip().lower(), float(val)
        except ValueError:
            raise InvalidConfig(
                f"{entry.key}.{name}", f"line {entry.line}: not a number: {val!r}"
            ) from None
