"""Pharaoh interchange format: one sentence pair per line, links as
space-separated "i-j" pairs (source index - target index).  An empty line
is an empty alignment."""

from __future__ import annotations

from ..errors import ParseError
from .types import Alignment

_DIGITS = frozenset("0123456789")


def parse_pharaoh_line(line: str, path=None, line_no: int | None = None) -> Alignment:
    links = set()
    for col, piece in enumerate(line.split(), start=1):
        left, sep, right = piece.partition("-")
        if (
            not sep
            or not left
            or not right
            or not set(left) <= _DIGITS
            or not set(right) <= _DIGITS
        ):
            raise ParseError(
                f"malformed link {piece!r} at column {col}: want i-j with "
                "non-negative integers",
                path,
                line_no,
            )
        links.add((int(left), int(right)))
    return Alignment(frozenset(links))


def format_pharaoh_line(alignment: Alignment) -> str:
    return " ".join(f"{i}-{j}" for i, j in sorted(alignment.links))


def read_pharaoh(path) -> list[Alignment]:
    try:
        with open(path, encoding="utf-8") as fh:
            return [
                parse_pharaoh_line(line, path, line_no)
                for line_no, line in enumerate(fh.read().splitlines(), start=1)
            ]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from None


def write_pharaoh(path, alignments) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for alignment in alignments:
            fh.write(format_pharaoh_line(alignment) + "\n")
