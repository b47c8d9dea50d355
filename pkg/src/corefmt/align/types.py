"""Alignment container shared by the aligner and the Pharaoh IO."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Alignment:
    """Set of (source index, target index) links for one sentence pair."""

    links: frozenset

    def __post_init__(self):
        for link in self.links:
            i, j = link
            if i < 0 or j < 0:
                raise ValueError(f"negative link {link!r}")

    def targets_of(self, start: int, end: int) -> list[int]:
        """Sorted target indices linked to any source index in [start, end)."""
        return sorted({j for (i, j) in self.links if start <= i < end})

    def max_indices(self) -> tuple[int, int]:
        if not self.links:
            return (-1, -1)
        return (max(i for i, _ in self.links), max(j for _, j in self.links))

    def __len__(self) -> int:
        return len(self.links)
