"""Shared ranked-list type and the deterministic top-k ordering rule."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator


@dataclass(frozen=True)
class RankedList:
    """Documents ordered by descending score, ties broken by ascending id.

    ``k`` is the requested cutoff; the list holds min(k, pool size) entries.
    """

    entries: tuple[tuple[str, float], ...]
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if len(self.entries) > self.k:
            raise ValueError("ranked list longer than requested cutoff")
        for (id_a, score_a), (id_b, score_b) in zip(self.entries, self.entries[1:]):
            if score_a < score_b or (score_a == score_b and id_a >= id_b):
                raise ValueError("entries violate the (score desc, id asc) order")
        for doc_id, score in self.entries:
            if not math.isfinite(score):
                raise ValueError(f"non-finite score for {doc_id!r}")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(doc_id for doc_id, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[str, float]]:
        return iter(self.entries)


def rank_top_k(scored: Iterable[tuple[str, float]], k: int) -> RankedList:
    """Order (doc_id, score) pairs by score descending, id ascending, cut at k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ordered = sorted(scored, key=lambda entry: (-entry[1], entry[0]))
    return RankedList(entries=tuple(ordered[:k]), k=k)
