"""Deterministic tokenization and document-frequency statistics."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

# Runs of Unicode alphanumerics; underscore splits, matching the behaviour
# of splitting on every non-alphanumeric character.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

TokenList = list

STOPWORDS_EN = frozenset(
    """a an and are as at be but by for from had has have he her his i if in
    into is it its no not of on or our she so such that the their them then
    there these they this to was we were which who will with would you
    your""".split()
)


def tokenize(text: str, *, drop_stopwords: bool = False) -> list[str]:
    """Case-fold and split on any non-alphanumeric character.

    Pure function of its input; empty input yields an empty list.
    Stop-word removal is off by default.
    """
    tokens = _TOKEN_RE.findall(text.casefold())
    if drop_stopwords:
        tokens = [t for t in tokens if t not in STOPWORDS_EN]
    return tokens


class TermEntry(NamedTuple):
    index: int
    doc_freq: int


@dataclass(frozen=True)
class Vocabulary:
    """Term statistics over a document collection.

    ``terms`` maps each term to its dense index (assigned in sorted term
    order) and its document frequency: the number of documents containing
    the term at least once.
    """

    terms: Mapping[str, TermEntry]
    corpus_size: int

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.terms

    def doc_freq(self, term: str) -> int:
        entry = self.terms.get(term)
        return entry.doc_freq if entry else 0


def build_vocabulary(docs: Sequence[Sequence[str]]) -> Vocabulary:
    """Count document frequencies over tokenized documents.

    Raises ValueError on an empty corpus.
    """
    if not docs:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    freq: dict[str, int] = {}
    for doc in docs:
        for term in set(doc):
            freq[term] = freq.get(term, 0) + 1
    terms = {
        term: TermEntry(index, freq[term])
        for index, term in enumerate(sorted(freq))
    }
    return Vocabulary(terms=terms, corpus_size=len(docs))
