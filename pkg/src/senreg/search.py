"""In-process inverted index for the registry's full-text search.

Token and prefix matching over the indexed metadata fields; the index
lives in memory, is updated synchronously on every write and is rebuilt
from the record store on open, so it never drifts from the durable
state across restarts.
"""

from __future__ import annotations

import bisect
import re
from collections import defaultdict
from typing import Iterable, Optional

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

DocKey = tuple[str, str]  # (kind, entity id)


def tokenize(text: str) -> list[str]:
    return [match.lower() for match in _TOKEN_RE.findall(text or "")]


class InvertedIndex:
    """token -> {document: weight} postings with sorted-token prefix scans."""

    def __init__(self) -> None:
        self._postings: dict[str, dict[DocKey, float]] = {}
        self._doc_tokens: dict[DocKey, set[str]] = {}
        self._sorted_tokens: list[str] = []

    def __len__(self) -> int:
        return len(self._doc_tokens)

    def upsert(self, key: DocKey, weighted_tokens: dict[str, float]) -> None:
        self.remove(key)
        for token, weight in weighted_tokens.items():
            posting = self._postings.get(token)
            if posting is None:
                posting = self._postings[token] = {}
                # removed docs leave their tokens in the sorted list; only
                # insert when genuinely absent
                idx = bisect.bisect_left(self._sorted_tokens, token)
                if idx >= len(self._sorted_tokens) or self._sorted_tokens[idx] != token:
                    self._sorted_tokens.insert(idx, token)
            posting[key] = weight
        self._doc_tokens[key] = set(weighted_tokens)

    def remove(self, key: DocKey) -> None:
        for token in self._doc_tokens.pop(key, ()):
            posting = self._postings.get(token)
            if posting is not None:
                posting.pop(key, None)
                if not posting:
                    del self._postings[token]

    def clear(self) -> None:
        self._postings.clear()
        self._doc_tokens.clear()
        self._sorted_tokens.clear()

    def _prefix_range(self, prefix: str) -> Iterable[str]:
        start = bisect.bisect_left(self._sorted_tokens, prefix)
        for token in self._sorted_tokens[start:]:
            if not token.startswith(prefix):
                break
            if token in self._postings:
                yield token

    def query(self, query_tokens: Iterable[str], kinds: Optional[set[str]] = None) -> dict[DocKey, float]:
        """Score documents: exact token hits count double over prefix hits."""
        scores: dict[DocKey, float] = defaultdict(float)
        for token in query_tokens:
            exact = self._postings.get(token)
            if exact:
                for key, weight in exact.items():
                    scores[key] += 2.0 * weight
            for candidate in self._prefix_range(token):
                if candidate == token:
                    continue
                for key, weight in self._postings[candidate].items():
                    scores[key] += weight
        if kinds is not None:
            return {key: score for key, score in scores.items() if key[0] in kinds}
        return dict(scores)


def weighted_tokens(fields: Iterable[tuple[str, float]]) -> dict[str, float]:
    """Token weights from (text, weight) pairs; repeats keep the max weight."""
    weights: dict[str, float] = {}
    for text, weight in fields:
        for token in tokenize(text):
            if weights.get(token, 0.0) < weight:
                weights[token] = weight
    return weights
