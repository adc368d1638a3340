"""Text preprocessing and the n-gram vector space model with tf-idf weights.

Documents (commit messages, issue texts, file snapshots) are tokenized on
non-alphanumerics, camelCase/snake_case identifiers are split into their
constituent words, tokens are lowercased, stop words dropped, and the rest
stemmed. A document's term multiset is its unigrams plus all contiguous
2- to 4-grams over the token stream. Weights are tf * idf with
idf(t) = ln(N / df(t)) + 1 and df floored at 1, so vectors are reproducible
for unseen query terms. Similarity is the cosine of two weight vectors,
with the convention that a zero vector is similar to nothing (0.0).
"""

from __future__ import annotations

import json
import math
import re
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .model import TraceForgeError
from .porter import stem

NGRAM_JOIN = "·"  # cannot occur inside tokens (alphanumerics only)

_TOKEN_RE = re.compile(r"[0-9A-Za-z]+")
_CAMEL_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")


def _load_stopwords() -> frozenset[str]:
    text = resources.files("traceforge").joinpath("resources/stopwords.txt").read_text(
        encoding="utf-8"
    )
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


STOP_WORDS = _load_stopwords()


def split_compound(token: str) -> list[str]:
    """Split camelCase (and acronym runs) into constituent words.

    Snake_case is already handled by the non-alphanumeric tokenizer; only
    the constituents are kept, never the original compound.
    """
    return _CAMEL_RE.findall(token)


def preprocess(text: str) -> list[str]:
    """Raw text -> ordered list of stemmed, stopword-free lowercase tokens."""
    tokens: list[str] = []
    for raw in _TOKEN_RE.findall(text):
        for part in split_compound(raw):
            word = part.lower()
            if not word or word in STOP_WORDS:
                continue
            stemmed = stem(word)
            if stemmed and stemmed not in STOP_WORDS:
                tokens.append(stemmed)
    return tokens


def ngrams(tokens: Sequence[str], n_min: int = 2, n_max: int = 4) -> list[str]:
    """Contiguous n-gram terms over the token stream, n_min..n_max inclusive."""
    if n_min > n_max:
        raise ValueError(f"n_min ({n_min}) must be <= n_max ({n_max})")
    out = []
    for n in range(n_min, n_max + 1):
        for i in range(len(tokens) - n + 1):
            out.append(NGRAM_JOIN.join(tokens[i : i + n]))
    return out


def document_terms(tokens: Sequence[str], n_min: int = 2, n_max: int = 4) -> list[str]:
    """A document's term multiset: the words plus the n-grams they form."""
    return list(tokens) + ngrams(tokens, n_min, n_max)


class CorpusIndex:
    """Document frequencies over a fixed corpus; immutable after build."""

    def __init__(
        self,
        document_frequency: dict[str, int],
        document_count: int,
        ngram_range: tuple[int, int] = (2, 4),
    ) -> None:
        if document_count < 1:
            raise TraceForgeError("corpus index requires at least one document")
        self.document_frequency = document_frequency
        self.document_count = document_count
        self.ngram_range = ngram_range

    def idf(self, term: str) -> float:
        df = max(self.document_frequency.get(term, 0), 1)
        return math.log(self.document_count / df) + 1.0

    def vectorize(self, tokens: Sequence[str]) -> dict[str, float]:
        n_min, n_max = self.ngram_range
        counts: dict[str, int] = {}
        for term in document_terms(tokens, n_min, n_max):
            counts[term] = counts.get(term, 0) + 1
        return {term: tf * self.idf(term) for term, tf in counts.items()}

    def vectorize_text(self, text: str) -> dict[str, float]:
        return self.vectorize(preprocess(text))

    # -- persistence -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "document_count": self.document_count,
            "ngram_range": list(self.ngram_range),
            "document_frequency": self.document_frequency,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CorpusIndex":
        return cls(
            document_frequency=dict(obj["document_frequency"]),
            document_count=int(obj["document_count"]),
            ngram_range=tuple(obj.get("ngram_range", (2, 4))),
        )

    def save(self, directory: str | Path) -> Path:
        root = Path(directory)
        root.mkdir(parents=True, exist_ok=True)
        path = root / "corpus.json"
        path.write_text(json.dumps(self.to_json(), sort_keys=True), encoding="utf-8")
        return path

    @classmethod
    def load(cls, directory: str | Path) -> "CorpusIndex":
        return cls.from_json(
            json.loads((Path(directory) / "corpus.json").read_text(encoding="utf-8"))
        )


def build_index(
    documents: Iterable[Sequence[str]], ngram_range: tuple[int, int] = (2, 4)
) -> CorpusIndex:
    """Count per-term document frequencies over tokenized documents."""
    df: dict[str, int] = {}
    count = 0
    n_min, n_max = ngram_range
    for tokens in documents:
        count += 1
        for term in set(document_terms(tokens, n_min, n_max)):
            df[term] = df.get(term, 0) + 1
    if count == 0:
        raise TraceForgeError("cannot build an index over an empty corpus")
    return CorpusIndex(df, count, ngram_range)


def build_index_from_texts(
    texts: Iterable[str], ngram_range: tuple[int, int] = (2, 4)
) -> CorpusIndex:
    return build_index((preprocess(t) for t in texts), ngram_range)


def cosine(v1: dict[str, float], v2: dict[str, float]) -> float:
    """Cosine similarity in [0, 1]; zero vectors are similar to nothing."""
    if not v1 or not v2:
        return 0.0
    if len(v2) < len(v1):
        v1, v2 = v2, v1
    dot = sum(w * v2[t] for t, w in v1.items() if t in v2)
    if dot == 0.0:
        return 0.0
    norm1 = math.sqrt(sum(w * w for w in v1.values()))
    norm2 = math.sqrt(sum(w * w for w in v2.values()))
    return min(dot / (norm1 * norm2), 1.0)


def sim(text1: str, text2: str, index: CorpusIndex) -> float:
    """Cosine similarity of two raw texts under the given index."""
    return cosine(index.vectorize_text(text1), index.vectorize_text(text2))
